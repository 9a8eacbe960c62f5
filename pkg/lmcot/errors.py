"""Exceptions raised by lmcot.

Every error we raise on purpose derives from :class:`LmcError` so that the CLI
can print a clean message instead of a traceback. Argument and configuration
errors also derive from :class:`ValueError`, since that is what callers outside
this package would expect from a bad input.
"""


class LmcError(Exception):
    """Base class for all lmcot errors."""


class ConfigurationError(LmcError, ValueError):
    """A setting (sampler spec, training config, method choice) is invalid."""


class ArgumentError(LmcError, ValueError):
    """An argument has the wrong shape, range, or contents."""


class DegenerateInputError(LmcError, ValueError):
    """The input is valid but the requested quantity is undefined for it."""


class NotPsdError(LmcError, ValueError):
    """A matrix that should be positive semidefinite has a negative eigenvalue."""


class SizeError(LmcError, ValueError):
    """The input is too large for the requested routine."""


class DivergenceError(LmcError, ArithmeticError):
    """Training produced a non-finite parameter."""


class CheckpointError(LmcError):
    """A checkpoint file could not be read."""


class BadMagicError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class TruncatedPayloadError(CheckpointError):
    pass


class ShapeOverflowError(CheckpointError):
    pass


class IdxError(LmcError):
    """An IDX (MNIST) file could not be read."""


class IdxFormatError(IdxError):
    pass


class IdxConsistencyError(IdxError):
    pass


class IdxTruncatedError(IdxError, OSError):
    pass
