"""Bit-exact checkpoint files for :class:`~lmcot.network.MlpWeights`.

Layout (all integers little-endian):

    magic "LMCK" (4 bytes)
    format version (u16)
    header length (u32)
    header: UTF-8 JSON {"dims", "activation", "use_bias", "metadata"}
    payload: for each layer, W^l as row-major float64, then b^l if present
"""

import json
import logging
import struct
from pathlib import Path

import numpy as np

from lmcot.consts import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from lmcot.errors import (
    BadMagicError,
    CheckpointError,
    ShapeOverflowError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from lmcot.network import Architecture, MlpWeights
from lmcot.utils.json_serde import LmcJSONEncoder

_PREFIX = struct.Struct("<4sHI")

#: Upper bound on the parameter count we are willing to allocate on load.
MAX_PARAMETERS = 1 << 32


def save_checkpoint(weights: MlpWeights, arch: Architecture, metadata: dict, path: Path):
    """Write `weights` and `arch` to `path`.

    :param metadata: JSON-compatible run information (seed, config, losses...).
    """
    weights.check(arch)
    header = json.dumps(
        {
            "dims": list(arch.dims),
            "activation": arch.activation.value,
            "use_bias": arch.use_bias,
            "metadata": metadata or {},
        },
        cls=LmcJSONEncoder,
        sort_keys=True,
    ).encode("utf-8")

    chunks = [_PREFIX.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(header)), header]
    for p in weights.parameters():
        chunks.append(np.ascontiguousarray(p, dtype="<f8").tobytes())

    path = Path(path)
    path.write_bytes(b"".join(chunks))
    logging.info(f"Wrote checkpoint {path} ({weights.parameter_count()} parameters).")


def _parse_header(raw: bytes) -> tuple[Architecture, dict]:
    try:
        header = json.loads(raw.decode("utf-8"))
        dims = header["dims"]
        activation = header["activation"]
        use_bias = bool(header["use_bias"])
        metadata = header.get("metadata", {})
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise CheckpointError(f"Malformed checkpoint header: {e}") from e

    if not isinstance(dims, list) or not all(isinstance(d, int) for d in dims):
        raise ShapeOverflowError(f"Header dims must be a list of integers, got {dims!r}.")
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ShapeOverflowError(f"Header dims are out of range: {dims}.")
    total = sum(a * b + (b if use_bias else 0) for a, b in zip(dims, dims[1:]))
    if total > MAX_PARAMETERS:
        raise ShapeOverflowError(f"Header declares {total} parameters.")
    try:
        arch = Architecture(dims=tuple(dims), activation=activation, use_bias=use_bias)
    except ValueError as e:
        raise CheckpointError(f"Invalid architecture in header: {e}") from e
    return arch, metadata


def load_checkpoint(path: Path) -> tuple[MlpWeights, Architecture, dict]:
    """Read a checkpoint written by :func:`save_checkpoint`."""
    blob = Path(path).read_bytes()
    if len(blob) < _PREFIX.size:
        if not CHECKPOINT_MAGIC.startswith(blob[:4]):
            raise BadMagicError(f"{path} is not a checkpoint file.")
        raise TruncatedPayloadError(f"{path} ends inside the file prefix.")

    magic, version, header_len = _PREFIX.unpack_from(blob, 0)
    if magic != CHECKPOINT_MAGIC:
        raise BadMagicError(f"{path} has magic {magic!r}, expected {CHECKPOINT_MAGIC!r}.")
    if version != CHECKPOINT_VERSION:
        raise VersionMismatchError(
            f"{path} has format version {version}, expected {CHECKPOINT_VERSION}."
        )
    offset = _PREFIX.size
    if offset + header_len > len(blob):
        raise TruncatedPayloadError(f"{path} ends inside the header.")
    arch, metadata = _parse_header(blob[offset : offset + header_len])
    offset += header_len

    def take(shape: tuple[int, ...]) -> np.ndarray:
        nonlocal offset
        nbytes = 8 * int(np.prod(shape))
        if offset + nbytes > len(blob):
            raise TruncatedPayloadError(f"{path} ends inside the payload.")
        arr = np.frombuffer(blob, dtype="<f8", count=nbytes // 8, offset=offset)
        offset += nbytes
        return arr.astype(np.float64).reshape(shape)

    matrices, biases = [], [] if arch.use_bias else None
    for fan_in, fan_out in zip(arch.dims, arch.dims[1:]):
        matrices.append(take((fan_out, fan_in)))
        if biases is not None:
            biases.append(take((fan_out,)))
    if offset != len(blob):
        raise CheckpointError(f"{path} has {len(blob) - offset} trailing bytes.")

    return MlpWeights(matrices=matrices, biases=biases), arch, metadata
