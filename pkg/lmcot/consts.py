"""Various constants.

Constants that are more locally scoped are defined in the modules that use
them.
"""

#: Number of uniformly spaced t values (endpoints included) on a barrier curve.
DEFAULT_GRID_SIZE = 25

#: Number of samples in the probe batch used by cov_wm and activation_m.
DEFAULT_PROBE_SIZE = 1024

#: Minibatch size for MNIST training runs.
DEFAULT_BATCH_SIZE = 128

#: Number of training epochs for MNIST training runs.
DEFAULT_EPOCHS = 10

#: Largest instance accepted by the brute-force assignment oracle.
BRUTE_FORCE_MAX_N = 8

#: Symmetry tolerance for matrices passed to the eigen routines.
SYMMETRY_TOL = 1e-8

#: Eigenvalues below this are an error in psd_sqrt; above it they are clamped.
PSD_TOL = 1e-6

#: Checkpoint file magic bytes.
CHECKPOINT_MAGIC = b"LMCK"

#: Current checkpoint format version.
CHECKPOINT_VERSION = 1

#: IDX magic numbers (big-endian u32).
IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
