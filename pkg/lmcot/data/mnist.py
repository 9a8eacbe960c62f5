"""Reader for MNIST files in IDX format.

Image files (all integers big-endian u32):

    magic 0x00000803, count, rows, cols, then count * rows * cols u8 pixels

Label files:

    magic 0x00000801, count, then count u8 labels

Files ending in ``.gz`` are decompressed transparently.
"""

import gzip
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lmcot.consts import IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC
from lmcot.errors import IdxConsistencyError, IdxFormatError, IdxTruncatedError
from lmcot.network import Dataset

_U32 = struct.Struct(">I")


@dataclass
class MnistSplit:
    #: Pixels scaled to [0, 1], one 784-vector per column.
    images: np.ndarray
    #: Class indices 0-9.
    labels: np.ndarray

    @property
    def count(self) -> int:
        return self.images.shape[1]

    def to_dataset(self) -> Dataset:
        return Dataset(inputs=self.images, targets=self.labels)


def _read_bytes(path: Path) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        try:
            return gzip.decompress(path.read_bytes())
        except EOFError as e:
            raise IdxTruncatedError(f"{path} is a truncated gzip stream.") from e
    return path.read_bytes()


def _read_header(blob: bytes, path: Path, magic: int, n_fields: int) -> tuple[int, ...]:
    size = 4 * (1 + n_fields)
    if len(blob) < 4:
        raise IdxTruncatedError(f"{path} is too short to hold an IDX magic number.")
    (found,) = _U32.unpack_from(blob, 0)
    if found != magic:
        raise IdxFormatError(f"{path} has magic {found:#010x}, expected {magic:#010x}.")
    if len(blob) < size:
        raise IdxTruncatedError(f"{path} ends inside the IDX header.")
    return struct.unpack_from(f">{n_fields}I", blob, 4)


def _read_images(path: Path) -> np.ndarray:
    blob = _read_bytes(path)
    count, rows, cols = _read_header(blob, path, IDX_IMAGES_MAGIC, 3)
    if (rows, cols) != (28, 28):
        raise IdxFormatError(f"{path} has {rows}x{cols} images, expected 28x28.")
    expected = 16 + count * rows * cols
    if len(blob) < expected:
        raise IdxTruncatedError(f"{path} declares {count} images but is {len(blob)} bytes.")
    pixels = np.frombuffer(blob, dtype=np.uint8, count=count * rows * cols, offset=16)
    # One row-major flattened image per column.
    return pixels.reshape(count, rows * cols).T.astype(np.float64) / 255.0


def _read_labels(path: Path) -> np.ndarray:
    blob = _read_bytes(path)
    (count,) = _read_header(blob, path, IDX_LABELS_MAGIC, 1)
    if len(blob) < 8 + count:
        raise IdxTruncatedError(f"{path} declares {count} labels but is {len(blob)} bytes.")
    labels = np.frombuffer(blob, dtype=np.uint8, count=count, offset=8).astype(np.intp)
    if labels.size and labels.max() > 9:
        raise IdxFormatError(f"{path} has a label outside 0-9.")
    return labels


def load_mnist_idx(images_path: Path, labels_path: Path) -> MnistSplit:
    images = _read_images(images_path)
    labels = _read_labels(labels_path)
    if images.shape[1] != labels.shape[0]:
        raise IdxConsistencyError(
            f"{images_path} has {images.shape[1]} images but {labels_path} "
            f"has {labels.shape[0]} labels."
        )
    logging.info(f"Loaded {labels.shape[0]} MNIST examples from {images_path}.")
    return MnistSplit(images=images, labels=labels)
