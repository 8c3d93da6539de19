"""
Raw matrix blocks: little-endian float64 (or int64), column-major, one file
per matrix, each listed in a JSON manifest with its shape and SHA-256.
"""
import hashlib
from pathlib import Path

import numpy as np

from .errors import UsageError

_DTYPES = {"f8": "<f8", "i8": "<i8"}


class ChecksumError(UsageError):
    pass


def sha256_of(path):
    h = hashlib.sha256()
    with open(path, "rb") as file:
        for chunk in iter(lambda: file.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_block(directory, name, array, kind="f8"):
    """Write ``array`` to ``directory/name`` and return its manifest entry."""
    array = np.asarray(array)
    if array.ndim == 1:
        array = array[:, None]
    path = Path(directory) / name
    path.write_bytes(array.astype(_DTYPES[kind]).tobytes(order="F"))
    return {
        "file": name,
        "shape": list(array.shape),
        "dtype": kind,
        "sha256": sha256_of(path),
    }


def read_block(directory, entry, vector=False):
    path = Path(directory) / entry["file"]
    if not path.exists():
        raise ChecksumError(f"missing block {path}")
    if sha256_of(path) != entry["sha256"]:
        raise ChecksumError(f"checksum mismatch for {path}")
    shape = tuple(entry["shape"])
    data = np.frombuffer(path.read_bytes(), dtype=_DTYPES[entry["dtype"]])
    if data.size != int(np.prod(shape)):
        raise ChecksumError(f"size mismatch for {path}")
    array = data.reshape(shape, order="F").copy()
    if vector:
        return array[:, 0]
    return array
