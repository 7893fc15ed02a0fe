"""
Weight checkpoint file (MFRW).

Layout, little-endian::

    magic "MFRW" | version u32 | count u32
    per tensor: name_len u32 | name utf-8 | rank u32 | dims u32 * rank | float32 payload
"""

from collections import OrderedDict
from pathlib import Path
from typing import Dict, Mapping, Union

import numpy as np

from maskface_utils import fileformat
from maskface_utils.exceptions import FileFormatError

PathLike = Union[str, Path]


def save_weights(path: PathLike, tensors: Mapping[str, np.ndarray]) -> None:
    """
    Write named arrays as float32 in mapping order.

    Args:
        path: Destination file
        tensors: Name to array; names must be unique (guaranteed by the mapping)
    """
    with open(path, "wb") as f:
        fileformat.write_header(f, fileformat.WEIGHTS_MAGIC, fileformat.WEIGHTS_VERSION)
        fileformat.write_u32(f, len(tensors))
        for name, array in tensors.items():
            array = np.asarray(array)
            fileformat.write_name(f, name)
            fileformat.write_u32(f, array.ndim)
            for dim in array.shape:
                fileformat.write_u32(f, dim)
            f.write(np.ascontiguousarray(array, dtype="<f4").tobytes())


def load_weights(path: PathLike) -> Dict[str, np.ndarray]:
    """
    Read every tensor of a checkpoint file.

    Returns:
        Ordered name to float32 array mapping

    Raises:
        FileFormatError: On bad magic, unsupported version, truncation or duplicate names
    """
    tensors: Dict[str, np.ndarray] = OrderedDict()
    with open(path, "rb") as f:
        fileformat.check_header(f, fileformat.WEIGHTS_MAGIC, fileformat.WEIGHTS_VERSION)
        count = fileformat.read_u32(f, "tensor count")
        for _ in range(count):
            name = fileformat.read_name(f, "tensor name")
            if name in tensors:
                raise FileFormatError(f"duplicate tensor name {name!r} in {path}")
            rank = fileformat.read_u32(f, f"{name} rank")
            shape = tuple(fileformat.read_u32(f, f"{name} dims") for _ in range(rank))
            n = int(np.prod(shape, dtype=np.int64))
            raw = fileformat.read_exact(f, n * fileformat.FLOAT32_SIZE, f"{name} payload")
            tensors[name] = np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(shape)
        if f.read(1):
            raise FileFormatError(f"trailing bytes after {count} tensors in {path}")
    return tensors
