"""Layout constants and little-endian helpers shared by the weight and embedding file formats."""

from typing import BinaryIO

from maskface_utils.exceptions import FileFormatError

U32_SIZE = 4
FLOAT32_SIZE = 4

WEIGHTS_MAGIC = b"MFRW"
WEIGHTS_VERSION = 1

EMBEDDINGS_MAGIC = b"MFRE"
EMBEDDINGS_VERSION = 1


def read_exact(fobj: BinaryIO, size: int, what: str) -> bytes:
    data = fobj.read(size)
    if len(data) != size:
        raise FileFormatError(f"unexpected end of file while reading {what}")
    return data


def read_u32(fobj: BinaryIO, what: str) -> int:
    return int.from_bytes(read_exact(fobj, U32_SIZE, what), "little")


def write_u32(fobj: BinaryIO, value: int) -> None:
    if not 0 <= value < 2 ** 32:
        raise FileFormatError(f"value {value} does not fit in an unsigned 32-bit field")
    fobj.write(int(value).to_bytes(U32_SIZE, "little"))


def read_name(fobj: BinaryIO, what: str) -> str:
    """Length-prefixed UTF-8 string."""
    length = read_u32(fobj, f"{what} length")
    raw = read_exact(fobj, length, what)
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise FileFormatError(f"{what} is not valid UTF-8") from e


def write_name(fobj: BinaryIO, name: str) -> None:
    raw = name.encode("utf-8")
    write_u32(fobj, len(raw))
    fobj.write(raw)


def check_header(fobj: BinaryIO, magic: bytes, version: int) -> None:
    found = fobj.read(len(magic))
    if found != magic:
        raise FileFormatError(f"bad magic {found!r}, expected {magic!r}")
    found_version = read_u32(fobj, "format version")
    if found_version != version:
        raise FileFormatError(f"unsupported format version {found_version} (expected {version})")


def write_header(fobj: BinaryIO, magic: bytes, version: int) -> None:
    fobj.write(magic)
    write_u32(fobj, version)
