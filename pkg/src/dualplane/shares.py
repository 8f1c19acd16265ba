"""Bit planes (the two "image" shares) and their file formats.

A plane is a near-square grid: ``width = ceil(sqrt(n))`` and
``height = ceil(n / width)`` for ``n`` payload bits, row-major, with zero
padding after the payload.  ``msg_len`` is carried explicitly because
padding destroys length information.

DPS1 layout::

    44 50 53 31 | version:u8 (1) | plane_index:u8 | flags:u8 (bit0 = encrypted)
    | msg_len:u32be | width:u16be | height:u16be | bits packed MSB-first

Planes can also be exported as plain PBM ("P1") bitmaps for viewing; that
export drops the metadata and is not read back by this package.
"""

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from .bitcodec import BitSeq, as_bits
from .errors import (
    CorruptShareError,
    InconsistentLengthError,
    NotAShareError,
    NothingToExportError,
    UnsupportedVersionError,
)

SHARE_MAGIC = b"DPS1"
SHARE_VERSION = 1
FLAG_ENCRYPTED = 0x01
_SHARE_HEADER = struct.Struct(">4sBBBIHH")
MAX_SIDE = 0xFFFF


@dataclass(frozen=True, eq=False)
class BitPlane:
    plane_index: int
    width: int
    height: int
    msg_len: int
    is_encrypted: bool
    bits: BitSeq

    def __post_init__(self):
        if self.plane_index not in (1, 2):
            raise ValueError(f"plane_index must be 1 or 2, got {self.plane_index}")
        if self.width < 0 or self.height < 0 or self.msg_len < 0:
            raise ValueError("dimensions and msg_len must be non-negative")
        bits = as_bits(self.bits).copy()
        if bits.size != self.width * self.height:
            raise InconsistentLengthError(
                f"{bits.size} bits do not fill a {self.width}x{self.height} grid"
            )
        if bits.size < 4 * self.msg_len:
            raise InconsistentLengthError(
                f"{self.width}x{self.height} grid cannot hold {self.msg_len} message bytes"
            )
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    @property
    def payload_bits(self) -> int:
        return 4 * self.msg_len

    def rows(self) -> np.ndarray:
        return self.bits.reshape(self.height, self.width)

    def __eq__(self, other):
        if not isinstance(other, BitPlane):
            return NotImplemented
        return (
            self.plane_index == other.plane_index
            and self.width == other.width
            and self.height == other.height
            and self.msg_len == other.msg_len
            and self.is_encrypted == other.is_encrypted
            and np.array_equal(self.bits, other.bits)
        )

    __hash__ = None

    def __repr__(self):
        state = "encrypted" if self.is_encrypted else "plain"
        return f"BitPlane(plane={self.plane_index}, {self.width}x{self.height}, msg_len={self.msg_len}, {state})"


# A ciphertext plane is a BitPlane with is_encrypted set.
EncryptedShare = BitPlane


def plane_dimensions(n_bits: int) -> tuple[int, int]:
    if n_bits == 0:
        return 0, 0
    width = math.isqrt(n_bits - 1) + 1  # ceil(sqrt(n))
    height = -(-n_bits // width)
    return width, height


def shape_plane(bits, plane_index: int, msg_len: int) -> BitPlane:
    bits = as_bits(bits)
    if bits.size != 4 * msg_len:
        raise InconsistentLengthError(f"{bits.size} bits given for a {msg_len}-byte message")
    width, height = plane_dimensions(bits.size)
    if width > MAX_SIDE or height > MAX_SIDE:
        raise InconsistentLengthError(f"message too large for a {MAX_SIDE}-pixel plane side")
    grid = np.zeros(width * height, dtype=np.uint8)
    grid[: bits.size] = bits
    return BitPlane(plane_index, width, height, msg_len, False, grid)


def flatten_plane(plane: BitPlane) -> BitSeq:
    return plane.bits[: plane.payload_bits].copy()


def share_to_bytes(plane: BitPlane) -> bytes:
    if plane.width > MAX_SIDE or plane.height > MAX_SIDE:
        raise InconsistentLengthError("plane too large for DPS1")
    header = _SHARE_HEADER.pack(
        SHARE_MAGIC,
        SHARE_VERSION,
        plane.plane_index,
        FLAG_ENCRYPTED if plane.is_encrypted else 0,
        plane.msg_len,
        plane.width,
        plane.height,
    )
    return header + np.packbits(plane.bits).tobytes()


def share_record_size(data: bytes, offset: int = 0) -> int:
    """Byte length of the DPS1 record starting at ``offset``."""
    header = _parse_header(data, offset)
    return _SHARE_HEADER.size + (header[5] * header[6] + 7) // 8


def _parse_header(data: bytes, offset: int = 0):
    if data[offset:offset + 4] != SHARE_MAGIC:
        raise NotAShareError("not a DPS1 share record")
    if len(data) - offset < _SHARE_HEADER.size:
        raise CorruptShareError("truncated DPS1 header")
    fields = _SHARE_HEADER.unpack_from(data, offset)
    if fields[1] != SHARE_VERSION:
        raise UnsupportedVersionError(f"DPS1 version {fields[1]} is not supported")
    return fields


def share_from_bytes(data: bytes) -> BitPlane:
    _, _, plane_index, flags, msg_len, width, height = _parse_header(data)
    if plane_index not in (1, 2):
        raise CorruptShareError(f"invalid plane index {plane_index}")
    n_bits = width * height
    body = data[_SHARE_HEADER.size:]
    if len(body) != (n_bits + 7) // 8:
        raise CorruptShareError(f"DPS1 payload is {len(body)} bytes, expected {(n_bits + 7) // 8}")
    bits = np.unpackbits(np.frombuffer(body, dtype=np.uint8), count=n_bits)
    try:
        return BitPlane(plane_index, width, height, msg_len, bool(flags & FLAG_ENCRYPTED), bits)
    except InconsistentLengthError as exc:
        raise CorruptShareError(str(exc)) from exc


def write_share(plane: BitPlane, dest: Union[str, Path, BinaryIO]) -> None:
    data = share_to_bytes(plane)
    if hasattr(dest, "write"):
        dest.write(data)
    else:
        Path(dest).write_bytes(data)


def read_share(source: Union[str, Path, BinaryIO]) -> BitPlane:
    if hasattr(source, "read"):
        return share_from_bytes(source.read())
    return share_from_bytes(Path(source).read_bytes())


def bitmap_text(plane: BitPlane) -> str:
    if plane.width < 1 or plane.height < 1:
        raise NothingToExportError("cannot export an empty plane as a bitmap")
    lines = ["P1", f"{plane.width} {plane.height}"]
    lines.extend(" ".join(map(str, row)) for row in plane.rows().tolist())
    return "\n".join(lines) + "\n"


def export_bitmap(plane: BitPlane, dest: Union[str, Path]) -> None:
    """Write ``plane`` as a plain PBM; 1 bits render black."""
    text = bitmap_text(plane)
    Path(dest).write_text(text, encoding="ascii")
