"""Random symmetric keys for the two planes, and the DPK1 key file format.

Key bits are drawn directly from a random source as uniform bits.  A source
is any object with a ``randbytes(n)`` method; the default is
:class:`random.SystemRandom`, which reads the operating system's entropy
pool.  Seeded ``random.Random`` instances are accepted for reproducible tests
only.

DPK1 layout::

    44 50 4B 31 | plane_index:u8 | bit_count:u32be | bits packed MSB-first
"""

import random
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Optional, Union

import numpy as np

from .bitcodec import BitSeq, as_bits
from .errors import CannotExtendError, CorruptShareError, EntropyUnavailableError, NotAKeyError

KEY_MAGIC = b"DPK1"
_KEY_HEADER = struct.Struct(">4sBI")

_system_random = random.SystemRandom()


def default_rng() -> random.Random:
    return _system_random


def _frozen(bits) -> BitSeq:
    arr = as_bits(bits).copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class KeyStream:
    bits: BitSeq
    plane_index: int
    seed_info: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        if self.plane_index not in (1, 2):
            raise ValueError(f"plane_index must be 1 or 2, got {self.plane_index}")
        object.__setattr__(self, "bits", _frozen(self.bits))

    def __len__(self):
        return int(self.bits.size)

    def __eq__(self, other):
        if not isinstance(other, KeyStream):
            return NotImplemented
        return self.plane_index == other.plane_index and np.array_equal(self.bits, other.bits)

    __hash__ = None


def _random_bits(n_bits: int, rng) -> BitSeq:
    try:
        raw = rng.randbytes((n_bits + 7) // 8)
    except (OSError, NotImplementedError) as exc:
        raise EntropyUnavailableError(f"random source failed: {exc}") from exc
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:n_bits]


def generate_key(n_bits: int, rng=None, plane_index: int = 1) -> KeyStream:
    """Draw ``n_bits`` independent uniform key bits."""
    if n_bits < 0:
        raise ValueError("n_bits must be non-negative")
    rng = rng or default_rng()
    return KeyStream(_random_bits(n_bits, rng), plane_index)


def resize_key(key: KeyStream, plane, rng=None) -> KeyStream:
    """Fit ``key`` to the pixel count of ``plane``.

    Longer keys are truncated.  Shorter keys are extended with fresh random
    bits from ``rng``; key material is never repeated.
    """
    target = plane.width * plane.height
    have = len(key)
    if have >= target:
        return KeyStream(key.bits[:target], key.plane_index, key.seed_info)
    if rng is None:
        raise CannotExtendError(f"key has {have} bits, plane needs {target} and no random source was given")
    extra = _random_bits(target - have, rng)
    return KeyStream(np.concatenate([key.bits, extra]), key.plane_index, key.seed_info)


def key_to_bytes(key: KeyStream) -> bytes:
    return _KEY_HEADER.pack(KEY_MAGIC, key.plane_index, len(key)) + np.packbits(key.bits).tobytes()


def key_from_bytes(data: bytes) -> KeyStream:
    if len(data) < 4 or data[:4] != KEY_MAGIC:
        raise NotAKeyError("not a DPK1 key record")
    if len(data) < _KEY_HEADER.size:
        raise CorruptShareError("truncated DPK1 header")
    _, plane_index, n_bits = _KEY_HEADER.unpack_from(data)
    if plane_index not in (1, 2):
        raise CorruptShareError(f"invalid plane index {plane_index}")
    body = data[_KEY_HEADER.size:]
    if len(body) != (n_bits + 7) // 8:
        raise CorruptShareError(f"DPK1 payload is {len(body)} bytes, expected {(n_bits + 7) // 8}")
    bits = np.unpackbits(np.frombuffer(body, dtype=np.uint8), count=n_bits)
    return KeyStream(bits, plane_index)


def key_record_size(data: bytes, offset: int = 0) -> int:
    """Byte length of the DPK1 record starting at ``offset``."""
    if data[offset:offset + 4] != KEY_MAGIC:
        raise NotAKeyError("not a DPK1 key record")
    if len(data) - offset < _KEY_HEADER.size:
        raise CorruptShareError("truncated DPK1 header")
    n_bits = _KEY_HEADER.unpack_from(data, offset)[2]
    return _KEY_HEADER.size + (n_bits + 7) // 8


def write_key(key: KeyStream, dest: Union[str, Path, BinaryIO]) -> None:
    data = key_to_bytes(key)
    if hasattr(dest, "write"):
        dest.write(data)
    else:
        Path(dest).write_bytes(data)


def read_key(source: Union[str, Path, BinaryIO]) -> KeyStream:
    if hasattr(source, "read"):
        return key_from_bytes(source.read())
    return key_from_bytes(Path(source).read_bytes())
