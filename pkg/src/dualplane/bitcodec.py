"""Byte <-> bit conversions and odd/even interleaving.

Bit sequences are numpy ``uint8`` arrays holding only 0 and 1.  Each byte is
written least-significant bit first (its 8-bit binary form reversed), the
byte expansions are concatenated in message order, and the resulting stream
is dealt out by 1-indexed position: odd positions to plane 1, even to plane 2.
"""

import numpy as np

from .errors import MalformedBlockError, MalformedStreamError, ShareLengthMismatchError

BitSeq = np.ndarray


def as_bits(bits) -> BitSeq:
    """Coerce a sequence of 0/1 values to a flat ``uint8`` array."""
    arr = np.asarray(bits, dtype=np.uint8).reshape(-1)
    if arr.size and arr.max() > 1:
        raise ValueError("bit sequences may only contain 0 and 1")
    return arr


def byte_to_reversed_bits(b: int) -> BitSeq:
    if not 0 <= b <= 255:
        raise ValueError(f"not a byte value: {b}")
    return np.unpackbits(np.array([b], dtype=np.uint8), bitorder="little")


def reversed_bits_to_byte(bits) -> int:
    bits = as_bits(bits)
    if bits.size != 8:
        raise MalformedBlockError(f"expected 8 bits, got {bits.size}")
    return int(np.packbits(bits, bitorder="little")[0])


def encode_bits(message: bytes) -> BitSeq:
    return np.unpackbits(np.frombuffer(bytes(message), dtype=np.uint8), bitorder="little")


def decode_bits(bits) -> bytes:
    bits = as_bits(bits)
    if bits.size % 8:
        raise MalformedStreamError(f"bit stream length {bits.size} is not a multiple of 8")
    return np.packbits(bits, bitorder="little").tobytes()


def split_odd_even(bits) -> tuple[BitSeq, BitSeq]:
    """Return (positions 1,3,5,..., positions 2,4,6,...)."""
    bits = as_bits(bits)
    if bits.size % 2:
        raise MalformedStreamError(f"cannot split a stream of odd length {bits.size}")
    # 0-indexed even slots are the 1-indexed odd positions
    return bits[0::2].copy(), bits[1::2].copy()


def merge_odd_even(odd, even) -> BitSeq:
    odd, even = as_bits(odd), as_bits(even)
    if odd.size != even.size:
        raise ShareLengthMismatchError(f"odd half has {odd.size} bits, even half {even.size}")
    out = np.empty(odd.size * 2, dtype=np.uint8)
    out[0::2] = odd
    out[1::2] = even
    return out
