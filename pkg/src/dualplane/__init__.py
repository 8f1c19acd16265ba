"""Dual-layer bit-plane message cryptosystem.

A message is expanded to bits (each byte least-significant bit first), dealt
into two bit-plane "image" shares by odd/even position, and each share is
XORed with its own random key.  The shares can be saved as files, exported as
PBM bitmaps, or sent over TCP in two acknowledgement-gated phases.
"""

from .cipher import CipherBundle, decrypt_message, decrypt_partial, encrypt_message, xor_plane
from .keystream import KeyStream, generate_key, resize_key
from .shares import BitPlane, EncryptedShare

__version__ = "0.1.0"

__all__ = [
    "BitPlane",
    "CipherBundle",
    "EncryptedShare",
    "KeyStream",
    "decrypt_message",
    "decrypt_partial",
    "encrypt_message",
    "generate_key",
    "resize_key",
    "xor_plane",
]
