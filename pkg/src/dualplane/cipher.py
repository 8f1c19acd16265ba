"""XOR encryption of the two planes and the end-to-end message pipelines.

Encryption::

    message -> reversed bits -> odd/even split -> two planes
            -> plane ^ key (one independent key per plane)

Decryption runs the same steps backwards.  Recovering a message always takes
both planes; a single plane yields only every other bit of the stream.

This is a teaching-grade scheme.  Keys travel with their ciphertexts, and
nothing here authenticates or integrity-protects a bundle.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bitcodec import decode_bits, encode_bits, merge_odd_even, split_odd_even
from .errors import InvalidBundleError, KeySizeMismatchError, MalformedStreamError, WrongKeyError
from .keystream import KeyStream, default_rng, generate_key, resize_key
from .shares import BitPlane, EncryptedShare, flatten_plane, shape_plane


@dataclass(frozen=True)
class CipherBundle:
    share1: EncryptedShare
    share2: EncryptedShare
    key1: KeyStream
    key2: KeyStream

    def validate(self) -> None:
        for n, share, key in ((1, self.share1, self.key1), (2, self.share2, self.key2)):
            if share.plane_index != n or key.plane_index != n:
                raise InvalidBundleError(f"plane {n} slot holds share {share.plane_index} / key {key.plane_index}")
            if not share.is_encrypted:
                raise InvalidBundleError(f"share {n} is not marked encrypted")
            if len(key) != share.width * share.height:
                raise InvalidBundleError(f"key {n} has {len(key)} bits for a {share.width}x{share.height} share")
        if self.share1.msg_len != self.share2.msg_len:
            raise InvalidBundleError("shares disagree on message length")


def xor_plane(plane: BitPlane, key: KeyStream) -> BitPlane:
    """XOR every pixel with the matching key bit and toggle the encrypted flag."""
    if key.plane_index != plane.plane_index:
        raise WrongKeyError(f"key for plane {key.plane_index} applied to plane {plane.plane_index}")
    if len(key) != plane.width * plane.height:
        raise KeySizeMismatchError(f"key has {len(key)} bits, plane has {plane.width * plane.height} pixels")
    return BitPlane(
        plane.plane_index,
        plane.width,
        plane.height,
        plane.msg_len,
        not plane.is_encrypted,
        np.bitwise_xor(plane.bits, key.bits),
    )


def message_planes(message: bytes) -> tuple[BitPlane, BitPlane]:
    """Split a message into its two plaintext planes."""
    odd, even = split_odd_even(encode_bits(message))
    return shape_plane(odd, 1, len(message)), shape_plane(even, 2, len(message))


def encrypt_message(message: bytes, rng=None, keys: Optional[tuple[KeyStream, KeyStream]] = None) -> CipherBundle:
    """Encrypt ``message`` into two shares with fresh independent keys.

    ``keys`` injects a fixed key pair instead (for reproducing known
    vectors); each injected key is truncated to its plane, or extended with
    bits from ``rng`` when short.
    """
    plane1, plane2 = message_planes(message)
    rng = rng or default_rng()
    if keys is None:
        key1 = generate_key(plane1.width * plane1.height, rng, plane_index=1)
        key2 = generate_key(plane2.width * plane2.height, rng, plane_index=2)
    else:
        key1, key2 = resize_key(keys[0], plane1, rng), resize_key(keys[1], plane2, rng)
    return CipherBundle(xor_plane(plane1, key1), xor_plane(plane2, key2), key1, key2)


def decrypt_partial(share: EncryptedShare, key: KeyStream) -> BitPlane:
    """Decrypt one share.  The result holds only half of the message bits."""
    if not share.is_encrypted:
        raise InvalidBundleError(f"share {share.plane_index} is not marked encrypted")
    return xor_plane(share, key)


def recover_message(plane1: BitPlane, plane2: BitPlane) -> bytes:
    """Merge two decrypted planes back into the message bytes."""
    if (plane1.plane_index, plane2.plane_index) != (1, 2):
        raise WrongKeyError(f"planes given in order {plane1.plane_index}, {plane2.plane_index}")
    if plane1.is_encrypted or plane2.is_encrypted:
        raise InvalidBundleError("cannot recover a message from encrypted planes")
    if plane1.msg_len != plane2.msg_len:
        raise MalformedStreamError("planes disagree on message length")
    return decode_bits(merge_odd_even(flatten_plane(plane1), flatten_plane(plane2)))


def decrypt_message(bundle: CipherBundle) -> bytes:
    return recover_message(
        decrypt_partial(bundle.share1, bundle.key1),
        decrypt_partial(bundle.share2, bundle.key2),
    )
