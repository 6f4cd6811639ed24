"""Diffie-Hellman key material for the pairwise masking scheme.

Keys live on Curve25519: private keys are 32-byte scalars, public keys the
canonical 32-byte point encoding, and the shared point for a pair of users
is the X25519 exchange output, which both sides derive identically.
"""

from __future__ import annotations

import random
import secrets
from dataclasses import dataclass

from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)

KEY_BYTES = 32


class KeyError_(ValueError):
    """Raised for malformed key material."""


@dataclass(frozen=True)
class KeyPair:
    """A user's DH keypair; both halves are raw 32-byte encodings."""

    private_bytes: bytes
    public_bytes: bytes

    def __post_init__(self) -> None:
        if len(self.private_bytes) != KEY_BYTES or len(self.public_bytes) != KEY_BYTES:
            raise KeyError_("keys must be 32-byte raw encodings")


def keygen(rng: random.Random | int | None = None) -> KeyPair:
    """Generate a keypair, deterministically when ``rng`` is seeded.

    ``rng`` may be a ``random.Random``, an int seed, or None for OS entropy.
    """
    if rng is None:
        priv = secrets.token_bytes(KEY_BYTES)
    else:
        if isinstance(rng, int):
            rng = random.Random(rng)
        priv = rng.randbytes(KEY_BYTES)
    sk = X25519PrivateKey.from_private_bytes(priv)
    return KeyPair(
        private_bytes=priv,
        public_bytes=sk.public_key().public_bytes_raw(),
    )


# X25519 exchanges dominate setup cost in large simulated cohorts; memoize
# them process-wide. The exchange is a pure function of both keys.
_EXCHANGE_CACHE: dict[tuple[bytes, bytes], bytes] = {}
_EXCHANGE_CACHE_MAX = 16384


def shared_point(own: KeyPair, peer_public: bytes) -> bytes:
    """Canonical encoding of the DH shared point with ``peer_public``."""
    if len(peer_public) != KEY_BYTES:
        raise KeyError_("peer public key must be 32 bytes")
    cache_key = (own.private_bytes, peer_public)
    hit = _EXCHANGE_CACHE.get(cache_key)
    if hit is not None:
        return hit
    point = X25519PrivateKey.from_private_bytes(own.private_bytes).exchange(
        X25519PublicKey.from_public_bytes(peer_public)
    )
    if len(_EXCHANGE_CACHE) >= _EXCHANGE_CACHE_MAX:
        _EXCHANGE_CACHE.pop(next(iter(_EXCHANGE_CACHE)))
    _EXCHANGE_CACHE[cache_key] = point
    return point
