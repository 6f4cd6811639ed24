"""Pairwise additive masking over 32-bit counter vectors.

Every ordered pair of group members shares a DH point; hashing that point
with the entry index and the round id yields a 32-bit mask word. Each member
adds the mask stream toward higher-positioned members and subtracts it toward
lower-positioned ones, so the streams cancel exactly in the group sum:

    sum_i k_i  =  0            (mod 2**32)
    sum_i (S_i + k_i)  =  sum_i S_i   (mod 2**32)

When some members never submit, each surviving member reveals the partial
mask sum it shared with the missing ones (its recovery share), and the
aggregator subtracts those to restore exact cancellation over the survivors.

All vector arithmetic is unsigned 32-bit with wraparound; masks and
ciphertexts are uniform-looking words, and a single ciphertext reveals
nothing about its plaintext without the matching mask stream.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Collection, Mapping, Sequence, Tuple

import numpy as np

from .keys import KeyPair, shared_point

MASK_MODULUS = 1 << 32
_ENTRY_PACK = struct.Struct(">QQ")  # (entry index, round id), both 8-byte BE


class ProtocolError(ValueError):
    """Raised for malformed protocol inputs (membership, lengths, ranges)."""


@dataclass(frozen=True)
class GroupView:
    """Everything a member learns about its group from the round announcement.

    ``member_ids`` is ascending; a member's position in that tuple is the
    index used by the masking sign rule. ``sketch_seeds`` rides along so that
    sketch-compressed rounds agree on hash seeds without extra messages.
    """

    round_id: int
    member_ids: Tuple[int, ...]
    public_keys: Mapping[int, bytes]
    vector_length: int
    sketch_seeds: Tuple[Tuple[int, int], ...] | None = None

    def __post_init__(self) -> None:
        if not (0 <= self.round_id < 1 << 64):
            raise ProtocolError(f"round_id {self.round_id} outside [0, 2**64)")
        if self.vector_length < 1:
            raise ProtocolError("vector_length must be >= 1")
        ids = self.member_ids
        if not ids:
            raise ProtocolError("a group needs at least 1 member")
        if list(ids) != sorted(set(ids)):
            raise ProtocolError("member_ids must be strictly ascending")
        for uid in ids:
            if uid not in self.public_keys:
                raise ProtocolError(f"missing public key for member {uid}")

    def position_of(self, user_id: int) -> int:
        try:
            return self.member_ids.index(user_id)
        except ValueError:
            raise ProtocolError(f"user {user_id} is not a group member") from None


@dataclass(frozen=True)
class AggregateResult:
    """Summed ciphertexts plus which members never submitted."""

    values: np.ndarray
    missing: Tuple[int, ...] = ()

    @property
    def complete(self) -> bool:
        return not self.missing


# --- mask stream derivation ---

# Streams are pure functions of (shared point, round id, length); the cache
# lets a simulated member and its peer (and any recovery pass) reuse one
# derivation without changing what either side would compute alone.
_STREAM_CACHE: dict[tuple[bytes, int, int], np.ndarray] = {}
_STREAM_CACHE_MAX = 4096


def mask_stream(point: bytes, round_id: int, length: int) -> np.ndarray:
    """The 32-bit mask words one DH pair derives for a round.

    Word l is the low 32 bits of SHA-256(point || l || round_id) with both
    integers encoded as 8-byte big-endian. The returned array is read-only.
    """
    if not (0 <= round_id < 1 << 64):
        raise ProtocolError(f"round_id {round_id} outside [0, 2**64)")
    if length < 1:
        raise ProtocolError("stream length must be >= 1")
    key = (point, round_id, length)
    hit = _STREAM_CACHE.get(key)
    if hit is not None:
        return hit
    base = hashlib.sha256(point)
    copy = base.copy
    pack = _ENTRY_PACK.pack
    digests = []
    append = digests.append
    for l in range(length):
        h = copy()
        h.update(pack(l, round_id))
        append(h.digest())
    # Low 32 bits of each 256-bit digest = the last big-endian word.
    words = (
        np.frombuffer(b"".join(digests), dtype=">u4")
        .reshape(-1, 8)[:, 7]
        .astype(np.uint32)
    )
    words.flags.writeable = False
    if len(_STREAM_CACHE) >= _STREAM_CACHE_MAX:
        _STREAM_CACHE.pop(next(iter(_STREAM_CACHE)))
    _STREAM_CACHE[key] = words
    return words


def _signed_stream_sum(
    own: KeyPair,
    own_id: int,
    group: GroupView,
    peers: Sequence[int],
) -> np.ndarray:
    """Sum of pair streams toward ``peers``, signed by relative position."""
    pos = group.position_of(own_id)
    total = np.zeros(group.vector_length, dtype=np.uint32)
    for peer in peers:
        peer_pos = group.position_of(peer)
        if peer_pos == pos:
            raise ProtocolError("a member has no pair stream with itself")
        stream = mask_stream(
            shared_point(own, group.public_keys[peer]),
            group.round_id,
            group.vector_length,
        )
        if pos < peer_pos:
            total += stream
        else:
            total -= stream
    return total


def blinding_factors(own: KeyPair, own_id: int, group: GroupView) -> np.ndarray:
    """The member's full mask vector k_i for this round (all peers)."""
    group.position_of(own_id)  # membership check
    if group.public_keys[own_id] != own.public_bytes:
        raise ProtocolError(f"keypair does not match announced key for user {own_id}")
    peers = [uid for uid in group.member_ids if uid != own_id]
    return _signed_stream_sum(own, own_id, group, peers)


def encrypt(values: Sequence[int] | np.ndarray, factors: np.ndarray) -> np.ndarray:
    """Mask a plaintext count vector: (S + k) mod 2**32."""
    arr = np.asarray(values)
    if arr.ndim != 1 or arr.shape != factors.shape:
        raise ProtocolError(
            f"plaintext shape {arr.shape} does not match factors {factors.shape}"
        )
    if not np.issubdtype(arr.dtype, np.integer):
        raise ProtocolError("plaintext entries must be integers")
    as64 = arr.astype(np.int64, copy=False)
    if as64.min(initial=0) < 0 or as64.max(initial=0) >= MASK_MODULUS:
        raise ProtocolError("plaintext entries must lie in [0, 2**32)")
    return arr.astype(np.uint32) + factors


def aggregate(
    ciphertexts: Mapping[int, np.ndarray],
    group: GroupView,
) -> AggregateResult:
    """Sum submitted ciphertexts mod 2**32.

    With every member present the masks cancel and the result is the
    plaintext sum. Otherwise the result is still a masked partial and the
    ``missing`` field says whose recovery shares are needed.
    """
    total = np.zeros(group.vector_length, dtype=np.uint32)
    for uid, entries in ciphertexts.items():
        group.position_of(uid)  # membership check
        if entries.shape != (group.vector_length,):
            raise ProtocolError(
                f"ciphertext from {uid} has length {entries.shape}, "
                f"expected {group.vector_length}"
            )
        total += entries.astype(np.uint32, copy=False)
    missing = tuple(uid for uid in group.member_ids if uid not in ciphertexts)
    return AggregateResult(values=total, missing=missing)


def recovery_share(
    own: KeyPair,
    own_id: int,
    group: GroupView,
    online: Collection[int],
) -> np.ndarray:
    """The mask subtotal this member shared with the offline set.

    Only surviving members may respond, and the share covers offline peers
    exclusively, so nothing about online members' masks is revealed.
    """
    online_set = set(online)
    if own_id not in online_set:
        raise ProtocolError(f"user {own_id} is offline and cannot serve recovery")
    for uid in online_set:
        group.position_of(uid)
    offline = [uid for uid in group.member_ids if uid not in online_set]
    if not offline:
        return np.zeros(group.vector_length, dtype=np.uint32)
    return _signed_stream_sum(own, own_id, group, offline)


def recover_aggregate(
    ciphertexts: Mapping[int, np.ndarray],
    shares: Mapping[int, np.ndarray],
    group: GroupView,
) -> np.ndarray:
    """Exact online-subset sum: (sum of ciphertexts - sum of shares) mod 2**32."""
    if not ciphertexts:
        raise ProtocolError("recovery needs at least one online ciphertext")
    if set(ciphertexts) != set(shares):
        raise ProtocolError("recovery shares must cover exactly the online submitters")
    partial = aggregate(ciphertexts, group)
    correction = np.zeros(group.vector_length, dtype=np.uint32)
    for uid, entries in shares.items():
        if entries.shape != (group.vector_length,):
            raise ProtocolError(f"recovery share from {uid} has wrong length")
        correction += entries.astype(np.uint32, copy=False)
    return partial.values - correction
