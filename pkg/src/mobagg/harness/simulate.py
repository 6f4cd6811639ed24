"""End-to-end simulation of aggregation rounds with exact byte accounting.

One round takes every user's plaintext vector through group assignment,
masking, transport framing, aggregation, and (when members drop out) fault
recovery. The aggregator's result is checked against the plaintext oracle
every single round; a mismatch is a fatal protocol bug, not a statistic.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import sketch as cms
from ..privagg import (
    GroupView,
    KeyPair,
    aggregate,
    assign_groups,
    blinding_factors,
    decode_vector_message,
    encode_announcement,
    encode_recovery_request,
    encode_vector_message,
    encrypt,
    keygen,
    recover_aggregate,
    recovery_share,
    VectorMessage,
)
from .transport import DOWNLOAD, UPLOAD, InProcessTransport

MODES = ("station", "grid", "od", "sketch")


class OracleMismatch(RuntimeError):
    """The protocol aggregate disagreed with the plaintext sum."""


@dataclass(frozen=True)
class SimConfig:
    """Shape of the simulated deployment and of one round's vector."""

    n_users: int
    group_size: int
    threshold: int
    mode: str = "station"
    dropout_rate: float = 0.0
    n_stations: int | None = None
    grid_rows: int | None = None
    grid_cols: int | None = None
    sketch_epsilon: float = 0.01
    sketch_delta: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_users < 2:
            raise ValueError("need at least 2 users")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValueError("dropout_rate must be in [0, 1)")

    def plain_length(self) -> int:
        """Length of the per-user plaintext vector (before any sketching)."""
        if self.mode in ("station", "od", "sketch"):
            if not self.n_stations:
                raise ValueError(f"{self.mode} mode needs n_stations")
            if self.mode == "od":
                return self.n_stations * self.n_stations
            return 2 * self.n_stations
        if not (self.grid_rows and self.grid_cols):
            raise ValueError("grid mode needs grid_rows and grid_cols")
        return self.grid_rows * self.grid_cols

    def sketch_params(self) -> cms.SketchParams | None:
        if self.mode != "sketch":
            return None
        return cms.make_params(self.plain_length(), self.sketch_epsilon, self.sketch_delta)

    def vector_length(self) -> int:
        """Length of the transported (possibly sketched) vector."""
        params = self.sketch_params()
        return params.table_size if params else self.plain_length()


@dataclass(frozen=True)
class GroupReport:
    group_index: int
    n_members: int
    n_online: int
    payload_bytes_per_member: int
    upload_bytes: int
    download_bytes: int
    recovery_invoked: bool
    verified: bool


@dataclass(frozen=True)
class RoundReport:
    round_id: int
    mode: str
    n_users: int
    vector_length: int
    skipped: bool
    groups: tuple[GroupReport, ...] = ()
    duration_s: float = 0.0

    @property
    def upload_bytes(self) -> int:
        return sum(g.upload_bytes for g in self.groups)

    @property
    def download_bytes(self) -> int:
        return sum(g.download_bytes for g in self.groups)

    @property
    def recovery_invoked(self) -> bool:
        return any(g.recovery_invoked for g in self.groups)

    @property
    def verified(self) -> bool:
        return all(g.verified for g in self.groups)


@dataclass(frozen=True)
class RoundOutcome:
    """What the aggregator learns from one round."""

    values: np.ndarray            # per-ROI estimates in the plain domain
    transported: np.ndarray       # the aggregated vector as shipped (uint32)
    online_users: tuple[int, ...]
    report: RoundReport
    sketch_seeds: tuple[tuple[int, int], ...] | None = None


def setup_users(n_users: int, rng: random.Random) -> dict[int, KeyPair]:
    """Key setup: user ids 0..n-1 with fresh DH keypairs."""
    return {uid: keygen(rng) for uid in range(n_users)}


def synthesize_users(
    targets: Sequence[int] | np.ndarray,
    n_users: int,
    rng: random.Random,
) -> np.ndarray:
    """0/1 presence matrix (n_users x n_rois) whose column sums hit ``targets``.

    Each ROI's count is assigned to that many distinct users; a user may be
    present in several ROIs at once.
    """
    targets = np.asarray(targets, dtype=np.int64)
    if targets.min(initial=0) < 0:
        raise ValueError("target counts cannot be negative")
    if targets.max(initial=0) > n_users:
        raise ValueError(
            f"target count {int(targets.max())} exceeds population {n_users}"
        )
    matrix = np.zeros((n_users, targets.size), dtype=np.int64)
    for roi, count in enumerate(targets.tolist()):
        if count:
            for uid in rng.sample(range(n_users), count):
                matrix[uid, roi] = 1
    return matrix


def _member_vectors(
    config: SimConfig,
    plain: np.ndarray,
    params: cms.SketchParams | None,
    seeds: tuple[tuple[int, int], ...] | None,
) -> np.ndarray:
    """What each user actually submits: raw counts or its local sketch."""
    if params is None:
        return plain
    rows = [
        cms.encode_vector(plain[uid], params, seeds).flatten()
        for uid in range(plain.shape[0])
    ]
    return np.stack(rows)


def simulate_round(
    config: SimConfig,
    user_vectors: np.ndarray,
    keys: dict[int, KeyPair],
    round_id: int,
    rng: random.Random,
    transport: InProcessTransport | None = None,
) -> RoundOutcome:
    """Run one full aggregation round over every user's plaintext vector.

    ``user_vectors`` is (n_users, plain_length) of non-negative counts. The
    returned values cover only the users that stayed online; each group's
    aggregate is verified against the plaintext oracle and a disagreement
    raises OracleMismatch.
    """
    t0 = time.perf_counter()
    own_transport = transport is None
    bus = transport or InProcessTransport()
    plain_len = config.plain_length()
    if user_vectors.shape != (config.n_users, plain_len):
        raise ValueError(
            f"user_vectors must be ({config.n_users}, {plain_len}), got {user_vectors.shape}"
        )
    if set(keys) != set(range(config.n_users)):
        raise ValueError("keys must cover exactly user ids 0..n_users-1")

    params = config.sketch_params()
    seeds = None
    if params is not None:
        seeds = cms.draw_seeds(params.depth, rng)
    submitted = _member_vectors(config, user_vectors, params, seeds)
    length = submitted.shape[1]

    memberships = assign_groups(
        list(range(config.n_users)), config.group_size, config.threshold, rng
    )
    if not memberships:
        report = RoundReport(
            round_id=round_id, mode=config.mode, n_users=config.n_users,
            vector_length=length, skipped=True,
            duration_s=time.perf_counter() - t0,
        )
        return RoundOutcome(
            values=np.zeros(plain_len, dtype=np.int64),
            transported=np.zeros(length, dtype=np.uint32),
            online_users=(),
            report=report,
            sketch_seeds=seeds,
        )

    total = np.zeros(length, dtype=np.uint32)
    online_all: list[int] = []
    group_reports: list[GroupReport] = []
    try:
        for g_index, members in enumerate(memberships):
            view = GroupView(
                round_id=round_id,
                member_ids=members,
                public_keys={uid: keys[uid].public_bytes for uid in members},
                vector_length=length,
                sketch_seeds=seeds,
            )
            up = down = 0
            announcement = encode_announcement(view)
            for _ in members:
                down += len(bus.deliver(announcement, DOWNLOAD))

            # Dropouts happen before submission; at least one member survives.
            online = [uid for uid in members if rng.random() >= config.dropout_rate]
            if not online:
                online = [rng.choice(members)]
            online_set = set(online)

            payload = 4 * length
            ciphertexts: dict[int, np.ndarray] = {}
            for uid in online:
                factors = blinding_factors(keys[uid], uid, view)
                blob = bus.deliver(
                    encode_vector_message(
                        VectorMessage(uid, round_id, encrypt(submitted[uid], factors))
                    ),
                    UPLOAD,
                )
                up += len(blob)
                ciphertexts[uid] = decode_vector_message(blob).entries

            result = aggregate(ciphertexts, view)
            recovery = bool(result.missing)
            if recovery:
                request = encode_recovery_request(round_id, online)
                shares: dict[int, np.ndarray] = {}
                for uid in online:
                    down += len(bus.deliver(request, DOWNLOAD))
                    blob = bus.deliver(
                        encode_vector_message(
                            VectorMessage(
                                uid, round_id,
                                recovery_share(keys[uid], uid, view, online_set),
                                kind="recovery_share",
                            )
                        ),
                        UPLOAD,
                    )
                    up += len(blob)
                    shares[uid] = decode_vector_message(blob).entries
                values = recover_aggregate(ciphertexts, shares, view)
            else:
                values = result.values

            oracle = np.zeros(length, dtype=np.uint32)
            for uid in online:
                oracle += submitted[uid].astype(np.uint32)
            verified = bool(np.array_equal(values, oracle))
            group_reports.append(
                GroupReport(
                    group_index=g_index,
                    n_members=len(members),
                    n_online=len(online),
                    payload_bytes_per_member=payload,
                    upload_bytes=up,
                    download_bytes=down,
                    recovery_invoked=recovery,
                    verified=verified,
                )
            )
            if not verified:
                raise OracleMismatch(
                    f"round {round_id} group {g_index}: aggregate != plaintext sum"
                )
            total += values
            online_all.extend(online)
    finally:
        if own_transport:
            bus.close()

    if params is not None:
        merged = cms.CountMinSketch.from_flat(params, seeds, total)
        values_plain = cms.estimate_vector(merged)
    else:
        values_plain = total.astype(np.int64)

    report = RoundReport(
        round_id=round_id,
        mode=config.mode,
        n_users=config.n_users,
        vector_length=length,
        skipped=False,
        groups=tuple(group_reports),
        duration_s=time.perf_counter() - t0,
    )
    return RoundOutcome(
        values=values_plain,
        transported=total,
        online_users=tuple(sorted(online_all)),
        report=report,
        sketch_seeds=seeds,
    )
