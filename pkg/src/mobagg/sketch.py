"""Count-Min sketch with unsigned 32-bit counters.

The sketch compresses a sparse count vector of known index space into a
``depth x width`` counter grid.  Estimates are upper bounds on the true
count (never below it, absent counter wraparound), and two sketches built
with identical parameters and seeds merge by plain counter addition, which
makes the flattened grid safe to ship through the additive-masking
aggregation layer.
"""

from __future__ import annotations

import math
import random
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

# Modulus for the pairwise-independent row hashes. 2**61 - 1 is prime and
# leaves headroom for a*key + b without overflowing Python ints cheaply.
HASH_PRIME = (1 << 61) - 1

_HEADER = struct.Struct("<4sIIQddQ")
_MAGIC = b"CMSK"

Seed = Tuple[int, int]


class SketchParamsError(ValueError):
    """Raised for invalid sizing inputs or mismatched sketch parameters."""


@dataclass(frozen=True)
class SketchParams:
    """Sizing of a Count-Min grid for a given accuracy target.

    ``epsilon`` bounds the overestimate (relative to the L1 mass of the
    counted vector) and ``delta`` bounds the probability of exceeding that
    bound on any single query.
    """

    input_size: int
    epsilon: float
    delta: float
    depth: int
    width: int

    @property
    def table_size(self) -> int:
        return self.depth * self.width

    @property
    def payload_bytes(self) -> int:
        return self.table_size * 4


def make_params(input_size: int, epsilon: float, delta: float) -> SketchParams:
    """Size a sketch: depth = ceil(ln(input_size / delta)), width = ceil(e / epsilon)."""
    if input_size < 1:
        raise SketchParamsError(f"input_size must be >= 1, got {input_size}")
    if not (0.0 < epsilon < 1.0):
        raise SketchParamsError(f"epsilon must be in (0, 1), got {epsilon}")
    if not (0.0 < delta < 1.0):
        raise SketchParamsError(f"delta must be in (0, 1), got {delta}")
    depth = max(1, math.ceil(math.log(input_size / delta)))
    width = max(1, math.ceil(math.e / epsilon))
    return SketchParams(
        input_size=input_size,
        epsilon=float(epsilon),
        delta=float(delta),
        depth=depth,
        width=width,
    )


def draw_seeds(depth: int, rng: random.Random) -> tuple[Seed, ...]:
    """Draw one (a, b) hash seed pair per row; a is never zero."""
    if depth < 1:
        raise SketchParamsError(f"depth must be >= 1, got {depth}")
    return tuple(
        (rng.randrange(1, HASH_PRIME), rng.randrange(0, HASH_PRIME))
        for _ in range(depth)
    )


class CountMinSketch:
    """A Count-Min grid bound to fixed parameters and row seeds.

    Counters are unsigned 32-bit and wrap modulo 2**32 on update and merge.
    A sketch instance is single-writer; concurrent readers are safe once
    updates stop.
    """

    __slots__ = ("params", "seeds", "counters")

    def __init__(
        self,
        params: SketchParams,
        seeds: Sequence[Seed],
        counters: np.ndarray | None = None,
    ) -> None:
        if len(seeds) != params.depth:
            raise SketchParamsError(
                f"need {params.depth} seed pairs, got {len(seeds)}"
            )
        for a, b in seeds:
            if not (0 < a < HASH_PRIME):
                raise SketchParamsError(f"row seed a={a} outside [1, p)")
            if not (0 <= b < HASH_PRIME):
                raise SketchParamsError(f"row seed b={b} outside [0, p)")
        self.params = params
        self.seeds = tuple((int(a), int(b)) for a, b in seeds)
        if counters is None:
            counters = np.zeros((params.depth, params.width), dtype=np.uint32)
        else:
            counters = np.asarray(counters, dtype=np.uint32)
            if counters.shape != (params.depth, params.width):
                raise SketchParamsError(
                    f"counter shape {counters.shape} != "
                    f"({params.depth}, {params.width})"
                )
            counters = counters.copy()
        self.counters = counters

    # --- hashing ---

    def columns(self, key: int) -> tuple[int, ...]:
        """Column index per row for ``key``: ((a*key + b) mod p) mod width."""
        self._check_key(key)
        w = self.params.width
        return tuple((a * key + b) % HASH_PRIME % w for a, b in self.seeds)

    def _check_key(self, key: int) -> None:
        if not (0 <= key < self.params.input_size):
            raise SketchParamsError(
                f"key {key} outside [0, {self.params.input_size})"
            )

    # --- updates and queries ---

    def update(self, key: int, amount: int = 1) -> None:
        """Add ``amount`` (mod 2**32) to one counter per row."""
        amt = np.uint32(int(amount) & 0xFFFFFFFF)
        cols = np.fromiter(self.columns(key), dtype=np.intp, count=self.params.depth)
        # array-indexed add wraps mod 2**32 without scalar-overflow noise
        self.counters[np.arange(self.params.depth), cols] += amt

    def estimate(self, key: int) -> int:
        """Point estimate: the minimum counter across rows (>= true count)."""
        return int(min(self.counters[row, col] for row, col in enumerate(self.columns(key))))

    def merge(self, other: "CountMinSketch") -> "CountMinSketch":
        """Counter-wise sum; requires identical parameters and seeds."""
        if self.params != other.params or self.seeds != other.seeds:
            raise SketchParamsError("cannot merge sketches with mismatched parameters or seeds")
        return CountMinSketch(self.params, self.seeds, self.counters + other.counters)

    # --- transport ---

    def flatten(self) -> np.ndarray:
        """Row-major counter vector, suitable as a masked-aggregation input."""
        return self.counters.reshape(-1).copy()

    @classmethod
    def from_flat(
        cls,
        params: SketchParams,
        seeds: Sequence[Seed],
        flat: Sequence[int] | np.ndarray,
    ) -> "CountMinSketch":
        arr = np.asarray(flat, dtype=np.uint32)
        if arr.size != params.table_size:
            raise SketchParamsError(
                f"flat counter length {arr.size} != {params.table_size}"
            )
        return cls(params, seeds, arr.reshape(params.depth, params.width))

    def to_bytes(self) -> bytes:
        """Header (depth, width, sizing inputs, prime, seeds) + row-major LE32 counters."""
        head = _HEADER.pack(
            _MAGIC,
            self.params.depth,
            self.params.width,
            self.params.input_size,
            self.params.epsilon,
            self.params.delta,
            HASH_PRIME,
        )
        seed_words = struct.pack(
            f"<{2 * self.params.depth}Q",
            *(v for pair in self.seeds for v in pair),
        )
        body = self.counters.astype("<u4").tobytes()
        return head + seed_words + body

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CountMinSketch":
        if len(blob) < _HEADER.size or blob[:4] != _MAGIC:
            raise SketchParamsError("not a serialized sketch")
        magic, depth, width, input_size, epsilon, delta, prime = _HEADER.unpack_from(blob)
        if prime != HASH_PRIME:
            raise SketchParamsError(f"unsupported hash prime {prime}")
        params = SketchParams(
            input_size=int(input_size),
            epsilon=float(epsilon),
            delta=float(delta),
            depth=int(depth),
            width=int(width),
        )
        off = _HEADER.size
        seed_len = 8 * 2 * depth
        body_len = 4 * depth * width
        if len(blob) != off + seed_len + body_len:
            raise SketchParamsError(
                f"serialized sketch is {len(blob)} bytes, expected {off + seed_len + body_len}"
            )
        words = struct.unpack_from(f"<{2 * depth}Q", blob, off)
        seeds = tuple(zip(words[0::2], words[1::2]))
        flat = np.frombuffer(blob, dtype="<u4", count=depth * width, offset=off + seed_len)
        return cls(params, seeds, flat.reshape(depth, width))


def encode_vector(
    values: Sequence[int] | np.ndarray,
    params: SketchParams,
    seeds: Sequence[Seed],
) -> CountMinSketch:
    """Sketch a dense count vector; index i is updated by values[i]."""
    arr = np.asarray(values)
    if arr.ndim != 1 or arr.size != params.input_size:
        raise SketchParamsError(
            f"vector length {arr.size} != input_size {params.input_size}"
        )
    sk = CountMinSketch(params, seeds)
    for key in np.nonzero(arr)[0]:
        sk.update(int(key), int(arr[key]))
    return sk


def estimate_vector(sketch: CountMinSketch, keys: Iterable[int] | None = None) -> np.ndarray:
    """Estimates for every key (or the given ones), as int64."""
    if keys is None:
        keys = range(sketch.params.input_size)
    return np.array([sketch.estimate(k) for k in keys], dtype=np.int64)
