"""Multi-aspect record scorer.

Each record is hashed d+1 ways: every attribute individually (categorical
values through a linear hash, numeric values through a streaming
log/min-max bucketizer) and the whole record jointly (categorical linear
hashes summed with a random-hyperplane signature of the numeric part). Each
hash feeds a pair of count tables, current tick vs all time, and the record
score is the sum of the d+1 chi-squared statistics. The per-attribute terms
double as an explanation of which attribute burst.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .events import MultiAspectRecord
from .hashing import DEFAULT_SEED, MERSENNE_P, canonical_key
from .midas import chi2_score
from .sketch import CountMinSketch


@dataclass
class StreamingMinMax:
    """Running min and max of log-transformed values for one numeric column."""

    lo: float | None = None
    hi: float | None = None

    def absorb(self, value: float) -> None:
        if self.lo is None or value < self.lo:
            self.lo = value
        if self.hi is None or value > self.hi:
            self.hi = value

    def normalize(self, value: float) -> float:
        # First value (or a constant column) has no spread; pin it to 0.
        if self.lo is None or self.hi == self.lo:
            return 0.0
        return (value - self.lo) / (self.hi - self.lo)


def bucketize_numeric(value: float, state: StreamingMinMax, n_buckets: int) -> int:
    """Log-transform, min-max normalize, then split into n_buckets.

    The running min/max absorb the incoming value first, so the value always
    lands inside [min, max]. The floor(x * b) mod b rule wraps the running
    maximum itself into bucket 0.
    """
    if value <= -1.0:
        raise ValueError(f"numeric value must be > -1 for log1p, got {value}")
    shifted = math.log1p(value)
    state.absorb(shifted)
    scaled = state.normalize(shifted)
    return int(scaled * n_buckets) % n_buckets


def hash_categorical(value, seed_pair: tuple[int, int], n_buckets: int) -> int:
    """Linear hash of an opaque categorical value into n_buckets."""
    a, b = seed_pair
    return ((a * canonical_key(value) + b) % MERSENNE_P) % n_buckets


def feature_hash(
    value,
    n_buckets: int,
    state: StreamingMinMax | None = None,
    seed_pair: tuple[int, int] = (1, 0),
) -> int:
    """Bucket one attribute value: numeric when ``state`` is given, else
    categorical through the supplied linear-hash parameters."""
    if state is not None:
        return bucketize_numeric(float(value), state, n_buckets)
    return hash_categorical(value, seed_pair, n_buckets)


@dataclass
class HyperplaneHash:
    """Signature of a numeric vector from k random hyperplanes.

    k = ceil(log2(n_buckets)) directions with i.i.d. standard-normal entries,
    fixed at construction. Each strictly positive projection contributes one
    bit; the bit string read as an integer is the bucket.
    """

    directions: np.ndarray  # (k, p)

    @classmethod
    def create(cls, dim: int, n_buckets: int, rng: np.random.Generator) -> "HyperplaneHash":
        k = max(1, math.ceil(math.log2(n_buckets))) if n_buckets > 1 else 1
        return cls(directions=rng.standard_normal((k, dim)))

    def signature(self, vector) -> int:
        v = np.asarray(vector, dtype=np.float64)
        if v.shape[0] != self.directions.shape[1]:
            raise ValueError(
                f"numeric part has dimension {v.shape[0]}, "
                f"hyperplanes expect {self.directions.shape[1]}"
            )
        bits = self.directions @ v > 0.0
        value = 0
        for i, bit in enumerate(bits):
            if bit:
                value |= 1 << i
        return value


def record_hash(
    record: MultiAspectRecord,
    hyperplanes: HyperplaneHash | None,
    n_buckets: int,
    cat_seed_pairs: tuple[tuple[int, int], ...] = (),
) -> int:
    """Whole-record bucket: summed categorical linear hashes plus the
    hyperplane signature of the numeric part, mod n_buckets."""
    if len(cat_seed_pairs) < len(record.categorical):
        raise ValueError("need one linear-hash seed pair per categorical attribute")
    bucket_cat = 0
    for value, pair in zip(record.categorical, cat_seed_pairs):
        bucket_cat += hash_categorical(value, pair, n_buckets)
    bucket_num = 0
    if record.numeric:
        if hyperplanes is None:
            raise ValueError("records with numeric attributes need hyperplanes")
        bucket_num = hyperplanes.signature(record.numeric)
    return (bucket_cat + bucket_num) % n_buckets


@dataclass(frozen=True, slots=True)
class RecordScore:
    total: float
    record_term: float
    per_feature: tuple[float, ...]


class MstreamDetector:
    """Streaming scorer for fixed-arity multi-aspect records.

    The attribute split (how many categorical, how many numeric) is fixed at
    construction. Current-tick counts decay by ``alpha`` on tick change; for
    tick-less data the caller assigns synthetic ticks (the CLI groups every
    ``decay_every`` records into one).
    """

    def __init__(
        self,
        n_categorical: int,
        n_numeric: int,
        n_rows: int = 2,
        n_buckets: int = 1024,
        alpha: float = 0.85,
        seed: int = DEFAULT_SEED,
    ):
        if n_categorical < 0 or n_numeric < 0 or n_categorical + n_numeric == 0:
            raise ValueError("detector needs at least one attribute")
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"decay factor must be in (0, 1), got {alpha}")
        self.n_categorical = n_categorical
        self.n_numeric = n_numeric
        self.n_rows = n_rows
        self.n_buckets = n_buckets
        self.alpha = alpha
        rng = np.random.default_rng(seed)

        def draw_pair() -> tuple[int, int]:
            a = (int(rng.integers(1, MERSENNE_P)) | 1) % MERSENNE_P
            return a, int(rng.integers(0, MERSENNE_P))

        # Independent linear-hash copies: one per row per categorical column,
        # and a separate set per row for the record-level hash.
        self._feature_cat_pairs = [
            tuple(draw_pair() for _ in range(n_categorical)) for _ in range(n_rows)
        ]
        self._record_cat_pairs = [
            tuple(draw_pair() for _ in range(n_categorical)) for _ in range(n_rows)
        ]
        self._hyperplanes = [
            HyperplaneHash.create(n_numeric, n_buckets, rng) if n_numeric else None
            for _ in range(n_rows)
        ]
        self.minmax = [StreamingMinMax() for _ in range(n_numeric)]

        arity = n_categorical + n_numeric
        self._feature_totals = [self._table() for _ in range(arity)]
        self._feature_currents = [self._table() for _ in range(arity)]
        self._record_total = self._table()
        self._record_current = self._table()
        self.internal_tick: int | None = None

    def _table(self) -> np.ndarray:
        return np.zeros((self.n_rows, self.n_buckets), dtype=np.float64)

    def _advance(self, tick: int) -> None:
        if self.internal_tick is None:
            self.internal_tick = tick
            return
        if tick < self.internal_tick:
            raise ValueError(f"tick regression: got {tick} after {self.internal_tick}")
        if tick > self.internal_tick:
            for table in self._feature_currents:
                table *= self.alpha
            self._record_current *= self.alpha
            self.internal_tick = tick

    def _feature_buckets(self, record: MultiAspectRecord) -> list[list[int]]:
        """Per-attribute bucket list, one entry per hash row."""
        buckets = []
        for j, value in enumerate(record.categorical):
            buckets.append(
                [
                    hash_categorical(value, self._feature_cat_pairs[row][j], self.n_buckets)
                    for row in range(self.n_rows)
                ]
            )
        for j, value in enumerate(record.numeric):
            # The bucketizer is deterministic, so rows share one bucket; the
            # min/max state absorbs the value exactly once.
            bucket = bucketize_numeric(value, self.minmax[j], self.n_buckets)
            buckets.append([bucket] * self.n_rows)
        return buckets

    def _record_buckets(self, record: MultiAspectRecord) -> list[int]:
        return [
            record_hash(
                record,
                self._hyperplanes[row],
                self.n_buckets,
                self._record_cat_pairs[row],
            )
            for row in range(self.n_rows)
        ]

    @staticmethod
    def _bump_and_query(total, current, buckets, weight=1.0) -> tuple[float, float]:
        a = s = math.inf
        for row, bucket in enumerate(buckets):
            current[row, bucket] += weight
            total[row, bucket] += weight
            a = min(a, current[row, bucket])
            s = min(s, total[row, bucket])
        return a, s

    def score(self, record: MultiAspectRecord) -> RecordScore:
        """Insert one record; return its total score and per-attribute terms.

        The total is exactly the record-level term plus the sum of attribute
        terms, so the argmax of ``per_feature`` names the attribute that
        contributed most.
        """
        if (
            len(record.categorical) != self.n_categorical
            or len(record.numeric) != self.n_numeric
        ):
            raise ValueError(
                f"record arity ({len(record.categorical)} cat, {len(record.numeric)} num) "
                f"does not match detector ({self.n_categorical} cat, {self.n_numeric} num)"
            )
        self._advance(record.tick)
        t = record.tick

        per_feature = []
        for j, buckets in enumerate(self._feature_buckets(record)):
            a, s = self._bump_and_query(
                self._feature_totals[j], self._feature_currents[j], buckets
            )
            per_feature.append(chi2_score(a, s, t))

        a, s = self._bump_and_query(
            self._record_total, self._record_current, self._record_buckets(record)
        )
        record_term = chi2_score(a, s, t)
        total = record_term + sum(per_feature)
        return RecordScore(total, record_term, tuple(per_feature))

    def state_bytes(self) -> int:
        tables = (
            self._feature_totals
            + self._feature_currents
            + [self._record_total, self._record_current]
        )
        return int(sum(t.nbytes for t in tables))
