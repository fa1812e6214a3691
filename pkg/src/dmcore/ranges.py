"""Range spaces of distance functions: enumeration, sample deviation, ball decomposition.

A family indexes functions f_h(c) = w(h) * kernel(h, c)^z by points h of H.
A range is the set {h : f_h(C) <= r} for a centre set C and radius r >= 0,
where f_h(C) is the minimum over C.  For fixed C ranges are the prefixes of
H sorted by value, cut only between distinct values, so enumeration never
touches real radii.  The empty range is always counted (radius below every
value), matching the convention that a family has at least two ranges.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import GuardExceeded, InvariantViolation, ValidationError
from .metric import ATOL, MetricSpace
from .smoothing import SmoothedMetric, ball_delta, level_for_radius

SINGLETON_GUARD = 10**7
KSUBSET_GUARD = 10**6
CHUNK = 4096


@dataclass(frozen=True, eq=False)
class FunctionFamily:
    index_set: np.ndarray  # point ids of H
    values: np.ndarray  # (|H|, n): f_h evaluated at each single centre
    kernel: str
    z: float
    weights: np.ndarray

    @property
    def m(self) -> int:
        return self.index_set.size


def make_family(M: MetricSpace, H, kernel: str = "plain", S: SmoothedMetric | None = None,
                weights=None, z: float = 1.0) -> FunctionFamily:
    H = np.asarray(H, dtype=np.int64)
    if H.size == 0:
        raise ValidationError("index set must be nonempty")
    w = np.ones(H.size) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != H.shape or (w < 0).any():
        raise ValidationError("weights must be nonnegative, one per index")
    if kernel == "plain":
        base = M.dist[H]
    elif kernel == "smoothed":
        if S is None:
            raise ValidationError("smoothed kernel needs a SmoothedMetric")
        base = S.matrix[H]
    else:
        raise ValidationError(f"unknown kernel {kernel!r}")
    return FunctionFamily(index_set=H, values=w[:, None] * base**z, kernel=kernel, z=z, weights=w)


def is_gap(weights, c: float) -> bool:
    """True when any two distinct weights differ by a factor of at least c."""
    u = np.unique(np.asarray(weights, dtype=float))
    u = u[u > 0]
    return bool(u.size < 2 or (u[1:] / u[:-1] >= c * (1 - 1e-12)).all())


@dataclass(frozen=True)
class RangeReport:
    distinct_count: int
    m: int
    k: int
    ranges: tuple[tuple[int, ...], ...] | None = None

    @property
    def dim_estimate(self) -> float:
        return math.log(self.distinct_count) / math.log(self.m) if self.m > 1 else float("nan")


def _prefix_masks(vals: np.ndarray) -> np.ndarray:
    """Bitmask rows of every value-threshold prefix, one batch of centre columns at a time.

    ``vals`` is (m, b).  Returns (rows, words) uint64 masks.
    """
    m, b = vals.shape
    words = (m + 63) // 64
    order = np.argsort(vals, axis=0, kind="stable")
    sv = np.take_along_axis(vals, order, axis=0)
    ends = np.ones((m, b), dtype=bool)
    ends[:-1] = sv[1:] != sv[:-1]
    bits = np.zeros((m, b, words), dtype=np.uint64)
    w_idx, b_idx = order // 64, (order % 64).astype(np.uint64)
    col = np.broadcast_to(np.arange(b), (m, b))
    bits[np.arange(m)[:, None], col, w_idx] = np.left_shift(np.uint64(1), b_idx)
    cum = np.bitwise_or.accumulate(bits, axis=0)
    return cum[ends]


def _collect(value_batches, m: int, keep_sets: bool, k: int) -> RangeReport:
    words = (m + 63) // 64
    seen = [np.zeros((1, words), dtype=np.uint64)]  # the empty range
    for vals in value_batches:
        seen.append(np.unique(_prefix_masks(vals), axis=0))
    allm = np.unique(np.concatenate(seen), axis=0)
    ranges = None
    if keep_sets:
        ranges = tuple(sorted(
            tuple(i for i in range(m) if (int(row[i // 64]) >> (i % 64)) & 1) for row in allm
        ))
    return RangeReport(distinct_count=int(allm.shape[0]), m=m, k=k, ranges=ranges)


def enumerate_ranges_singleton(F: FunctionFamily, M: MetricSpace, keep_sets: bool = False) -> RangeReport:
    """Distinct ranges over single centres of X; sets hold positions into H."""
    if M.n * F.m > SINGLETON_GUARD:
        raise GuardExceeded(f"|X|*|H| = {M.n * F.m} exceeds {SINGLETON_GUARD}")
    batches = (F.values[:, s:s + CHUNK] for s in range(0, M.n, CHUNK))
    return _collect(batches, F.m, keep_sets, 1)


def _subset_values(F: FunctionFamily, n: int, k: int):
    combos = itertools.combinations(range(n), k)
    while True:
        block = np.array(list(itertools.islice(combos, CHUNK)), dtype=np.int64)
        if block.size == 0:
            return
        yield F.values[:, block].min(axis=2)


def enumerate_ranges_ksubset(F: FunctionFamily, M: MetricSpace, k: int, keep_sets: bool = False) -> RangeReport:
    """Distinct ranges over all k-subsets of X as centre sets."""
    if not 1 <= k <= M.n:
        raise ValidationError(f"need 1 <= k <= n, got k={k}")
    if math.comb(M.n, k) > KSUBSET_GUARD:
        raise GuardExceeded(f"C({M.n},{k}) exceeds {KSUBSET_GUARD}")
    return _collect(_subset_values(F, M.n, k), F.m, keep_sets, k)


def alpha_deviation(F: FunctionFamily, sample, M: MetricSpace, k: int = 1) -> float:
    """max over ranges R of | |R|/|H| - |sample ∩ R|/|sample| | (sample = point ids in H)."""
    sample = np.asarray(sample, dtype=np.int64)
    if sample.size == 0:
        raise ValidationError("sample must be nonempty")
    pos = {int(h): i for i, h in enumerate(F.index_set)}
    try:
        counts = np.bincount([pos[int(s)] for s in sample], minlength=F.m).astype(float)
    except KeyError as exc:
        raise ValidationError(f"sample id {exc} is not in the index set") from None
    if k == 1:
        batches = (F.values[:, s:s + CHUNK] for s in range(0, M.n, CHUNK))
    else:
        if math.comb(M.n, k) > KSUBSET_GUARD:
            raise GuardExceeded(f"C({M.n},{k}) exceeds {KSUBSET_GUARD}")
        batches = _subset_values(F, M.n, k)
    share = counts / sample.size
    unit = np.full(F.m, 1.0 / F.m)
    worst = 0.0
    for vals in batches:
        order = np.argsort(vals, axis=0, kind="stable")
        sv = np.take_along_axis(vals, order, axis=0)
        ends = np.ones(vals.shape, dtype=bool)
        ends[:-1] = sv[1:] != sv[:-1]
        gap = np.cumsum(unit[order] - share[order], axis=0)
        worst = max(worst, float(np.abs(gap[ends]).max()))
    return worst


def decompose_ball_subtrees(S: SmoothedMetric, x: int, r: float) -> tuple[int, np.ndarray]:
    """Level j and nodes P of N_j whose subtrees union to the delta-ball B(x, r).

    Raises InvariantViolation when the ball is not such a union, which would
    contradict the cross-free property.
    """
    if r <= 0:
        raise ValidationError("radius must be positive")
    j = level_for_radius(S.lam, r)
    ball = ball_delta(S, x, r)
    T = S.tree
    if j <= 0:
        return j, ball
    row = T.anc[min(j, T.L)]
    nodes = np.unique(row[ball])
    union = np.flatnonzero(np.isin(row, nodes))
    if not np.array_equal(union, ball):
        raise InvariantViolation(f"ball B({x}, {r:g}) is not a union of level-{j} subtrees")
    return j, nodes


def alpha_for_sample(m: int, T: int, tau: float) -> float:
    """sqrt(48 (ln T + ln(8/tau)) / m): deviation bound for m i.i.d. samples."""
    return math.sqrt(48 * (math.log(T) + math.log(8 / tau)) / m)


def fitted_exponent(sizes, counts) -> float:
    """Least-squares slope of log(count) against log(size)."""
    return float(np.polyfit(np.log(sizes), np.log(counts), 1)[0])
