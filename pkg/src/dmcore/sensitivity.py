"""Bicriteria seeding, sensitivity upper bounds and their power-of-two rounding."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import GuardExceeded, ValidationError
from .metric import MetricSpace, check_centers
from .parallel import pmap
from .rng import derive_rng

log = logging.getLogger(__name__)

BRUTE_GUARD = 10**5
CHUNK = 2048


@dataclass(frozen=True, eq=False)
class BicriteriaSolution:
    centers: tuple[int, ...]
    cost: float
    assignment: np.ndarray  # nearest centre per point, smallest id on ties
    cluster_sizes: np.ndarray  # multiplicity-weighted, aligned with centers
    restarts_used: int


@dataclass(frozen=True, eq=False)
class SensitivityProfile:
    pi: np.ndarray
    theta: np.ndarray
    multiplier: float
    total_pi: float  # multiplicity-weighted
    total_theta: float  # multiplicity-weighted


def default_c_assumed(z: float) -> float:
    return 2.0 ** (math.ceil(2 * z * math.log2(z + 1)) + 4)


def weighted_cost(D: np.ndarray, w: np.ndarray, C, z: float) -> float:
    return float(np.dot(w, D[:, list(C)].min(axis=1) ** z))


def solution_for(M: MetricSpace, centers, z: float, restarts_used: int = 0,
                 weights=None) -> BicriteriaSolution:
    c = np.sort(check_centers(M, centers))
    w = M.multiplicity if weights is None else np.asarray(weights, dtype=float)
    d = M.dist[:, c]
    nearest = np.argmin(d, axis=1)
    sizes = np.bincount(nearest, weights=w, minlength=c.size)
    cost = float(np.dot(w, d[np.arange(M.n), nearest] ** z))
    return BicriteriaSolution(centers=tuple(int(v) for v in c), cost=cost, assignment=c[nearest],
                              cluster_sizes=sizes, restarts_used=restarts_used)


def _seed_once(D, w, cand, k, z, rng) -> list[int]:
    chosen = [int(cand[rng.integers(cand.size)])]
    near = D[:, chosen[0]].copy()
    cw = w[cand] if (w[cand] > 0).any() else np.ones(cand.size)
    while len(chosen) < k:
        p = cw * near[cand] ** z
        p[np.isin(cand, chosen)] = 0.0
        if p.sum() <= 0:
            free = cand[~np.isin(cand, chosen)]
            nxt = int(free[rng.integers(free.size)])
        else:
            nxt = int(cand[rng.choice(cand.size, p=p / p.sum())])
        chosen.append(nxt)
        near = np.minimum(near, D[:, nxt])
    return chosen


def single_swap(D, w, cand, centers: list[int], z: float, factor: float, max_passes: int = 50):
    """First-improvement single swaps: accept when new cost <= factor * current."""
    cur = weighted_cost(D, w, centers, z)
    for _ in range(max_passes):
        if cur <= 0:
            break
        improved = False
        for i in range(len(centers)):
            rest = [c for t, c in enumerate(centers) if t != i]
            base = D[:, rest].min(axis=1) if rest else np.full(D.shape[0], np.inf)
            pool = cand[~np.isin(cand, centers)]
            if pool.size == 0:
                continue
            costs = w @ np.minimum(base[:, None], D[:, pool]) ** z
            b = int(np.argmin(costs))
            if costs[b] <= factor * cur:
                centers = rest[:i] + [int(pool[b])] + rest[i:]
                cur = float(costs[b])
                improved = True
                break
        if not improved:
            break
    return centers, cur


def dz_seed(M: MetricSpace, k: int, z: float = 1.0, restarts: int = 10, seed: int = 0,
            candidates=None, weights=None, swap_passes: int = 50) -> BicriteriaSolution:
    """D^z seeding with restarts, then single-swap hill climbing.

    ``candidates`` restricts where centres may be placed; ``weights``
    replaces the multiplicities in the objective.
    """
    cand = np.arange(M.n) if candidates is None else np.unique(np.asarray(candidates, dtype=np.int64))
    if not 1 <= k <= cand.size:
        raise ValidationError(f"need 1 <= k <= {cand.size} candidate centres, got k={k}")
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")
    D = M.dist
    w = M.multiplicity.astype(float) if weights is None else np.asarray(weights, dtype=float)

    def attempt(t):
        c = _seed_once(D, w, cand, k, z, derive_rng(seed, "dz", t))
        return weighted_cost(D, w, c, z), c

    results = pmap(attempt, range(restarts))
    best = min(range(restarts), key=lambda t: (results[t][0], t))
    centers, _ = single_swap(D, w, cand, results[best][1], z, 1 - 1 / (10 * k), swap_passes)
    return solution_for(M, centers, z, restarts_used=restarts, weights=w)


def round_theta(n: int, pi: np.ndarray) -> np.ndarray:
    """theta = 2^zeta with 2^{zeta-1} <= n*pi < 2^zeta (exact via frexp)."""
    _, e = np.frexp(n * pi)
    return np.ldexp(1.0, e)


def sensitivity_bounds(M: MetricSpace, B: BicriteriaSolution, z: float,
                       c_assumed: float | None = None) -> SensitivityProfile:
    """pi_x = 2^{2z+2} c (d^z(x,B)/cost + cost(P_j)/(|P_j| cost) + 1/|P_j|) for x in cluster P_j."""
    c = default_c_assumed(z) if c_assumed is None else float(c_assumed)
    if c < 1:
        raise ValidationError("c_assumed must be >= 1")
    mult = M.multiplicity.astype(float)
    n = M.total
    factor = 2.0 ** (2 * z + 2) * c
    if B.cost <= 0:
        pi = np.full(M.n, 1.0 / n)
        factor = 1.0
    else:
        centers = np.asarray(B.centers)
        dz = M.dist[np.arange(M.n), B.assignment] ** z
        slot = np.searchsorted(centers, B.assignment)
        size = np.bincount(slot, weights=mult, minlength=centers.size)
        ccost = np.bincount(slot, weights=mult * dz, minlength=centers.size)
        if (size[slot] <= 0).any():
            raise ValidationError("empty cluster in bicriteria assignment")
        pi = factor * (dz / B.cost + ccost[slot] / (size[slot] * B.cost) + 1.0 / size[slot])
    theta = round_theta(n, pi)
    return SensitivityProfile(pi=pi, theta=theta, multiplier=factor,
                              total_pi=float(mult @ pi), total_theta=float(mult @ theta))


def brute_sensitivity(M: MetricSpace, k: int, z: float = 1.0) -> np.ndarray:
    """sigma(x) = max over k-subsets C of d^z(x,C) / cost(X,C), with 0/0 read as 0."""
    if not 1 <= k <= M.n:
        raise ValidationError(f"need 1 <= k <= n, got k={k}")
    if math.comb(M.n, k) > BRUTE_GUARD:
        raise GuardExceeded(f"C({M.n},{k}) exceeds {BRUTE_GUARD}")
    mult = M.multiplicity.astype(float)
    sigma = np.zeros(M.n)
    combos = itertools.combinations(range(M.n), k)
    while True:
        block = np.array(list(itertools.islice(combos, CHUNK)), dtype=np.int64)
        if block.size == 0:
            return sigma
        dz = M.dist[:, block].min(axis=2) ** z  # (n, b)
        cost = mult @ dz
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(cost > 0, dz / cost, 0.0)
        sigma = np.maximum(sigma, ratio.max(axis=1))


def brute_optimum(M: MetricSpace, k: int, z: float = 1.0, candidates=None, weights=None):
    """(cost, centres) minimising the weighted cost over k-subsets of ``candidates``."""
    cand = np.arange(M.n) if candidates is None else np.unique(np.asarray(candidates, dtype=np.int64))
    if math.comb(cand.size, k) > BRUTE_GUARD * 10:
        raise GuardExceeded(f"C({cand.size},{k}) exceeds {BRUTE_GUARD * 10}")
    w = M.multiplicity.astype(float) if weights is None else np.asarray(weights, dtype=float)
    best, arg = math.inf, None
    combos = itertools.combinations(cand.tolist(), k)
    while True:
        block = np.array(list(itertools.islice(combos, CHUNK)), dtype=np.int64)
        if block.size == 0:
            return best, arg
        cost = w @ (M.dist[:, block].min(axis=2) ** z)
        i = int(np.argmin(cost))
        if cost[i] < best:
            best, arg = float(cost[i]), tuple(int(v) for v in block[i])


def calibrated_profile(M: MetricSpace, B: BicriteriaSolution, z: float, c_assumed: float,
                       sigma: np.ndarray, max_doublings: int = 2) -> tuple[SensitivityProfile, int]:
    """Profile whose pi dominates 2*sigma, doubling c_assumed at most ``max_doublings`` times."""
    for step in range(max_doublings + 1):
        prof = sensitivity_bounds(M, B, z, c_assumed * 2**step)
        if (prof.pi >= 2 * sigma * (1 - 1e-12)).all():
            if step:
                log.warning("sensitivity multiplier escalated %d time(s)", step)
            return prof, step
    return prof, max_doublings + 1
