"""Uniform-sample robust coresets, trimmed-cost checks and the clusterability tester."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import GuardExceeded, ValidationError
from .metric import MetricSpace, estimate_doubling_dim, trim_count
from .rng import derive_rng
from .sensitivity import dz_seed

EXHAUSTIVE_GUARD = 10**5
CHUNK = 2048


@dataclass(frozen=True, eq=False)
class RobustSample:
    ids: np.ndarray
    alpha: float | None = None
    eps: float | None = None
    seed: int = 0

    def counts(self, n: int) -> np.ndarray:
        return np.bincount(self.ids, minlength=n)


def uniform_sample(M: MetricSpace, size: int, seed: int = 0, alpha: float | None = None,
                   eps: float | None = None) -> RobustSample:
    """i.i.d. uniform draws from X (coincident copies count separately)."""
    if size < 1:
        raise ValidationError("sample size must be >= 1")
    rng = derive_rng(seed, "robust-sample")
    ids = rng.choice(M.n, size=size, p=M.multiplicity / M.total)
    return RobustSample(ids=ids, alpha=alpha, eps=eps, seed=seed)


def robust_size(k: int, z: float, eps: float, tau: float, alpha: float, ddim: float, A: float = 1.0) -> int:
    lead = ddim * max(0.0, math.log(z / eps)) + math.log(k) + max(0.0, math.log(math.log(1 / tau)))
    return max(1, math.ceil(A * (k / alpha**2 * lead + math.log(1 / tau) / alpha**2)))


def _combo_blocks(cands: np.ndarray, k: int):
    combos = itertools.combinations(cands.tolist(), k)
    while True:
        block = np.array(list(itertools.islice(combos, CHUNK)), dtype=np.int64)
        if block.size == 0:
            return
        yield block


def trimmed_costs(M: MetricSpace, block: np.ndarray, z: float, gamma: float, rows: np.ndarray) -> np.ndarray:
    """Trimmed cost of each centre set in ``block`` over the multiset ``rows`` of point ids."""
    keep = trim_count(rows.size, gamma)
    if keep <= 0:
        return np.zeros(block.shape[0])
    vals = M.dist[rows][:, block].min(axis=2) ** z  # (|rows|, b)
    if keep < rows.size:
        vals = np.partition(vals, keep - 1, axis=0)[:keep]
    return vals.sum(axis=0)


def expand(counts: np.ndarray) -> np.ndarray:
    return np.repeat(np.arange(counts.size), counts)


def gamma_grid(alpha: float, sizes) -> np.ndarray:
    """Midpoints of the cells cut by every change of ceil((1-g)N) for g in {gamma, gamma +- alpha}.

    Within a cell all trimmed counts are constant, and at a breakpoint they
    equal their values just to the right, so the midpoints cover every case.
    """
    pts = {alpha, 1 - alpha}
    for N in sizes:
        for j in range(N + 1):
            b = 1 - j / N
            for shift in (0.0, -alpha, alpha):
                g = b + shift
                if alpha < g < 1 - alpha:
                    pts.add(g)
    pts = np.array(sorted(pts))
    return (pts[:-1] + pts[1:]) / 2


def center_sets(M: MetricSpace, k: int, centers=None, samples: int = 500, seed: int = 0) -> np.ndarray:
    if centers is not None:
        return np.array([sorted(c) for c in centers], dtype=np.int64).reshape(-1, k)
    if math.comb(M.n, k) <= EXHAUSTIVE_GUARD:
        return np.array(list(itertools.combinations(range(M.n), k)), dtype=np.int64).reshape(-1, k)
    rng = derive_rng(seed, "robust-centers", k)
    return np.array([np.sort(rng.choice(M.n, k, replace=False)) for _ in range(samples)])


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    worst_margin: float  # smallest relative slack; negative means a violated inequality
    checked: int
    worst_case: tuple | None = None


def robust_check(M: MetricSpace, sample, alpha: float, eps: float, z: float, k: int,
                 grid=None, centers=None, seed: int = 0) -> CheckResult:
    """Check (1-eps) cost^{-(g+a)}(X)/|X| <= cost^{-g}(S)/|S| <= (1+eps) cost^{-(g-a)}(X)/|X|.

    ``sample`` is a RobustSample or an array of point ids (a multiset).
    """
    ids = sample.ids if isinstance(sample, RobustSample) else np.asarray(sample, dtype=np.int64)
    if ids.size == 0:
        raise ValidationError("sample must be nonempty")
    if not 0 < alpha < 0.5:
        raise ValidationError(f"alpha must lie in (0, 1/2), got {alpha}")
    x_rows = expand(M.multiplicity)
    grid = gamma_grid(alpha, [x_rows.size, ids.size]) if grid is None else np.asarray(grid, float)
    if grid.size == 0:
        raise ValidationError("gamma grid is empty")
    if ((grid <= alpha) | (grid >= 1 - alpha)).any():
        raise ValidationError("gamma grid must lie inside (alpha, 1 - alpha)")
    C = center_sets(M, k, centers, seed=seed)
    nX, nS = x_rows.size, ids.size
    worst, where = math.inf, None
    for g in grid:
        lo = trimmed_costs(M, C, z, g + alpha, x_rows) / nX * (1 - eps)
        hi = trimmed_costs(M, C, z, g - alpha, x_rows) / nX * (1 + eps)
        mid = trimmed_costs(M, C, z, g, ids) / nS
        scale = np.maximum(hi, 1e-300)
        slack = np.minimum(mid - lo, hi - mid) / scale
        slack[(hi == 0) & (mid == 0)] = 0.0
        i = int(np.argmin(slack))
        if slack[i] < worst:
            worst, where = float(slack[i]), (float(g), tuple(int(v) for v in C[i]))
    return CheckResult(passed=worst >= -1e-9, worst_margin=worst, checked=len(grid) * len(C),
                       worst_case=where)


def bicriteria_outliers(M: MetricSpace, k: int, z: float, gamma: float, mode: str = "exhaustive",
                        counts=None, candidates=None, seed: int = 0, rounds: int = 10) -> float:
    """Trimmed (k, z) clustering value Lambda of the multiset ``counts`` (default: X).

    Exhaustive mode returns the exact minimum over k-subsets of ``candidates``
    (all of X by default).  Heuristic mode runs D^z seeding followed by
    alternating trim / reassign / medoid updates and returns the best
    trimmed cost it saw; it is never below the exhaustive value.
    """
    cnt = M.multiplicity if counts is None else np.asarray(counts, dtype=np.int64)
    rows = expand(cnt)
    cands = np.arange(M.n) if candidates is None else np.unique(np.asarray(candidates, dtype=np.int64))
    if not 1 <= k <= cands.size:
        raise ValidationError(f"need 1 <= k <= {cands.size}, got k={k}")
    if not 0 <= gamma < 1:
        raise ValidationError(f"gamma must lie in [0, 1), got {gamma}")
    if mode == "exhaustive":
        if math.comb(cands.size, k) > EXHAUSTIVE_GUARD:
            raise GuardExceeded(f"C({cands.size},{k}) exceeds {EXHAUSTIVE_GUARD}")
        return float(min(trimmed_costs(M, b, z, gamma, rows).min() for b in _combo_blocks(cands, k)))
    if mode != "heuristic":
        raise ValidationError(f"unknown mode {mode!r}")
    keep = trim_count(rows.size, gamma)
    sol = dz_seed(M, k, z, restarts=5, seed=seed, candidates=cands, weights=cnt.astype(float),
                  swap_passes=0)
    centers = list(sol.centers)
    best = math.inf
    D = M.dist
    for _ in range(rounds):
        dmat = D[rows][:, centers]
        near = dmat.argmin(axis=1)
        val = dmat[np.arange(rows.size), near] ** z
        order = np.argsort(val, kind="stable")[:keep]
        best = min(best, float(val[order].sum()))
        kept_rows, kept_near = rows[order], near[order]
        new = []
        for j in range(k):
            members = kept_rows[kept_near == j]
            if members.size == 0:
                new.append(centers[j])
                continue
            pool = cands[~np.isin(cands, new)]
            costs = (D[members][:, pool] ** z).sum(axis=0)
            new.append(int(pool[int(np.argmin(costs))]))
        if len(set(new)) < k or new == centers:
            break
        centers = new
    return best


@dataclass(frozen=True)
class TestVerdict:
    accept: bool
    Lambda: float
    threshold: float
    params: dict


def property_test(M: MetricSpace, k: int, z: float, Delta: float, gamma: float, alpha: float,
                  eps: float, tau: float, lam: float = 1.0, seed: int = 0, size: int | None = None,
                  A: float = 1.0, mode: str = "exhaustive", ddim: float | None = None) -> TestVerdict:
    """Accept iff Lambda <= (1 + eps/4) * lam * (|S|/|X|) * Delta on a uniform sample S."""
    if not 0 < alpha < 0.25:
        raise ValidationError(f"alpha must lie in (0, 1/4), got {alpha}")
    if not alpha < gamma < 1 - alpha:
        raise ValidationError(f"gamma must lie in (alpha, 1 - alpha), got {gamma}")
    if not 0 < eps < 0.25:
        raise ValidationError(f"eps must lie in (0, 1/4), got {eps}")
    if not 0 < tau < 1:
        raise ValidationError(f"tau must lie in (0, 1), got {tau}")
    if Delta < 0 or lam < 1:
        raise ValidationError("need Delta >= 0 and lambda >= 1")
    t = None
    if size is None:
        t = estimate_doubling_dim(M) if ddim is None else ddim
        size = robust_size(k, z, eps, tau, alpha, t, A)
    S = uniform_sample(M, size, seed)
    Lam = sample_lambda(M, S, k, z, gamma, mode, seed)
    threshold = (1 + eps / 4) * lam * (size / M.total) * Delta
    params = dict(k=k, z=z, Delta=Delta, gamma=gamma, alpha=alpha, eps=eps, tau=tau, lam=lam,
                  seed=seed, size=size, A=A, mode=mode, ddim=t)
    return TestVerdict(accept=bool(Lam <= threshold), Lambda=Lam, threshold=threshold, params=params)


def sample_lambda(M: MetricSpace, S: RobustSample, k: int, z: float, gamma: float,
                  mode: str = "exhaustive", seed: int = 0) -> float:
    """Lambda on the sample; centres range over X when that is enumerable, else over the sample."""
    cands = None
    if mode == "exhaustive" and math.comb(M.n, k) > EXHAUSTIVE_GUARD:
        cands = np.unique(S.ids)
    return bicriteria_outliers(M, k, z, gamma, mode, counts=S.counts(M.n), candidates=cands, seed=seed)


def verdict_for(Lam: float, size: int, total: int, Delta: float, eps: float, lam: float = 1.0) -> bool:
    return Lam <= (1 + eps / 4) * lam * (size / total) * Delta
