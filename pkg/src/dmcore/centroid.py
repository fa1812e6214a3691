"""Centroid sets built from invariant level intervals, and rho-swap local search."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .metric import ATOL, MetricSpace, estimate_doubling_dim
from .nets import NetTree
from .sensitivity import dz_seed

CHUNK = 4096


@dataclass(frozen=True)
class InvariantIntervals:
    intervals: tuple[tuple[int, int], ...]  # half-open [a, b) over levels 0..L


def _partition_key(row: np.ndarray, S: np.ndarray) -> tuple:
    """Canonical form of the partition of S induced by ancestors ``row``."""
    _, labels = np.unique(row[S], return_inverse=True)
    # relabel by first occurrence so equal partitions compare equal
    first = {}
    return tuple(first.setdefault(int(l), len(first)) for l in labels)


def invariant_intervals(S, T: NetTree) -> InvariantIntervals:
    """Maximal runs of levels on which the subtree partition of S is unchanged."""
    S = np.unique(np.asarray(S, dtype=np.int64))
    if S.size == 0:
        raise ValidationError("S must be nonempty")
    keys = [_partition_key(T.anc[i], S) for i in range(T.L + 1)]
    out, a = [], 0
    for i in range(1, T.L + 1):
        if keys[i] != keys[i - 1]:
            out.append((a, i))
            a = i
    out.append((a, T.L + 1))
    return InvariantIntervals(intervals=tuple(out))


def interval_levels(a: int, b: int, eps: float) -> list[int]:
    """Levels [a, min(a+3, b-1)] and [max(a, b-6-ceil(log2(1/eps))), b-1], deduplicated."""
    lo = list(range(a, min(a + 3, b - 1) + 1))
    hi = list(range(max(a, b - 6 - math.ceil(math.log2(1 / eps))), b))
    return sorted(set(lo) | set(hi))


@dataclass(frozen=True, eq=False)
class CentroidSet:
    ids: np.ndarray
    source: np.ndarray
    eps: float
    k: int
    z: float
    intervals: InvariantIntervals
    b_cfg: float

    @property
    def size(self) -> int:
        return int(self.ids.size)


def size_constant(eps: float, ddim: float) -> float:
    return (40.0 / eps) ** ddim


def build_centroid_set(M: MetricSpace, T: NetTree, S, w=None, eps: float = 0.1, k: int = 1,
                       z: float = 1.0, ddim: float | None = None) -> CentroidSet:
    """H = S plus, per interval and selected level j, the nets N_{j'} near each occupied node.

    j' = j + floor(log2 eps), so 2^{j'} <= eps 2^j < 2^{j'+1}; the added points
    are N_{j'} ∩ B(u, 5 2^j) for every u in N_j whose subtree meets S.
    ``w`` is accepted for interface symmetry; the construction ignores it.
    """
    if not (0 < eps < 1 / z):
        raise ValidationError(f"eps must lie in (0, 1/z) = (0, {1 / z:g}), got {eps}")
    if T.flavor != "simple":
        raise ValidationError("centroid sets are built on a simple net tree")
    S = np.unique(np.asarray(S, dtype=np.int64))
    inv = invariant_intervals(S, T)
    H = set(S.tolist())
    shift = math.floor(math.log2(eps) + 1e-12)
    hier = T.hierarchy
    for a, b in inv.intervals:
        for j in interval_levels(a, b, eps):
            jp = j + shift
            net = hier.net(jp)
            for u in np.unique(T.anc[j][S]):
                close = net[M.dist[u, net] <= 5 * 2.0**j + ATOL]
                H.update(close.tolist())
    t = estimate_doubling_dim(M) if ddim is None else ddim
    return CentroidSet(ids=np.array(sorted(H), dtype=np.int64), source=S, eps=eps, k=k, z=z,
                       intervals=inv, b_cfg=size_constant(eps, t))


@dataclass(frozen=True)
class SearchResult:
    centers: tuple[int, ...]
    cost: float
    trace: tuple[tuple[int, float, tuple[int, ...], tuple[int, ...]], ...]


def _cost_rows(D: np.ndarray, w: np.ndarray, base: np.ndarray, combos: np.ndarray, z: float) -> np.ndarray:
    near = D[:, combos].min(axis=2)  # (rows, b)
    return w @ np.minimum(base[:, None], near) ** z


def local_search(M: MetricSpace, H, w, k: int, z: float = 1.0, rho: int = 1,
                 improve_factor: float | None = None, eps: float = 0.1, seed: int = 0,
                 init=None, max_iter: int = 10_000) -> SearchResult:
    """Swap up to rho centres at a time; take the first swap below improve_factor * cost.

    Swaps are scanned by size, then outgoing subsets, then incoming subsets,
    each in lexicographic id order, so the result is deterministic.
    ``w`` is a length-n weight vector (zero outside the weighted set).
    """
    H = np.unique(np.asarray(H, dtype=np.int64))
    w = np.asarray(w, dtype=float)
    if w.shape != (M.n,):
        raise ValidationError("weights must have one entry per point")
    if not 1 <= k <= H.size:
        raise ValidationError(f"need 1 <= k <= |H| = {H.size}, got k={k}")
    if not 1 <= rho <= k:
        raise ValidationError(f"rho must lie in [1, k], got rho={rho}")
    factor = 1 - eps / (10 * k) if improve_factor is None else float(improve_factor)
    rows = np.flatnonzero(w > 0)
    D, wr = M.dist[rows], w[rows]
    if init is None:
        init = dz_seed(M, k, z, restarts=5, seed=seed, candidates=H, weights=w, swap_passes=0).centers
    cur_set = sorted(int(c) for c in init)
    cur = float(wr @ D[:, cur_set].min(axis=1) ** z)
    trace = [(0, cur, (), ())]
    for it in range(1, max_iter + 1):
        found = None
        for s in range(1, rho + 1):
            pool = H[~np.isin(H, cur_set)]
            if pool.size < s:
                continue
            for out in itertools.combinations(cur_set, s):
                rest = [c for c in cur_set if c not in out]
                base = D[:, rest].min(axis=1) if rest else np.full(D.shape[0], np.inf)
                combos = itertools.combinations(pool.tolist(), s)
                while found is None:
                    block = np.array(list(itertools.islice(combos, CHUNK)), dtype=np.int64)
                    if block.size == 0:
                        break
                    costs = _cost_rows(D, wr, base, block, z)
                    hit = np.flatnonzero(costs < factor * cur)
                    if hit.size:
                        i = int(hit[0])
                        found = (out, tuple(int(v) for v in block[i]), float(costs[i]))
                if found:
                    break
            if found:
                break
        if found is None:
            break
        out, inn, new = found
        cur_set = sorted([c for c in cur_set if c not in out] + list(inn))
        cur = new
        trace.append((it, cur, tuple(out), inn))
    return SearchResult(centers=tuple(cur_set), cost=cur, trace=tuple(trace))
