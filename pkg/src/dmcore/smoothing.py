"""The eps-smoothed distance over a net tree.

For x != y, h(x, y) is the largest level j at which the level-j ancestors of
x and y are at least 2^j/eps apart, and delta(x, y) is the distance between
those ancestors.  Below level 0 ancestors are the points themselves, so the
level always exists once distances are rescaled to a minimum of 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvariantViolation, ValidationError
from .metric import ATOL
from .nets import NetTree

NEG_INF = -math.inf


def smooth_lambda(eps: float, c: float) -> float:
    return eps * (1 - 5 * c * eps) / (20 * (1 + 4 * c * eps))


def level_for_radius(lam: float, r: float) -> int:
    """The integer j with 2^{j-1} <= lam*r < 2^j."""
    return int(math.floor(math.log2(lam * r) + 1e-12)) + 1


@dataclass(frozen=True, eq=False)
class SmoothedMetric:
    tree: NetTree
    eps: float
    z: float = 1.0
    lam: float = field(init=False)

    def __post_init__(self):
        c = self.tree.c_cover
        if not (0 < self.eps <= 1.0 / (8 * c) + 1e-15):
            raise ValidationError(f"eps must lie in (0, 1/(8c)] = (0, {1 / (8 * c):g}], got {self.eps}")
        if not (math.isfinite(self.z) and self.z > 0):
            raise ValidationError(f"z must be a positive finite real, got {self.z}")
        if self.z != 1 and self.eps > 1.0 / (100 * self.z) + 1e-15:
            raise ValidationError(f"z-power smoothing needs eps <= 1/(100z) = {1 / (100 * self.z):g}")
        object.__setattr__(self, "lam", smooth_lambda(self.eps, c))

    @property
    def c(self) -> int:
        return self.tree.c_cover

    @cached_property
    def levels(self) -> np.ndarray:
        """h(x, y) for every pair; -inf on the diagonal."""
        D, anc, n = self.tree.metric.dist, self.tree.anc, self.tree.metric.n
        h = np.full((n, n), np.nan)
        for j in range(self.tree.L, 0, -1):
            a = anc[j]
            hit = np.isnan(h) & (D[np.ix_(a, a)] >= 2.0**j / self.eps - ATOL)
            h[hit] = j
        rest = np.isnan(h)
        with np.errstate(divide="ignore"):
            low = np.floor(np.log2(self.eps * D) + 1e-12)
        h[rest] = np.minimum(0.0, low[rest])
        np.fill_diagonal(h, NEG_INF)
        return h

    @cached_property
    def matrix(self) -> np.ndarray:
        """delta(x, y) for every pair."""
        D, anc = self.tree.metric.dist, self.tree.anc
        h = self.levels
        out = D.copy()
        for j in range(1, self.tree.L + 1):
            sel = h == j
            if sel.any():
                a = anc[j]
                out[sel] = D[np.ix_(a, a)][sel]
        np.fill_diagonal(out, 0.0)
        out.setflags(write=False)
        return out

    @cached_property
    def matrix_z(self) -> np.ndarray:
        return self.matrix**self.z

    def merge_levels(self) -> np.ndarray:
        """Smallest level at which two points share an ancestor (0 on the diagonal)."""
        anc, n, L = self.tree.anc, self.tree.metric.n, self.tree.L
        m = np.full((n, n), L, dtype=np.int64)
        for j in range(L - 1, 0, -1):
            same = anc[j][:, None] == anc[j][None, :]
            m[same] = j
        np.fill_diagonal(m, 0)
        return m


def smoothing_level(S: SmoothedMetric, x: int, y: int) -> float:
    return float(S.levels[x, y])


def delta(S: SmoothedMetric, x: int, y: int) -> float:
    return float(S.matrix[x, y])


def delta_z(S: SmoothedMetric, x: int, y: int) -> float:
    return float(S.matrix_z[x, y])


def ball_delta(S: SmoothedMetric, x: int, r: float) -> np.ndarray:
    """{y : delta(x, y) <= r} as sorted ids."""
    if r < 0:
        raise ValidationError("radius must be nonnegative")
    return np.flatnonzero(S.matrix[x] <= r + ATOL)


# ---------------------------------------------------------------------------
# exact property checks; each returns a list of human-readable violations


def check_distortion(S: SmoothedMetric, z: float = 1.0) -> list[str]:
    D, dl = S.tree.metric.dist, S.matrix
    off = ~np.eye(D.shape[0], dtype=bool)
    if z == 1:
        lo, hi = 1 - 4 * S.c * S.eps, 1 + 4 * S.c * S.eps
        dz, delz = D, dl
    else:
        lo, hi = 1 - 8 * S.c * z * S.eps, 1 + 8 * S.c * z * S.eps
        dz, delz = D**z, dl**z
    bad = off & ((dz < lo * delz * (1 - 1e-12)) | (dz > hi * delz * (1 + 1e-12)))
    return [f"distortion z={z} at {tuple(p)}" for p in np.argwhere(bad)[:5]]


def check_descendant(S: SmoothedMetric) -> list[str]:
    """delta is constant, equal to d(u, v), over Des(u^{(j)}) x Des(v^{(j)}) with j = h(x, y)."""
    D, anc, n = S.tree.metric.dist, S.tree.anc, S.tree.metric.n
    h, dl = S.levels, S.matrix
    out = []
    for j in range(1, S.tree.L + 1):
        sel = h == j
        if not sel.any():
            continue
        a = anc[j]
        key = a[:, None] * n + a[None, :]
        mask = np.isin(key, np.unique(key[sel]))
        target = D[np.ix_(a, a)]
        bad = mask & (np.abs(dl - target) > ATOL * np.maximum(1.0, target))
        # the level must also agree, otherwise delta could agree only by accident
        bad |= mask & (h != j)
        out += [f"descendant at level {j}: {tuple(p)}" for p in np.argwhere(bad)[:5]]
    return out


def _threshold(S: SmoothedMetric) -> np.ndarray:
    """Smallest radius at which two points share their level-j(r) ancestor."""
    m = S.merge_levels().astype(float)
    t = np.exp2(m - 1) / S.lam
    np.fill_diagonal(t, np.inf)
    return t


def check_smooth(S: SmoothedMetric) -> list[str]:
    """B(x, r) = B(x', r) whenever x, x' share their level-j(r) ancestor, for every r > 0.

    Balls of x and x' differ at r iff some y has r between delta(x,y) and
    delta(x',y); x and x' are grouped for all r >= 2^{m-1}/lam.  So the
    property holds for every r iff max(delta(x,y), delta(x',y)) <= that
    threshold whenever the two values differ.
    """
    dl, T = S.matrix, _threshold(S)
    out = []
    for x in range(dl.shape[0]):
        diff = np.abs(dl - dl[x][None, :]) > ATOL
        big = np.maximum(dl, dl[x][None, :]) > T[x][:, None] * (1 + 1e-12)
        bad = np.argwhere(diff & big)
        out += [f"smooth: x={x} x'={xp} y={y}" for xp, y in bad[:3]]
    return out


def check_cross_free(S: SmoothedMetric) -> list[str]:
    """Every level-j(r) subtree lies inside B(x, r) or misses it, for every x and r > 0."""
    dl, T = S.matrix, _threshold(S)
    out = []
    for x in range(dl.shape[0]):
        row = dl[x]
        diff = np.abs(row[:, None] - row[None, :]) > ATOL
        big = np.maximum(row[:, None], row[None, :]) > T * (1 + 1e-12)
        bad = np.argwhere(diff & big)
        out += [f"cross-free: x={x} y={y} y'={yp}" for y, yp in bad[:3]]
    return out


def radius_grid(S: SmoothedMetric) -> np.ndarray:
    """Breakpoints where ball contents can change, plus midpoints and a cap."""
    vals = np.unique(np.concatenate([S.matrix.ravel(), S.tree.metric.dist.ravel()]))
    vals = vals[vals > 0]
    mids = (vals[:-1] + vals[1:]) / 2
    return np.unique(np.concatenate([vals, mids, [vals[-1] * 2 if vals.size else 1.0]]))


def check_smooth_on_grid(S: SmoothedMetric) -> list[str]:
    """Direct sweep of smooth and cross-free over the radius grid (small n only)."""
    dl, anc, L = S.matrix, S.tree.anc, S.tree.L
    n = dl.shape[0]
    out = []
    for r in radius_grid(S):
        j = level_for_radius(S.lam, r)
        par = np.arange(n) if j <= 0 else anc[min(j, L)]
        inside = dl <= r + ATOL  # inside[x, y]: y in B(x, r)
        for v in np.unique(par):
            grp = np.flatnonzero(par == v)
            if grp.size < 2:
                continue
            rows = inside[grp]
            if not (rows == rows[0]).all():
                out.append(f"smooth grid: r={r:g} level {j} node {v}")
            part = inside[:, grp]
            if not (part.all(axis=1) | ~part.any(axis=1)).all():
                out.append(f"cross-free grid: r={r:g} level {j} node {v}")
        if len(out) > 5:
            break
    return out


def assert_properties(S: SmoothedMetric) -> None:
    errs = check_distortion(S) + check_descendant(S) + check_smooth(S) + check_cross_free(S)
    if errs:
        raise InvariantViolation("; ".join(errs[:5]))
