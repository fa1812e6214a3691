"""Finite metric spaces and (k, z)-clustering costs.

A :class:`MetricSpace` stores a dense, symmetric distance matrix rescaled so
that the smallest positive distance is exactly 1.  Coincident inputs are merged
into a single point carrying a multiplicity; every cost in the package is
multiplicity-weighted.
"""

from __future__ import annotations

import csv
import gzip
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ValidationError

ATOL = 1e-9
SYM_TOL = 1e-9
EXHAUSTIVE_TRIANGLE_N = 200
RANDOM_TRIANGLE_SAMPLES = 10_000


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """Immutable finite metric; point ids are ``0..n-1``."""

    dist: np.ndarray
    multiplicity: np.ndarray
    scale_factor: float = 1.0
    coords: np.ndarray | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        self.dist.setflags(write=False)
        self.multiplicity.setflags(write=False)
        if self.coords is not None:
            self.coords.setflags(write=False)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def total(self) -> int:
        """Number of input points, counting multiplicity."""
        return int(self.multiplicity.sum())

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if self.n > 1 else 0.0

    def d(self, x: int, y: int) -> float:
        return float(self.dist[x, y])

    def subspace(self, ids: Sequence[int]) -> "MetricSpace":
        """Restriction to ``ids`` (no rescaling, multiplicities kept)."""
        ids = np.asarray(ids, dtype=np.int64)
        coords = None if self.coords is None else self.coords[ids].copy()
        labels = None if self.labels is None else tuple(self.labels[i] for i in ids)
        return MetricSpace(
            dist=self.dist[np.ix_(ids, ids)].copy(),
            multiplicity=self.multiplicity[ids].copy(),
            scale_factor=self.scale_factor,
            coords=coords,
            labels=labels,
        )


@dataclass(frozen=True)
class CostQuery:
    z: float = 1.0
    gamma: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.z) and self.z > 0):
            raise ValidationError(f"z must be a positive finite real, got {self.z}")
        if not (0.0 <= self.gamma < 1.0):
            raise ValidationError(f"gamma must lie in [0, 1), got {self.gamma}")


# ---------------------------------------------------------------------------
# construction


def _merge_coincident(dist: np.ndarray, counts: np.ndarray, tol: float):
    """Map every point onto the first earlier point at distance <= tol."""
    n = dist.shape[0]
    rep = np.arange(n)
    for i in range(1, n):
        close = np.flatnonzero(dist[i, :i] <= tol)
        if close.size:
            rep[i] = rep[close[0]]
    keep = np.flatnonzero(rep == np.arange(n))
    if keep.size == n:
        return keep, counts
    new_index = -np.ones(n, dtype=np.int64)
    new_index[keep] = np.arange(keep.size)
    mult = np.zeros(keep.size, dtype=np.int64)
    np.add.at(mult, new_index[rep], counts)
    return keep, mult


def _check_triangle(dist: np.ndarray, seed: int = 0) -> None:
    n = dist.shape[0]
    if n < 3:
        return
    if n <= EXHAUSTIVE_TRIANGLE_N:
        slack = ATOL * np.maximum(1.0, dist)
        for j in range(n):
            via = dist[:, j][:, None] + dist[j, :][None, :]
            bad = dist > via + slack
            if bad.any():
                i, k = np.argwhere(bad)[0]
                raise ValidationError(
                    f"triangle inequality violated: d({i},{k})={dist[i, k]:g} > "
                    f"d({i},{j})+d({j},{k})={via[i, k]:g}"
                )
        return
    rng = np.random.default_rng(seed)
    t = rng.integers(0, n, size=(RANDOM_TRIANGLE_SAMPLES, 3))
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    lhs = dist[a, c]
    rhs = dist[a, b] + dist[b, c]
    bad = lhs > rhs + ATOL * np.maximum(1.0, lhs)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ValidationError(
            f"triangle inequality violated on sampled triple ({a[i]},{b[i]},{c[i]})"
        )


def _finish(dist, counts, coords, labels, validate_triangle: bool) -> MetricSpace:
    n = dist.shape[0]
    if n == 0:
        raise ValidationError("empty input: at least one point is required")
    scale = 1.0
    if n > 1:
        pos = dist[dist > 0]
        if pos.size:
            scale = 1.0 / float(pos.min())
            dist = dist * scale
            if coords is not None:
                coords = coords * scale
    np.fill_diagonal(dist, 0.0)
    if validate_triangle:
        _check_triangle(dist)
    return MetricSpace(
        dist=np.ascontiguousarray(dist, dtype=np.float64),
        multiplicity=np.asarray(counts, dtype=np.int64),
        scale_factor=scale,
        coords=coords,
        labels=labels,
    )


def from_coords(coords, labels: Sequence[str] | None = None) -> MetricSpace:
    """Euclidean metric over coordinate rows; coincident rows are merged."""
    x = np.asarray(coords, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise ValidationError("empty input: at least one point is required")
    if not np.all(np.isfinite(x)):
        raise ValidationError("coordinates must be finite")
    dist = cdist(x, x) if x.shape[0] > 1 else np.zeros((1, 1))
    dist = 0.5 * (dist + dist.T)
    tol = 1e-12 * max(1.0, float(dist.max()))
    keep, mult = _merge_coincident(dist, np.ones(x.shape[0], dtype=np.int64), tol)
    dist = dist[np.ix_(keep, keep)]
    labs = None if labels is None else tuple(str(labels[i]) for i in keep)
    return _finish(dist, mult, x[keep].copy(), labs, validate_triangle=False)


def from_matrix(matrix, labels: Sequence[str] | None = None) -> MetricSpace:
    """Metric from an explicit distance matrix, validated on load."""
    d = np.array(matrix, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValidationError(f"distance matrix must be square, got shape {d.shape}")
    if d.shape[0] == 0:
        raise ValidationError("empty input: at least one point is required")
    if not np.all(np.isfinite(d)):
        raise ValidationError("distance matrix must be finite")
    if (d < 0).any():
        raise ValidationError("negative distance in matrix")
    if (np.abs(d - d.T) > SYM_TOL * np.maximum(1.0, np.abs(d))).any():
        raise ValidationError("distance matrix is not symmetric")
    if (np.abs(np.diag(d)) > SYM_TOL).any():
        raise ValidationError("distance matrix must have a zero diagonal")
    d = 0.5 * (d + d.T)
    keep, mult = _merge_coincident(d, np.ones(d.shape[0], dtype=np.int64), 0.0)
    d = d[np.ix_(keep, keep)]
    labs = None if labels is None else tuple(str(labels[i]) for i in keep)
    return _finish(d, mult, None, labs, validate_triangle=True)


def _open_text(path: Path):
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return io.StringIO(raw.decode("utf-8"))


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_csv_rows(path) -> tuple[list[str] | None, list[list[str]]]:
    with _open_text(Path(path)) as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        return None, []
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    return header, rows


def load_metric(source, kind: str | None = None) -> MetricSpace:
    """Load a metric from a CSV path (optionally gzipped) or an array.

    ``kind`` is ``"coords"`` (default for files) or ``"matrix"``.  Coordinate
    files may carry an ``id`` column when a header row is present.
    """
    if isinstance(source, (str, Path)):
        kind = kind or "coords"
        header, rows = read_csv_rows(source)
        if not rows:
            raise ValidationError(f"empty input: {source}")
        if kind == "matrix":
            if header is not None and len(header) == len(rows[0]) + 1:
                header = None  # row-labelled matrix without a corner cell is not supported
            return from_matrix([[float(c) for c in r] for r in rows], labels=header)
        if kind != "coords":
            raise ValidationError(f"unknown input kind {kind!r}")
        labels = None
        if header is not None and "id" in header:
            col = header.index("id")
            labels = [r[col] for r in rows]
            rows = [r[:col] + r[col + 1 :] for r in rows]
        try:
            data = [[float(c) for c in r] for r in rows]
        except ValueError as exc:
            raise ValidationError(f"non-numeric coordinate in {source}: {exc}") from None
        if len({len(r) for r in data}) != 1:
            raise ValidationError("coordinate rows have differing lengths")
        return from_coords(np.array(data), labels=labels)
    if kind == "matrix":
        return from_matrix(source)
    if kind in (None, "coords"):
        return from_coords(source)
    raise ValidationError(f"unknown input kind {kind!r}")


def write_matrix_csv(M: MetricSpace, path) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in M.dist:
            w.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# costs


def check_centers(M: MetricSpace, C: Iterable[int]) -> np.ndarray:
    c = np.asarray(list(C), dtype=np.int64)
    if c.size == 0 or c.size > M.n:
        raise ValidationError(f"need 1 <= k <= n centers, got k={c.size}, n={M.n}")
    if c.min() < 0 or c.max() >= M.n:
        raise ValidationError("center id out of range")
    if np.unique(c).size != c.size:
        raise ValidationError("center ids must be distinct")
    return c


def _check_z(z: float) -> None:
    if not (math.isfinite(z) and z > 0):
        raise ValidationError(f"z must be a positive finite real, got {z}")


def dist_to_centers(M: MetricSpace, C) -> np.ndarray:
    c = np.asarray(list(C), dtype=np.int64)
    return M.dist[:, c].min(axis=1)


def kdist(M: MetricSpace, C, z: float = 1.0) -> float:
    """Sum over points of multiplicity * d(x, C)^z."""
    _check_z(z)
    c = check_centers(M, C)
    return float(np.dot(M.multiplicity, dist_to_centers(M, c) ** z))


def to_original_units(M: MetricSpace, cost: float, z: float) -> float:
    """Undo the unit-minimum rescaling for a z-th power cost."""
    return cost / M.scale_factor**z


def trim_count(total: int, gamma: float) -> int:
    """ceil((1 - gamma) * total), robust to float noise at exact integers."""
    return int(math.ceil((1.0 - gamma) * total - ATOL))


def trimmed_sum(values: np.ndarray, counts: np.ndarray, gamma: float) -> float:
    """Sum of the smallest ceil((1-gamma)*N) entries of a counted multiset.

    Ties are resolved by a stable sort on (value, position); only the sum is
    returned so the tie rule never changes the result.
    """
    values = np.asarray(values, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.int64)
    keep = trim_count(int(counts.sum()), gamma)
    if keep <= 0:
        return 0.0
    if keep >= counts.sum():
        # nothing trimmed: same summation order as the untrimmed cost
        return float(np.dot(counts, values))
    order = np.lexsort((np.arange(values.size), values))
    v, c = values[order], counts[order]
    cum = np.cumsum(c)
    full = np.searchsorted(cum, keep, side="left")
    total = float(np.dot(v[:full], c[:full]))
    taken = int(cum[full - 1]) if full > 0 else 0
    return total + float(v[full]) * (keep - taken)


def kdist_trimmed(M: MetricSpace, C, q: CostQuery | None = None, *, z: float | None = None,
                  gamma: float | None = None, counts: np.ndarray | None = None) -> float:
    """Outlier-trimmed cost: the smallest ceil((1-gamma)N) values of d(x,C)^z.

    ``counts`` overrides the point multiplicities, e.g. to evaluate a sampled
    multiset (``np.bincount(sample, minlength=n)``).
    """
    if q is None:
        q = CostQuery(z=1.0 if z is None else z, gamma=0.0 if gamma is None else gamma)
    c = check_centers(M, C)
    cnt = M.multiplicity if counts is None else np.asarray(counts)
    return trimmed_sum(dist_to_centers(M, c) ** q.z, cnt, q.gamma)


# ---------------------------------------------------------------------------
# canonical instances


def hard_instance(n: int) -> MetricSpace:
    """The doubling-dimension-2 metric whose plain distance balls shatter n points.

    Ids ``0..n-1`` are the line L = u_1..u_n and ids ``n..n+2^n-1`` the line
    R = v_0..v_{2^n-1}; d(v_j, u_i) is 2^{n+1}+1 when bit i of j (1-based,
    least significant first) is set and 2^{n+1} otherwise.
    """
    if not (isinstance(n, (int, np.integer)) and 1 <= n <= 12):
        raise ValidationError(f"hard_instance needs 1 <= n <= 12, got {n}")
    m = 2**n
    size = n + m
    d = np.zeros((size, size))
    li = np.arange(n)
    d[:n, :n] = np.abs(li[:, None] - li[None, :])
    rj = np.arange(m)
    d[n:, n:] = np.abs(rj[:, None] - rj[None, :])
    bits = (rj[:, None] >> li[None, :]) & 1  # (m, n): bit i-1 of j for u_i
    cross = 2.0 ** (n + 1) + bits
    d[n:, :n] = cross
    d[:n, n:] = cross.T
    labels = [f"u{i + 1}" for i in range(n)] + [f"v{j}" for j in range(m)]
    return from_matrix(d, labels=labels)


def greedy_half_cover(M: MetricSpace, x: int, r: float) -> int:
    """Size of a greedy cover of B(x, r) by balls of radius r/2 centred in X."""
    row = M.dist[x]
    ball = np.flatnonzero(row <= r + ATOL)
    if ball.size <= 1:
        return int(ball.size)
    cands = np.flatnonzero(row <= 1.5 * r + ATOL)
    cover = M.dist[np.ix_(cands, ball)] <= r / 2 + ATOL
    uncovered = np.ones(ball.size, dtype=bool)
    used = 0
    while uncovered.any():
        gain = cover[:, uncovered].sum(axis=1)
        best = int(np.argmax(gain))
        uncovered &= ~cover[best]
        used += 1
    return used


def estimate_doubling_dim(M: MetricSpace, max_centers: int = 300, max_radii: int = 32,
                          seed: int = 0) -> float:
    """Upper estimate of the doubling dimension from greedy half-radius covers.

    Takes the max of log2(cover size) over a grid of balls: every centre (or a
    seeded sample of ``max_centers``) and, per centre, its distinct distances
    (log-thinned to ``max_radii``).  Greedy set cover over-counts the optimum,
    so the value bounds the covering requirement of the tested balls from
    above; balls off the grid are not examined.
    """
    if M.n < 2:
        return 0.0
    centers = np.arange(M.n)
    if M.n > max_centers:
        centers = np.sort(np.random.default_rng(seed).choice(M.n, max_centers, replace=False))
    worst = 1
    for x in centers:
        radii = np.unique(M.dist[x][M.dist[x] > 0])
        if radii.size > max_radii:
            idx = np.unique(np.round(np.geomspace(1, radii.size, max_radii)).astype(int) - 1)
            radii = radii[idx]
        for r in radii:
            worst = max(worst, greedy_half_cover(M, int(x), float(r)))
    return float(math.log2(worst))
