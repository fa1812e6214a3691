"""Seeded synthetic instances and the standard small test corpus."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .metric import MetricSpace, from_coords, from_matrix, hard_instance
from .rng import derive_rng


def line(positions) -> MetricSpace:
    return from_coords(np.asarray(positions, dtype=float)[:, None])


def grid(shape: tuple[int, ...]) -> MetricSpace:
    pts = np.array(list(itertools.product(*[range(s) for s in shape])), dtype=float)
    return from_coords(pts)


def random_euclidean(n: int, dim: int, seed: int, spread: float = 100.0) -> MetricSpace:
    rng = derive_rng(seed, "euclid", n, dim)
    return from_coords(rng.random((n, dim)) * spread)


def log_scale_euclidean(n: int, dim: int, seed: int, octaves: int = 16) -> MetricSpace:
    """Random directions with log-uniform norms, so distances span many scales."""
    rng = derive_rng(seed, "logscale", n, dim)
    dirs = rng.standard_normal((n, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return from_coords(dirs * np.exp2(rng.random(n) * octaves)[:, None])


def uniform_metric(n: int) -> MetricSpace:
    d = np.ones((n, n)) - np.eye(n)
    return from_matrix(d)


def exponential_line(n: int, base: float = 2.0) -> MetricSpace:
    """Points at base^0, base^1, ...: one point per scale."""
    return line(np.concatenate([[0.0], base ** np.arange(n - 1)]))


def multiscale_clusters(n_clusters: int, per_cluster: int, seed: int, dim: int = 2,
                        inner: float = 4.0, outer: float = 5000.0) -> MetricSpace:
    """Tight clusters spread over a large region, so many levels are populated."""
    rng = derive_rng(seed, "multiscale", n_clusters, per_cluster, dim)
    centers = rng.random((n_clusters, dim)) * outer
    pts = centers[:, None, :] + rng.random((n_clusters, per_cluster, dim)) * inner
    return from_coords(pts.reshape(-1, dim))


def gaussian_clusters(sizes, centers, sigma: float, seed: int, outliers: int = 0,
                      outlier_radius: float = 0.0) -> np.ndarray:
    """Coordinates of Gaussian blobs plus optional far outliers on a circle."""
    rng = derive_rng(seed, "gauss", len(sizes), outliers)
    centers = np.asarray(centers, dtype=float)
    parts = [c + sigma * rng.standard_normal((s, centers.shape[1])) for s, c in zip(sizes, centers)]
    if outliers:
        ang = rng.random(outliers) * 2 * np.pi
        rad = outlier_radius * (1.0 + rng.random(outliers))
        ring = np.zeros((outliers, centers.shape[1]))
        ring[:, 0] = rad * np.cos(ang)
        ring[:, 1] = rad * np.sin(ang)
        parts.append(ring)
    return np.concatenate(parts)


@dataclass(frozen=True, eq=False)
class Instance:
    name: str
    metric: MetricSpace


def standard_corpus() -> list[Instance]:
    """Small instances (n <= 150) spanning lines, grids, Euclidean, uniform and hard metrics."""
    out = [
        Instance("line3", line([0, 1, 3])),
        Instance("line_even8", line(np.arange(8))),
        Instance("line_exp12", exponential_line(12)),
        Instance("line_random40", line(np.sort(derive_rng(1, "line").random(40)) * 3000)),
        Instance("grid5x5", grid((5, 5))),
        Instance("grid3x3x3", grid((3, 3, 3))),
        Instance("grid12x12", grid((12, 12))),
        Instance("euclid2_60", random_euclidean(60, 2, seed=2)),
        Instance("euclid2_120", random_euclidean(120, 2, seed=3, spread=2000.0)),
        Instance("euclid3_80", random_euclidean(80, 3, seed=4)),
        Instance("euclid5_60", random_euclidean(60, 5, seed=5)),
        Instance("euclid5_100", random_euclidean(100, 5, seed=6, spread=1000.0)),
        Instance("logscale2_80", log_scale_euclidean(80, 2, seed=9)),
        Instance("logscale3_100", log_scale_euclidean(100, 3, seed=10)),
        Instance("logscale5_120", log_scale_euclidean(120, 5, seed=11, octaves=20)),
        Instance("uniform6", uniform_metric(6)),
        Instance("uniform20", uniform_metric(20)),
        Instance("multiscale2d", multiscale_clusters(8, 12, seed=7)),
        Instance("multiscale3d", multiscale_clusters(10, 10, seed=8, dim=3, outer=20000.0)),
    ]
    out += [Instance(f"hard{m}", hard_instance(m)) for m in range(1, 7)]
    return out
