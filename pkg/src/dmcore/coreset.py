"""Importance-sampling coresets and an empirical quality evaluator."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .metric import MetricSpace, check_centers, estimate_doubling_dim
from .rng import derive_rng
from .sensitivity import SensitivityProfile, dz_seed, sensitivity_bounds


@dataclass(frozen=True, eq=False)
class WeightedCoreset:
    ids: np.ndarray
    weights: np.ndarray
    params: dict
    profile: SensitivityProfile | None = None

    @property
    def size(self) -> int:
        return int(self.ids.size)

    def cost(self, M: MetricSpace, C, z: float) -> float:
        d = M.dist[np.ix_(self.ids, np.asarray(list(C)))].min(axis=1)
        return float(self.weights @ d**z)

    def to_dict(self) -> dict:
        return {
            "meta": self.params,
            "entries": [{"id": int(i), "weight": float(w)} for i, w in zip(self.ids, self.weights)],
        }

    @staticmethod
    def from_dict(doc: dict) -> "WeightedCoreset":
        ids = np.array([e["id"] for e in doc["entries"]], dtype=np.int64)
        w = np.array([e["weight"] for e in doc["entries"]], dtype=float)
        return WeightedCoreset(ids=ids, weights=w, params=dict(doc.get("meta", {})))


def coreset_size(n: int, k: int, z: float, eps: float, tau: float, ddim: float, A: float = 1.0) -> int:
    """min(n, ceil(A k^3/eps^2 (t ln(z/eps) + ln k + ln ln(1/tau)) + A k^2/eps^2 ln(1/tau)))."""
    lead = ddim * max(0.0, math.log(z / eps)) + math.log(k) + math.log(math.log(1 / tau))
    raw = A * (k**3 / eps**2) * lead + A * (k**2 / eps**2) * math.log(1 / tau)
    return int(min(n, max(1, math.ceil(raw))))


def validate_params(k: int, z: float, eps: float, tau: float) -> None:
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise ValidationError(f"k must be a positive integer, got {k}")
    if not (math.isfinite(z) and z > 0):
        raise ValidationError(f"z must be a positive finite real, got {z}")
    if not 0 < eps < 1:
        raise ValidationError(f"eps must lie in (0, 1), got {eps}")
    if not 0 < tau < 0.01:
        raise ValidationError(f"tau must lie in (0, 0.01), got {tau}")


def build_coreset(M: MetricSpace, k: int, z: float = 1.0, eps: float = 0.2, tau: float = 1e-3,
                  seed: int = 0, size_override: int | None = None, A: float = 1.0,
                  ddim: float | None = None, c_assumed: float | None = None,
                  restarts: int = 10) -> WeightedCoreset:
    """Draw Gamma i.i.d. points with probability proportional to multiplicity * theta."""
    validate_params(k, z, eps, tau)
    if k > M.n:
        raise ValidationError(f"k={k} exceeds the number of distinct points {M.n}")
    if size_override is not None and size_override < 1:
        raise ValidationError("size override must be >= 1")
    B = dz_seed(M, k, z, restarts=restarts, seed=seed)
    prof = sensitivity_bounds(M, B, z, c_assumed)
    # the dimension only enters the size formula, so skip estimating it under an override
    t = float(ddim) if ddim is not None else None
    if size_override is None and t is None:
        t = estimate_doubling_dim(M)
    gamma = size_override or coreset_size(M.total, k, z, eps, tau, t, A)
    mass = M.multiplicity * prof.theta
    total = float(mass.sum())
    rng = derive_rng(seed, "coreset")
    ids = rng.choice(M.n, size=gamma, p=mass / total)
    weights = total / (gamma * prof.theta[ids])
    params = {"k": k, "z": z, "eps": eps, "tau": tau, "gamma": int(gamma), "seed": seed, "A": A,
              "ddim": t, "size_override": size_override, "bicriteria_cost": B.cost,
              "multiplier": prof.multiplier}
    return WeightedCoreset(ids=ids, weights=weights, params=params, profile=prof)


def uniform_coreset(M: MetricSpace, size: int, seed: int = 0) -> WeightedCoreset:
    """Uniform i.i.d. baseline: each draw weighs |X|/size."""
    if size < 1:
        raise ValidationError("size must be >= 1")
    rng = derive_rng(seed, "uniform")
    ids = rng.choice(M.n, size=size, p=M.multiplicity / M.total)
    return WeightedCoreset(ids=ids, weights=np.full(size, M.total / size),
                           params={"gamma": size, "seed": seed, "baseline": "uniform"})


def draw_expectation(M: MetricSpace, W: WeightedCoreset, C, z: float) -> float:
    """Exact E[w * d^z(s, C)] of one draw, enumerating the categorical distribution."""
    prof = W.profile
    mass = M.multiplicity * prof.theta
    total = float(mass.sum())
    p = mass / total
    w = total / (W.params["gamma"] * prof.theta)
    d = M.dist[:, np.asarray(list(C))].min(axis=1) ** z
    return float(np.sum(p * w * d))


def sample_center_sets(M: MetricSpace, k: int, count: int, seed: int) -> list[tuple[int, ...]]:
    rng = derive_rng(seed, "centers", k)
    return [tuple(sorted(int(v) for v in rng.choice(M.n, size=k, replace=False))) for _ in range(count)]


@dataclass(frozen=True)
class ErrorReport:
    errors: np.ndarray
    true_costs: np.ndarray
    coreset_costs: np.ndarray
    eps: float | None = None

    @property
    def max(self) -> float:
        return float(self.errors.max())

    @property
    def mean(self) -> float:
        return float(self.errors.mean())

    @property
    def p95(self) -> float:
        return float(np.quantile(self.errors, 0.95))

    @property
    def frac_exceeding(self) -> float:
        return float(np.mean(self.errors > self.eps)) if self.eps is not None else float("nan")


def evaluate_coreset(M: MetricSpace, W: WeightedCoreset, centers, z: float,
                     eps: float | None = None) -> ErrorReport:
    """Relative error |coreset cost - true cost| / true cost per centre set (0/0 is 0)."""
    centers = list(centers)
    if not centers:
        raise ValidationError("need at least one centre set")
    true = np.empty(len(centers))
    core = np.empty(len(centers))
    for i, C in enumerate(centers):
        c = check_centers(M, C)
        true[i] = float(M.multiplicity @ (M.dist[:, c].min(axis=1) ** z))
        core[i] = W.cost(M, c, z)
    with np.errstate(invalid="ignore", divide="ignore"):
        err = np.where(true > 0, np.abs(core - true) / true, np.where(core > 0, np.inf, 0.0))
    return ErrorReport(errors=err, true_costs=true, coreset_costs=core, eps=eps)
