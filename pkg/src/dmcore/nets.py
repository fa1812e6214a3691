"""Hierarchical 2^i-nets and the two net-tree flavours built on them.

Levels run 0..L with N_0 = X and |N_L| = 1.  Levels below zero are virtual:
N_i = X and every point is its own ancestor.  A tree stores the full ancestor
table ``anc[i, x] = Par^{(i)}(x)`` for ``i = 0..L``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantViolation, ValidationError
from .metric import ATOL, MetricSpace
from .rng import derive_rng


@dataclass(frozen=True, eq=False)
class NetHierarchy:
    metric: MetricSpace
    nets: tuple[np.ndarray, ...]  # nets[i] = ids of N_i in insertion order
    order: np.ndarray

    @property
    def L(self) -> int:
        return len(self.nets) - 1

    @property
    def j_min(self) -> int:
        return 0

    def top_level(self) -> np.ndarray:
        """Highest level each point belongs to."""
        top = np.zeros(self.metric.n, dtype=np.int64)
        for i, net in enumerate(self.nets):
            top[net] = i
        return top

    def net(self, i: int) -> np.ndarray:
        if i <= 0:
            return np.arange(self.metric.n)
        return self.nets[i]


def top_level_for(diam: float) -> int:
    """Smallest L with 2^{L-1} <= diam < 2^L (0 for a single point)."""
    if diam <= 0:
        return 0
    return int(math.floor(math.log2(diam) + 1e-12)) + 1


def build_hierarchy(M: MetricSpace, greedy_order=None, seed: int | None = None) -> NetHierarchy:
    """Greedy nets: scan N_{i-1} in order, keep points >= 2^i from those kept."""
    n = M.n
    if greedy_order is None:
        order = np.arange(n) if seed is None else derive_rng(seed, "greedy").permutation(n)
    else:
        order = np.asarray(greedy_order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(n)):
            raise ValidationError("greedy_order must be a permutation of the point ids")
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    L = top_level_for(M.diameter)
    nets = [order.copy()]
    for i in range(1, L + 1):
        prev = nets[-1]
        prev = prev[np.argsort(rank[prev], kind="stable")]
        radius = 2.0**i - ATOL
        kept: list[int] = []
        for p in prev:
            if not kept or M.dist[p, kept].min() >= radius:
                kept.append(int(p))
        nets.append(np.asarray(kept, dtype=np.int64))
    if len(nets[-1]) != 1:
        raise InvariantViolation(f"top net has {len(nets[-1])} points, expected 1")
    return NetHierarchy(metric=M, nets=tuple(nets), order=order)


@dataclass(frozen=True, eq=False)
class NetTree:
    hierarchy: NetHierarchy
    anc: np.ndarray  # (L+1, n)
    flavor: str
    c_cover: int
    seed: int | None = None
    chi: float | None = None
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self.anc.setflags(write=False)

    @property
    def metric(self) -> MetricSpace:
        return self.hierarchy.metric

    @property
    def L(self) -> int:
        return self.hierarchy.L

    def parent(self, u: int, i: int) -> int:
        """Par(u^{(i)}): the level-(i+1) node above u, for u in N_i."""
        return parent_at(self, u, i + 1)

    def descendants(self, v: int, j: int) -> np.ndarray:
        """Des(v^{(j)}) as sorted point ids."""
        if j <= 0:
            return np.array([v], dtype=np.int64)
        j = min(j, self.L)
        return np.flatnonzero(self.anc[j] == v)

    def ancestors(self, level_lo: int, level_hi: int) -> np.ndarray:
        """Ancestor rows for levels level_lo..level_hi (virtual levels are identity)."""
        n = self.metric.n
        rows = [self.anc[min(max(i, 0), self.L)] if i >= 0 else np.arange(n)
                for i in range(level_lo, level_hi + 1)]
        return np.stack(rows)

    def fan_out(self) -> int:
        """Largest number of children of any node at any level."""
        best = 1
        for i in range(self.L):
            net = self.hierarchy.net(i)
            _, counts = np.unique(self.anc[i + 1][net], return_counts=True)
            best = max(best, int(counts.max()))
        return best

    def to_json(self) -> str:
        parent = []
        for i in range(self.L):
            for u in self.hierarchy.net(i).tolist():
                parent.append([i, u, int(self.anc[i + 1, u])])
        doc = {
            "levels": [sorted(net.tolist()) for net in self.hierarchy.nets],
            "parent": parent,
            "flavor": self.flavor,
            "seed": self.seed,
            "chi": self.chi,
            "c_cover": self.c_cover,
        }
        return json.dumps(doc, sort_keys=True)


def parent_at(T: NetTree, x: int, i: int) -> int:
    """Par^{(i)}(x); identity for i <= 0."""
    if i > T.L:
        raise ValidationError(f"level {i} above top level {T.L}")
    if i <= 0:
        return int(x)
    return int(T.anc[i, x])


def build_simple_tree(H: NetHierarchy) -> NetTree:
    """Each level-i node hangs under its nearest N_{i+1} point (smallest id on ties)."""
    M = H.metric
    n, L = M.n, H.L
    anc = np.empty((L + 1, n), dtype=np.int64)
    anc[0] = np.arange(n)
    for i in range(L):
        up = np.sort(H.nets[i + 1])
        d = M.dist[:, up]
        # argmin returns the first minimum, i.e. the smallest id among ties
        near = up[np.argmin(d, axis=1)]
        par = near
        par[up] = up
        anc[i + 1] = par[anc[i]]
    return NetTree(hierarchy=H, anc=anc, flavor="simple", c_cover=1)


def default_chi(ddim: float) -> float:
    return float(max(2.0, 2.0 ** math.ceil(ddim)))


def sample_radii(rng: np.random.Generator, size: int, level: int, chi: float) -> np.ndarray:
    """2^i + h with h from the exponential of rate ln(chi)/2^i truncated to [0, 2^i]."""
    scale = 2.0**level
    u = rng.random(size)
    h = -(scale / math.log(chi)) * np.log1p(-u * (chi - 1.0) / chi)
    return scale + np.minimum(h, scale)


def build_decomposition_tree(H: NetHierarchy, seed: int, chi: float = 2.0) -> NetTree:
    """Randomised hierarchical decomposition with truncated-exponential radii.

    For each level i >= 1, the centres N_i are put in a seeded random order and
    each draws a radius r_u in [2^i, 2^{i+1}].  Every node of N_{i-1} joins the
    first centre whose ball contains it; a node that is itself in N_i keeps
    itself.  Because N_i 2^i-covers N_{i-1}, some ball always contains the
    node, so every edge is within 2^{i+1} and the clusters nest by construction.
    """
    if not (chi >= 2.0 and math.isfinite(chi)):
        raise ValidationError(f"chi must be >= 2, got {chi}")
    M = H.metric
    n, L = M.n, H.L
    anc = np.empty((L + 1, n), dtype=np.int64)
    anc[0] = np.arange(n)
    for i in range(1, L + 1):
        rng = derive_rng(seed, "decomp", i)
        net = np.sort(H.nets[i])
        perm = net[rng.permutation(net.size)]
        radii = sample_radii(rng, perm.size, i, chi)
        below = H.net(i - 1)
        inside = M.dist[np.ix_(perm, below)] <= radii[:, None] + ATOL
        if not inside.any(axis=0).all():
            raise InvariantViolation(f"level-{i} balls miss a node of N_{i - 1}")
        par = np.empty(n, dtype=np.int64)
        par[below] = perm[np.argmax(inside, axis=0)]
        par[net] = net
        anc[i] = par[anc[i - 1]]
    return NetTree(hierarchy=H, anc=anc, flavor="decomposition", c_cover=2, seed=seed,
                   chi=float(chi))


# ---------------------------------------------------------------------------
# invariant checks (used by tests and the acceptance suite)


def check_hierarchy(H: NetHierarchy) -> None:
    M = H.metric
    for i in range(1, H.L + 1):
        cur, prev = H.nets[i], H.nets[i - 1]
        if not np.isin(cur, prev).all():
            raise InvariantViolation(f"N_{i} is not contained in N_{i - 1}")
        sub = M.dist[np.ix_(cur, cur)]
        off = sub[~np.eye(cur.size, dtype=bool)]
        if off.size and off.min() < 2.0**i - ATOL:
            raise InvariantViolation(f"N_{i} is not a 2^{i}-packing")
        if M.dist[np.ix_(prev, cur)].min(axis=1).max() > 2.0**i + ATOL:
            raise InvariantViolation(f"N_{i} does not 2^{i}-cover N_{i - 1}")
    if H.L > 0:
        diam = M.diameter
        if not (2.0 ** (H.L - 1) <= diam + ATOL and diam < 2.0**H.L):
            raise InvariantViolation("top level does not bracket the diameter")
    if len(H.nets[-1]) != 1:
        raise InvariantViolation("top net is not a single point")


def check_tree(T: NetTree) -> None:
    """Membership, idempotence, nesting, per-edge and chain covering bounds."""
    H, M, c = T.hierarchy, T.metric, T.c_cover
    idx = np.arange(M.n)
    if not np.array_equal(T.anc[0], idx):
        raise InvariantViolation("level-0 ancestors must be the identity")
    for i in range(1, T.L + 1):
        net = H.nets[i]
        if not np.isin(T.anc[i], net).all():
            raise InvariantViolation(f"Par^({i}) leaves N_{i}")
        if not np.array_equal(T.anc[i][net], net):
            raise InvariantViolation(f"Par^({i}) is not idempotent on N_{i}")
        # laminarity: the level-i node determines the level-(i+1) node
        if not np.array_equal(T.anc[i][T.anc[i - 1]], T.anc[i]):
            raise InvariantViolation(f"levels {i - 1} and {i} do not nest")
        below = H.net(i - 1)
        edge = M.dist[below, T.anc[i][below]]
        if edge.max() > c * 2.0**i + ATOL:
            raise InvariantViolation(f"{c}-covering fails at level {i - 1}")
        chain = M.dist[idx, T.anc[i]]
        if chain.max() > c * 2.0 ** (i + 1) + ATOL:
            raise InvariantViolation(f"descendant distance bound fails at level {i}")
