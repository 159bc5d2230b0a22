"""Finite metric spaces, graphs with the geodesic metric, Lipschitz data.

Distances are double-precision; the triangle inequality is checked with
an absolute tolerance of 1e-9 (graph metrics are integral and exact, the
slack only matters for metrics imported from simplicial complexes).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TRIANGLE_TOL = 1e-9

PointId = int | str


class MetricError(ValueError):
    """Distance matrix violates the metric axioms."""


class GraphError(ValueError):
    """Structurally invalid graph (loops, degree bound, connectivity)."""


@dataclass(frozen=True)
class FiniteMetricSpace:
    """Points with a validated distance matrix and a declared base point.

    The base point carries the norm ``|x| = d(x, base)``; it defaults to
    the first point.
    """

    point_ids: tuple[PointId, ...]
    dist: np.ndarray
    base_point: PointId = None  # type: ignore[assignment]

    def __post_init__(self):
        ids = tuple(self.point_ids)
        object.__setattr__(self, "point_ids", ids)
        if len(set(ids)) != len(ids):
            raise MetricError("duplicate point ids")
        if not ids:
            raise MetricError("empty point set")
        d = np.asarray(self.dist, dtype=float)
        object.__setattr__(self, "dist", d)
        n = len(ids)
        if d.shape != (n, n):
            raise MetricError(f"distance matrix shape {d.shape} does not match {n} points")
        validate_metric(d)
        base = self.base_point if self.base_point is not None else ids[0]
        if base not in ids:
            raise MetricError(f"base point {base!r} is not a point of the space")
        object.__setattr__(self, "base_point", base)
        d.setflags(write=False)

    @cached_property
    def _index(self) -> dict[PointId, int]:
        return {p: i for i, p in enumerate(self.point_ids)}

    @property
    def n(self) -> int:
        return len(self.point_ids)

    def index(self, p: PointId) -> int:
        try:
            return self._index[p]
        except KeyError:
            raise MetricError(f"unknown point id {p!r}") from None

    def d(self, a: PointId, b: PointId) -> float:
        return float(self.dist[self.index(a), self.index(b)])

    def norm(self, a: PointId) -> float:
        """d(a, base): the norm used by every radial construction."""
        return self.d(a, self.base_point)

    def diameter(self) -> float:
        return float(self.dist.max())

    def set_diameter(self, points) -> float:
        idx = [self.index(p) for p in points]
        if len(idx) <= 1:
            return 0.0
        return float(self.dist[np.ix_(idx, idx)].max())

    def with_base(self, base: PointId) -> "FiniteMetricSpace":
        return FiniteMetricSpace(self.point_ids, self.dist, base)

    def to_json(self) -> dict:
        return {
            "points": list(self.point_ids),
            "dist": [[float(x) for x in row] for row in self.dist],
            "base": self.base_point,
        }

    @classmethod
    def from_json(cls, data: dict) -> "FiniteMetricSpace":
        return cls(tuple(data["points"]), np.array(data["dist"], dtype=float), data["base"])


def validate_metric(d: np.ndarray, tol: float = TRIANGLE_TOL) -> None:
    """Reject non-metrics: asymmetry, nonzero diagonal, non-positive
    off-diagonal entries, or any violated triangle."""
    n = d.shape[0]
    if not np.all(np.isfinite(d)):
        raise MetricError("non-finite distance")
    if np.abs(np.diag(d)).max(initial=0.0) > tol:
        raise MetricError("nonzero diagonal entry")
    asym = np.abs(d - d.T)
    if asym.max(initial=0.0) > tol:
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        raise MetricError(f"asymmetric at pair ({i}, {j})")
    if n > 1:
        off = d.copy()
        np.fill_diagonal(off, np.inf)
        if off.min() <= 0.0:
            i, j = np.unravel_index(np.argmin(off), off.shape)
            raise MetricError(f"non-positive distance between distinct points ({i}, {j})")
    for k in range(n):
        slack = d[:, [k]] + d[[k], :] - d
        if slack.min() < -tol:
            i, j = np.unravel_index(np.argmin(slack), slack.shape)
            raise MetricError(f"triangle inequality fails for ({i}, {j}) through {k}")


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph with a declared degree bound.

    Connectivity is not required at construction time; it is enforced
    wherever the geodesic metric is actually taken (graph_metric), so
    the disconnected-input error stays reachable.
    """

    n: int
    edges: frozenset[tuple[int, int]]
    degree_bound: int

    def __post_init__(self):
        edges = frozenset((min(i, j), max(i, j)) for i, j in self.edges)
        object.__setattr__(self, "edges", edges)
        for i, j in edges:
            if i == j:
                raise GraphError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"edge ({i}, {j}) out of range for n={self.n}")
        degs = self.degrees()
        if self.n > 0 and degs.max(initial=0) > self.degree_bound:
            v = int(np.argmax(degs))
            raise GraphError(
                f"vertex {v} has degree {int(degs[v])} > declared bound {self.degree_bound}"
            )

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return tuple(tuple(sorted(x)) for x in nbrs)

    def degrees(self) -> np.ndarray:
        degs = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            degs[i] += 1
            degs[j] += 1
        return degs

    def is_regular(self) -> bool:
        degs = self.degrees()
        return bool(self.n == 0 or (degs == self.degree_bound).all())

    def edge_array(self) -> np.ndarray:
        return np.array(sorted(self.edges), dtype=int).reshape(-1, 2)

    def bfs_from(self, source: int) -> np.ndarray:
        """Single-source unweighted distances, -1 where unreachable."""
        dist = np.full(self.n, -1, dtype=int)
        dist[source] = 0
        frontier = [source]
        while frontier:
            nxt = []
            for u in frontier:
                for v in self.adjacency[u]:
                    if dist[v] < 0:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        return dist

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        return bool((self.bfs_from(0) >= 0).all())

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=float)
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "edges": [[i, j] for i, j in sorted(self.edges)],
            "degree": self.degree_bound,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Graph":
        try:
            edges = frozenset((int(i), int(j)) for i, j in data["edges"])
            return cls(int(data["n"]), edges, int(data["degree"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphError(f"malformed graph record: {exc}") from exc


def cycle_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, (i + 1) % n) for i in range(n)), 2)


def path_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, i + 1) for i in range(n - 1)), 2 if n > 2 else 1)


def complete_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)), n - 1)


def graph_metric(g: Graph) -> FiniteMetricSpace:
    """Unweighted shortest-path metric of a connected graph.

    Rejects disconnected graphs, naming a separated vertex pair: every
    downstream formula assumes finite diameters.
    """
    if g.n == 0:
        raise GraphError("empty graph has no metric")
    dist = np.zeros((g.n, g.n), dtype=float)
    for v in range(g.n):
        row = g.bfs_from(v)
        if (row < 0).any():
            w = int(np.argmax(row < 0))
            raise GraphError(f"graph is disconnected: no path between vertices {v} and {w}")
        dist[v] = row
    return FiniteMetricSpace(tuple(range(g.n)), dist, 0)


@dataclass(frozen=True)
class PointMap:
    """Total assignment of domain points to codomain points."""

    domain: FiniteMetricSpace
    codomain: FiniteMetricSpace
    images: dict[PointId, PointId]

    def __post_init__(self):
        missing = [p for p in self.domain.point_ids if p not in self.images]
        if missing:
            raise MetricError(f"map not total: no image for {missing[0]!r}")
        for p, q in self.images.items():
            self.domain.index(p)
            self.codomain.index(q)

    def __call__(self, p: PointId) -> PointId:
        return self.images[p]

    def compose(self, other: "PointMap") -> "PointMap":
        """self after other (other's codomain must be self's domain)."""
        return PointMap(
            other.domain,
            self.codomain,
            {p: self.images[q] for p, q in other.images.items()},
        )


def lipschitz_constant(f: PointMap) -> float:
    """sup over distinct pairs of d(f x, f x') / d(x, x'); 0 for constant maps."""
    dom, cod = f.domain, f.codomain
    if dom.n < 2:
        raise MetricError("Lipschitz constant needs at least two domain points")
    src = dom.dist
    img_idx = np.array([cod.index(f.images[p]) for p in dom.point_ids])
    tgt = cod.dist[np.ix_(img_idx, img_idx)]
    iu = np.triu_indices(dom.n, k=1)
    return float(np.max(tgt[iu] / src[iu]))


def ball(space: FiniteMetricSpace, center: PointId, r: float) -> frozenset[PointId]:
    """Closed ball: membership by d(x, center) <= r."""
    if r < 0:
        raise MetricError("ball radius must be non-negative")
    c = space.index(center)
    sel = space.dist[c] <= r
    return frozenset(p for p, keep in zip(space.point_ids, sel) if keep)


@dataclass(frozen=True)
class BallGrowthReport:
    ok: bool
    witness: int | None
    max_ball: int
    bound: float


def ball_growth_check(g: Graph, k: int) -> BallGrowthReport:
    """Check |B_k(v)| <= 2 d^k for every vertex.

    The bound is the closed form of the geometric sum 1 + d + ... + d^k,
    valid for degree bound d >= 2; a violation (impossible for valid
    inputs) is returned with its witnessing vertex as a self-test hook.
    """
    if g.degree_bound < 2:
        raise GraphError("ball growth bound needs degree bound d >= 2")
    if k < 0:
        raise GraphError("radius k must be non-negative")
    bound = 2.0 * float(g.degree_bound) ** k
    worst, witness = 0, None
    for v in range(g.n):
        dist = g.bfs_from(v)
        size = int(((dist >= 0) & (dist <= k)).sum())
        if size > worst:
            worst, witness = size, v
    ok = worst <= bound
    return BallGrowthReport(ok, None if ok else witness, worst, bound)
