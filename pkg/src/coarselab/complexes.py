"""Finite simplicial complexes carrying metric structure.

Three metric kinds: uniform (every simplex a standard Euclidean simplex
of one edge length), c0 (asymptotic: simplices of size 2^i with the
two-level mixed type and the adjacency rules between levels), and
euclidean (explicit per-edge lengths, produced by subdivision).

Geodesic distances are approximated from above on the chord-augmented
1-skeleton of an edge subdivision; exact chords are used whenever two
points share a simplex. Exact PL geodesics are out of scope.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

Simplex = frozenset[int]

REALIZE_TOL = 1e-9


class ComplexError(ValueError):
    """Invalid complex, point, or metric structure."""


class ApproximationError(ValueError):
    """Simplicial approximation failed; the message names the witness."""


def _key(s: Simplex) -> tuple[int, ...]:
    return tuple(sorted(s))


def downward_closure(maximal) -> frozenset[Simplex]:
    out: set[Simplex] = set()
    for m in maximal:
        m = frozenset(m)
        for r in range(1, len(m) + 1):
            for sub in itertools.combinations(sorted(m), r):
                out.add(frozenset(sub))
    return frozenset(out)


@dataclass(frozen=True)
class MetricComplex:
    simplices: frozenset[Simplex]
    kind: str
    scale: float = 1.0
    vertex_levels: dict[int, int] | None = None
    edge_lengths: dict[Simplex, float] | None = None
    _realized: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        simplices = frozenset(frozenset(s) for s in self.simplices)
        object.__setattr__(self, "simplices", simplices)
        if not simplices:
            raise ComplexError("empty complex")
        for s in simplices:
            if not s:
                raise ComplexError("empty simplex")
            if len(s) > 1:
                for v in s:
                    if s - {v} not in simplices:
                        raise ComplexError(f"not downward closed: missing face of {_key(s)}")
            else:
                (v,) = s
                if not isinstance(v, int):
                    raise ComplexError("vertex ids must be integers")
        if self.kind == "uniform":
            if not (self.scale > 0):
                raise ComplexError("uniform scale must be positive")
        elif self.kind == "c0":
            self._validate_c0()
        elif self.kind == "euclidean":
            lengths = {frozenset(e): float(l) for e, l in (self.edge_lengths or {}).items()}
            object.__setattr__(self, "edge_lengths", lengths)
            for e in self.edges:
                if e not in lengths or not lengths[e] > 0:
                    raise ComplexError(f"missing or non-positive length for edge {_key(e)}")
        else:
            raise ComplexError(f"unknown metric kind {self.kind!r}")

    # -- structure ---------------------------------------------------------

    @cached_property
    def vertices(self) -> tuple[int, ...]:
        return tuple(sorted({v for s in self.simplices for v in s}))

    @cached_property
    def edges(self) -> tuple[Simplex, ...]:
        return tuple(sorted((s for s in self.simplices if len(s) == 2), key=_key))

    @cached_property
    def maximal_simplices(self) -> tuple[Simplex, ...]:
        sims = sorted(self.simplices, key=lambda s: (-len(s), _key(s)))
        maximal: list[Simplex] = []
        for s in sims:
            if not any(s < m for m in maximal):
                maximal.append(s)
        return tuple(sorted(maximal, key=_key))

    @cached_property
    def _maximal_over(self) -> dict[Simplex, tuple[Simplex, ...]]:
        over: dict[Simplex, list[Simplex]] = {s: [] for s in self.simplices}
        for m in self.maximal_simplices:
            for r in range(1, len(m) + 1):
                for sub in itertools.combinations(sorted(m), r):
                    over[frozenset(sub)].append(m)
        return {s: tuple(sorted(v, key=_key)) for s, v in over.items()}

    def maximal_over(self, s: Simplex) -> tuple[Simplex, ...]:
        try:
            return self._maximal_over[frozenset(s)]
        except KeyError:
            raise ComplexError(f"{_key(frozenset(s))} is not a simplex of the complex") from None

    @property
    def dim(self) -> int:
        return max(len(s) for s in self.simplices) - 1

    # -- metric ------------------------------------------------------------

    def level(self, v: int) -> int:
        assert self.kind == "c0"
        return self.vertex_levels[v]

    def edge_length(self, e: Simplex) -> float:
        e = frozenset(e)
        if self.kind == "uniform":
            return self.scale
        if self.kind == "c0":
            return float(2.0 ** max(self.vertex_levels[v] for v in e))
        return self.edge_lengths[e]

    def min_edge(self, s: Simplex) -> float:
        """l(simplex): minimum edge length; for a bare vertex in the c0
        metric, its own size 2^level."""
        s = frozenset(s)
        if len(s) == 1:
            if self.kind == "c0":
                (v,) = s
                return float(2.0 ** self.vertex_levels[v])
            return self.scale if self.kind == "uniform" else min(self.edge_lengths.values())
        return min(self.edge_length(frozenset(e)) for e in itertools.combinations(sorted(s), 2))

    def mesh(self) -> float:
        if not self.edges:
            return 0.0
        return max(self.edge_length(e) for e in self.edges)

    def simplex_type(self, s: Simplex) -> tuple[int, bool]:
        """(level i, mixed?) for the c0 metric: a pure simplex of size 2^i
        or the mixed type with edges 2^i and 2^(i+1)."""
        assert self.kind == "c0"
        levels = {self.vertex_levels[v] for v in s}
        return min(levels), len(levels) > 1

    def _validate_c0(self):
        levels = self.vertex_levels
        if levels is None:
            raise ComplexError("c0 complex needs vertex levels")
        for v in self.vertices:
            if v not in levels or int(levels[v]) < 0:
                raise ComplexError(f"vertex {v} lacks a non-negative level")
        object.__setattr__(self, "vertex_levels", {v: int(levels[v]) for v in self.vertices})
        for m in self.maximal_simplices:
            ls = sorted({self.vertex_levels[v] for v in m})
            if len(ls) > 2 or (len(ls) == 2 and ls[1] - ls[0] != 1):
                raise ComplexError(f"simplex {_key(m)} spans levels {ls}: not a c0 type")
        # adjacency rule between intersecting maximal simplices: equal types,
        # or pure 2^i against mixed 2^i, or pure 2^i against mixed 2^(i-1)
        maxs = self.maximal_simplices
        for a, b in itertools.combinations(maxs, 2):
            if not (a & b):
                continue
            (la, ta), (lb, tb) = self.simplex_type(a), self.simplex_type(b)
            if (la, ta) == (lb, tb):
                continue
            pure_mixed = {(la, ta, lb, tb), (lb, tb, la, ta)}
            if any(not t1 and t2 and l1 - l2 in (0, 1) for (l1, t1, l2, t2) in pure_mixed):
                continue
            raise ComplexError(
                f"c0 adjacency violated: {_key(a)} (level {la}, mixed={ta}) meets "
                f"{_key(b)} (level {lb}, mixed={tb})"
            )

    # -- realization -------------------------------------------------------

    def realize(self, s: Simplex) -> tuple[tuple[int, ...], np.ndarray]:
        """Isometric coordinates for one simplex (vertex i at row i of the
        returned array, order = sorted vertex ids)."""
        s = frozenset(s)
        verts = _key(s)
        if verts in self._realized:
            return verts, self._realized[verts]
        if s not in self.simplices:
            raise ComplexError(f"{verts} is not a simplex of the complex")
        k = len(verts)
        if k == 1:
            coords = np.zeros((1, 1))
        else:
            d = np.zeros((k, k))
            for i in range(k):
                for j in range(i + 1, k):
                    d[i, j] = d[j, i] = self.edge_length(frozenset({verts[i], verts[j]}))
            g = 0.5 * (d[0, 1:, None] ** 2 + d[0, None, 1:] ** 2 - d[1:, 1:] ** 2)
            w, u = np.linalg.eigh(g)
            scale2 = float(d.max()) ** 2
            if w.min() < -1e-6 * scale2:
                raise ComplexError(f"edge lengths of {verts} are not Euclidean-realizable")
            coords = np.vstack([np.zeros(k - 1), u * np.sqrt(np.clip(w, 0.0, None))])
            got = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=2)
            if np.abs(got - d).max() > 1e-7 * max(1.0, d.max()):
                raise ComplexError(f"realization of {verts} failed to reproduce edge lengths")
        self._realized[verts] = coords
        return verts, coords

    # -- io ------------------------------------------------------------

    def to_json(self) -> dict:
        data = {
            "metric": self.kind,
            "simplices": sorted([list(_key(s)) for s in self.simplices]),
        }
        if self.kind == "uniform":
            data["lambda"] = self.scale
        elif self.kind == "c0":
            levels = {}
            for s in sorted(self.simplices, key=_key):
                levels["-".join(map(str, _key(s)))] = min(self.vertex_levels[v] for v in s)
            data["levels"] = levels
        else:
            data["edges"] = {
                "-".join(map(str, _key(e))): self.edge_lengths[e] for e in self.edges
            }
        return data

    @classmethod
    def from_json(cls, data: dict) -> "MetricComplex":
        simplices = frozenset(frozenset(s) for s in data["simplices"])
        kind = data["metric"]
        if kind == "uniform":
            return cls(simplices, "uniform", scale=float(data["lambda"]))
        if kind == "c0":
            levels = {}
            for key, lev in data["levels"].items():
                ids = [int(x) for x in key.split("-")]
                if len(ids) == 1:
                    levels[ids[0]] = int(lev)
            return cls(simplices, "c0", vertex_levels=levels)
        if kind == "euclidean":
            lengths = {
                frozenset(int(x) for x in key.split("-")): float(l)
                for key, l in data["edges"].items()
            }
            return cls(simplices, "euclidean", edge_lengths=lengths)
        raise ComplexError(f"unknown metric kind {kind!r}")


def uniform_complex(maximal, scale: float = 1.0) -> MetricComplex:
    return MetricComplex(downward_closure(maximal), "uniform", scale=scale)


def c0_complex(maximal, vertex_levels: dict[int, int]) -> MetricComplex:
    return MetricComplex(downward_closure(maximal), "c0", vertex_levels=vertex_levels)


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class ComplexPoint:
    """Point of a complex: minimal carrier simplex plus barycentric
    coordinates over it (sorted support, matching coordinate order)."""

    support: tuple[int, ...]
    coords: tuple[float, ...]

    def __post_init__(self):
        if len(self.support) != len(self.coords) or not self.support:
            raise ComplexError("support/coordinate length mismatch")
        if any(c <= 0 for c in self.coords):
            raise ComplexError("canonical points carry strictly positive coordinates")
        if abs(sum(self.coords) - 1.0) > 1e-9:
            raise ComplexError("barycentric coordinates must sum to 1")

    @property
    def carrier(self) -> Simplex:
        return frozenset(self.support)

    def coord_of(self, v: int) -> float:
        try:
            return self.coords[self.support.index(v)]
        except ValueError:
            return 0.0

    def dense(self, verts: tuple[int, ...]) -> np.ndarray:
        out = np.zeros(len(verts))
        for v, c in zip(self.support, self.coords):
            out[verts.index(v)] = c
        return out


def make_point(support, coords) -> ComplexPoint:
    """Canonicalize: drop zero coordinates, sort by vertex, renormalize."""
    pairs = [(int(v), float(c)) for v, c in zip(support, coords) if c > 1e-12]
    if not pairs:
        raise ComplexError("point has empty support")
    pairs.sort()
    total = sum(c for _, c in pairs)
    return ComplexPoint(tuple(v for v, _ in pairs), tuple(c / total for _, c in pairs))


def vertex_point(v: int) -> ComplexPoint:
    return ComplexPoint((int(v),), (1.0,))


def chord_distance(K: MetricComplex, p: ComplexPoint, q: ComplexPoint) -> float | None:
    """Exact Euclidean distance when p and q share a simplex, else None."""
    s = p.carrier | q.carrier
    if s not in K.simplices:
        return None
    verts, coords = K.realize(s)
    return float(np.linalg.norm(p.dense(verts) @ coords - q.dense(verts) @ coords))


# ---------------------------------------------------------------------------
# geodesic approximation


class DistanceApproximator:
    """Upper approximation of the geodesic metric.

    Nodes are the vertices plus 2^depth - 1 evenly spaced points on every
    edge; within each maximal simplex all node pairs are joined by exact
    chords. Query points attach by chords to the nodes of their enclosing
    maximal simplices. Distances decrease monotonically in depth because
    node sets are nested.
    """

    def __init__(self, K: MetricComplex, depth: int = 2):
        self.K = K
        self.depth = depth
        nodes: list[ComplexPoint] = [vertex_point(v) for v in K.vertices]
        self.vertex_index = {v: i for i, v in enumerate(K.vertices)}
        fractions = [j / 2.0**depth for j in range(1, 2**depth)]
        for e in K.edges:
            a, b = _key(e)
            for t in fractions:
                nodes.append(make_point((a, b), (1.0 - t, t)))
        self.nodes = nodes
        self._node_ids = {n: i for i, n in enumerate(nodes)}
        rows, cols, vals = [], [], []
        for m in K.maximal_simplices:
            ids = [i for i, n in enumerate(nodes) if n.carrier <= m]
            verts, coords = K.realize(m)
            pts = np.array([nodes[i].dense(verts) for i in ids]) @ coords
            for a in range(len(ids)):
                for b in range(a + 1, len(ids)):
                    w = float(np.linalg.norm(pts[a] - pts[b]))
                    rows.append(ids[a])
                    cols.append(ids[b])
                    vals.append(w)
        n = len(nodes)
        graph = coo_matrix((vals, (rows, cols)), shape=(n, n))
        self.D = shortest_path(graph, method="D", directed=False)

    def require_connected(self):
        if np.isinf(self.D).any():
            i, j = map(int, np.unravel_index(int(np.argmax(np.isinf(self.D))), self.D.shape))
            raise ComplexError(
                f"complex is disconnected: no path joining carriers "
                f"{_key(self.nodes[i].carrier)} and {_key(self.nodes[j].carrier)}"
            )

    def _chords_to_nodes(self, p: ComplexPoint) -> tuple[list[int], np.ndarray]:
        """Exact chords from p to every node sharing an enclosing maximal
        simplex with it."""
        best: dict[int, float] = {}
        for m in self.K.maximal_over(p.carrier):
            verts, coords = self.K.realize(m)
            x = p.dense(verts) @ coords
            for i, node in enumerate(self.nodes):
                if node.carrier <= m:
                    y = node.dense(verts) @ coords
                    w = float(np.linalg.norm(x - y))
                    if w < best.get(i, np.inf):
                        best[i] = w
        ids = sorted(best)
        return ids, np.array([best[i] for i in ids])

    def point_to_node_distances(self, points) -> np.ndarray:
        """Graph distances from each query point to every node."""
        self.require_connected()
        out = np.empty((len(points), len(self.nodes)))
        for r, p in enumerate(points):
            ids, chords = self._chords_to_nodes(p)
            out[r] = np.min(chords[:, None] + self.D[ids, :], axis=0)
        return out

    def pairwise(self, points) -> np.ndarray:
        """Distance matrix among query points: direct chords where a
        simplex is shared, node-routed paths otherwise (the minimum of
        the two everywhere)."""
        dn = self.point_to_node_distances(points)
        q = len(points)
        out = np.zeros((q, q))
        for a in range(q):
            for b in range(a + 1, q):
                via = float(np.min(dn[a] + dn[b]))
                c = chord_distance(self.K, points[a], points[b])
                out[a, b] = out[b, a] = via if c is None else min(via, c)
        return out


def complex_distance(K: MetricComplex, p: ComplexPoint, q: ComplexPoint, depth: int = 2) -> float:
    """Geodesic distance: exact chord for points sharing a simplex,
    otherwise the chord-path upper bound at the given subdivision depth."""
    return float(DistanceApproximator(K, depth).pairwise([p, q])[0, 1])


def vertex_metric_space(K: MetricComplex, depth: int = 2):
    """Vertex set of the complex as a FiniteMetricSpace (approximated
    geodesic metric; triangle inequality holds exactly by construction)."""
    from coarselab.metric import FiniteMetricSpace

    approx = DistanceApproximator(K, depth)
    approx.require_connected()
    idx = [approx.vertex_index[v] for v in K.vertices]
    dist = approx.D[np.ix_(idx, idx)].copy()
    np.fill_diagonal(dist, 0.0)
    return FiniteMetricSpace(K.vertices, dist)


# ---------------------------------------------------------------------------
# inradius


def inradius(n: int, a: float) -> float:
    """Inradius of the regular n-simplex with edge a."""
    if n < 1 or a <= 0:
        raise ComplexError("inradius needs n >= 1 and a > 0")
    return a / math.sqrt(2.0 * n * (n + 1))


def _volume(points: np.ndarray) -> float:
    m = points[1:] - points[0]
    if m.shape[0] == 0:
        return 1.0
    gram = m @ m.T
    det = float(np.linalg.det(gram))
    return math.sqrt(max(det, 0.0)) / math.factorial(m.shape[0])


def measured_inradius(points: np.ndarray) -> float:
    """Inradius of an arbitrary realized simplex: k*V / (sum of facet
    volumes). Used for r_T on irregular subdivision simplices."""
    k = points.shape[0] - 1
    if k == 0:
        return 0.0
    vol = _volume(points)
    surface = sum(_volume(np.delete(points, i, axis=0)) for i in range(points.shape[0]))
    return k * vol / surface


# ---------------------------------------------------------------------------
# barycentric subdivision


def _maximal_chains(m: Simplex) -> list[tuple[Simplex, ...]]:
    verts = _key(m)
    chains: list[tuple[Simplex, ...]] = []

    def grow(chain: tuple[Simplex, ...], top: Simplex):
        if len(top) == len(verts):
            chains.append(chain)
            return
        for v in verts:
            if v not in top:
                nxt = top | {v}
                grow(chain + (nxt,), nxt)

    for v in verts:
        s = frozenset({v})
        grow((s,), s)
    return chains


@dataclass(frozen=True)
class SubdivisionResult:
    complex: MetricComplex
    carrier: dict[int, ComplexPoint]  # new vertex -> point of the input complex
    mesh: float


def _combine(points: list[ComplexPoint], weights) -> ComplexPoint:
    support: dict[int, float] = {}
    for p, w in zip(points, weights):
        for v, c in zip(p.support, p.coords):
            support[v] = support.get(v, 0.0) + w * c
    return make_point(tuple(support), tuple(support.values()))


def barycentric_subdivide(
    K: MetricComplex, times: int, max_simplices: int = 200_000
) -> SubdivisionResult:
    """Iterated barycentric subdivision with exact inherited edge lengths
    and a carrier map sending new vertices to points of the input."""
    if K.kind == "c0":
        raise ComplexError("subdivision is defined for uniform/euclidean complexes")
    current = K
    carrier: dict[int, ComplexPoint] = {v: vertex_point(v) for v in K.vertices}
    for _ in range(times):
        new_id: dict[Simplex, int] = {frozenset({v}): v for v in current.vertices}
        next_id = max(current.vertices) + 1
        for s in sorted(
            (s for s in current.simplices if len(s) >= 2), key=lambda s: (len(s), _key(s))
        ):
            new_id[s] = next_id
            next_id += 1
        new_maximal = []
        for m in current.maximal_simplices:
            for chain in _maximal_chains(m):
                new_maximal.append(frozenset(new_id[s] for s in chain))
        simplices = downward_closure(new_maximal)
        if len(simplices) > max_simplices:
            raise ComplexError(
                f"subdivision would create {len(simplices)} simplices (cap {max_simplices})"
            )
        lengths: dict[Simplex, float] = {}
        for s in current.simplices:
            if len(s) < 2:
                continue
            verts, coords = current.realize(s)
            bary_s = coords.mean(axis=0)
            for r in range(1, len(s)):
                for sub in itertools.combinations(verts, r):
                    idx = [verts.index(v) for v in sub]
                    bary_sub = coords[idx].mean(axis=0)
                    lengths[frozenset({new_id[s], new_id[frozenset(sub)]})] = float(
                        np.linalg.norm(bary_s - bary_sub)
                    )
        new_carrier: dict[int, ComplexPoint] = {}
        for s, vid in new_id.items():
            pts = [carrier[v] for v in _key(s)]
            new_carrier[vid] = _combine(pts, [1.0 / len(s)] * len(s))
        current = MetricComplex(simplices, "euclidean", edge_lengths=lengths)
        carrier = new_carrier
    return SubdivisionResult(current, carrier, current.mesh())


# ---------------------------------------------------------------------------
# PL maps and simplicial approximation


@dataclass(frozen=True)
class PLMap:
    """Map defined by vertex images with affine extension.

    Evaluable when every domain simplex's vertex images share a codomain
    simplex; otherwise the map is flagged non-simplicial and only its
    vertex data is usable (pending approximation).
    """

    domain: MetricComplex
    codomain: MetricComplex
    vertex_images: dict[int, ComplexPoint]

    def __post_init__(self):
        missing = [v for v in self.domain.vertices if v not in self.vertex_images]
        if missing:
            raise ComplexError(f"PL map not total: no image for vertex {missing[0]}")

    @cached_property
    def is_simplicial_extension(self) -> bool:
        for m in self.domain.maximal_simplices:
            union = frozenset().union(*(self.vertex_images[v].carrier for v in m))
            if union not in self.codomain.simplices:
                return False
        return True

    def evaluate(self, p: ComplexPoint) -> ComplexPoint:
        if not self.is_simplicial_extension:
            raise ComplexError("map is flagged non-simplicial: affine extension undefined")
        imgs = [self.vertex_images[v] for v in p.support]
        return _combine(imgs, p.coords)

    def is_vertex_map(self) -> bool:
        return all(len(img.support) == 1 for img in self.vertex_images.values())

    def to_json(self) -> dict:
        return {
            "domain": self.domain.to_json(),
            "codomain": self.codomain.to_json(),
            "images": {
                str(v): {"simplex": list(img.support), "coords": list(img.coords)}
                for v, img in sorted(self.vertex_images.items())
            },
        }

    @classmethod
    def from_json(cls, data: dict) -> "PLMap":
        dom = MetricComplex.from_json(data["domain"])
        cod = MetricComplex.from_json(data["codomain"])
        images = {
            int(v): make_point(rec["simplex"], rec["coords"])
            for v, rec in data["images"].items()
        }
        return cls(dom, cod, images)


@dataclass(frozen=True)
class SampledMap:
    """Arbitrary map sampled pointwise (wraps a callable)."""

    domain: MetricComplex
    codomain: MetricComplex
    fn: object

    def evaluate(self, p: ComplexPoint) -> ComplexPoint:
        return self.fn(p)


def _interior_samples(K: MetricComplex, m: Simplex, rng, count: int) -> list[ComplexPoint]:
    verts = _key(m)
    out = []
    for _ in range(count):
        w = rng.dirichlet(np.ones(len(verts)))
        out.append(make_point(verts, np.clip(w, 1e-9, None)))
    return out


def sample_lipschitz(f, rng, per_simplex: int = 4, depth: int = 2) -> float:
    """Measured Lipschitz constant of a map between complexes, over
    vertex pairs and within-simplex sample pairs."""
    dom, cod = f.domain, f.codomain
    points: list[ComplexPoint] = [vertex_point(v) for v in dom.vertices]
    for m in dom.maximal_simplices:
        if len(m) >= 2:
            points.extend(_interior_samples(dom, m, rng, per_simplex))
    images = [f.evaluate(p) for p in points]
    dd = DistanceApproximator(dom, depth).pairwise(points)
    cd = DistanceApproximator(cod, depth).pairwise(images)
    iu = np.triu_indices(len(points), k=1)
    src = dd[iu]
    keep = src > 1e-12
    return float(np.max(cd[iu][keep] / src[keep]))


@dataclass(frozen=True)
class ApproximationResult:
    g: PLMap
    subdivided: MetricComplex
    carrier: dict[int, ComplexPoint]
    subdivisions: int
    mesh: float
    target_mesh: float
    r_t: float
    homotopy_lipschitz: float
    max_displacement: float
    samples: int

    def to_json(self) -> dict:
        return {
            "vertex_assignment": {
                str(v): int(img.support[0]) for v, img in sorted(self.g.vertex_images.items())
            },
            "subdivisions": self.subdivisions,
            "mesh": self.mesh,
            "target_mesh": self.target_mesh,
            "r_T": self.r_t,
            "homotopy_lipschitz": self.homotopy_lipschitz,
            "homotopy_lipschitz_bound": 1.0 / self.r_t,
            "max_displacement": self.max_displacement,
            "samples": self.samples,
        }


def simplicial_approximation(
    f,
    lam: float,
    rng=None,
    *,
    star_samples: int = 3,
    verify_samples: int = 4,
    max_subdivisions: int | None = None,
    max_simplices: int = 200_000,
    force_mesh: bool = False,
) -> ApproximationResult:
    """Homotope a Lipschitz map to a simplicial one.

    The domain is barycentrically subdivided until its mesh drops below
    r_n / (4 lam) with n the codomain dimension; each subdivision vertex
    is assigned a codomain vertex whose open star swallows the image of
    its own open star (checked on samples; the choice is the vertex with
    the largest barycentric coordinate in the image, ties to the lowest
    id). The straight-line homotopy stays inside the carrier of f(x) and
    its measured Lipschitz constant is certified against 1/r_T.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    dom, cod = f.domain, f.codomain
    if cod.kind != "uniform":
        raise ComplexError("codomain must carry the uniform metric")
    if dom.kind not in ("uniform", "euclidean"):
        raise ComplexError("domain must be uniform (or already subdivided)")
    measured = sample_lipschitz(f, rng, per_simplex=verify_samples)
    if measured > lam * (1.0 + 1e-9):
        raise ApproximationError(
            f"map is not {lam}-Lipschitz: measured constant {measured} on sample pairs"
        )
    n = cod.dim
    target = inradius(max(n, 1), cod.scale) / (4.0 * lam)
    current = dom
    carrier = {v: vertex_point(v) for v in dom.vertices}
    rounds = 0
    assignment: dict[int, ComplexPoint] | None = None
    while True:
        under_mesh = current.mesh() < target
        capped = max_subdivisions is not None and rounds >= max_subdivisions
        if under_mesh or not force_mesh or capped:
            assignment, witness = _star_assignment(f, current, carrier, rng, star_samples)
            if assignment is not None:
                break
            if under_mesh or capped:
                raise ApproximationError(
                    f"no admissible codomain vertex for domain vertex {witness}: "
                    f"the map is not {lam}-Lipschitz or the mesh is too coarse"
                )
        sub = barycentric_subdivide(current, 1, max_simplices=max_simplices)
        carrier = {v: _carrier_through(sub.carrier[v], carrier) for v in sub.complex.vertices}
        current = sub.complex
        rounds += 1
    mesh = current.mesh()
    g = PLMap(current, cod, assignment)
    if not g.is_simplicial_extension:
        raise ApproximationError("assignment is not simplicial on some subdivided simplex")

    # homotopy certificate: straight segments f(x) -> g(x) inside the
    # carrier of f(x), Lipschitz constant measured on same-simplex pairs
    # in the l1 product metric on (domain x [0,1])
    r_t = min(
        measured_inradius(current.realize(m)[1])
        for m in current.maximal_simplices
        if len(m) >= 2
    )
    worst = 0.0
    max_disp = 0.0
    samples = 0
    for m in current.maximal_simplices:
        verts = _key(m)
        pts = [vertex_point(v) for v in verts]
        if len(verts) >= 2:
            pts += _interior_samples(current, m, rng, star_samples)
        fs = [f.evaluate(_carrier_through(p, carrier)) for p in pts]
        gs = [g.evaluate(p) for p in pts]
        for fx, gx in zip(fs, gs):
            if not gx.carrier <= fx.carrier:
                raise ApproximationError(
                    f"g image leaves the carrier of f at a sample in {verts}"
                )
        sigma = frozenset().union(*(fx.carrier for fx in fs))
        if sigma not in cod.simplices:
            continue
        cverts, ccoords = cod.realize(sigma)
        fpts = np.array([fx.dense(cverts) for fx in fs]) @ ccoords
        gpts = np.array([gx.dense(cverts) for gx in gs]) @ ccoords
        max_disp = max(max_disp, float(np.linalg.norm(fpts - gpts, axis=1).max()))
        dverts, dcoords = current.realize(m)
        xs = np.array([p.dense(dverts) for p in pts]) @ dcoords
        ts = rng.uniform(0.0, 1.0, size=len(pts))
        hs = fpts + ts[:, None] * (gpts - fpts)
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                base = float(np.linalg.norm(xs[i] - xs[j])) + abs(ts[i] - ts[j])
                if base > 1e-12:
                    worst = max(worst, float(np.linalg.norm(hs[i] - hs[j])) / base)
                samples += 1
    if worst > 1.0 / r_t + 1e-9:
        raise ApproximationError(
            f"homotopy Lipschitz constant {worst} exceeds 1/r_T = {1.0 / r_t}"
        )
    return ApproximationResult(
        g, current, carrier, rounds, mesh, target, r_t, worst, max_disp, samples
    )


def _carrier_through(p: ComplexPoint, carrier: dict[int, ComplexPoint]) -> ComplexPoint:
    """Map a point of a subdivided complex through the carrier of its
    support vertices (all of which share an original simplex)."""
    return _combine([carrier[v] for v in p.support], p.coords)


def _star_assignment(f, current: MetricComplex, carrier, rng, star_samples: int):
    """Try the star-condition vertex assignment on the current
    subdivision; returns (assignment, None) or (None, witness vertex).

    Admissibility of a codomain vertex v for a domain vertex a: every
    sampled point of the open star of a maps into the open star of v.
    Each simplex contributes its barycenter as a shared sample, which
    forces the successful assignment to be simplicial. The choice among
    admissible vertices is the one with the largest barycentric
    coordinate in f(a) (the closest vertex), ties to the lowest id.
    """
    f_at = {a: f.evaluate(carrier[a]) for a in current.vertices}
    star_cache: dict[Simplex, list[ComplexPoint]] = {}
    for m in current.maximal_simplices:
        pts = []
        verts = _key(m)
        if len(verts) >= 2:
            pts.append(make_point(verts, [1.0 / len(verts)] * len(verts)))
            pts.extend(_interior_samples(current, m, rng, star_samples))
        star_cache[m] = [f.evaluate(_carrier_through(p, carrier)) for p in pts]
    assignment: dict[int, ComplexPoint] = {}
    for a in sorted(current.vertices):
        admissible = set(f_at[a].support)
        for m in current.maximal_simplices:
            if a in m:
                for img in star_cache[m]:
                    admissible &= img.carrier
        if not admissible:
            return None, a
        best = max(admissible, key=lambda v: (f_at[a].coord_of(v), -v))
        assignment[a] = vertex_point(best)
    return assignment, None


def star_condition_holds(f, g: PLMap, carrier, rng, per_vertex: int = 8) -> bool:
    """Independent recheck: for every domain vertex a of the subdivision
    and sampled points of its open star, f lands in the open star of
    g(a)."""
    T = g.domain
    for a in T.vertices:
        target = g.vertex_images[a].support[0]
        for m in T.maximal_simplices:
            if a not in m or len(m) < 2:
                continue
            verts = _key(m)
            for _ in range(per_vertex):
                w = rng.dirichlet(np.ones(len(verts)))
                w[verts.index(a)] += 0.25  # bias into the open star of a
                p = make_point(verts, w / w.sum())
                img = f.evaluate(_carrier_through(p, carrier))
                if img.coord_of(target) <= 0.0:
                    return False
    return True


# ---------------------------------------------------------------------------
# uniformize


@dataclass(frozen=True)
class UniformizeResult:
    complex: MetricComplex
    factors: dict[Simplex, float]


def uniformize(K: MetricComplex) -> UniformizeResult:
    """Switch a c0 complex to the uniform metric of size one (identity on
    the underlying simplices); reports per-simplex size factors 2^i."""
    if K.kind != "c0":
        raise ComplexError("uniformize applies to c0 complexes")
    factors = {
        m: float(2.0 ** max(K.vertex_levels[v] for v in m)) for m in K.maximal_simplices
    }
    return UniformizeResult(
        MetricComplex(K.simplices, "uniform", scale=1.0), factors
    )


# ---------------------------------------------------------------------------
# generated c0 family


def random_c0_complex(
    rng,
    level_lo: int = 0,
    level_hi: int = 8,
    max_vertices: int = 200,
    blocks_per_level: int | None = None,
) -> MetricComplex:
    """Random ladder in class c0: per level a chain of pure simplices of
    size 2^i glued at single vertices, consecutive levels joined by a
    mixed bridge simplex carrying both edge lengths. Bridges at
    consecutive levels never intersect (they attach at opposite ends of
    each level's chain), so the adjacency rules hold by construction.
    """
    levels = list(range(level_lo, level_hi + 1))
    next_id = 0
    vertex_levels: dict[int, int] = {}
    maximal: list[Simplex] = []

    def fresh(level: int) -> int:
        nonlocal next_id
        v = next_id
        next_id += 1
        vertex_levels[v] = level
        return v

    heads: dict[int, int] = {}
    tails: dict[int, int] = {}
    for i in levels:
        n_blocks = blocks_per_level if blocks_per_level is not None else int(rng.integers(1, 4))
        head = fresh(i)
        cursor = head
        for _ in range(n_blocks):
            dim = int(rng.integers(1, 4))
            others = [fresh(i) for _ in range(dim)]
            maximal.append(frozenset([cursor] + others))
            cursor = others[-1]
            if next_id >= max_vertices - 3:
                break
        heads[i], tails[i] = head, cursor
        if next_id >= max_vertices - 3:
            levels = levels[: levels.index(i) + 1]
            break
    for i in levels[:-1]:
        lo_anchor = tails[i]
        hi_anchor = heads[i + 1]
        if rng.random() < 0.5:
            extra = fresh(i)
            maximal.append(frozenset({lo_anchor, extra, hi_anchor}))
        else:
            maximal.append(frozenset({lo_anchor, hi_anchor}))
    return c0_complex(maximal, vertex_levels)
