"""Uniformly bounded covers, nerves, and the 1-Lipschitz nerve projection.

Covers are finite indexed families of subsets of a finite metric space.
The Lebesgue number uses distance-to-complement: for a point x and a
cover set U, d(x, X \\ U) is 0 when x is outside U and the cover mesh
when U is the whole space (finite spaces have no open/closed
distinction, so this is the working convention throughout).

The projection to the nerve composes the complement-distance coordinates
with the l-infinity radial projection onto the sphere of radius lambda
and lands in the nerve carrying Euclidean simplices of edge c_n * lambda,
where c_n is the largest constant making the identification of the
spherical simplex with the Euclidean one 1-Lipschitz (estimated once per
dimension by dense pair sampling, with a 0.99 safety factor).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from coarselab.complexes import (
    DistanceApproximator,
    MetricComplex,
    Simplex,
    downward_closure,
    make_point,
)
from coarselab.metric import FiniteMetricSpace, MetricError, PointId


class CoverError(ValueError):
    """Invalid cover or unsatisfied projection precondition."""


@dataclass(frozen=True)
class Cover:
    base: FiniteMetricSpace
    sets: tuple[frozenset[PointId], ...]
    scale: float

    def __post_init__(self):
        sets = tuple(frozenset(s) for s in self.sets)
        object.__setattr__(self, "sets", sets)
        if not sets:
            raise CoverError("cover has no sets")
        if any(not s for s in sets):
            raise CoverError("cover sets must be non-empty")
        points = set(self.base.point_ids)
        for s in sets:
            if not s <= points:
                raise CoverError("cover set contains unknown point ids")
        if set().union(*sets) != points:
            raise CoverError("cover does not exhaust the space")
        if not self.scale > 0:
            raise CoverError("cover scale must be positive")

    def membership(self) -> np.ndarray:
        """Boolean (n_points, n_sets) membership table."""
        m = np.zeros((self.base.n, len(self.sets)), dtype=bool)
        for j, s in enumerate(self.sets):
            for p in s:
                m[self.base.index(p), j] = True
        return m

    def to_json(self) -> dict:
        return {
            "lambda": self.scale,
            "sets": [sorted(s, key=lambda p: self.base.index(p)) for s in self.sets],
        }

    @classmethod
    def from_json(cls, base: FiniteMetricSpace, data: dict) -> "Cover":
        return cls(base, tuple(frozenset(s) for s in data["sets"]), float(data["lambda"]))

    def with_scale(self, scale: float) -> "Cover":
        return Cover(self.base, self.sets, scale)


@dataclass(frozen=True)
class CoverStats:
    mesh: float
    multiplicity: int
    lebesgue: float


def complement_distances(c: Cover) -> np.ndarray:
    """t[x][U] = d(x, X \\ U): 0 outside U, the cover mesh when U = X."""
    base = c.base
    mesh = max(base.set_diameter(s) for s in c.sets)
    t = np.zeros((base.n, len(c.sets)))
    all_points = set(base.point_ids)
    for j, s in enumerate(c.sets):
        comp = sorted(all_points - s, key=base.index)
        if not comp:
            for p in s:
                t[base.index(p), j] = mesh
            continue
        comp_idx = [base.index(p) for p in comp]
        for p in s:
            i = base.index(p)
            t[i, j] = base.dist[i, comp_idx].min()
    return t


def cover_stats(c: Cover) -> CoverStats:
    mesh = max(c.base.set_diameter(s) for s in c.sets)
    member = c.membership()
    multiplicity = int(member.sum(axis=1).max())
    lebesgue = float(complement_distances(c).max(axis=1).min())
    return CoverStats(mesh, multiplicity, lebesgue)


def distance_coordinates(c: Cover) -> np.ndarray:
    """The raw coordinate table; rejects covers with Lebesgue number 0
    (some point sits on the boundary of every set containing it)."""
    t = complement_distances(c)
    row_max = t.max(axis=1)
    if row_max.min() <= 0.0:
        p = c.base.point_ids[int(np.argmin(row_max))]
        raise CoverError(
            f"Lebesgue number is 0: point {p!r} lies on the boundary of every containing set"
        )
    return t


def greedy_cover(space: FiniteMetricSpace, lam: float, passes: int = 1) -> Cover:
    """Cover by balls around a greedy lambda-net (ties to the lowest
    point id), enlarged toward Lebesgue number >= lambda/2 where the
    2*lambda diameter budget allows. All statistics are measured by
    cover_stats, never guaranteed."""
    if not lam > 0:
        raise CoverError("lambda must be positive")
    d = space.dist
    net: list[int] = []
    for i in range(space.n):
        if all(d[i, j] > lam for j in net):
            net.append(i)
    sets = [frozenset(np.flatnonzero(d[j] <= lam).tolist()) for j in net]
    for _ in range(passes):
        grown = []
        for s in sets:
            idx = sorted(s)
            near = np.flatnonzero(d[:, idx].min(axis=1) <= lam / 2.0)
            enlarged = frozenset(near.tolist())
            if space.set_diameter([space.point_ids[i] for i in enlarged]) <= 2.0 * lam:
                grown.append(enlarged)
            else:
                grown.append(s)
        sets = grown
    uniq: list[frozenset[int]] = []
    for s in sets:
        if s not in uniq:
            uniq.append(s)
    as_ids = tuple(frozenset(space.point_ids[i] for i in s) for s in uniq)
    return Cover(space, as_ids, lam)


# ---------------------------------------------------------------------------
# nerves


@dataclass(frozen=True)
class Nerve:
    """One vertex per cover set; a simplex per subfamily with a common
    point. The carrier maps each simplex to its witnessing intersection."""

    n_sets: int
    simplices: frozenset[Simplex]
    carrier: dict[Simplex, frozenset[PointId]]

    @property
    def dim(self) -> int:
        return max(len(s) for s in self.simplices) - 1

    def to_json(self) -> dict:
        return {
            "n_vertices": self.n_sets,
            "faces": sorted([sorted(s) for s in self.simplices]),
            "dimension": self.dim,
        }

    def to_off(self) -> str:
        """OFF-style text for viewers: vertices on a deterministic 3d
        spectral layout, maximal faces as polygons."""
        edges = [s for s in self.simplices if len(s) == 2]
        lap = np.zeros((self.n_sets, self.n_sets))
        for e in edges:
            i, j = sorted(e)
            lap[i, j] = lap[j, i] = -1.0
        np.fill_diagonal(lap, -lap.sum(axis=0))
        _, vecs = np.linalg.eigh(lap)
        coords = np.zeros((self.n_sets, 3))
        coords[:, : min(3, self.n_sets - 1)] = vecs[:, 1 : min(4, self.n_sets)]
        maximal = [
            s
            for s in self.simplices
            if not any(s < t for t in self.simplices)
        ]
        lines = ["OFF", f"{self.n_sets} {len(maximal)} {len(edges)}"]
        for row in coords:
            lines.append(" ".join(repr(float(x)) for x in row))
        for s in sorted(maximal, key=lambda s: (len(s), sorted(s))):
            idx = sorted(s)
            lines.append(str(len(idx)) + " " + " ".join(map(str, idx)))
        return "\n".join(lines) + "\n"

    def metric_complex(self, edge: float) -> MetricComplex:
        return MetricComplex(self.simplices, "uniform", scale=edge)


def build_nerve(c: Cover) -> Nerve:
    member = c.membership()
    carrier: dict[Simplex, set[PointId]] = {}
    for i, p in enumerate(c.base.point_ids):
        s_x = tuple(np.flatnonzero(member[i]).tolist())
        for r in range(1, len(s_x) + 1):
            for sub in itertools.combinations(s_x, r):
                carrier.setdefault(frozenset(sub), set()).add(p)
    simplices = frozenset(carrier)
    return Nerve(len(c.sets), simplices, {s: frozenset(v) for s, v in carrier.items()})


# ---------------------------------------------------------------------------
# the identification constant c_n

_CN_CACHE: dict[int, float] = {}
_CN_SAFETY = 0.99
_CN_SAMPLES = 4000


def identification_constant(n: int) -> float:
    """Largest c (with a 0.99 safety factor) such that mapping the
    l-infinity spherical n-simplex of size 1 onto the regular Euclidean
    simplex of edge c is 1-Lipschitz; estimated by dense pair sampling
    (vertex pairs included, which attain the known worst ratio), cached
    per dimension, fixed internal seed."""
    if n < 1:
        return 1.0
    if n in _CN_CACHE:
        return _CN_CACHE[n]
    rng = np.random.default_rng(987654321 + n)
    k = n + 1
    corners = _regular_simplex(k)  # unit edge
    worst = 0.0

    def ratio(v: np.ndarray, w: np.ndarray) -> float:
        num = float(np.linalg.norm((v / v.sum() - w / w.sum()) @ corners))
        den = float(np.abs(v / v.max() - w / w.max()).max())
        return num / den if den > 1e-15 else 0.0

    # structured extremes: near a vertex, pushing a block of other
    # coordinates together attains the directional supremum
    for m in range(1, k):
        for eps in (1e-5, 1e-3, 1e-2, 0.1, 0.3, 0.6, 1.0):
            v = np.zeros(k)
            v[0] = 1.0
            w = v.copy()
            w[1 : m + 1] = eps
            worst = max(worst, ratio(v, w))
    for i in range(k):
        for j in range(i + 1, k):
            worst = max(worst, ratio(np.eye(k)[i], np.eye(k)[j]))
    # dense random sphere pairs plus near-coincident pairs
    def batch_ratio(v: np.ndarray, w: np.ndarray) -> float:
        bary = lambda x: x / x.sum(axis=1, keepdims=True)  # noqa: E731
        sph = lambda x: x / x.max(axis=1, keepdims=True)  # noqa: E731
        num = np.linalg.norm((bary(v) - bary(w)) @ corners, axis=1)
        den = np.abs(sph(v) - sph(w)).max(axis=1)
        ok = den > 1e-12
        return float(np.max(num[ok] / den[ok], initial=0.0))

    pts = rng.dirichlet(np.ones(k), size=_CN_SAMPLES)
    sphere = pts / pts.max(axis=1, keepdims=True)
    for _ in range(6):
        idx = rng.integers(0, len(sphere), size=(_CN_SAMPLES, 2))
        worst = max(worst, batch_ratio(sphere[idx[:, 0]], sphere[idx[:, 1]]))
        jitter = rng.dirichlet(np.ones(k), size=len(sphere))
        for scale in (0.3, 0.03, 0.003):
            worst = max(worst, batch_ratio(sphere, sphere * (1 - scale) + scale * jitter))
    c = _CN_SAFETY / worst
    _CN_CACHE[n] = c
    return c


def _regular_simplex(k: int) -> np.ndarray:
    """Vertices (rows) of a regular (k-1)-simplex with unit edge; Gram
    relative to vertex 0 has unit diagonal and 1/2 off it."""
    g = np.full((k - 1, k - 1), 0.5)
    g[np.diag_indices(k - 1)] = 1.0
    w, u = np.linalg.eigh(g)
    rest = u * np.sqrt(np.clip(w, 0.0, None))
    return np.vstack([np.zeros(k - 1), rest])


# ---------------------------------------------------------------------------
# projection


@dataclass(frozen=True)
class ProjectionMap:
    """Barycentric coordinates of every base point over the cover
    indices; the image lies in the nerve carrying Euclidean simplices of
    edge c_n * scale."""

    cover: Cover
    nerve: Nerve
    coords: np.ndarray  # (n_points, n_sets), rows sum to 1
    scale: float
    nerve_edge: float

    @cached_property
    def supports(self) -> tuple[Simplex, ...]:
        return tuple(frozenset(np.flatnonzero(row > 0).tolist()) for row in self.coords)

    def image_point(self, p: PointId):
        row = self.coords[self.cover.base.index(p)]
        sup = np.flatnonzero(row > 0)
        return make_point(sup.tolist(), row[sup])

    def to_csv_rows(self) -> tuple[list[str], list[list]]:
        header = ["point"] + [f"set_{j}" for j in range(len(self.cover.sets))]
        rows = []
        for i, p in enumerate(self.cover.base.point_ids):
            rows.append([p] + [float(x) for x in self.coords[i]])
        return header, rows


def nerve_projection(c: Cover, scale: float | None = None) -> tuple[ProjectionMap, Nerve]:
    """Complement-distance coordinates, radially projected onto the
    l-infinity sphere of radius `scale` and rescaled to barycentric.

    Requires Lebesgue number >= 2 * scale (the image of the raw
    coordinate map must stay outside the 2*scale ball for the radial
    projection to be 1-Lipschitz)."""
    lam = c.scale if scale is None else float(scale)
    if not lam > 0:
        raise CoverError("projection scale must be positive")
    stats = cover_stats(c)
    if stats.lebesgue < 2.0 * lam - 1e-12:
        raise CoverError(
            f"Lebesgue number {stats.lebesgue} is below 2*lambda = {2 * lam}: "
            "radial projection is not 1-Lipschitz"
        )
    t = distance_coordinates(c)
    nerve = build_nerve(c)
    spherical = lam * t / t.max(axis=1, keepdims=True)
    bary = spherical / spherical.sum(axis=1, keepdims=True)
    n = nerve.dim
    edge = identification_constant(n) * lam if n >= 1 else lam
    proj = ProjectionMap(c, nerve, bary, lam, edge)
    for i, sup in enumerate(proj.supports):
        if sup not in nerve.simplices:
            raise CoverError(f"support of point row {i} is not a nerve simplex")
    return proj, nerve


def projection_lipschitz_constant(proj: ProjectionMap, depth: int = 2) -> float:
    """Measured L of the nerve projection: base distances against the
    geodesic metric of the c_n-normalized Euclidean nerve."""
    K = proj.nerve.metric_complex(proj.nerve_edge)
    points = [proj.image_point(p) for p in proj.cover.base.point_ids]
    nerve_d = DistanceApproximator(K, depth).pairwise(points)
    base_d = proj.cover.base.dist
    iu = np.triu_indices(len(points), k=1)
    return float(np.max(nerve_d[iu] / base_d[iu]))


@dataclass(frozen=True)
class CoboundedReport:
    ok: bool
    worst_simplex: Simplex | None
    worst_diameter: float


def cobounded_check(proj: ProjectionMap, bound: float) -> CoboundedReport:
    """True iff every simplex preimage has diameter <= bound.

    The preimage of a simplex is its open-star preimage: the points whose
    barycentric support equals the simplex (all of which share every
    cover set named by it, hence the mesh bound). Simplices with empty
    preimage are skipped."""
    base = proj.cover.base
    groups: dict[Simplex, list[PointId]] = {}
    for p, sup in zip(base.point_ids, proj.supports):
        groups.setdefault(sup, []).append(p)
    worst, arg = 0.0, None
    for s, pts in groups.items():
        diam = base.set_diameter(pts)
        if diam > worst:
            worst, arg = diam, s
    return CoboundedReport(worst <= bound + 1e-12, arg, worst)
