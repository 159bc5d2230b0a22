"""Expander generation and certification.

Vertex-boundary Cheeger constants (exact by subset enumeration up to a
cutoff, spectral interval beyond), the first positive eigenvalue of the
combinatorial Laplacian L = D - A, and the Poincare ratio D^p_f with its
sharp variational ceiling c0 = d*n / ((n-1) * lambda1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from coarselab.metric import Graph, GraphError, graph_metric

EIG_TOL = 1e-8


class CheckFailed(AssertionError):
    """A quantitative bound that should hold was violated."""


# ---------------------------------------------------------------------------
# generation


def random_regular(n: int, d: int, seed_or_rng) -> Graph:
    """Simple connected d-regular graph from the configuration model.

    Stub pairings with loops or multi-edges are rejected wholesale, as
    are disconnected draws; the retry cap is 10*n attempts. Deterministic
    for a fixed seed.
    """
    if (n * d) % 2 != 0:
        raise GraphError(f"parity violation: n*d = {n}*{d} is odd")
    if d < 3:
        raise GraphError("configuration model requires degree d >= 3")
    if n <= d:
        raise GraphError(f"need n > d, got n={n}, d={d}")
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else np.random.default_rng(seed_or_rng)
    )
    stubs_proto = np.repeat(np.arange(n), d)
    cap = 10 * n
    for _ in range(cap):
        stubs = stubs_proto.copy()
        rng.shuffle(stubs)
        left, right = stubs[0::2], stubs[1::2]
        lo = np.minimum(left, right)
        hi = np.maximum(left, right)
        if (lo == hi).any():
            continue
        edges = set(zip(lo.tolist(), hi.tolist()))
        if len(edges) != n * d // 2:
            continue
        g = Graph(n, frozenset(edges), d)
        if g.is_connected():
            return g
    raise GraphError(f"configuration model failed after {cap} attempts for (n={n}, d={d})")


# ---------------------------------------------------------------------------
# boundaries and Cheeger constants


def vertex_boundary(g: Graph, A) -> frozenset[int]:
    """Vertices outside A at graph distance exactly 1 from A."""
    A = frozenset(A)
    if not A:
        raise GraphError("boundary of an empty set is undefined")
    if not A <= set(range(g.n)):
        raise GraphError("A contains ids outside the vertex set")
    out = set()
    for v in A:
        for w in g.adjacency[v]:
            if w not in A:
                out.add(w)
    return frozenset(out)


def _popcount(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x)


@dataclass(frozen=True)
class CheegerResult:
    lo: float
    hi: float
    method: str  # "exact" | "spectral"
    witness: frozenset[int] | None

    @property
    def exact(self) -> bool:
        return self.method == "exact"

    @property
    def value(self) -> float:
        if not self.exact:
            raise CheckFailed("Cheeger constant only has a value in the exact regime")
        return self.lo


def _exact_cheeger(g: Graph) -> CheegerResult:
    n = g.n
    adj_bits = np.zeros(n, dtype=np.int64)
    for i, j in g.edges:
        adj_bits[i] |= np.int64(1) << np.int64(j)
        adj_bits[j] |= np.int64(1) << np.int64(i)
    half = n // 2
    best = np.inf
    best_mask = 0
    chunk = 1 << 20
    total = 1 << n
    for lo in range(1, total, chunk):
        masks = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        sizes = _popcount(masks)
        keep = sizes <= half
        masks = masks[keep]
        sizes = sizes[keep]
        if masks.size == 0:
            continue
        neigh = np.zeros(masks.shape, dtype=np.int64)
        for v in range(n):
            inset = (masks >> np.int64(v)) & np.int64(1)
            neigh |= np.where(inset.astype(bool), adj_bits[v], np.int64(0))
        boundary = neigh & ~masks
        ratios = _popcount(boundary) / sizes
        k = int(np.argmin(ratios))
        if ratios[k] < best:
            best = float(ratios[k])
            best_mask = int(masks[k])
    witness = frozenset(v for v in range(n) if (best_mask >> v) & 1)
    return CheegerResult(best, best, "exact", witness)


def cheeger_constant(g: Graph, max_exact_n: int = 24) -> CheegerResult:
    """min |bd A| / |A| over non-empty A with |A| <= n/2.

    Exact by enumeration for n <= max_exact_n; otherwise the spectral
    interval [lambda1/2, sqrt(2*d*lambda1)], tagged "spectral" and never
    presented as an exact value.
    """
    if not g.is_connected():
        raise GraphError("Cheeger constant requires a connected graph")
    if g.n <= max_exact_n:
        return _exact_cheeger(g)
    lam1, _ = lambda1(g)
    d = int(g.degrees().max())
    return CheegerResult(lam1 / 2.0, float(np.sqrt(2.0 * d * lam1)), "spectral", None)


# ---------------------------------------------------------------------------
# Laplacian spectrum


def laplacian(g: Graph) -> np.ndarray:
    """Combinatorial Laplacian D - A (unnormalized); with this convention
    lambda1 = inf ||df||^2 / ||f||^2 over centered f is literally true."""
    a = g.adjacency_matrix()
    return np.diag(a.sum(axis=0)) - a


def lambda1(g: Graph) -> tuple[float, np.ndarray]:
    """First positive Laplacian eigenvalue and a centered minimizing
    eigenvector (dense symmetric eigensolve)."""
    if not g.is_connected():
        raise GraphError("lambda1 requires a connected graph")
    w, v = np.linalg.eigh(laplacian(g))
    vec = v[:, 1].copy()
    vec -= vec.mean()
    return float(w[1]), vec


def sharp_poincare_constant(g: Graph) -> float:
    """c0 = d*n / ((n-1) * lambda1) with d the average degree (= the
    degree for regular graphs): the sharp constant of the variational
    argument, attained by the lambda1 eigenvector."""
    lam, _ = lambda1(g)
    n = g.n
    d_avg = 2.0 * len(g.edges) / n
    return d_avg * n / ((n - 1) * lam)


# ---------------------------------------------------------------------------
# Poincare ratios


def _as_vectors(g: Graph, f) -> np.ndarray:
    arr = np.asarray(f, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] != g.n:
        raise GraphError(f"map has {arr.shape[0]} rows for {g.n} vertices")
    return arr


def poincare_ratio(g: Graph, f, p: float = 2.0) -> float:
    """D^p_f: mean p-th power displacement over all unordered pairs
    divided by the mean over edges.

    |P| = n(n-1)/2 and |E| = dn/2 for d-regular graphs (actual edge
    count in general). Constant maps are rejected: zero denominator.
    """
    if p < 1:
        raise GraphError("p must be >= 1")
    arr = _as_vectors(g, f)
    n = g.n
    iu, ju = np.triu_indices(n, k=1)
    pair_d = np.linalg.norm(arr[iu] - arr[ju], axis=1)
    edges = g.edge_array()
    edge_d = np.linalg.norm(arr[edges[:, 0]] - arr[edges[:, 1]], axis=1)
    den = float(np.sum(edge_d**p)) / len(edges)
    if den == 0.0:
        raise GraphError("constant map: edge displacement sum is zero")
    num = float(np.sum(pair_d**p)) / len(iu)
    return num / den


@dataclass(frozen=True)
class PoincareReport:
    n: int
    trials: int
    c0: float
    lambda1: float
    max_random: float
    eigen_value: float
    ok: bool

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "c0": self.c0,
            "lambda1": self.lambda1,
            "max_random_D2": self.max_random,
            "eigenvector_D2": self.eigen_value,
            "tolerance_relative": 1e-9,
            "ok": self.ok,
        }


RANDOM_MAP_DIMS = (1, 2, 8)


def random_vector_maps(n: int, trials: int, rng: np.random.Generator):
    """Trial maps for the bound check: coordinates i.i.d. uniform in
    [-1, 1], dimensions cycling through {1, 2, 8}."""
    for t in range(trials):
        dim = RANDOM_MAP_DIMS[t % len(RANDOM_MAP_DIMS)]
        yield rng.uniform(-1.0, 1.0, size=(n, dim))


def poincare_bound_check(g: Graph, trials: int, seed_or_rng) -> PoincareReport:
    """Evaluate D^2_f on random maps and on the lambda1 eigenvector;
    every value must stay below c0 (relative slack 1e-9) and the
    eigenvector must attain it."""
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else np.random.default_rng(seed_or_rng)
    )
    lam, vec = lambda1(g)
    c0 = sharp_poincare_constant(g)
    slack = 1e-9 * max(1.0, c0)
    worst = 0.0
    for f in random_vector_maps(g.n, trials, rng):
        worst = max(worst, poincare_ratio(g, f, 2.0))
        if worst > c0 + slack:
            raise CheckFailed(f"random map exceeded c0: {worst} > {c0}")
    eig_val = poincare_ratio(g, vec, 2.0)
    if abs(eig_val - c0) > slack:
        raise CheckFailed(f"eigenvector D2 {eig_val} missed c0 {c0}")
    return PoincareReport(g.n, trials, c0, lam, worst, eig_val, True)


def verify_one_lipschitz(g: Graph, f, tol: float = 1e-9):
    """Check ||f(x)-f(y)|| <= d(x,y) on all pairs; returns the worst
    stretch and a witness pair."""
    arr = _as_vectors(g, f)
    dist = graph_metric(g).dist
    iu, ju = np.triu_indices(g.n, k=1)
    stretch = np.linalg.norm(arr[iu] - arr[ju], axis=1) / dist[iu, ju]
    k = int(np.argmax(stretch))
    return float(stretch[k]), (int(iu[k]), int(ju[k]))


def lipschitz_bound_corollary(g: Graph, f) -> float:
    """For a verified 1-Lipschitz map, the pair-average of squared
    displacement; asserted <= c0 (edge average <= 1 forces it)."""
    arr = _as_vectors(g, f)
    worst, pair = verify_one_lipschitz(g, arr)
    if worst > 1.0 + 1e-9:
        raise GraphError(f"map is not 1-Lipschitz: stretch {worst} at pair {pair}")
    iu, ju = np.triu_indices(g.n, k=1)
    value = float(np.sum(np.sum((arr[iu] - arr[ju]) ** 2, axis=1))) / len(iu)
    c0 = sharp_poincare_constant(g)
    if value > c0 * (1.0 + 1e-9):
        raise CheckFailed(f"pair average {value} exceeds c0 {c0}")
    return value


# ---------------------------------------------------------------------------
# reports and families


@dataclass(frozen=True)
class SpectralReport:
    """Per-graph spectral certificate.

    The provable side of the Cheeger sandwich, h^2/(2d) <= lambda1, is
    enforced whenever h is exact. The converse lambda1 <= 2h holds for
    the edge-boundary constant but can fail for the vertex-boundary one
    on dense graphs (complete graphs already violate it), so it is
    recorded as a flag rather than asserted.
    """

    n: int
    d: int
    lambda1: float
    cheeger_lo: float
    cheeger_hi: float
    cheeger_method: str
    c0: float
    cheeger_upper_ok: bool

    def __post_init__(self):
        if self.cheeger_method == "exact":
            h = self.cheeger_lo
            if h * h / (2.0 * self.d) > self.lambda1 * (1.0 + 1e-9) + 1e-12:
                raise CheckFailed(
                    f"spectral sandwich broken: h^2/2d = {h * h / (2 * self.d)} "
                    f"> lambda1 = {self.lambda1}"
                )

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "lambda1": self.lambda1,
            "cheeger": [self.cheeger_lo, self.cheeger_hi],
            "methods": {"lambda1": "exact", "cheeger": self.cheeger_method},
            "c0": self.c0,
            "cheeger_upper_ok": self.cheeger_upper_ok,
        }


def spectral_report(g: Graph, max_exact_n: int = 24) -> SpectralReport:
    lam, _ = lambda1(g)
    ch = cheeger_constant(g, max_exact_n)
    d = int(g.degrees().max())
    c0 = sharp_poincare_constant(g)
    upper_ok = bool(lam <= 2.0 * ch.hi * (1.0 + 1e-9))
    return SpectralReport(g.n, d, lam, ch.lo, ch.hi, ch.method, c0, upper_ok)


LAMBDA1_FLOOR = 0.1


@dataclass(frozen=True)
class ExpanderFamily:
    """Increasing sequence of connected d-regular graphs with a certified
    conductance: exact Cheeger when |X| <= max_exact_n, the safe spectral
    lower bound lambda1/(2d) beyond.

    The family c0 is the max over members (per-graph sharp constants);
    members whose lambda1 drifts below 0.1 are flagged, since a uniform
    spectral floor for random regular graphs only holds with high
    probability.
    """

    graphs: tuple[Graph, ...]
    d: int
    conductance: float
    lambda1s: tuple[float, ...]
    c0: float
    flagged: tuple[int, ...]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(g.n for g in self.graphs)


def certify_family(graphs, d: int, max_exact_n: int = 24) -> ExpanderFamily:
    sizes = [g.n for g in graphs]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise GraphError("family sizes must be strictly increasing")
    lams = []
    conductance = np.inf
    c0 = 0.0
    flagged = []
    for idx, g in enumerate(graphs):
        if not g.is_regular():
            raise GraphError(f"member {idx} is not {d}-regular")
        if g.degree_bound != d:
            raise GraphError(f"member {idx} has degree {g.degree_bound}, family declares {d}")
        lam, _ = lambda1(g)
        lams.append(lam)
        if lam < LAMBDA1_FLOOR:
            flagged.append(idx)
        if g.n <= max_exact_n:
            conductance = min(conductance, cheeger_constant(g, max_exact_n).value)
        else:
            conductance = min(conductance, lam / (2.0 * d))
        c0 = max(c0, sharp_poincare_constant(g))
    return ExpanderFamily(tuple(graphs), d, float(conductance), tuple(lams), c0, tuple(flagged))


def build_family(ns, d: int, seed: int, max_exact_n: int = 24) -> ExpanderFamily:
    from coarselab.rng import substream

    graphs = [random_regular(n, d, substream(seed, "gen", i)) for i, n in enumerate(ns)]
    return certify_family(graphs, d, max_exact_n)
