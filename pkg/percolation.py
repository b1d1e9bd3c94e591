"""
Latticeworks v1.0 - Percolation Module
=======================================
Bond percolation on lattice patches: sampling, cluster labeling,
box crossings and their duality, Russo pivotals, arm events, cluster
radii and the critical surfaces.

Зміни v1.0:
- Потік RNG = індекс зразка, тож оцінки не залежать від кількості потоків
- Перетин прямокутника через «привидні» вершини джерела й стоку
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from numba import njit
from scipy.optimize import bisect

import config
from lattice_core import (
    LatticePatch, boundary_vertices, build_lattice_patch, origin_vertex,
)
from logger import get_logger
from replica_engine import (
    CancellationToken, binomial_estimate, block_rng, mean_and_se, run_blocks,
)
from reports import ExperimentReport
from union_find import _uf_find, _uf_union, label_components
from validators import (
    InvariantError, Number, ValidationError, validate_class_probabilities,
    validate_family, validate_positive, validate_probability,
    validate_rectangle,
)

logger = get_logger(__name__)

HORIZONTAL = 'horizontal'
VERTICAL = 'vertical'
ORIENTATIONS = (HORIZONTAL, VERTICAL)

Rect = Tuple[Number, Number, Number, Number]


# === DATA TYPES ===

@dataclass(frozen=True)
class BondConfig:
    """One open/closed bit per edge plus the stream that produced it"""
    patch: LatticePatch
    bits: np.ndarray
    seed: Optional[int] = None
    stream: Optional[int] = None

    def __post_init__(self):
        if self.bits.shape != (self.patch.n_edges,):
            raise ValidationError(
                f"Config has {self.bits.shape[0]} bits for {self.patch.n_edges} edges"
            )

    @property
    def n_open(self) -> int:
        return int(self.bits.sum())

    def with_bits(self, bits: np.ndarray) -> "BondConfig":
        return BondConfig(self.patch, np.asarray(bits, dtype=np.bool_))


@dataclass(frozen=True)
class ClusterLabeling:
    """labels[v] is the smallest vertex id of v's open cluster"""
    labels: np.ndarray
    n_clusters: int
    sizes: Dict[int, int] = field(default_factory=dict)

    def connected(self, u: int, v: int) -> bool:
        return bool(self.labels[u] == self.labels[v])

    def cluster_of(self, v: int) -> np.ndarray:
        return np.nonzero(self.labels == self.labels[v])[0]


@dataclass(frozen=True)
class CrossingGeometry:
    """
    Rectangle crossing as a connectivity query between two ghost vertices.

    Entries are (u, v, edge id); edge id −1 marks a link that is always
    open (a side vertex joined to its ghost).
    """
    n_total: int
    eu: np.ndarray
    ev: np.ndarray
    eid: np.ndarray
    source: int
    target: int


@dataclass(frozen=True)
class ArmSpec:
    """Colour sequence (1 primal, 0 dual) crossing Λ_n ∖ Λ_{N−1} anticlockwise"""
    colours: Tuple[int, ...]
    inner: int
    outer: int

    def __post_init__(self):
        if not self.colours:
            raise ValidationError("Arm sequence needs at least one colour")
        if any(c not in (0, 1) for c in self.colours):
            raise ValidationError(f"Arm colours must be 0 or 1, got {self.colours}")
        if not 1 <= self.inner < self.outer:
            raise ValidationError(
                f"Arm radii need 1 <= N < n, got N={self.inner}, n={self.outer}"
            )

    @property
    def k(self) -> int:
        return len(self.colours)


# === SAMPLING ===

def homogeneous(patch: LatticePatch, p: Number) -> Tuple[Number, ...]:
    """The same probability on every edge class"""
    validate_probability(p)
    return (p,) * patch.n_classes


def _edge_probabilities(patch: LatticePatch, class_probs: Sequence[Number]) -> np.ndarray:
    probs = validate_class_probabilities(class_probs, patch.n_classes)
    table = np.array([float(p) for p in probs], dtype=np.float64)
    return table[patch.edge_classes]


def _sample_bits(edge_probs: np.ndarray, seed: int, stream: int) -> np.ndarray:
    return block_rng(seed, stream).random(edge_probs.shape[0]) < edge_probs


def sample_config(
    patch: LatticePatch,
    class_probs: Sequence[Number],
    seed: int = config.DEFAULT_SEED,
    stream: int = 0
) -> BondConfig:
    """
    Each edge open independently with its class probability

    Raises:
        ValidationError: Probability out of range or class count mismatch
    """
    edge_probs = _edge_probabilities(patch, class_probs)
    return BondConfig(patch, _sample_bits(edge_probs, seed, stream), seed, stream)


# === CLUSTERS ===

def label_clusters(bond_config: BondConfig) -> ClusterLabeling:
    patch = bond_config.patch
    u, v = patch.edge_endpoints
    labels, n_comp = label_components(patch.n_vertices, u, v, bond_config.bits)
    ids, counts = np.unique(labels, return_counts=True)
    return ClusterLabeling(labels, int(n_comp), {int(i): int(c) for i, c in zip(ids, counts)})


@njit(nogil=True, cache=True)
def _crosses(n, eu, ev, eid, bits, src, tgt, skip):
    parent = np.arange(n, dtype=np.int64)
    rank = np.zeros(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    for k in range(eu.shape[0]):
        e = eid[k]
        if e >= 0 and (e == skip or not bits[e]):
            continue
        _uf_union(parent, rank, size, eu[k], ev[k])
    return _uf_find(parent, src) == _uf_find(parent, tgt)


@njit(nogil=True, cache=True)
def _crossing_pivotals(n, eu, ev, eid, bits, src, tgt):
    """Edges whose flip toggles the crossing"""
    parent = np.arange(n, dtype=np.int64)
    rank = np.zeros(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    for k in range(eu.shape[0]):
        e = eid[k]
        if e >= 0 and not bits[e]:
            continue
        _uf_union(parent, rank, size, eu[k], ev[k])
    rs = _uf_find(parent, src)
    rt = _uf_find(parent, tgt)

    count = 0
    if rs != rt:
        for k in range(eu.shape[0]):
            e = eid[k]
            if e < 0 or bits[e]:
                continue
            a = _uf_find(parent, eu[k])
            b = _uf_find(parent, ev[k])
            if (a == rs and b == rt) or (a == rt and b == rs):
                count += 1
        return count

    for k in range(eu.shape[0]):
        e = eid[k]
        if e < 0 or not bits[e]:
            continue
        if _uf_find(parent, eu[k]) != rs:
            continue
        if not _crosses(n, eu, ev, eid, bits, src, tgt, e):
            count += 1
    return count


def _resolve_orientation(rect: Rect, orientation: Optional[str]) -> str:
    x0, y0, x1, y1 = rect
    if orientation is None:
        return HORIZONTAL if (x1 - x0) > (y1 - y0) else VERTICAL
    if orientation not in ORIENTATIONS:
        raise ValidationError(f"Unknown orientation: {orientation} (allowed: {', '.join(ORIENTATIONS)})")
    return orientation


def crossing_geometry(patch: LatticePatch, rect: Rect, orientation: Optional[str] = None) -> CrossingGeometry:
    """
    Compile the crossing event of a closed rectangle.

    A crossing is an open path inside the rectangle whose ends lie on the
    two sides transverse to `orientation`; an open edge leaving an inside
    vertex through such a side also ends a crossing. Default orientation
    runs along the longer direction.

    Raises:
        ValidationError: Degenerate rectangle, periodic patch
    """
    rect = validate_rectangle(rect)
    if patch.periodic:
        raise ValidationError("Rectangle crossings need a planar patch")
    orientation = _resolve_orientation(rect, orientation)
    eps = config.COORDINATE_EPSILON

    pos = patch.float_embedding
    x0, y0, x1, y1 = (float(c) for c in rect)
    if orientation == HORIZONTAL:
        a, b = pos[:, 0], pos[:, 1]
        a0, a1, b0, b1 = x0, x1, y0, y1
    else:
        a, b = pos[:, 1], pos[:, 0]
        a0, a1, b0, b1 = y0, y1, x0, x1

    inside = (a >= a0 - eps) & (a <= a1 + eps) & (b >= b0 - eps) & (b <= b1 + eps)
    on_source = inside & (np.abs(a - a0) <= eps)
    on_target = inside & (np.abs(a - a1) <= eps)
    if not inside.any():
        raise ValidationError(f"Rectangle {rect} contains no vertex of the patch")

    n = patch.n_vertices
    source, target = n, n + 1
    entries: List[Tuple[int, int, int]] = []
    for v in np.nonzero(on_source)[0]:
        entries.append((int(v), source, -1))
    for v in np.nonzero(on_target)[0]:
        entries.append((int(v), target, -1))

    for e, (u, w, _) in enumerate(patch.edges):
        if inside[u] and inside[w]:
            entries.append((u, w, e))
            continue
        if inside[u] == inside[w]:
            continue
        v, out = (u, w) if inside[u] else (w, u)
        for side, ghost, beyond, on_side in (
            (a0, source, a[out] < a0 - eps, on_source),
            (a1, target, a[out] > a1 + eps, on_target),
        ):
            if not beyond or on_side[v]:
                continue
            t = (side - a[v]) / (a[out] - a[v])
            hit = b[v] + t * (b[out] - b[v])
            if b0 - eps <= hit <= b1 + eps:
                entries.append((int(v), ghost, e))

    arr = np.array(entries, dtype=np.int64).reshape(-1, 3)
    return CrossingGeometry(n + 2, arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(), source, target)


def crossing_holds(geometry: CrossingGeometry, bits: np.ndarray) -> bool:
    return bool(_crosses(
        geometry.n_total, geometry.eu, geometry.ev, geometry.eid,
        bits, geometry.source, geometry.target, -1,
    ))


def has_crossing(bond_config: BondConfig, rect: Rect, orientation: Optional[str] = None) -> bool:
    """
    Open crossing of the closed rectangle

    Raises:
        ValidationError: Square or inverted rectangle
    """
    geometry = crossing_geometry(bond_config.patch, rect, orientation)
    return crossing_holds(geometry, bond_config.bits)


# === CROSSING DUALITY ===

def _duality_shape(patch: LatticePatch) -> int:
    if patch.family != config.SQUARE or patch.periodic:
        raise ValidationError(f"Crossing duality needs a planar square patch, got {patch.family}")
    xs = [a[0] for a in patch.vertices]
    ys = [a[1] for a in patch.vertices]
    n = max(ys)
    if min(xs) != 0 or min(ys) != 0 or max(xs) != n + 1 or patch.n_vertices != (n + 2) * (n + 1):
        raise ValidationError(
            f"Crossing duality needs the rectangle [0,n+1]x[0,n], got "
            f"[{min(xs)},{max(xs)}]x[{min(ys)},{max(ys)}]"
        )
    return n


@dataclass(frozen=True)
class _DualRectangle:
    n: int
    geometry: CrossingGeometry
    eu: np.ndarray
    ev: np.ndarray
    primal: np.ndarray      # primal edge crossed by each dual edge (−1: ghost link)
    n_total: int
    source: int
    target: int


def _dual_rectangle(patch: LatticePatch) -> _DualRectangle:
    """
    Dual points (i+½, j+½), i = 0..n, j = −1..n; a dual edge is open iff
    the primal edge it crosses is closed.
    """
    n = _duality_shape(patch)

    def did(i: int, j: int) -> int:
        return i * (n + 2) + (j + 1)

    n_dual = (n + 1) * (n + 2)
    source, target = n_dual, n_dual + 1
    index = patch.index
    eu, ev, primal = [], [], []
    edge_of = {(u, w): e for e, (u, w, _) in enumerate(patch.edges)}

    def primal_edge(a, b) -> int:
        u, w = sorted((index[a], index[b]))
        return edge_of[(u, w)]

    for i in range(1, n + 1):
        for j in range(0, n):
            eu.append(did(i - 1, j))
            ev.append(did(i, j))
            primal.append(primal_edge((i, j), (i, j + 1)))
    for i in range(0, n + 1):
        for j in range(0, n + 1):
            eu.append(did(i, j - 1))
            ev.append(did(i, j))
            primal.append(primal_edge((i, j), (i + 1, j)))
    for i in range(0, n + 1):
        eu.append(did(i, -1))
        ev.append(source)
        primal.append(-1)
        eu.append(did(i, n))
        ev.append(target)
        primal.append(-1)

    return _DualRectangle(
        n=n,
        geometry=crossing_geometry(patch, (0, 0, n + 1, n), HORIZONTAL),
        eu=np.array(eu, dtype=np.int64),
        ev=np.array(ev, dtype=np.int64),
        primal=np.array(primal, dtype=np.int64),
        n_total=n_dual + 2,
        source=source,
        target=target,
    )


def _dual_crossing(dual: _DualRectangle, bits: np.ndarray) -> bool:
    # відкрите дуальне ребро = закрите первинне
    return bool(_crosses(dual.n_total, dual.eu, dual.ev, dual.primal, ~bits, dual.source, dual.target, -1))


def crossing_pair(bond_config: BondConfig) -> Tuple[bool, bool]:
    """(horizontal primal crossing, vertical dual crossing) of [0,n+1]×[0,n]"""
    dual = _dual_rectangle(bond_config.patch)
    return crossing_holds(dual.geometry, bond_config.bits), _dual_crossing(dual, bond_config.bits)


def check_crossing_duality(bond_config: BondConfig) -> bool:
    """
    Exactly one of the primal horizontal and dual vertical crossings occurs

    Raises:
        ValidationError: Patch is not the square rectangle [0,n+1]×[0,n]
    """
    primal, dual = crossing_pair(bond_config)
    return primal != dual


# === CROSSING ESTIMATES ===

def estimate_crossing_prob(
    patch: LatticePatch,
    class_probs: Sequence[Number],
    rect: Rect,
    samples: int,
    seed: int = config.DEFAULT_SEED,
    orientation: Optional[str] = None,
    workers: int = config.DEFAULT_WORKERS,
    check_duality: bool = False,
    token: Optional[CancellationToken] = None,
) -> ExperimentReport:
    """
    Monte Carlo crossing probability; sample s uses stream s

    Raises:
        InvariantError: Primal/dual exclusive-or failed (check_duality only)
    """
    validate_positive("samples", samples)
    edge_probs = _edge_probabilities(patch, class_probs)
    orientation = _resolve_orientation(validate_rectangle(rect), orientation)
    geometry = crossing_geometry(patch, rect, orientation)
    dual = _dual_rectangle(patch) if check_duality else None

    logger.info(
        f"Crossing estimate on {patch.family}: rect={tuple(rect)}, {orientation}, "
        f"probs={[str(p) for p in class_probs]}, samples={samples}, seed={seed}"
    )

    def run_block(block: int, start: int, count: int) -> int:
        hits = 0
        for stream in range(start, start + count):
            bits = _sample_bits(edge_probs, seed, stream)
            crossed = crossing_holds(geometry, bits)
            if dual is not None and crossed == _dual_crossing(dual, bits):
                raise InvariantError(f"Primal/dual crossing exclusive-or failed at sample {stream}")
            hits += crossed
        return hits

    try:
        hits = sum(run_blocks(run_block, samples, workers=workers, token=token))
    except InterruptedError:
        raise
    except InvariantError as e:
        logger.error(f"Crossing estimate failed: {e}")
        raise

    p_hat, se = binomial_estimate(hits, samples)
    return ExperimentReport(
        experiment='perc.crossing',
        params={
            'family': patch.family, 'class_probs': list(class_probs), 'rect': list(rect),
            'orientation': orientation, 'duality_checked': check_duality,
        },
        estimate=p_hat, se=se, samples=samples, seed=seed,
        values={'crossings': hits},
    )


def box_crossing_scale(family: str, aspect: int = 2, max_n: int = 32) -> int:
    """
    Smallest n for which the fully open lattice crosses the n·aspect × n
    rectangle anchored at the patch origin

    Raises:
        ValidationError: No crossing up to max_n
    """
    family = validate_family(family)
    validate_positive("aspect", aspect, minimum=2)
    for n in range(1, max_n + 1):
        size = 2 * (aspect + 1) * n + 2
        patch = build_lattice_patch(family, size, size, verify=False)
        origin, _ = origin_vertex(patch)
        ox, oy = patch.float_embedding[origin]
        rect = (ox, oy, ox + aspect * n, oy + n)
        geometry = crossing_geometry(patch, rect, HORIZONTAL)
        if crossing_holds(geometry, np.ones(patch.n_edges, dtype=np.bool_)):
            logger.debug(f"Box-crossing scale of {family}: n0={n}")
            return n
    raise ValidationError(f"No open crossing of {family} rectangles up to n={max_n}")


# === CRITICAL SURFACES ===

def critical_surface(family: str, probs: Sequence[Number]) -> Number:
    """
    κ_□ = p0+p1−1, κ_Δ = p0+p1+p2−p0p1p2−1, κ_⬡(p) = −κ_Δ(1−p)

    Exact for Fraction / int input.

    Raises:
        ValidationError: Wrong arity for the family
    """
    family = validate_family(family)
    probs = tuple(probs)
    arity = {config.SQUARE: 2, config.TRIANGULAR: 3, config.HEXAGONAL: 3}.get(family)
    if arity is None:
        raise ValidationError(f"No critical surface for family {family}")
    if len(probs) != arity:
        raise ValidationError(f"{family} critical surface needs {arity} probabilities, got {len(probs)}")
    for p in probs:
        validate_probability(p)

    if family == config.SQUARE:
        return probs[0] + probs[1] - 1
    if family == config.TRIANGULAR:
        p0, p1, p2 = probs
        return p0 + p1 + p2 - p0 * p1 * p2 - 1
    q0, q1, q2 = (1 - p for p in probs)
    return -(q0 + q1 + q2 - q0 * q1 * q2 - 1)


def triangular_critical_probability() -> float:
    """Root of 3p − p³ − 1 = 0 in (0, 1)"""
    return float(bisect(lambda p: 3 * p - p ** 3 - 1, 0.0, 1.0, xtol=config.BISECTION_TOLERANCE))


# === RUSSO ===

def count_pivotal(bond_config: BondConfig, event: Callable[[np.ndarray], bool]) -> int:
    """Edges e with ω^e ∈ A and ω_e ∉ A, for any event on bit vectors"""
    bits = bond_config.bits.copy()
    count = 0
    for e in range(bits.shape[0]):
        original = bits[e]
        bits[e] = True
        with_open = event(bits)
        bits[e] = False
        with_closed = event(bits)
        bits[e] = original
        count += bool(with_open) and not with_closed
    return count


def russo_pivotal_count(bond_config: BondConfig, rect: Rect, orientation: Optional[str] = None) -> int:
    """Pivotal edges for the crossing of rect"""
    geometry = crossing_geometry(bond_config.patch, rect, orientation)
    return int(_crossing_pivotals(
        geometry.n_total, geometry.eu, geometry.ev, geometry.eid,
        bond_config.bits, geometry.source, geometry.target,
    ))


def estimate_russo_derivative(
    patch: LatticePatch,
    p: Number,
    rect: Rect,
    samples: int,
    seed: int = config.DEFAULT_SEED,
    orientation: Optional[str] = None,
    workers: int = config.DEFAULT_WORKERS,
) -> ExperimentReport:
    """d/dp P_p(crossing) as the mean number of pivotal edges"""
    validate_positive("samples", samples)
    edge_probs = _edge_probabilities(patch, homogeneous(patch, p))
    geometry = crossing_geometry(patch, rect, orientation)

    def run_block(block: int, start: int, count: int) -> List[int]:
        out = []
        for stream in range(start, start + count):
            bits = _sample_bits(edge_probs, seed, stream)
            out.append(int(_crossing_pivotals(
                geometry.n_total, geometry.eu, geometry.ev, geometry.eid,
                bits, geometry.source, geometry.target,
            )))
        return out

    counts = [c for block in run_blocks(run_block, samples, workers=workers) for c in block]
    mean, se = mean_and_se(counts)
    logger.info(f"Russo derivative at p={p}: {mean:.5f} ± {se:.5f}")
    return ExperimentReport(
        experiment='perc.russo',
        params={'family': patch.family, 'p': p, 'rect': list(rect), 'method': 'pivotal'},
        estimate=mean, se=se, samples=samples, seed=seed,
    )


def estimate_russo_finite_difference(
    patch: LatticePatch,
    p: Number,
    rect: Rect,
    samples: int,
    delta: float = 0.01,
    seed: int = config.DEFAULT_SEED,
    orientation: Optional[str] = None,
    workers: int = config.DEFAULT_WORKERS,
) -> ExperimentReport:
    """
    [P_{p+δ} − P_{p−δ}]/(2δ) with both probabilities read off the same
    uniforms (monotone coupling)
    """
    validate_positive("samples", samples)
    lo, hi = float(p) - delta, float(p) + delta
    validate_probability(lo)
    validate_probability(hi)
    geometry = crossing_geometry(patch, rect, orientation)
    n_edges = patch.n_edges

    def run_block(block: int, start: int, count: int) -> List[int]:
        out = []
        for stream in range(start, start + count):
            u = block_rng(seed, stream).random(n_edges)
            out.append(int(crossing_holds(geometry, u < hi)) - int(crossing_holds(geometry, u < lo)))
        return out

    diffs = [d for block in run_blocks(run_block, samples, workers=workers) for d in block]
    mean, se = mean_and_se(diffs)
    return ExperimentReport(
        experiment='perc.russo',
        params={'family': patch.family, 'p': p, 'rect': list(rect), 'method': 'finite-difference', 'delta': delta},
        estimate=mean / (2 * delta), se=se / (2 * delta), samples=samples, seed=seed,
    )


# === ARM EVENTS ===

def arm_class(colours: Sequence[int]) -> str:
    """monochromatic, alternating (even length, colours alternate cyclically) or bichromatic"""
    colours = tuple(colours)
    if len(set(colours)) == 1:
        return 'monochromatic'
    k = len(colours)
    if k % 2 == 0 and all(colours[i] != colours[(i + 1) % k] for i in range(k)):
        return 'alternating'
    return 'bichromatic'


def _cyclic_subsequence(pattern: Sequence[int], sequence: Sequence[int]) -> bool:
    m = len(sequence)
    for start in range(m):
        j = 0
        for i in range(m):
            if j < len(pattern) and sequence[(start + i) % m] == pattern[j]:
                j += 1
        if j == len(pattern):
            return True
    return False


def _annulus_graphs(bond_config: BondConfig, arms: ArmSpec, centre: int) -> Dict[int, Tuple[nx.Graph, list, list]]:
    """Primal (colour 1) and dual (colour 0) open graphs restricted to the annulus"""
    patch = bond_config.patch
    cx, cy = patch.vertices[centre]
    index = patch.index
    N, n = arms.inner, arms.outer
    bits = bond_config.bits

    primal = nx.Graph()
    for e, (u, w, _) in enumerate(patch.edges):
        du = max(abs(patch.vertices[u][0] - cx), abs(patch.vertices[u][1] - cy))
        dw = max(abs(patch.vertices[w][0] - cx), abs(patch.vertices[w][1] - cy))
        if N <= du <= n and N <= dw <= n:
            primal.add_node(u)
            primal.add_node(w)
            if bits[e]:
                primal.add_edge(u, w)
    p_inner = [v for v in primal if max(abs(patch.vertices[v][0] - cx), abs(patch.vertices[v][1] - cy)) == N]
    p_outer = [v for v in primal if max(abs(patch.vertices[v][0] - cx), abs(patch.vertices[v][1] - cy)) == n]

    edge_of = {(u, w): e for e, (u, w, _) in enumerate(patch.edges)}

    def closed(a, b) -> bool:
        u, w = sorted((index[a], index[b]))
        return not bits[edge_of[(u, w)]]

    # дуальна точка (i, j) ≡ (cx + i + ½, cy + j + ½)
    def dual_radius(i: int, j: int) -> float:
        return max(abs(i + 0.5), abs(j + 0.5))

    dual = nx.Graph()
    points = [(i, j) for i in range(-n, n) for j in range(-n, n) if N <= dual_radius(i, j) <= n]
    pset = set(points)
    for i, j in points:
        dual.add_node((i, j))
        if (i + 1, j) in pset and closed((cx + i + 1, cy + j), (cx + i + 1, cy + j + 1)):
            dual.add_edge((i, j), (i + 1, j))
        if (i, j + 1) in pset and closed((cx + i, cy + j + 1), (cx + i + 1, cy + j + 1)):
            dual.add_edge((i, j), (i, j + 1))
    d_inner = [d for d in points if dual_radius(*d) == N + 0.5]
    d_outer = [d for d in points if dual_radius(*d) == n - 0.5]
    return {1: (primal, p_inner, p_outer), 0: (dual, d_inner, d_outer)}


def _disjoint_arms(graph: nx.Graph, inner: list, outer: list) -> List[list]:
    g = graph.copy()
    s, t = ('source',), ('sink',)
    g.add_edges_from((s, v) for v in inner)
    g.add_edges_from((v, t) for v in outer)
    try:
        return [path[1:-1] for path in nx.node_disjoint_paths(g, s, t)]
    except nx.NetworkXNoPath:
        return []


def arm_event_occurs(bond_config: BondConfig, arms: ArmSpec, centre: Optional[int] = None) -> bool:
    """
    k disjoint arms of the given colours crossing the annulus in
    anticlockwise order.

    Arms of one colour come from a maximum set of vertex-disjoint paths;
    mixed sequences are then matched cyclically against the arms sorted by
    the angle of their inner endpoint, so a mixed event can be missed but
    never invented.

    Raises:
        ValidationError: Non-square patch or annulus outside the patch
    """
    patch = bond_config.patch
    if patch.family != config.SQUARE or patch.periodic:
        raise ValidationError(f"Arm events need a planar square patch, got {patch.family}")
    if centre is None:
        centre, _ = origin_vertex(patch)
    cx, cy = patch.vertices[centre]
    n = arms.outer
    if any((cx + dx, cy + dy) not in patch.index for dx in (-n, n) for dy in (-n, n)):
        raise ValidationError(f"Box of radius {n} around {(cx, cy)} leaves the patch")

    graphs = _annulus_graphs(bond_config, arms, centre)
    found: List[Tuple[float, float, int]] = []
    for colour in sorted(set(arms.colours)):
        graph, inner, outer = graphs[colour]
        paths = _disjoint_arms(graph, inner, outer)
        if len(paths) < arms.colours.count(colour):
            return False
        for path in paths:
            first = path[0]
            second = path[1] if len(path) > 1 else path[0]
            if colour == 1:
                p1 = (patch.vertices[first][0] - cx, patch.vertices[first][1] - cy)
                p2 = (patch.vertices[second][0] - cx, patch.vertices[second][1] - cy)
            else:
                p1 = (first[0] + 0.5, first[1] + 0.5)
                p2 = (second[0] + 0.5, second[1] + 0.5)
            found.append((math.atan2(p1[1], p1[0]), math.atan2(p2[1], p2[0]), colour))

    if len(set(arms.colours)) == 1:
        return True
    found.sort()
    return _cyclic_subsequence(arms.colours, [c for _, _, c in found])


def estimate_arm_prob(
    arms: ArmSpec,
    p: Number,
    samples: int,
    seed: int = config.DEFAULT_SEED,
    workers: int = config.DEFAULT_WORKERS,
) -> ExperimentReport:
    """Arm event frequency on the square box of radius n"""
    validate_positive("samples", samples)
    n = arms.outer
    patch = build_lattice_patch(config.SQUARE, 2 * n, 2 * n)
    centre = patch.index[(n, n)]
    edge_probs = _edge_probabilities(patch, homogeneous(patch, p))

    def run_block(block: int, start: int, count: int) -> int:
        hits = 0
        for stream in range(start, start + count):
            cfg = BondConfig(patch, _sample_bits(edge_probs, seed, stream), seed, stream)
            hits += arm_event_occurs(cfg, arms, centre)
        return hits

    hits = sum(run_blocks(run_block, samples, workers=workers))
    p_hat, se = binomial_estimate(hits, samples)
    logger.info(f"Arm event {arms.colours} N={arms.inner} n={n} at p={p}: {p_hat:.5f} ± {se:.5f}")
    return ExperimentReport(
        experiment='perc.arms',
        params={
            'colours': list(arms.colours), 'inner': arms.inner, 'outer': n,
            'p': p, 'class': arm_class(arms.colours),
        },
        estimate=p_hat, se=se, samples=samples, seed=seed,
    )


# === CLUSTER RADIUS ===

def radius_distribution(
    patch: LatticePatch,
    class_probs: Sequence[Number],
    samples: int,
    seed: int = config.DEFAULT_SEED,
    workers: int = config.DEFAULT_WORKERS,
) -> ExperimentReport:
    """
    Sup-norm radius of the origin's cluster.

    Clusters touching the patch boundary are censored: their radius is a
    lower bound. The log-log slope of P(rad ≥ r) is a crude exponent estimate.
    """
    validate_positive("samples", samples)
    edge_probs = _edge_probabilities(patch, class_probs)
    origin, _ = origin_vertex(patch)
    pos = patch.float_embedding
    offsets = np.abs(pos - pos[origin]).max(axis=1)
    on_boundary = np.zeros(patch.n_vertices, dtype=np.bool_)
    on_boundary[boundary_vertices(patch)] = True
    u, v = patch.edge_endpoints

    def run_block(block: int, start: int, count: int) -> List[Tuple[float, bool]]:
        out = []
        for stream in range(start, start + count):
            bits = _sample_bits(edge_probs, seed, stream)
            labels, _ = label_components(patch.n_vertices, u, v, bits)
            members = labels == labels[origin]
            out.append((round(float(offsets[members].max()), 9), bool(on_boundary[members].any())))
        return out

    results = [r for block in run_blocks(run_block, samples, workers=workers) for r in block]
    radii = np.array([r for r, _ in results])
    censored = sum(c for _, c in results)
    if censored:
        logger.warning(f"Radius distribution: {censored}/{samples} clusters reached the patch boundary")

    values, counts = np.unique(radii, return_counts=True)
    histogram = {float(r): int(c) for r, c in zip(values, counts)}
    levels = list(range(1, int(math.floor(radii.max())) + 1)) if radii.max() >= 1 else []
    survival = [(r, float((radii >= r - config.COORDINATE_EPSILON).mean())) for r in levels]

    slope = None
    positive = [(r, s) for r, s in survival if s > 0]
    if len(positive) >= 2:
        slope = float(np.polyfit(np.log([r for r, _ in positive]), np.log([s for _, s in positive]), 1)[0])

    mean, se = mean_and_se(radii)
    return ExperimentReport(
        experiment='perc.radius',
        params={'family': patch.family, 'class_probs': list(class_probs)},
        estimate=mean, se=se, samples=samples, seed=seed,
        values={
            'histogram': histogram,
            'survival': survival,
            'censored': censored,
            'loglog_slope': slope,
        },
    )
