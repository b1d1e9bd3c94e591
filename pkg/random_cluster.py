"""
Latticeworks v1.0 - Random-Cluster Module
==========================================
The random-cluster measure on finite patches: exact enumeration with
boundary conditions, planar duality, the self-dual point, stochastic
ordering checks, heat-bath sampling and the torus crossing / annulus
experiments.

Зміни v1.0:
- Граничні умови як «привидні» вершини: кожен неодиничний блок розбиття
  з'єднаний з власною завжди відкритою вершиною
- Точні ваги через гістограму (кількість відкритих ребер, кількість кластерів)
- Heat-bath ланцюг у numba з двобічним BFS замість union-find на кожен крок
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from numba import njit

import config
from lattice_core import (
    LatticePatch, TorusPatch, boundary_vertices, build_lattice_patch,
    build_torus, check_planar_embedding, dual_patch,
)
from logger import get_logger
from percolation import HORIZONTAL, VERTICAL, CrossingGeometry, crossing_holds
from replica_engine import (
    CancellationToken, batch_means_se, block_rng, run_blocks,
)
from reports import ExperimentReport
from union_find import (
    ConnectivityOracle, _connected_off_edge, _uf_find, _uf_union,
    count_components, label_components,
)
from validators import (
    BudgetExceededError, InvariantError, Number, ValidationError,
    validate_cluster_weight, validate_positive, validate_probability,
)

logger = get_logger(__name__)

FREE = 'free'
WIRED = 'wired'
PERIODIC = 'periodic'
PARTITION = 'partition'
BOUNDARY_KINDS = (FREE, WIRED, PERIODIC, PARTITION)

MASK_BLOCK = 2 ** 16


# === DATA TYPES ===

def _is_rational(x: Number) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


@dataclass(frozen=True)
class RcParams:
    """Edge parameter p ∈ [0,1] and cluster weight q ≥ 1"""
    p: Number
    q: Number

    def __post_init__(self):
        validate_probability(self.p)
        validate_cluster_weight(self.q)

    @property
    def exact(self) -> bool:
        return _is_rational(self.p) and _is_rational(self.q)

    @property
    def open_if_connected(self) -> Number:
        return self.p

    @property
    def open_if_separated(self) -> Number:
        """p / (p + q(1−p)); q^{Δk} penalises joining two clusters"""
        return self.p / (self.p + self.q * (1 - self.p))

    def weight(self, n_open: int, n_closed: int, k: int) -> Number:
        if self.exact:
            p, q = Fraction(self.p), Fraction(self.q)
        else:
            p, q = float(self.p), float(self.q)
        return p ** n_open * (1 - p) ** n_closed * q ** k


@dataclass(frozen=True)
class BoundaryCondition:
    """
    Identification of patch vertices.

    free: none; wired: all declared boundary vertices form one block;
    partition: the given blocks; periodic: none beyond the torus edges
    of the patch itself. Blocks are sorted tuples, singletons dropped.
    """
    kind: str = FREE
    blocks: Tuple[Tuple[int, ...], ...] = ()

    def __post_init__(self):
        if self.kind not in BOUNDARY_KINDS:
            raise ValidationError(
                f"Unknown boundary condition: {self.kind} (allowed: {', '.join(BOUNDARY_KINDS)})"
            )
        seen = set()
        for block in self.blocks:
            for v in block:
                if v in seen:
                    raise ValidationError(f"Vertex {v} appears in two boundary blocks")
                seen.add(v)
        if self.kind in (FREE, PERIODIC) and self.blocks:
            raise ValidationError(f"{self.kind} boundary condition takes no blocks")

    @classmethod
    def free(cls) -> "BoundaryCondition":
        return cls(FREE)

    @classmethod
    def wired(cls, boundary: Sequence[int]) -> "BoundaryCondition":
        block = tuple(sorted(set(int(v) for v in boundary)))
        return cls(WIRED, (block,) if len(block) > 1 else ())

    @classmethod
    def periodic(cls) -> "BoundaryCondition":
        return cls(PERIODIC)

    @classmethod
    def partition(cls, blocks: Sequence[Sequence[int]]) -> "BoundaryCondition":
        cleaned = [tuple(sorted(set(int(v) for v in b))) for b in blocks]
        cleaned = sorted(b for b in cleaned if len(b) > 1)
        return cls(PARTITION, tuple(cleaned))

    @cached_property
    def block_of(self) -> Dict[int, int]:
        return {v: i for i, block in enumerate(self.blocks) for v in block}

    def identified(self, u: int, v: int) -> bool:
        if u == v:
            return True
        bu = self.block_of.get(u)
        return bu is not None and bu == self.block_of.get(v)

    def is_refinement_of(self, other: "BoundaryCondition") -> bool:
        """
        ξ ≤ ξ′: every pair identified here is identified in `other`

        Raises:
            ValidationError: Periodic compared with a non-periodic condition
        """
        if (self.kind == PERIODIC) != (other.kind == PERIODIC):
            raise ValidationError("Periodic boundary conditions only compare with each other")
        return all(
            all(other.identified(block[0], v) for v in block[1:])
            for block in self.blocks
        )

    def check_patch(self, patch: LatticePatch) -> None:
        """
        Raises:
            ValidationError: Vertex out of range, periodic bc on a planar patch
        """
        if self.kind == PERIODIC and not patch.periodic:
            raise ValidationError("Periodic boundary condition needs a periodic patch")
        for block in self.blocks:
            for v in block:
                if not 0 <= v < patch.n_vertices:
                    raise ValidationError(f"Boundary vertex {v} is not in the patch")

    def to_dict(self) -> Dict[str, object]:
        return {'kind': self.kind, 'blocks': [list(b) for b in self.blocks]}


def boundary_condition(patch: LatticePatch, kind: str, blocks: Optional[Sequence[Sequence[int]]] = None) -> BoundaryCondition:
    """Resolve a boundary-condition name against a patch; wired uses its boundary vertices"""
    if kind == FREE:
        return BoundaryCondition.free()
    if kind == WIRED:
        return BoundaryCondition.wired(boundary_vertices(patch))
    if kind == PERIODIC:
        return BoundaryCondition.periodic()
    if kind == PARTITION:
        if blocks is None:
            raise ValidationError("Partition boundary condition needs blocks")
        return BoundaryCondition.partition(blocks)
    raise ValidationError(f"Unknown boundary condition: {kind} (allowed: {', '.join(BOUNDARY_KINDS)})")


@dataclass(frozen=True)
class ClusterGraph:
    """
    Patch edges followed by always-open links to one ghost per block.

    Edge ids below n_edges are patch edges; the rest are ghost links.
    """
    n_total: int
    n_edges: int
    eu: np.ndarray
    ev: np.ndarray
    indptr: np.ndarray
    nbrs: np.ndarray
    eids: np.ndarray

    @property
    def n_links(self) -> int:
        return self.eu.shape[0] - self.n_edges

    def extend(self, bits: np.ndarray) -> np.ndarray:
        return np.concatenate([np.asarray(bits, dtype=np.bool_), np.ones(self.n_links, dtype=np.bool_)])


def cluster_graph(patch: LatticePatch, bc: BoundaryCondition) -> ClusterGraph:
    bc.check_patch(patch)
    u, v = patch.edge_endpoints
    n = patch.n_vertices
    extra_u, extra_v = [], []
    for g, block in enumerate(bc.blocks):
        for w in block:
            extra_u.append(w)
            extra_v.append(n + g)
    eu = np.concatenate([u, np.array(extra_u, dtype=np.int64)])
    ev = np.concatenate([v, np.array(extra_v, dtype=np.int64)])
    n_total = n + len(bc.blocks)

    order = np.argsort(np.concatenate([eu, ev]), kind='stable')
    heads = np.concatenate([eu, ev])[order]
    nbrs = np.concatenate([ev, eu])[order]
    eids = np.concatenate([np.arange(eu.shape[0]), np.arange(eu.shape[0])])[order]
    indptr = np.zeros(n_total + 1, dtype=np.int64)
    np.add.at(indptr, heads + 1, 1)
    indptr = np.cumsum(indptr)
    return ClusterGraph(n_total, patch.n_edges, eu, ev, indptr, nbrs.astype(np.int64), eids.astype(np.int64))


@dataclass(frozen=True)
class RcConfig:
    """Open/closed edge bits of a patch under a boundary condition"""
    patch: LatticePatch
    bits: np.ndarray
    bc: BoundaryCondition = field(default_factory=BoundaryCondition.free)

    def __post_init__(self):
        if self.bits.shape != (self.patch.n_edges,):
            raise ValidationError(
                f"Configuration has {self.bits.shape[0]} bits for {self.patch.n_edges} edges"
            )

    @cached_property
    def graph(self) -> ClusterGraph:
        return cluster_graph(self.patch, self.bc)

    @cached_property
    def k(self) -> int:
        """Cluster count with the boundary identifications applied"""
        g = self.graph
        return count_components(g.n_total, g.eu, g.ev, g.extend(self.bits))

    @property
    def n_open(self) -> int:
        return int(np.count_nonzero(self.bits))

    def with_bits(self, bits: np.ndarray) -> "RcConfig":
        return RcConfig(self.patch, np.asarray(bits, dtype=np.bool_), self.bc)

    @property
    def mask(self) -> int:
        return int(sum(1 << e for e in np.nonzero(self.bits)[0]))


def config_from_mask(patch: LatticePatch, mask: int, bc: Optional[BoundaryCondition] = None) -> RcConfig:
    bits = np.array([(mask >> e) & 1 for e in range(patch.n_edges)], dtype=np.bool_)
    return RcConfig(patch, bits, bc or BoundaryCondition.free())


def cluster_count(rc_config: RcConfig) -> int:
    return rc_config.k


def rc_weight(rc_config: RcConfig, params: RcParams) -> Number:
    """p^{|ω|}(1−p)^{|E∖ω|} q^{k(ω)}; exact for rational p, q"""
    n_open = rc_config.n_open
    return params.weight(n_open, rc_config.patch.n_edges - n_open, rc_config.k)


# === EXACT ENUMERATION ===

@njit(nogil=True, cache=True)
def _mask_clusters(n_total, eu, ev, n_edges, start, count, out_k):
    """Cluster count of masks start..start+count−1; links past n_edges always open"""
    parent = np.empty(n_total, dtype=np.int64)
    rank = np.empty(n_total, dtype=np.int64)
    size = np.empty(n_total, dtype=np.int64)
    for i in range(count):
        m = start + i
        for v in range(n_total):
            parent[v] = v
            rank[v] = 0
            size[v] = 1
        comps = n_total
        for j in range(eu.shape[0]):
            if j < n_edges and not (m >> j) & 1:
                continue
            if _uf_find(parent, eu[j]) != _uf_find(parent, ev[j]):
                _uf_union(parent, rank, size, eu[j], ev[j])
                comps -= 1
        out_k[i] = comps


@dataclass
class ExactDistribution:
    """
    Full random-cluster law of a patch.

    Configuration m (bit e = edge e open) has weight table[n_open[m]][k[m]];
    probabilities are exact Fractions when p and q are rational.
    """
    patch: LatticePatch
    params: RcParams
    bc: BoundaryCondition
    n_open: np.ndarray
    clusters: np.ndarray
    table: Dict[Tuple[int, int], Number]
    partition_function: Number

    @property
    def n_edges(self) -> int:
        return self.patch.n_edges

    @property
    def n_configs(self) -> int:
        return 1 << self.n_edges

    @property
    def exact(self) -> bool:
        return self.params.exact

    @cached_property
    def masks(self) -> np.ndarray:
        return np.arange(self.n_configs, dtype=np.int64)

    def weight(self, mask: int) -> Number:
        return self.table[(int(self.n_open[mask]), int(self.clusters[mask]))]

    def probability(self, mask: int) -> Number:
        return self.weight(mask) / self.partition_function

    def event_probability(self, indicator: np.ndarray) -> Number:
        """Probability of the configurations where indicator is True"""
        indicator = np.asarray(indicator, dtype=np.bool_)
        if indicator.shape != (self.n_configs,):
            raise ValidationError(f"Event indicator needs {self.n_configs} entries")
        width = int(self.clusters.max()) + 1
        keys = self.n_open[indicator].astype(np.int64) * width + self.clusters[indicator]
        ids, counts = np.unique(keys, return_counts=True)
        total: Number = 0
        for key, count in zip(ids, counts):
            total += int(count) * self.table[(int(key) // width, int(key) % width)]
        return total / self.partition_function

    def edge_marginal(self, edge: int) -> Number:
        if not 0 <= edge < self.n_edges:
            raise ValidationError(f"Edge {edge} is not in the patch")
        return self.event_probability(((self.masks >> edge) & 1).astype(np.bool_))

    def edge_marginals(self) -> List[Number]:
        return [self.edge_marginal(e) for e in range(self.n_edges)]

    @cached_property
    def probabilities(self) -> np.ndarray:
        """Float probability of every configuration, indexed by mask"""
        width = int(self.clusters.max()) + 1
        lookup = np.zeros((self.n_edges + 1, width), dtype=np.float64)
        for (o, k), w in self.table.items():
            lookup[o, k] = float(Fraction(w) / Fraction(self.partition_function)) if self.exact \
                else float(w) / float(self.partition_function)
        return lookup[self.n_open, self.clusters]

    def total_probability(self) -> Number:
        return self.event_probability(np.ones(self.n_configs, dtype=np.bool_))


def exact_distribution(
    patch: LatticePatch,
    params: RcParams,
    bc: Optional[BoundaryCondition] = None,
    workers: int = config.DEFAULT_WORKERS,
    max_edges: int = config.MAX_EXACT_EDGES,
) -> ExactDistribution:
    """
    Enumerate all 2^E configurations

    Raises:
        BudgetExceededError: More than max_edges edges
    """
    bc = bc or BoundaryCondition.free()
    if patch.n_edges > max_edges:
        raise BudgetExceededError(
            f"Exact enumeration needs at most {max_edges} edges, patch has {patch.n_edges}"
        )
    graph = cluster_graph(patch, bc)
    n_configs = 1 << patch.n_edges
    clusters = np.empty(n_configs, dtype=np.int16)

    def run_block(block: int, start: int, count: int) -> None:
        _mask_clusters(graph.n_total, graph.eu, graph.ev, graph.n_edges, start, count, clusters[start:start + count])

    run_blocks(run_block, n_configs, block_size=MASK_BLOCK, workers=workers)

    masks = np.arange(n_configs, dtype=np.int64)
    n_open = np.zeros(n_configs, dtype=np.int16)
    for e in range(patch.n_edges):
        n_open += ((masks >> e) & 1).astype(np.int16)

    width = int(clusters.max()) + 1
    keys, counts = np.unique(n_open.astype(np.int64) * width + clusters, return_counts=True)
    table: Dict[Tuple[int, int], Number] = {}
    z: Number = 0
    for key, count in zip(keys, counts):
        o, k = int(key) // width, int(key) % width
        table[(o, k)] = params.weight(o, patch.n_edges - o, k)
        z += int(count) * table[(o, k)]

    logger.debug(
        f"Exact random-cluster law: {patch.n_edges} edges, bc={bc.kind}, "
        f"p={params.p}, q={params.q}, {len(table)} weight classes"
    )
    return ExactDistribution(patch, params, bc, n_open, clusters, table, z)


# === DUALITY ===

def self_dual_point(q: Number) -> Number:
    """√q/(1+√q); a Fraction when q is a rational square"""
    validate_cluster_weight(q)
    if _is_rational(q):
        fq = Fraction(q)
        rn, rd = math.isqrt(fq.numerator), math.isqrt(fq.denominator)
        if rn * rn == fq.numerator and rd * rd == fq.denominator:
            root = Fraction(rn, rd)
            return root / (1 + root)
    root = math.sqrt(float(q))
    return root / (1 + root)


def dual_parameter(p: Number, q: Number) -> Number:
    """
    p★ with p/(1−p) · p★/(1−p★) = q

    Raises:
        ValidationError: p ∉ (0,1) or q < 1
    """
    validate_probability(p, open_interval=True)
    validate_cluster_weight(q)
    if _is_rational(p) and _is_rational(q):
        p, q = Fraction(p), Fraction(q)
    return q * (1 - p) / (p + q * (1 - p))


def _dual_masks(n_edges: int, edge_map: Sequence[int]) -> np.ndarray:
    """Dual configuration index of each primal mask: dual edge open iff primal closed"""
    masks = np.arange(1 << n_edges, dtype=np.int64)
    out = np.zeros_like(masks)
    for e, d in enumerate(edge_map):
        out |= (((masks >> e) & 1) ^ 1) << d
    return out


def verify_duality_exact(
    patch: LatticePatch,
    p: Number,
    q: Number,
    workers: int = config.DEFAULT_WORKERS,
) -> float:
    """
    Total variation between the law of ω★ under the free measure on the
    patch and the measure with p★ on the full dual (outer vertex kept,
    which plays the wired boundary).

    Raises:
        ValidationError: Periodic or non-planar patch, p ∉ (0,1)
        BudgetExceededError: Too many edges
    """
    if patch.periodic:
        raise ValidationError("Duality check needs a planar patch")
    if patch.rotation is None and not check_planar_embedding(patch):
        raise ValidationError(f"{patch.family} patch has no planar embedding")
    p_star = dual_parameter(p, q)
    primal = exact_distribution(patch, RcParams(p, q), BoundaryCondition.free(), workers=workers)
    dual, dual_map = dual_patch(patch)
    if any(d < 0 for d in dual_map.edge_map):
        raise InvariantError("Full dual lost an edge")
    star = exact_distribution(dual, RcParams(p_star, q), BoundaryCondition.free(), workers=workers)

    pushed = np.zeros(star.n_configs, dtype=np.float64)
    np.add.at(pushed, _dual_masks(patch.n_edges, dual_map.edge_map), primal.probabilities)
    tv = 0.5 * float(np.abs(pushed - star.probabilities).sum())
    logger.info(f"Duality check on {patch.family} ({patch.n_edges} edges), p={p}, p*={p_star}, q={q}: TV={tv:.3e}")
    return tv


# === STOCHASTIC ORDERING ===

def _upset_sums(probs: np.ndarray, n_edges: int) -> np.ndarray:
    """φ({ω′ ≥ ω}) for every ω (superset-sum transform)"""
    f = probs.copy()
    for e in range(n_edges):
        view = f.reshape(-1, 2, 1 << e)
        view[:, 0, :] += view[:, 1, :]
    return f


def holley_ordering_check(
    patch: LatticePatch,
    params: RcParams,
    bc_low: BoundaryCondition,
    bc_high: BoundaryCondition,
    workers: int = config.DEFAULT_WORKERS,
) -> float:
    """
    Largest φ^{low}(U) − φ^{high}(U) over the upward closures U of single
    configurations; ≤ 0 when the measures are ordered

    Raises:
        ValidationError: bc_low is not a refinement of bc_high
        BudgetExceededError: More than MAX_HOLLEY_EDGES edges
    """
    if not bc_low.is_refinement_of(bc_high):
        raise ValidationError(f"Boundary conditions are not ordered: {bc_low.to_dict()} vs {bc_high.to_dict()}")
    low = exact_distribution(patch, params, bc_low, workers=workers, max_edges=config.MAX_HOLLEY_EDGES)
    high = exact_distribution(patch, params, bc_high, workers=workers, max_edges=config.MAX_HOLLEY_EDGES)
    diff = _upset_sums(low.probabilities, patch.n_edges) - _upset_sums(high.probabilities, patch.n_edges)
    return float(diff.max())


# === HEAT BATH ===

def heat_bath_probability(rc_config: RcConfig, params: RcParams, edge: int) -> Number:
    """Conditional probability that `edge` is open given the other edges"""
    if not 0 <= edge < rc_config.patch.n_edges:
        raise ValidationError(f"Edge {edge} is not in the patch")
    g = rc_config.graph
    oracle = ConnectivityOracle(g.indptr, g.nbrs, g.eids)
    if oracle.connected_off_edge(g.extend(rc_config.bits), edge, int(g.eu[edge]), int(g.ev[edge])):
        return params.open_if_connected
    return params.open_if_separated


def heat_bath_step(rc_config: RcConfig, params: RcParams, edge: int, uniform: float) -> RcConfig:
    """Resample one edge from its conditional law: open iff uniform < P(open | rest)"""
    if not 0 <= uniform < 1:
        raise ValidationError(f"Uniform must lie in [0, 1), got {uniform}")
    bits = rc_config.bits.copy()
    bits[edge] = uniform < heat_bath_probability(rc_config, params, edge)
    return rc_config.with_bits(bits)


@njit(nogil=True, cache=True)
def _sweep_kernel(indptr, nbrs, eids, eu, ev, open_mask, order, uniforms, p_conn, p_disc,
                  mark_a, mark_b, queue_a, queue_b, stamp):
    for t in range(order.shape[0]):
        e = order[t]
        stamp += 1
        if _connected_off_edge(indptr, nbrs, eids, open_mask, e, eu[e], ev[e],
                               mark_a, mark_b, queue_a, queue_b, stamp):
            open_mask[e] = uniforms[t] < p_conn
        else:
            open_mask[e] = uniforms[t] < p_disc
    return stamp


class HeatBathChain:
    """
    Single-edge heat-bath dynamics on one patch.

    A sweep visits every edge once in edge-id order, or draws E edges
    uniformly at random when random_scan is set. The chain starts with
    every edge closed.
    """

    def __init__(self, patch: LatticePatch, params: RcParams, bc: BoundaryCondition,
                 rng: np.random.Generator, random_scan: bool = False):
        self.patch = patch
        self.params = params
        self.bc = bc
        self.graph = cluster_graph(patch, bc)
        self.rng = rng
        self.random_scan = random_scan
        self.open_mask = self.graph.extend(np.zeros(patch.n_edges, dtype=np.bool_))
        n = self.graph.n_total
        self._mark_a = np.zeros(n, dtype=np.int64)
        self._mark_b = np.zeros(n, dtype=np.int64)
        self._queue_a = np.empty(n, dtype=np.int64)
        self._queue_b = np.empty(n, dtype=np.int64)
        self._stamp = 0
        self._p_conn = float(params.open_if_connected)
        self._p_disc = float(params.open_if_separated)
        self._scan = np.arange(patch.n_edges, dtype=np.int64)
        self.sweeps_done = 0

    @property
    def bits(self) -> np.ndarray:
        return self.open_mask[:self.patch.n_edges]

    def sweep(self, n_sweeps: int = 1) -> None:
        n_edges = self.patch.n_edges
        if n_edges == 0 or n_sweeps <= 0:
            return
        total = n_edges * n_sweeps
        if self.random_scan:
            order = self.rng.integers(0, n_edges, size=total, dtype=np.int64)
        else:
            order = np.tile(self._scan, n_sweeps)
        uniforms = self.rng.random(total)
        g = self.graph
        self._stamp = _sweep_kernel(
            g.indptr, g.nbrs, g.eids, g.eu, g.ev, self.open_mask, order, uniforms,
            self._p_conn, self._p_disc,
            self._mark_a, self._mark_b, self._queue_a, self._queue_b, self._stamp,
        )
        self.sweeps_done += n_sweeps

    def config(self) -> RcConfig:
        return RcConfig(self.patch, self.bits.copy(), self.bc)


@dataclass
class RcChain:
    """Recorded states of a heat-bath run, one row per kept sweep"""
    patch: LatticePatch
    params: RcParams
    bc: BoundaryCondition
    samples: np.ndarray
    seed: int
    stream: int
    burn_in: int
    thinning: int
    random_scan: bool

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    def configs(self) -> Iterator[RcConfig]:
        for row in self.samples:
            yield RcConfig(self.patch, row.copy(), self.bc)

    def masks(self) -> np.ndarray:
        weights = np.left_shift(np.int64(1), np.arange(self.patch.n_edges, dtype=np.int64))
        return self.samples.astype(np.int64) @ weights

    def frequencies(self) -> Dict[int, float]:
        ids, counts = np.unique(self.masks(), return_counts=True)
        return {int(m): c / self.n_samples for m, c in zip(ids, counts)}

    def edge_marginals(self) -> List[Tuple[float, float]]:
        """(mean, batch-means SE) per edge"""
        return [batch_means_se(self.samples[:, e]) for e in range(self.patch.n_edges)]


def run_chain(
    patch: LatticePatch,
    params: RcParams,
    bc: BoundaryCondition,
    sweeps: int,
    observable: Callable[[np.ndarray], float],
    burn_in: int = config.DEFAULT_BURN_IN,
    seed: int = config.DEFAULT_SEED,
    thinning: int = config.DEFAULT_THINNING,
    random_scan: bool = False,
    stream: int = 0,
    token: Optional[CancellationToken] = None,
) -> np.ndarray:
    """
    Run a chain and evaluate observable(bits) after every `thinning` sweeps

    Raises:
        InterruptedError: якщо прогін скасовано через token
    """
    validate_positive("sweeps", sweeps)
    validate_positive("thinning", thinning)
    validate_positive("burn-in", burn_in, minimum=0)
    chain = HeatBathChain(patch, params, bc, block_rng(seed, stream), random_scan)
    chain.sweep(burn_in)
    n_records = sweeps // thinning
    series = np.empty(n_records, dtype=np.float64)
    for r in range(n_records):
        if token and token.is_cancelled():
            raise InterruptedError(f"Chain {stream} cancelled after {r} records")
        chain.sweep(thinning)
        series[r] = observable(chain.bits)
    return series


def sample_rc(
    patch: LatticePatch,
    params: RcParams,
    bc: Optional[BoundaryCondition] = None,
    sweeps: int = 1000,
    burn_in: int = config.DEFAULT_BURN_IN,
    seed: int = config.DEFAULT_SEED,
    thinning: int = config.DEFAULT_THINNING,
    random_scan: bool = False,
    stream: int = 0,
) -> RcChain:
    """
    Heat-bath chain; burn_in sweeps discarded, then sweeps // thinning
    states recorded. Deterministic given (seed, stream).
    """
    bc = bc or (BoundaryCondition.periodic() if patch.periodic else BoundaryCondition.free())
    validate_positive("sweeps", sweeps)
    validate_positive("thinning", thinning)
    validate_positive("burn-in", burn_in, minimum=0)
    chain = HeatBathChain(patch, params, bc, block_rng(seed, stream), random_scan)
    chain.sweep(burn_in)
    n_records = sweeps // thinning
    samples = np.empty((n_records, patch.n_edges), dtype=np.bool_)
    for r in range(n_records):
        chain.sweep(thinning)
        samples[r] = chain.bits
    logger.debug(f"Heat-bath chain: {patch.n_edges} edges, {sweeps} sweeps after {burn_in} burn-in, seed={seed}")
    return RcChain(patch, params, bc, samples, seed, stream, burn_in, thinning, random_scan)


def _combine_chains(series: Sequence[np.ndarray]) -> Tuple[float, float, int]:
    """Pooled mean; SE from per-chain batch means"""
    stats = [batch_means_se(s) for s in series]
    total = sum(len(s) for s in series)
    mean = float(sum(m * len(s) for (m, _), s in zip(stats, series)) / total)
    se = float(math.sqrt(sum(e * e * len(s) ** 2 for (_, e), s in zip(stats, series))) / total)
    return mean, se, total


# === TORUS CROSSINGS ===

def _chart_steps(torus: TorusPatch) -> Tuple[Tuple[Tuple[int, int], int], ...]:
    """Chart offsets of the a-step (class 0) and b-step (class 1)"""
    if torus.rotated:
        return ((1, 1), 0), ((-1, 1), 1)
    return ((1, 0), 0), ((0, 1), 1)


def _edge_index(torus: TorusPatch) -> Dict[Tuple[int, int, int], int]:
    return {(u, v, c): e for e, (u, v, c) in enumerate(torus.edges)}


def _chart_edges(
    torus: TorusPatch,
    points: Dict[Tuple[int, int], int],
    keep: Callable[[Tuple[int, int]], bool],
) -> List[Tuple[Tuple[int, int], Tuple[int, int], int]]:
    """Torus edges between kept chart points: (point, point, edge id)"""
    index = _edge_index(torus)
    out = []
    for point, v in points.items():
        if not keep(point):
            continue
        for (dx, dy), cls in _chart_steps(torus):
            nxt = (point[0] + dx, point[1] + dy)
            if nxt not in points or not keep(nxt):
                continue
            w = points[nxt]
            out.append((point, nxt, index[(min(v, w), max(v, w), cls)]))
    return out


def chart_crossing_geometry(
    torus: TorusPatch,
    points: Dict[Tuple[int, int], int],
    rect: Tuple[int, int, int, int],
    orientation: str = HORIZONTAL,
) -> CrossingGeometry:
    """
    Crossing of the closed chart rectangle [x0, x1] × [y0, y1].

    Side vertices are the chart points on the two transverse sides; in the
    rotated chart, where every other point is missing, the outer two
    columns (rows) form each side.
    """
    if orientation not in (HORIZONTAL, VERTICAL):
        raise ValidationError(f"Unknown orientation: {orientation}")
    x0, y0, x1, y1 = rect
    if x1 <= x0 or y1 <= y0:
        raise ValidationError(f"Degenerate rectangle {rect}")
    depth = 2 if torus.rotated else 1

    def inside(pt: Tuple[int, int]) -> bool:
        return x0 <= pt[0] <= x1 and y0 <= pt[1] <= y1

    axis, lo, hi = (0, x0, x1) if orientation == HORIZONTAL else (1, y0, y1)
    n = torus.n_vertices
    source, target = n, n + 1
    entries: List[Tuple[int, int, int]] = []
    for pt, v in points.items():
        if not inside(pt):
            continue
        if pt[axis] < lo + depth:
            entries.append((v, source, -1))
        if pt[axis] > hi - depth:
            entries.append((v, target, -1))
    for a, b, e in _chart_edges(torus, points, inside):
        entries.append((points[a], points[b], e))
    arr = np.array(entries, dtype=np.int64).reshape(-1, 3)
    return CrossingGeometry(n + 2, arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(), source, target)


def torus_crossing_geometry(torus: TorusPatch, width: int, height: int, orientation: str = HORIZONTAL) -> CrossingGeometry:
    """
    Crossing of the chart rectangle [0, width) × [0, height)

    Raises:
        ValidationError: Rectangle wraps onto itself
    """
    points = torus.lift_rectangle(0, 0, width, height)
    return chart_crossing_geometry(torus, points, (0, 0, width - 1, height - 1), orientation)


def estimate_crossing_at_sd(
    n: int,
    q: Number,
    sweeps: int,
    seed: int = config.DEFAULT_SEED,
    m: Optional[int] = None,
    p: Optional[Number] = None,
    rotated: bool = False,
    burn_in: int = config.DEFAULT_BURN_IN,
    chains: int = 1,
    workers: int = config.DEFAULT_WORKERS,
    token: Optional[CancellationToken] = None,
) -> ExperimentReport:
    """
    Horizontal crossing of [0, 3n/2) × [0, n) on the m×m torus (default
    m = 2n) under the periodic measure, at p_sd(q) unless p is given.

    Raises:
        ValidationError: m ≤ 3n/2
    """
    validate_positive("n", n, minimum=2)
    validate_positive("chains", chains)
    m = 2 * n if m is None else m
    if 2 * m <= 3 * n:
        raise ValidationError(f"Torus side must exceed 3n/2: m={m}, n={n}")
    p = self_dual_point(q) if p is None else p
    params = RcParams(p, q)
    torus = build_torus(m, rotated=rotated)
    width = (3 * n + 1) // 2
    geometry = torus_crossing_geometry(torus, width, n, HORIZONTAL)
    bc = BoundaryCondition.periodic()

    logger.info(f"Torus crossing: n={n}, m={m}, q={q}, p={p}, sweeps={sweeps}, chains={chains}, seed={seed}")

    def observable(bits: np.ndarray) -> float:
        return float(crossing_holds(geometry, bits))

    def run_block(block: int, start: int, count: int) -> List[np.ndarray]:
        return [
            run_chain(torus, params, bc, sweeps, observable, burn_in, seed, stream=c, token=token)
            for c in range(start, start + count)
        ]

    try:
        series = [s for block in run_blocks(run_block, chains, block_size=1, workers=workers, token=token) for s in block]
    except InterruptedError:
        raise
    except Exception as e:
        logger.error(f"Torus crossing estimate failed: {e}", exc_info=True)
        raise

    estimate, se, total = _combine_chains(series)
    return ExperimentReport(
        experiment='rc.crossing',
        params={
            'n': n, 'm': m, 'q': q, 'p': p, 'rotated': rotated,
            'rect': [0, 0, width, n], 'burn_in': burn_in, 'sweeps': sweeps, 'chains': chains,
        },
        estimate=estimate, se=se, samples=total, seed=seed,
    )


# === ANNULUS EVENT ===

@njit(nogil=True, cache=True)
def _find_potential(parent, offset, x):
    root = x
    pot = 0
    while parent[root] != root:
        pot += offset[root]
        root = parent[root]
    cur = x
    acc = pot
    while cur != root and parent[cur] != root:
        nxt = parent[cur]
        old = offset[cur]
        parent[cur] = root
        offset[cur] = acc
        acc -= old
        cur = nxt
    return root, pot


@njit(nogil=True, cache=True)
def _winding_vertices(n, eu, ev, eid, wind, bits, out):
    """
    Vertices of open clusters carrying a cycle of nonzero winding.

    Potentials count signed crossings of a ray; an open edge closing a
    cycle with inconsistent potentials closes a non-contractible cycle.
    """
    parent = np.arange(n, dtype=np.int64)
    offset = np.zeros(n, dtype=np.int64)
    count = 0
    for j in range(eu.shape[0]):
        if not bits[eid[j]]:
            continue
        ra, pa = _find_potential(parent, offset, eu[j])
        rb, pb = _find_potential(parent, offset, ev[j])
        if ra == rb:
            if pb != pa + wind[j]:
                out[count] = eu[j]
                count += 1
        else:
            parent[rb] = ra
            offset[rb] = pa + wind[j] - pb
    return count


@dataclass(frozen=True)
class AnnulusGeometry:
    """
    Compiled events for scale k around chart origin.

    Inner box half-side 3^k, annulus out to 3^{k+1}, outer box 3^{k+2}.
    """
    k: int
    torus: TorusPatch
    annulus_u: np.ndarray
    annulus_v: np.ndarray
    annulus_eid: np.ndarray
    annulus_wind: np.ndarray
    box_u: np.ndarray
    box_v: np.ndarray
    box_eid: np.ndarray
    box_boundary: np.ndarray
    rectangles: Tuple[CrossingGeometry, ...]

    def cycle_to_boundary(self, bits: np.ndarray) -> bool:
        """Open cycle around the origin in the annulus, joined to the outer box boundary"""
        n = self.torus.n_vertices
        out = np.empty(max(1, self.annulus_u.shape[0]), dtype=np.int64)
        found = _winding_vertices(n, self.annulus_u, self.annulus_v, self.annulus_eid, self.annulus_wind, bits, out)
        if found == 0:
            return False
        labels, _ = label_components(n, self.box_u, self.box_v, bits[self.box_eid])
        reached = set(labels[self.box_boundary].tolist())
        return any(labels[v] in reached for v in out[:found])

    def rectangle_crossings(self, bits: np.ndarray) -> List[bool]:
        return [crossing_holds(g, bits) for g in self.rectangles]


def annulus_geometry(k: int) -> AnnulusGeometry:
    """
    Raises:
        ValidationError: k < 1
        BudgetExceededError: k > MAX_ANNULUS_K
    """
    validate_positive("k", k)
    if k > config.MAX_ANNULUS_K:
        raise BudgetExceededError(f"Annulus scale k={k} exceeds the limit {config.MAX_ANNULUS_K}")
    inner, middle, outer = 3 ** k, 3 ** (k + 1), 3 ** (k + 2)
    torus = build_torus(2 * outer + 2)
    points = torus.lift_rectangle(-outer, -outer, outer + 1, outer + 1)

    def norm(pt: Tuple[int, int]) -> int:
        return max(abs(pt[0]), abs(pt[1]))

    box = _chart_edges(torus, points, lambda pt: True)
    ring = [(a, b, e) for a, b, e in box if inner < norm(a) <= middle and inner < norm(b) <= middle]
    # промінь y = −1/2, x > 0
    wind = [1 if (a[1] == -1 and b[1] == 0 and a[0] > 0) else 0 for a, b, _ in ring]

    rects = (
        ((-middle, -middle, -inner - 1, middle), VERTICAL),
        ((inner + 1, -middle, middle, middle), VERTICAL),
        ((-middle, -middle, middle, -inner - 1), HORIZONTAL),
        ((-middle, inner + 1, middle, middle), HORIZONTAL),
        ((inner, -inner, outer, inner), HORIZONTAL),
    )
    return AnnulusGeometry(
        k=k,
        torus=torus,
        annulus_u=np.array([points[a] for a, _, _ in ring], dtype=np.int64),
        annulus_v=np.array([points[b] for _, b, _ in ring], dtype=np.int64),
        annulus_eid=np.array([e for _, _, e in ring], dtype=np.int64),
        annulus_wind=np.array(wind, dtype=np.int64),
        box_u=np.array([points[a] for a, _, _ in box], dtype=np.int64),
        box_v=np.array([points[b] for _, b, _ in box], dtype=np.int64),
        box_eid=np.array([e for _, _, e in box], dtype=np.int64),
        box_boundary=np.array(sorted(v for pt, v in points.items() if norm(pt) == outer), dtype=np.int64),
        rectangles=tuple(chart_crossing_geometry(torus, points, r, o) for r, o in rects),
    )


def annulus_event_estimate(
    k: int,
    p: Number,
    q: Number,
    sweeps: int,
    seed: int = config.DEFAULT_SEED,
    burn_in: int = config.DEFAULT_BURN_IN,
    token: Optional[CancellationToken] = None,
) -> ExperimentReport:
    """
    Frequency of the annulus event (open cycle around the origin between
    scales 3^k and 3^{k+1}, joined to distance 3^{k+2}) and of its
    five-rectangle sufficient condition, on a periodic torus.

    Raises:
        ValidationError: p ∉ (p_sd(q), 1)
        BudgetExceededError: k too large
        InvariantError: Five crossings present but the event absent
    """
    params = RcParams(p, q)
    p_sd = self_dual_point(q)
    if not p_sd < p < 1:
        raise ValidationError(f"Annulus estimate needs p_sd(q) < p < 1, got p={p}, p_sd={float(p_sd):.6f}")
    geometry = annulus_geometry(k)
    logger.info(f"Annulus event: k={k}, p={p}, q={q}, torus={geometry.torus.n}, sweeps={sweeps}, seed={seed}")

    records: List[Tuple[bool, bool, List[bool]]] = []

    def observable(bits: np.ndarray) -> float:
        crossings = geometry.rectangle_crossings(bits)
        event = geometry.cycle_to_boundary(bits)
        sufficient = all(crossings)
        if sufficient and not event:
            raise InvariantError(f"Five crossings without the annulus event at record {len(records)}")
        records.append((event, sufficient, crossings))
        return float(event)

    try:
        event_series = run_chain(
            geometry.torus, params, BoundaryCondition.periodic(), sweeps, observable,
            burn_in, seed, token=token,
        )
    except InvariantError as e:
        logger.error(f"Annulus estimate failed: {e}")
        raise

    sufficient_series = np.array([s for _, s, _ in records], dtype=np.float64)
    crossing_table = np.array([c for _, _, c in records], dtype=np.float64)
    event, event_se = batch_means_se(event_series)
    sufficient, sufficient_se = batch_means_se(sufficient_series)
    rect_freq = crossing_table.mean(axis=0) if len(records) else np.zeros(5)

    return ExperimentReport(
        experiment='rc.annulus',
        params={'k': k, 'p': p, 'q': q, 'torus': geometry.torus.n, 'burn_in': burn_in, 'sweeps': sweeps},
        estimate=event, se=event_se, samples=len(records), seed=seed,
        values={
            'sufficient_frequency': sufficient,
            'sufficient_se': sufficient_se,
            'rectangle_frequencies': [float(f) for f in rect_freq],
            'single_crossing': float(rect_freq.min()),
            'fkg_product': float(np.prod(rect_freq)),
        },
    )


# === BOUNDARY CONNECTION ===

def estimate_boundary_connection(
    n: int,
    p: Number,
    q: Number,
    bc: str = WIRED,
    sweeps: int = 1000,
    seed: int = config.DEFAULT_SEED,
    burn_in: int = config.DEFAULT_BURN_IN,
    chains: int = 1,
    workers: int = config.DEFAULT_WORKERS,
) -> ExperimentReport:
    """P(0 ↔ ∂B_n) in the square box [−n, n]², free or wired"""
    validate_positive("n", n)
    if bc not in (FREE, WIRED):
        raise ValidationError(f"Boundary connection supports free or wired, got {bc}")
    params = RcParams(p, q)
    patch = build_lattice_patch(config.SQUARE, 2 * n, 2 * n)
    condition = boundary_condition(patch, bc)
    origin = patch.index[(n, n)]
    boundary = np.array(boundary_vertices(patch), dtype=np.int64)
    graph = cluster_graph(patch, condition)

    def observable(bits: np.ndarray) -> float:
        labels, _ = label_components(graph.n_total, graph.eu, graph.ev, graph.extend(bits))
        return float(np.any(labels[boundary] == labels[origin]))

    def run_block(block: int, start: int, count: int) -> List[np.ndarray]:
        return [
            run_chain(patch, params, condition, sweeps, observable, burn_in, seed, stream=c)
            for c in range(start, start + count)
        ]

    series = [s for block in run_blocks(run_block, chains, block_size=1, workers=workers) for s in block]
    estimate, se, total = _combine_chains(series)
    return ExperimentReport(
        experiment='rc.boundary',
        params={'n': n, 'p': p, 'q': q, 'bc': bc, 'burn_in': burn_in, 'sweeps': sweeps, 'chains': chains},
        estimate=estimate, se=se, samples=total, seed=seed,
    )
