"""
Latticeworks v1.0 - Self-Avoiding Walk Module
==============================================
Exact walk enumeration, the turning-angle observable on hexagonal
regions, bridge decomposition and connective-constant estimates.

Walk length |γ| counts visited vertices; midpoint endpoints add none.
"""

import cmath
import math
import threading
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from cachetools import LRUCache
from numba import njit
from scipy.optimize import bisect

import config
from lattice_core import (
    LatticePatch, Region, build_lattice_patch,
    hex_direction, origin_vertex,
)
from logger import get_logger
from replica_engine import run_blocks
from validators import (
    BudgetExceededError, ValidationError, validate_budget,
    validate_family, validate_positive,
)

logger = get_logger(__name__)

# === CONSTANTS ===
CRITICAL_SIGMA = 5.0 / 8.0
CHI = 1.0 / (2.0 * math.cos(math.pi / 8.0))      # 1/√(2+√2)
KAPPA_HEX = math.sqrt(2.0 + math.sqrt(2.0))
C_L = math.cos(3.0 * math.pi / 8.0)
C_T = math.cos(math.pi / 4.0)
THETA = cmath.exp(2j * math.pi / 3.0)

# === CACHES (LRU, обмежений розмір) ===
_phase_cache: LRUCache = LRUCache(maxsize=config.PHASE_CACHE_SIZE)
_phase_cache_lock = threading.Lock()
_table_cache: LRUCache = LRUCache(maxsize=16)
_table_cache_lock = threading.Lock()


# === DATA TYPES ===

@dataclass(frozen=True)
class SawPath:
    """
    Self-avoiding walk as a vertex sequence.

    start_half / end_half are direction indices of the half-edges joining a
    start or end midpoint; None for walks between vertices.
    """
    vertices: Tuple[int, ...]
    turning_thirds: int = 0
    start_half: Optional[int] = None
    end_half: Optional[int] = None

    @property
    def length(self) -> int:
        """|γ|: number of vertices visited"""
        return len(self.vertices)

    @property
    def steps(self) -> int:
        return len(self.vertices) - 1


@dataclass(frozen=True)
class BridgeDecomposition:
    """
    Bridges of a walk split at its earliest lowest vertex (the pivot).

    prefix_pieces decompose the reversed walk up to the pivot; their spans
    read T_{−1}, T_{−2}, ... . suffix_pieces decompose the rest with spans
    T_0, T_1, ... . Adjacent pieces share their junction vertex.
    """
    pivot: int
    prefix_pieces: Tuple[Tuple[int, ...], ...]
    suffix_pieces: Tuple[Tuple[int, ...], ...]
    prefix_spans: Tuple[int, ...]
    suffix_spans: Tuple[int, ...]
    turning_thirds: int = 0
    start_half: Optional[int] = None
    end_half: Optional[int] = None

    @property
    def n_bridges(self) -> int:
        return len(self.prefix_pieces) + len(self.suffix_pieces)


@dataclass(frozen=True)
class ConnectiveEstimate:
    roots: Tuple[float, ...]          # σ_n^{1/n}
    ratios: Tuple[float, ...]         # σ_{n+1}/σ_n
    degree: Optional[int]
    ratios_within_bounds: bool        # every ratio in (1, Δ−1]


@dataclass(frozen=True)
class BoundarySums:
    x: float
    lam: float
    tau_plus: float
    tau_minus: float
    upsilon: float

    @property
    def tau(self) -> float:
        return self.tau_plus + self.tau_minus

    @property
    def identity_value(self) -> float:
        """c_l·λ + c_t·τ + υ"""
        return C_L * self.lam + C_T * self.tau + self.upsilon

    @property
    def identity_error(self) -> float:
        return abs(self.identity_value - 1.0)


@dataclass(frozen=True)
class ObservableReport:
    sigma: float
    x: float
    values: np.ndarray                # F(z) per midpoint id
    residual_vertices: Tuple[int, ...]
    residuals: np.ndarray
    sums: BoundarySums
    unsimplified: complex             # −iF(a) − iRe(e^{iσπ})λ + iθe^{−iσ2π/3}τ⁻ + iυ + iθ̄e^{iσ2π/3}τ⁺

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max()) if self.residuals.size else 0.0


@dataclass(frozen=True)
class RegionWalkTable:
    """counts[z, n, T + offset]: walks from a to midpoint z with n vertices and T thirds of turning"""
    region: Region
    counts: np.ndarray
    offset: int
    extensions: int

    def turnings(self, midpoints: Sequence[int]) -> List[int]:
        sub = self.counts[list(midpoints)].sum(axis=(0, 1))
        return [int(t) - self.offset for t in np.nonzero(sub)[0]]

    def observable(self, sigma: float, x: float) -> np.ndarray:
        powers = np.power(float(x), np.arange(self.counts.shape[1], dtype=np.float64))
        return np.einsum('znt,n,t->z', self.counts.astype(np.float64), powers, phase_factors(sigma, self.offset))

    def length_sums(self, x: float, midpoints: Sequence[int]) -> float:
        if not midpoints:
            return 0.0
        powers = np.power(float(x), np.arange(self.counts.shape[1], dtype=np.float64))
        per_length = self.counts[list(midpoints)].sum(axis=(0, 2)).astype(np.float64)
        return float(per_length @ powers)


# === KERNELS ===

@njit(nogil=True, cache=True)
def _saw_kernel(indptr, nbrs, prefix, n_max, budget, ban_a, ban_b, target):
    """
    Count extensions of a fixed prefix by iterative depth-first search.

    Returns (counts by step number, counts ending at target, extensions).
    Stops as soon as the extension budget is exceeded.
    """
    n = indptr.shape[0] - 1
    counts = np.zeros(n_max + 1, dtype=np.int64)
    ends = np.zeros(n_max + 1, dtype=np.int64)
    visited = np.zeros(n, dtype=np.bool_)
    path = np.empty(n_max + 1, dtype=np.int64)
    ptr = np.empty(n_max + 1, dtype=np.int64)

    k = prefix.shape[0] - 1
    for i in range(k + 1):
        visited[prefix[i]] = True
        path[i] = prefix[i]
    counts[k] = 1
    if prefix[k] == target:
        ends[k] = 1
    if k >= n_max:
        return counts, ends, 0

    depth = k
    ptr[depth] = indptr[path[depth]]
    extensions = 0
    while depth >= k:
        x = path[depth]
        if ptr[depth] < indptr[x + 1]:
            j = ptr[depth]
            ptr[depth] += 1
            y = nbrs[j]
            if visited[y]:
                continue
            if (x == ban_a and y == ban_b) or (x == ban_b and y == ban_a):
                continue
            extensions += 1
            if extensions > budget:
                return counts, ends, extensions
            depth += 1
            path[depth] = y
            counts[depth] += 1
            if y == target:
                ends[depth] += 1
            if depth < n_max:
                visited[y] = True
                ptr[depth] = indptr[y]
            else:
                depth -= 1
        else:
            visited[x] = False
            depth -= 1
    return counts, ends, extensions


@njit(nogil=True, cache=True)
def _region_kernel(nbr, mid, inside, start_v, d0, n_mid, max_v, offset, budget):
    """
    Walks from the start midpoint inside the region, tabulated by end
    midpoint, vertex count and turning. Each vertex turns the walk by ±1.
    """
    counts = np.zeros((n_mid, max_v + 1, 2 * offset + 1), dtype=np.int64)
    nv = nbr.shape[0]
    visited = np.zeros(nv, dtype=np.bool_)
    path_v = np.empty(max_v + 1, dtype=np.int64)
    path_d = np.empty(max_v + 1, dtype=np.int64)
    path_t = np.empty(max_v + 1, dtype=np.int64)
    path_c = np.empty(max_v + 1, dtype=np.int64)

    depth = 0
    path_v[0] = start_v
    path_d[0] = d0
    path_t[0] = 0
    path_c[0] = 0
    visited[start_v] = True
    for delta in (-1, 1):
        d2 = (d0 + delta) % 6
        counts[mid[start_v, d2], 1, delta + offset] += 1
    extensions = 1

    while depth >= 0:
        c = path_c[depth]
        if c < 2:
            path_c[depth] = c + 1
            v = path_v[depth]
            delta = -1 if c == 0 else 1
            dout = (path_d[depth] + delta) % 6
            w = nbr[v, dout]
            if w < 0 or not inside[w] or visited[w]:
                continue
            extensions += 1
            if extensions > budget:
                return counts, extensions
            depth += 1
            path_v[depth] = w
            path_d[depth] = dout
            path_t[depth] = path_t[depth - 1] + delta
            path_c[depth] = 0
            visited[w] = True
            for delta2 in (-1, 1):
                d2 = (dout + delta2) % 6
                counts[mid[w, d2], depth + 1, path_t[depth] + delta2 + offset] += 1
        else:
            visited[path_v[depth]] = False
            depth -= 1
    return counts, extensions


# === ENUMERATION ===

def patch_for_walks(family: str, n_max: int) -> LatticePatch:
    """Smallest window (grown geometrically) whose origin is n_max away from the boundary"""
    family = validate_family(family)
    validate_positive("n_max", n_max)
    size = n_max + 1
    while True:
        patch = build_lattice_patch(family, size, size, verify=False)
        _, depth = origin_vertex(patch)
        if depth >= n_max:
            return patch
        size += max(2, size // 2)


def _prefixes(patch: LatticePatch, origin: int, depth: int, ban: Tuple[int, int]) -> Tuple[List[List[int]], List[int]]:
    """All walks of exactly `depth` steps from origin, plus counts of the shorter ones"""
    shorter = [0] * depth
    result: List[List[int]] = []

    def extend(path: List[int]) -> None:
        if len(path) - 1 == depth:
            result.append(list(path))
            return
        shorter[len(path) - 1] += 1
        x = path[-1]
        for y, _ in patch.adjacency[x]:
            if y in path or {x, y} == set(ban):
                continue
            path.append(y)
            extend(path)
            path.pop()

    extend([origin])
    return result, shorter


def _count_from(
    patch: LatticePatch,
    origin: int,
    n_max: int,
    budget: int,
    workers: int,
    ban: Tuple[int, int] = (-1, -1),
    target: int = -1,
) -> Tuple[List[int], List[int]]:
    """Counts by step number 0..n_max and the subset ending at target"""
    depth = min(config.SAW_SPLIT_DEPTH, n_max)
    prefixes, shorter = _prefixes(patch, origin, depth, ban)
    indptr, nbrs, _ = patch.csr
    arrays = [np.array(p, dtype=np.int64) for p in prefixes]

    def run_prefix(block: int, start: int, count: int):
        total = np.zeros(n_max + 1, dtype=np.int64)
        ends = np.zeros(n_max + 1, dtype=np.int64)
        used = 0
        for arr in arrays[start:start + count]:
            c, e, x = _saw_kernel(indptr, nbrs, arr, n_max, budget, ban[0], ban[1], target)
            total += c
            ends += e
            used += x
        return total, ends, used

    results = run_blocks(run_prefix, len(arrays), block_size=1, workers=workers) if arrays else []
    counts = np.zeros(n_max + 1, dtype=np.int64)
    ends = np.zeros(n_max + 1, dtype=np.int64)
    used = 0
    for c, e, x in results:
        counts += c
        ends += e
        used += x
    if used > budget:
        raise BudgetExceededError(f"Walk enumeration exceeded budget of {budget} extensions")

    counts_list = [int(c) for c in counts]
    for k, s in enumerate(shorter):
        counts_list[k] = s
    # коротші префікси, що закінчуються в target
    ends_list = [int(e) for e in ends]
    if target >= 0:
        for k in range(depth):
            ends_list[k] = 0
        _short_ends(patch, origin, depth, ban, target, ends_list)
    return counts_list, ends_list


def _short_ends(patch, origin, depth, ban, target, ends_list) -> None:
    def extend(path: List[int]) -> None:
        k = len(path) - 1
        if k >= depth:
            return
        if path[-1] == target:
            ends_list[k] += 1
        x = path[-1]
        for y, _ in patch.adjacency[x]:
            if y in path or {x, y} == set(ban):
                continue
            path.append(y)
            extend(path)
            path.pop()
    extend([origin])


def count_saws(
    patch: LatticePatch,
    n_max: int,
    workers: int = config.DEFAULT_WORKERS,
    budget: int = config.ENUMERATION_BUDGET
) -> List[int]:
    """
    Exact σ_1..σ_{n_max} from the deepest vertex of the patch

    Raises:
        ValidationError: Patch too small for walks of n_max steps, or periodic
        BudgetExceededError: Extension budget exceeded
    """
    validate_positive("n_max", n_max)
    validate_budget(budget)
    if patch.periodic:
        raise ValidationError("Walk counts need a non-periodic patch")
    origin, depth = origin_vertex(patch)
    if depth < n_max:
        raise ValidationError(
            f"Patch too small: origin is {depth} steps from the boundary, need {n_max}"
        )

    logger.info(f"Counting SAWs on {patch.family}: n_max={n_max}, origin={patch.vertices[origin]}")
    counts, _ = _count_from(patch, origin, n_max, budget, workers)
    return counts[1:]


def count_saws_oracle(patch: LatticePatch, n_max: int) -> List[int]:
    """Breadth-first counter over explicit path tuples"""
    origin, depth = origin_vertex(patch)
    if depth < n_max:
        raise ValidationError(
            f"Patch too small: origin is {depth} steps from the boundary, need {n_max}"
        )
    frontier = [((origin,), frozenset((origin,)))]
    counts = []
    for _ in range(n_max):
        nxt = []
        for path, seen in frontier:
            for y, _ in patch.adjacency[path[-1]]:
                if y not in seen:
                    nxt.append((path + (y,), seen | {y}))
        frontier = nxt
        counts.append(len(frontier))
    return counts


def _step_turn(d1: int, d2: int) -> int:
    diff = (d2 - d1) % 6
    if diff == 1:
        return 1
    if diff == 5:
        return -1
    raise ValidationError(f"Turn {d1}→{d2} is not ±π/3")


def enumerate_saws(
    patch: LatticePatch,
    n: int,
    start: Optional[int] = None,
    exact_length: bool = True
) -> List[SawPath]:
    """
    Explicit walks of n steps (or 1..n steps) from start

    Turning is tracked incrementally on hexagonal patches.
    """
    validate_positive("n", n)
    if start is None:
        start, _ = origin_vertex(patch)
    hexagonal = patch.family == config.HEXAGONAL
    walks: List[SawPath] = []

    def extend(path: List[int], last_dir: Optional[int], turning: int) -> None:
        steps = len(path) - 1
        if steps >= 1 and (steps == n or not exact_length):
            walks.append(SawPath(tuple(path), turning))
        if steps == n:
            return
        x = path[-1]
        for y, _ in patch.adjacency[x]:
            if y in path:
                continue
            d = hex_direction(patch.vertices[x], patch.vertices[y]) if hexagonal else None
            t = turning + (_step_turn(last_dir, d) if hexagonal and last_dir is not None else 0)
            path.append(y)
            extend(path, d, t)
            path.pop()

    extend([start], None, 0)
    return walks


def check_submultiplicativity(counts: Sequence[int]) -> Tuple[bool, Optional[Tuple[int, int]]]:
    """
    σ_{m+n} ≤ σ_m·σ_n for all m + n within range (counts[i] = σ_{i+1})

    Returns:
        (holds, first violating (m, n) or None)
    """
    total = len(counts)
    for m in range(1, total + 1):
        for n in range(m, total + 1 - m):
            if counts[m + n - 1] > counts[m - 1] * counts[n - 1]:
                return False, (m, n)
    return True, None


def estimate_connective_constant(counts: Sequence[int], family: Optional[str] = None) -> ConnectiveEstimate:
    """
    Per-n roots σ_n^{1/n} and ratios σ_{n+1}/σ_n

    Raises:
        ValidationError: Fewer than 3 counts
    """
    if len(counts) < 3:
        raise ValidationError(f"Need at least 3 counts, got {len(counts)}")
    roots = tuple(float(c) ** (1.0 / (i + 1)) for i, c in enumerate(counts))
    ratios = tuple(counts[i + 1] / counts[i] for i in range(len(counts) - 1))
    degree = config.BULK_DEGREE.get(validate_family(family)) if family else None
    within = True
    if degree is not None:
        within = all(1.0 < r <= degree - 1 for r in ratios)
    return ConnectiveEstimate(roots, ratios, degree, within)


# === TURNING AND OBSERVABLE ===

def _direction_of(patch: LatticePatch, a: int, b: int) -> int:
    (x1, y1), (x2, y2) = patch.float_embedding[a], patch.float_embedding[b]
    angle = math.atan2(y2 - y1, x2 - x1)
    steps = (angle - math.pi / 6.0) / (math.pi / 3.0)
    d = round(steps)
    if abs(steps - d) > 1e-9:
        raise ValidationError("Path is not on a hexagonal embedding")
    return d % 6


def turning_angle(path: SawPath, patch: LatticePatch) -> int:
    """
    Total turning in thirds of π, recomputed from the embedding

    Raises:
        ValidationError: If the path leaves the hexagonal lattice
    """
    if patch.family != config.HEXAGONAL:
        raise ValidationError(f"Turning angle needs a hexagonal patch, got {patch.family}")
    dirs = []
    if path.start_half is not None:
        dirs.append(path.start_half)
    for a, b in zip(path.vertices, path.vertices[1:]):
        dirs.append(_direction_of(patch, a, b))
    if path.end_half is not None:
        dirs.append(path.end_half)
    return sum(_step_turn(d1, d2) for d1, d2 in zip(dirs, dirs[1:]))


def phase_factors(sigma: float, offset: int) -> np.ndarray:
    """e^{−iσTπ/3} for T = −offset..offset, memoized"""
    key = (float(sigma), int(offset))
    with _phase_cache_lock:
        cached = _phase_cache.get(key)
    if cached is not None:
        return cached
    thirds = np.arange(-offset, offset + 1, dtype=np.float64)
    phases = np.exp(-1j * sigma * thirds * math.pi / 3.0)
    with _phase_cache_lock:
        _phase_cache[key] = phases
    return phases


def critical_weight_factor(sigma: float) -> float:
    """2cos((2π/3)(2σ+1)); vanishes at σ = 5/8"""
    return 2.0 * math.cos((2.0 * math.pi / 3.0) * (2.0 * sigma + 1.0))


def solve_critical_x(sigma: float) -> float:
    """
    Root of 1 + xθe^{iσπ/3} + xθ̄e^{−iσπ/3} = 0

    Raises:
        ValidationError: No positive solution for this σ
    """
    c = math.cos(2.0 * math.pi / 3.0 + sigma * math.pi / 3.0)
    if c >= 0:
        raise ValidationError(f"No positive critical weight for sigma={sigma}")
    return -1.0 / (2.0 * c)


def _direction_tables(region: Region) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    base = region.base
    nbr = np.full((base.n_vertices, 6), -1, dtype=np.int64)
    mid = np.full((base.n_vertices, 6), -1, dtype=np.int64)
    for v in range(base.n_vertices):
        for w, e in base.adjacency[v]:
            d = hex_direction(base.vertices[v], base.vertices[w])
            nbr[v, d] = w
            mid[v, d] = e
    inside = np.zeros(base.n_vertices, dtype=np.bool_)
    inside[list(region.inside)] = True
    return nbr, mid, inside


def region_walk_table(region: Region, budget: int = config.ENUMERATION_BUDGET) -> RegionWalkTable:
    """
    Exact table of walks from a, reusable for any (σ, x)

    Raises:
        BudgetExceededError: Extension budget exceeded
    """
    validate_budget(budget)
    key = (region.h, region.v)
    with _table_cache_lock:
        cached = _table_cache.get(key)
    if cached is not None:
        if cached.extensions > budget:
            raise BudgetExceededError(f"Region ({region.h},{region.v}) needs {cached.extensions} extensions, budget {budget}")
        return cached

    nbr, mid, inside = _direction_tables(region)
    max_v = len(region.inside)
    offset = max_v + 1
    counts, used = _region_kernel(
        nbr, mid, inside, region.start_vertex, 1, region.base.n_edges, max_v, offset, budget
    )
    if used > budget:
        raise BudgetExceededError(f"Walk enumeration exceeded budget of {budget} extensions")
    counts[region.start, 0, offset] += 1   # порожня траєкторія, F(a) = 1

    table = RegionWalkTable(region, counts, offset, int(used))
    with _table_cache_lock:
        _table_cache[key] = table
    logger.debug(f"Region ({region.h},{region.v}) walk table: {used} extensions")
    return table


def _residuals(region: Region, values: np.ndarray) -> Tuple[Tuple[int, ...], np.ndarray]:
    nbr, mid, inside = _direction_tables(region)
    order = tuple(sorted(region.inside))
    out = np.empty(len(order), dtype=np.float64)
    for i, v in enumerate(order):
        total = 0j
        for d in range(6):
            if mid[v, d] >= 0:
                total += 0.5 * cmath.exp(1j * (math.pi / 6.0 + d * math.pi / 3.0)) * values[mid[v, d]]
        out[i] = abs(total)
    return order, out


def boundary_sums(region: Region, x: float, budget: int = config.ENUMERATION_BUDGET) -> BoundarySums:
    """λ, τ⁺, τ⁻, υ: length-weighted walk sums ending on each boundary side"""
    if not x > 0:
        raise ValidationError(f"x must be positive, got {x}")
    table = region_walk_table(region, budget)
    return BoundarySums(
        x=float(x),
        lam=table.length_sums(x, region.bottom),
        tau_plus=table.length_sums(x, region.right),
        tau_minus=table.length_sums(x, region.left),
        upsilon=table.length_sums(x, region.top),
    )


def parafermionic_observable(
    region: Region,
    sigma: float,
    x: float,
    budget: int = config.ENUMERATION_BUDGET
) -> ObservableReport:
    """
    F(z) = Σ e^{−iσT(γ)} x^{|γ|} over walks a → z inside the region

    Raises:
        BudgetExceededError: Enumeration budget exceeded
    """
    table = region_walk_table(region, budget)
    values = table.observable(sigma, x)
    order, residuals = _residuals(region, values)
    sums = boundary_sums(region, x, budget)

    unsimplified = (
        -1j * values[region.start]
        - 1j * math.cos(sigma * math.pi) * sums.lam
        + 1j * THETA * cmath.exp(-1j * sigma * 2.0 * math.pi / 3.0) * sums.tau_minus
        + 1j * sums.upsilon
        + 1j * THETA.conjugate() * cmath.exp(1j * sigma * 2.0 * math.pi / 3.0) * sums.tau_plus
    )
    report = ObservableReport(
        sigma=float(sigma), x=float(x), values=values,
        residual_vertices=order, residuals=residuals,
        sums=sums, unsimplified=complex(unsimplified),
    )
    logger.info(
        f"Observable on ({region.h},{region.v}) at sigma={sigma}, x={x:.9f}: "
        f"max residual {report.max_residual:.3e}"
    )
    return report


def verify_vertex_identity(region: Region, sigma: float, x: float, budget: int = config.ENUMERATION_BUDGET) -> float:
    """Largest |Σ (p−v)F(p)| over region vertices"""
    return parafermionic_observable(region, sigma, x, budget).max_residual


# === BRIDGES ===

def _height(patch: LatticePatch, v: int) -> int:
    """Doubled rational height; hexagonal embeddings have no √3 part in y"""
    a, b = patch.embedding[v][1]
    if b:
        raise ValidationError("Bridge heights need a lattice with rational y coordinates")
    return a


def half_plane_bridges(patch: LatticePatch, walk: Sequence[int]) -> Tuple[List[Tuple[int, ...]], List[int]]:
    """
    Split a walk that starts at its lowest vertex: up to the last highest
    vertex, then down to the final lowest vertex of the remainder, and so on.
    """
    pieces: List[Tuple[int, ...]] = []
    spans: List[int] = []
    heights = [_height(patch, v) for v in walk]
    i = 0
    upward = True
    while i < len(walk) - 1:
        rest = heights[i:]
        target = max(rest) if upward else min(rest)
        j = max(k for k, h in enumerate(rest) if h == target)
        pieces.append(tuple(walk[i:i + j + 1]))
        spans.append(abs(rest[j] - rest[0]))
        i += j
        upward = not upward
    return pieces, spans


def bridge_decompose(path: SawPath, patch: LatticePatch) -> BridgeDecomposition:
    """Split at the earliest lowest vertex and decompose both halves into bridges"""
    walk = list(path.vertices)
    heights = [_height(patch, v) for v in walk]
    low = min(heights)
    c = heights.index(low)

    prefix = walk[:c + 1][::-1]
    suffix = walk[c:]
    prefix_pieces, prefix_spans = half_plane_bridges(patch, prefix)
    suffix_pieces, suffix_spans = half_plane_bridges(patch, suffix)
    return BridgeDecomposition(
        pivot=walk[c],
        prefix_pieces=tuple(prefix_pieces),
        suffix_pieces=tuple(suffix_pieces),
        prefix_spans=tuple(prefix_spans),
        suffix_spans=tuple(suffix_spans),
        turning_thirds=path.turning_thirds,
        start_half=path.start_half,
        end_half=path.end_half,
    )


def _concat(pieces: Sequence[Tuple[int, ...]], first: int) -> List[int]:
    out = [first]
    for piece in pieces:
        if piece[0] != out[-1]:
            raise ValidationError("Bridge pieces do not share junction vertices")
        out.extend(piece[1:])
    return out


def reconstruct(decomposition: BridgeDecomposition) -> SawPath:
    """Inverse of bridge_decompose"""
    prefix = _concat(decomposition.prefix_pieces, decomposition.pivot)[::-1]
    suffix = _concat(decomposition.suffix_pieces, decomposition.pivot)
    return SawPath(
        vertices=tuple(prefix + suffix[1:]),
        turning_thirds=decomposition.turning_thirds,
        start_half=decomposition.start_half,
        end_half=decomposition.end_half,
    )


# === HAMMERSLEY-WELSH BOUNDS ===

def hammersley_welsh_bound(x: float, T_max: int, upsilon: Sequence[float]) -> float:
    """
    2·Π_{T=1}^{T_max} (1 + υ_T)², upsilon[0] = υ_1

    Raises:
        ValidationError: x outside (0, χ] or too few υ values
    """
    if not 0 < x <= CHI + config.EXACT_TOLERANCE:
        raise ValidationError(f"x out of range: {x} (allowed: 0 < x <= {CHI:.9f})")
    if len(upsilon) < T_max:
        raise ValidationError(f"Need {T_max} upsilon values, got {len(upsilon)}")
    terms = 1.0 + np.asarray(upsilon[:T_max], dtype=np.float64)
    return float(2.0 * np.prod(terms ** 2))


def upsilon_geometric_bound(x: float, T_max: int) -> List[float]:
    """υ^x_T ≤ (x/χ)^T for x ≤ χ"""
    return [(x / CHI) ** t for t in range(1, T_max + 1)]


def upsilon_lower_bound(v: int, upsilon_1: float) -> float:
    """(1/v)·min{υ_1, 1/(c_l·χ)}"""
    validate_positive("v", v)
    return min(upsilon_1, 1.0 / (C_L * CHI)) / v


def midpoint_partition_function(
    x: float,
    n_max: int,
    workers: int = config.DEFAULT_WORKERS,
    budget: int = config.ENUMERATION_BUDGET
) -> float:
    """
    Truncated Z(x): walks from a midpoint of the hexagonal lattice with at
    most n_max vertices, ending at midpoints.

    The walk enters p or q (the ends of a's edge), never reuses that
    edge, and leaves its last vertex along one of the two other
    half-edges; from q only one of them avoids a.
    """
    validate_positive("n_max", n_max)
    patch = patch_for_walks(config.HEXAGONAL, n_max)
    p, _ = origin_vertex(patch)
    q = patch.adjacency[p][0][0]
    counts, ends_at_q = _count_from(patch, p, n_max - 1, budget, workers, ban=(p, q), target=q)

    total = 1.0
    for steps in range(n_max):
        endings = 2 * counts[steps] - ends_at_q[steps]
        total += 2.0 * endings * x ** (steps + 1)
    return total


# === FISHER LATTICE ===

def fisher_lattice_constant(kappa_hex: float) -> float:
    """
    Root y > 1 of 1/y² + 1/y³ = 1/kappa_hex

    Raises:
        ValidationError: kappa_hex <= 1
    """
    if not kappa_hex > 1:
        raise ValidationError(f"No root bracket for kappa_hex={kappa_hex} (need > 1)")

    def f(y: float) -> float:
        return 1.0 / y ** 2 + 1.0 / y ** 3 - 1.0 / kappa_hex

    hi = 2.0
    while f(hi) > 0:
        hi *= 2.0
    return float(bisect(f, 1.0, hi, xtol=config.BISECTION_TOLERANCE))
