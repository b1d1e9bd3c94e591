"""
Latticeworks v1.0 - Star-Triangle Module
=========================================
The star-triangle coupling of bond percolation and its use on mixed
square/triangular strips: one interface step turns the lowest square
layer into triangles (or the top one, going up) while preserving the
product law and every connection between surviving vertices.

Roles: triangle vertices X0, X1, X2 = A, B, C; triangle edge i is
opposite X_i with probability p_i; star arm i joins the centre to X_i
and is open with probability 1 − p_i.
"""

import threading
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from cachetools import LRUCache

import config
from lattice_core import LatticePatch, MixedLayout, build_mixed_patch
from logger import get_logger
from percolation import BondConfig, label_clusters, sample_config
from replica_engine import binomial_estimate, block_rng, run_blocks
from reports import ExperimentReport
from validators import (
    BudgetExceededError, InvariantError, Number, ValidationError,
    validate_positive, validate_probability,
)

logger = get_logger(__name__)

Bits3 = Tuple[bool, bool, bool]
Branches = List[Tuple[Number, Bits3]]

PARTITIONS = ('A|B|C', 'AB|C', 'AC|B', 'BC|A', 'ABC')
_PAIR_OF_EDGE = {0: 'BC|A', 1: 'AC|B', 2: 'AB|C'}   # triangle edge i joins the two other vertices
_PAIR_OF_CLOSED_ARM = _PAIR_OF_EDGE

DOWN = 'down'
UP = 'up'

_plan_cache: LRUCache = LRUCache(maxsize=64)
_plan_cache_lock = threading.Lock()


# === EDGE TRIPLES ===

@dataclass(frozen=True)
class EdgeTriple:
    p0: Number
    p1: Number
    p2: Number

    def __post_init__(self):
        for p in self.as_tuple():
            validate_probability(p)
            if p >= 1:
                raise ValidationError(f"Star-triangle probabilities must be < 1, got {p}")

    def as_tuple(self) -> Tuple[Number, Number, Number]:
        return self.p0, self.p1, self.p2

    @property
    def kappa(self) -> Number:
        """κ_Δ(p) = p0 + p1 + p2 − p0p1p2 − 1"""
        p0, p1, p2 = self.as_tuple()
        return p0 + p1 + p2 - p0 * p1 * p2 - 1

    @property
    def exact(self) -> bool:
        return all(isinstance(p, (int, Fraction)) for p in self.as_tuple())

    def on_surface(self) -> bool:
        if self.exact:
            return self.kappa == 0
        return abs(float(self.kappa)) <= config.EXACT_TOLERANCE

    def swapped(self) -> "EdgeTriple":
        """p1 and p2 exchanged (mirror image)"""
        return EdgeTriple(self.p0, self.p2, self.p1)

    def mixed_class_probs(self) -> Tuple[Number, Number, Number, Number]:
        """Class probabilities of a mixed strip: horizontal, vertical, right, left"""
        return self.p0, 1 - self.p0, self.p1, self.p2


def solve_triangle_triple(p0: Number, p1: Number) -> EdgeTriple:
    """
    Third parameter on κ_Δ = 0: p2 = (1 − p0 − p1)/(1 − p0p1)

    Raises:
        ValidationError: No p2 in [0, 1)
    """
    validate_probability(p0)
    validate_probability(p1)
    denominator = 1 - p0 * p1
    if denominator == 0:
        raise ValidationError(f"No critical triple through p0={p0}, p1={p1}")
    p2 = (1 - p0 - p1) / denominator
    if not 0 <= p2 < 1:
        raise ValidationError(f"Critical p2 out of range for p0={p0}, p1={p1}: {p2}")
    return EdgeTriple(p0, p1, p2)


# === CONNECTIVITY LAWS ===

def triangle_partition(bits: Sequence[bool]) -> str:
    opened = [i for i in range(3) if bits[i]]
    if len(opened) >= 2:
        return 'ABC'
    if len(opened) == 1:
        return _PAIR_OF_EDGE[opened[0]]
    return 'A|B|C'


def star_partition(arms: Sequence[bool]) -> str:
    opened = [i for i in range(3) if arms[i]]
    if len(opened) == 3:
        return 'ABC'
    if len(opened) == 2:
        closed = ({0, 1, 2} - set(opened)).pop()
        return _PAIR_OF_CLOSED_ARM[closed]
    return 'A|B|C'


def _product_weight(bits: Sequence[bool], probs: Sequence[Number]) -> Number:
    weight: Number = 1
    for bit, p in zip(bits, probs):
        weight *= p if bit else 1 - p
    return weight


@dataclass(frozen=True)
class StarTriangleLaw:
    triangle: Dict[str, Number]
    star: Dict[str, Number]
    tv_distance: Number
    kappa: Number


def total_variation(a: Dict, b: Dict) -> Number:
    keys = set(a) | set(b)
    return sum(abs(a.get(k, 0) - b.get(k, 0)) for k in keys) / 2


def star_triangle_law(p: EdgeTriple) -> StarTriangleLaw:
    """Partition laws of {A,B,C} in the triangle under P_p and the star under P_{1−p}"""
    probs = p.as_tuple()
    arm_probs = tuple(1 - q for q in probs)
    triangle = {name: 0 for name in PARTITIONS}
    star = {name: 0 for name in PARTITIONS}
    for bits in product((False, True), repeat=3):
        triangle[triangle_partition(bits)] += _product_weight(bits, probs)
        star[star_partition(bits)] += _product_weight(bits, arm_probs)
    return StarTriangleLaw(triangle, star, total_variation(triangle, star), p.kappa)


# === COUPLING MAPS ===

def _check_surface(p: EdgeTriple, allow_off_surface: bool) -> None:
    if not allow_off_surface and not p.on_surface():
        raise ValidationError(
            f"Star-triangle maps need κ_Δ(p) = 0, got {p.kappa} "
            f"(pass allow_off_surface=True to renormalise)"
        )


def _normalise(weighted: Branches) -> Branches:
    total = sum(w for w, _ in weighted)
    if total == 0:
        return [(1, weighted[0][1])]
    return [(w / total, bits) for w, bits in weighted if w != 0]


def branches_T(bits: Sequence[bool], p: EdgeTriple, allow_off_surface: bool = False) -> Branches:
    """
    Star configurations T(ω) with their probabilities.

    Deterministic unless all three triangle edges are closed; then the star
    has no open arm with weight p0p1p2, or only arm i open with weight
    (1−p_i)p_jp_k, over P = (1−p0)(1−p1)(1−p2).
    """
    _check_surface(p, allow_off_surface)
    bits = tuple(bool(b) for b in bits)
    opened = [i for i in range(3) if bits[i]]
    if len(opened) >= 2:
        return [(1, (True, True, True))]
    if len(opened) == 1:
        i = opened[0]
        return [(1, tuple(j != i for j in range(3)))]

    p0, p1, p2 = p.as_tuple()
    weighted: Branches = [(p0 * p1 * p2, (False, False, False))]
    for i in range(3):
        others = [q for j, q in enumerate((p0, p1, p2)) if j != i]
        weighted.append(((1 - (p0, p1, p2)[i]) * others[0] * others[1], tuple(j == i for j in range(3))))
    if p.on_surface():
        big_p = (1 - p0) * (1 - p1) * (1 - p2)
        return [(w / big_p, arms) for w, arms in weighted if w != 0]
    return _normalise(weighted)


def branches_S(arms: Sequence[bool], p: EdgeTriple, allow_off_surface: bool = False) -> Branches:
    """
    Triangle configurations S(ω′) with their probabilities.

    Deterministic unless all three arms are open; then the triangle gets
    all edges open with weight p0p1p2, or all but edge i with weight
    (1−p_i)p_jp_k, over P.
    """
    _check_surface(p, allow_off_surface)
    arms = tuple(bool(a) for a in arms)
    opened = [i for i in range(3) if arms[i]]
    if len(opened) <= 1:
        return [(1, (False, False, False))]
    if len(opened) == 2:
        closed = ({0, 1, 2} - set(opened)).pop()
        return [(1, tuple(j == closed for j in range(3)))]

    p0, p1, p2 = p.as_tuple()
    weighted: Branches = [(p0 * p1 * p2, (True, True, True))]
    for i in range(3):
        others = [q for j, q in enumerate((p0, p1, p2)) if j != i]
        weighted.append(((1 - (p0, p1, p2)[i]) * others[0] * others[1], tuple(j != i for j in range(3))))
    if p.on_surface():
        big_p = (1 - p0) * (1 - p1) * (1 - p2)
        return [(w / big_p, bits) for w, bits in weighted if w != 0]
    return _normalise(weighted)


def _choose(branches: Branches, u: float) -> Bits3:
    acc = 0.0
    for w, outcome in branches:
        acc += float(w)
        if u < acc:
            return outcome
    return branches[-1][1]


def star_triangle_map_T(bits: Sequence[bool], p: EdgeTriple, u: float, allow_off_surface: bool = False) -> Bits3:
    """Triangle → star, using the uniform u only in the all-closed case"""
    return _choose(branches_T(bits, p, allow_off_surface), u)


def star_triangle_map_S(arms: Sequence[bool], p: EdgeTriple, u: float, allow_off_surface: bool = False) -> Bits3:
    """Star → triangle, using the uniform u only in the all-open case"""
    return _choose(branches_S(arms, p, allow_off_surface), u)


@dataclass(frozen=True)
class CouplingCheck:
    tv_T: Number                 # law of T(ω) vs P^⬡_{1−p}
    tv_S: Number                 # law of S(ω′) vs P^Δ_p
    partitions_preserved: bool   # in every branch of both maps


def verify_coupling(p: EdgeTriple, allow_off_surface: bool = False) -> CouplingCheck:
    """Exhaustive push-forward of both maps over all 8 inputs and every branch"""
    probs = p.as_tuple()
    arm_probs = tuple(1 - q for q in probs)
    pushed_T: Dict[Bits3, Number] = {}
    pushed_S: Dict[Bits3, Number] = {}
    preserved = True
    for bits in product((False, True), repeat=3):
        for w, arms in branches_T(bits, p, allow_off_surface):
            pushed_T[arms] = pushed_T.get(arms, 0) + _product_weight(bits, probs) * w
            preserved &= star_partition(arms) == triangle_partition(bits)
        for w, tri in branches_S(bits, p, allow_off_surface):
            pushed_S[tri] = pushed_S.get(tri, 0) + _product_weight(bits, arm_probs) * w
            preserved &= triangle_partition(tri) == star_partition(bits)

    target_T = {b: _product_weight(b, arm_probs) for b in product((False, True), repeat=3)}
    target_S = {b: _product_weight(b, probs) for b in product((False, True), repeat=3)}
    return CouplingCheck(total_variation(pushed_T, target_T), total_variation(pushed_S, target_S), preserved)


# === MIXED-STRIP STEP PLAN ===

ArmSource = Tuple[str, int, int]    # ('edge', old edge, 0) or ('arm', triangle, arm index)


@dataclass(frozen=True)
class StepPlan:
    """
    Wiring of one interface step between the old and the new strip.

    Triangles and stars are listed row by row, left to right; that is the
    order in which their uniforms are drawn.
    """
    old_patch: LatticePatch
    new_patch: LatticePatch
    triangles: Tuple[Tuple[int, int, int], ...]
    stars: Tuple[Tuple[ArmSource, ArmSource, ArmSource], ...]
    star_edges: Tuple[Tuple[int, int, int], ...]
    carried: Tuple[Tuple[int, int], ...]          # (triangle, new edge) for arm 0
    copied: Tuple[Tuple[int, int], ...]           # (old edge, new edge)
    survivors: Dict[int, int]                     # old vertex → new vertex
    heirs: Dict[int, Tuple[int, ...]]             # vanished vertex → its three star neighbours
    mirrored: bool = False

    @property
    def influencing(self) -> Tuple[int, ...]:
        """Old edges whose states determine the new edges"""
        edges = {e for tri in self.triangles for e in tri}
        edges |= {src[1] for star in self.stars for src in star if src[0] == 'edge'}
        return tuple(sorted(edges))

    @property
    def produced(self) -> Tuple[int, ...]:
        """New edges written by the step"""
        edges = [e for tri in self.star_edges for e in tri] + [e for _, e in self.carried]
        return tuple(sorted(edges))


def _parse_word(layout: MixedLayout) -> Tuple[int, int, int]:
    word = layout.word
    h = len(word) - len(word.lstrip('S'))
    rest = word[h:]
    k = len(rest) - len(rest.lstrip('T'))
    m = len(rest) - k
    if k == 0 or set(rest[k:]) - {'S'}:
        raise ValidationError(f"Mixed strip needs one triangle block between square layers, got {word!r}")
    return h, k, m


def _edge_lookup(patch: LatticePatch) -> Dict[Tuple[int, int], int]:
    return {(u, v): e for e, (u, v, _) in enumerate(patch.edges)}


def _down_plan(layout: MixedLayout) -> StepPlan:
    if not layout.periodic:
        raise ValidationError("Interface steps need a horizontally periodic strip")
    h, k, m = _parse_word(layout)
    if h < 1:
        raise ValidationError("Interface is at the bottom of the strip; cannot step down")

    new_layout = MixedLayout('S' * (h - 1) + 'T' * k + 'S' * (m + 1), layout.width, True, layout.y0, layout.parity0)
    old = build_mixed_patch(layout, verify=False)
    new = build_mixed_patch(new_layout, verify=False)
    old_idx, new_idx = old.index, new.index
    old_edges, new_edges = _edge_lookup(old), _edge_lookup(new)
    wrap = layout.wrap

    def old_edge(a, b) -> int:
        u, v = sorted((old_idx[a], old_idx[b]))
        return old_edges[(u, v)]

    def new_edge(a, b) -> int:
        u, v = sorted((new_idx[a], new_idx[b]))
        return new_edges[(u, v)]

    triangles: List[Tuple[int, int, int]] = []
    tri_of: Dict[Tuple[int, int], int] = {}      # (apex position, layer) → triangle index
    for r in range(h, h + k):
        for apex in layout.positions(r + 1):
            left, right = wrap(apex - 1), wrap(apex + 1)
            e0 = old_edge((left, r), (right, r))
            e1 = old_edge((apex, r + 1), (right, r))
            e2 = old_edge((apex, r + 1), (left, r))
            tri_of[(apex, r)] = len(triangles)
            triangles.append((e0, e1, e2))

    stars, star_edges = [], []
    heirs: Dict[int, Tuple[int, ...]] = {}
    for r in range(h, h + k):
        for x in layout.positions(r):
            o_r, o_l = wrap(x + 1), wrap(x - 1)
            if r == h:
                down: ArmSource = ('edge', old_edge((x, r - 1), (x, r)), 0)
            else:
                down = ('arm', tri_of[(x, r - 1)], 0)
            stars.append((down, ('arm', tri_of[(o_r, r)], 1), ('arm', tri_of[(o_l, r)], 2)))
            star_edges.append((
                new_edge((o_r, r), (o_l, r)),
                new_edge((x, r - 1), (o_l, r)),
                new_edge((x, r - 1), (o_r, r)),
            ))
            heirs[old_idx[(x, r)]] = (new_idx[(x, r - 1)], new_idx[(o_r, r)], new_idx[(o_l, r)])

    carried = []
    top = h + k
    for apex in layout.positions(top):
        carried.append((tri_of[(apex, top - 1)], new_edge((apex, top - 1), (apex, top))))

    copied = []
    for e, (u, v, _) in enumerate(old.edges):
        a, b = old.vertices[u], old.vertices[v]
        if (a[1] < h and b[1] < h) or (a[1] >= top and b[1] >= top):
            copied.append((e, new_edge(a, b)))

    survivors = {
        old_idx[a]: new_idx[a] for a in old.vertices if a[1] < h or a[1] >= top
    }

    written = [e for tri in star_edges for e in tri] + [e for _, e in carried] + [e for _, e in copied]
    if sorted(written) != list(range(new.n_edges)):
        raise InvariantError(f"Interface step on {layout.word!r} does not cover the new strip exactly")

    return StepPlan(
        old_patch=old, new_patch=new,
        triangles=tuple(triangles), stars=tuple(stars), star_edges=tuple(star_edges),
        carried=tuple(carried), copied=tuple(copied),
        survivors=survivors, heirs=heirs,
    )


def reflect_layout(layout: MixedLayout) -> MixedLayout:
    """Mirror image in a horizontal line; row r becomes row n_rows − 1 − r"""
    top = layout.n_rows - 1
    return MixedLayout(layout.word[::-1], layout.width, layout.periodic, -layout.row_level(top), layout.row_parity(top))


def _reflect_ids(src: LatticePatch, dst: LatticePatch) -> Tuple[Dict[int, int], Dict[int, int]]:
    """Vertex and edge id maps from a strip to its mirror image"""
    top = src.layout.n_rows - 1
    vmap = {i: dst.index[(m, top - r)] for i, (m, r) in enumerate(src.vertices)}
    lookup = _edge_lookup(dst)
    emap = {}
    for e, (u, v, _) in enumerate(src.edges):
        a, b = sorted((vmap[u], vmap[v]))
        emap[e] = lookup[(a, b)]
    return vmap, emap


def _up_plan(layout: MixedLayout) -> StepPlan:
    mirror = _down_plan(reflect_layout(layout))
    old = build_mixed_patch(layout, verify=False)
    new = build_mixed_patch(reflect_layout(mirror.new_patch.layout), verify=False)
    old_v, old_e = _reflect_ids(mirror.old_patch, old)
    new_v, new_e = _reflect_ids(mirror.new_patch, new)

    def arm(src: ArmSource) -> ArmSource:
        return (src[0], old_e[src[1]], 0) if src[0] == 'edge' else src

    return StepPlan(
        old_patch=old, new_patch=new,
        triangles=tuple(tuple(old_e[e] for e in tri) for tri in mirror.triangles),
        stars=tuple(tuple(arm(s) for s in star) for star in mirror.stars),
        star_edges=tuple(tuple(new_e[e] for e in tri) for tri in mirror.star_edges),
        carried=tuple((t, new_e[e]) for t, e in mirror.carried),
        copied=tuple((old_e[a], new_e[b]) for a, b in mirror.copied),
        survivors={old_v[a]: new_v[b] for a, b in mirror.survivors.items()},
        heirs={old_v[a]: tuple(new_v[b] for b in hs) for a, hs in mirror.heirs.items()},
        mirrored=True,
    )


def plan_step(layout: MixedLayout, direction: str = DOWN) -> StepPlan:
    """
    Step plan, memoized per (layout, direction)

    Raises:
        ValidationError: Non-periodic strip, malformed word or interface at the boundary
    """
    if direction not in (DOWN, UP):
        raise ValidationError(f"Unknown step direction: {direction} (allowed: {DOWN}, {UP})")
    key = (layout, direction)
    with _plan_cache_lock:
        cached = _plan_cache.get(key)
    if cached is not None:
        return cached
    plan = _down_plan(layout) if direction == DOWN else _up_plan(layout)
    with _plan_cache_lock:
        _plan_cache[key] = plan
    return plan


# === APPLYING A STEP ===

def _star_bits(star: Tuple[ArmSource, ...], bits: np.ndarray, arms: List[Bits3]) -> Bits3:
    out = []
    for kind, a, b in star:
        out.append(bool(bits[a]) if kind == 'edge' else arms[a][b])
    return tuple(out)


def mixed_lattice_step(
    bond_config: BondConfig,
    p: EdgeTriple,
    direction: str = DOWN,
    seed: int = config.DEFAULT_SEED,
    stream: int = 0,
    allow_off_surface: bool = False,
) -> BondConfig:
    """
    Star-triangle at every upward triangle of the triangle block, then
    star-triangle back at every vertex the first pass left as a star.

    Raises:
        ValidationError: Patch without a layout, or interface at the boundary
    """
    layout = bond_config.patch.layout
    if layout is None:
        raise ValidationError("Interface steps need a mixed strip")
    plan = plan_step(layout, direction)
    law = p.swapped() if plan.mirrored else p
    bits = bond_config.bits

    rng = block_rng(seed, stream)
    u = rng.random(len(plan.triangles) + len(plan.stars))

    arms = [
        star_triangle_map_T(tuple(bits[e] for e in tri), law, u[i], allow_off_surface)
        for i, tri in enumerate(plan.triangles)
    ]
    out = np.zeros(plan.new_patch.n_edges, dtype=np.bool_)
    offset = len(plan.triangles)
    for j, (star, edges) in enumerate(zip(plan.stars, plan.star_edges)):
        tri = star_triangle_map_S(_star_bits(star, bits, arms), law, u[offset + j], allow_off_surface)
        for e, bit in zip(edges, tri):
            out[e] = bit
    for t, e in plan.carried:
        out[e] = arms[t][0]
    for old_e, new_e in plan.copied:
        out[new_e] = bits[old_e]
    return BondConfig(plan.new_patch, out, seed, stream)


# === EXACT STEP LAW ===

@dataclass(frozen=True)
class StepLaw:
    influencing: Tuple[int, ...]
    produced: Tuple[int, ...]
    pushforward: Dict[Tuple[bool, ...], Number]
    target: Dict[Tuple[bool, ...], Number]
    tv_distance: Number


def _mul_dist(a: Dict[tuple, Number], b: Dict[tuple, Number]) -> Dict[tuple, Number]:
    return {ka + kb: wa * wb for ka, wa in a.items() for kb, wb in b.items()}


def exact_step_law(layout: MixedLayout, p: EdgeTriple, direction: str = DOWN) -> StepLaw:
    """
    Exhaustive push-forward of the product law through one interface step,
    compared with the product law on the produced edges

    Raises:
        BudgetExceededError: More influencing edges than MAX_EXACT_EDGES
    """
    plan = plan_step(layout, direction)
    law = p.swapped() if plan.mirrored else p
    if len(plan.influencing) > config.MAX_EXACT_EDGES:
        raise BudgetExceededError(
            f"{len(plan.influencing)} influencing edges (max: {config.MAX_EXACT_EDGES})"
        )

    old_probs = p.mixed_class_probs()
    old_classes = plan.old_patch.edge_classes
    new_probs = p.mixed_class_probs()
    new_classes = plan.new_patch.edge_classes

    # перший прохід: спільний закон променів зірок і вертикалей нижнього ряду
    verticals = sorted({src[1] for star in plan.stars for src in star if src[0] == 'edge'})
    stage: Dict[tuple, Number] = {(): 1}
    for tri in plan.triangles:
        local: Dict[tuple, Number] = {}
        probs = [old_probs[old_classes[e]] for e in tri]
        for bits in product((False, True), repeat=3):
            weight = _product_weight(bits, probs)
            for w, arms in branches_T(bits, law):
                local[arms] = local.get(arms, 0) + weight * w
        stage = _mul_dist(stage, local)
    for e in verticals:
        q = old_probs[old_classes[e]]
        stage = _mul_dist(stage, {(True,): q, (False,): 1 - q})

    slot = {e: 3 * len(plan.triangles) + i for i, e in enumerate(verticals)}

    def arm_bit(state: tuple, src: ArmSource) -> bool:
        if src[0] == 'edge':
            return state[slot[src[1]]]
        return state[3 * src[1] + src[2]]

    produced = plan.produced
    position = {e: i for i, e in enumerate(produced)}
    pushforward: Dict[tuple, Number] = {}
    for state, weight in stage.items():
        partial: Dict[tuple, Number] = {(): weight}
        for star in plan.stars:
            local = {}
            for w, tri in branches_S(tuple(arm_bit(state, s) for s in star), law):
                local[tri] = local.get(tri, 0) + w
            partial = _mul_dist(partial, local)
        carried = tuple(state[3 * t] for t, _ in plan.carried)
        for tri_bits, w in partial.items():
            out = [False] * len(produced)
            for j, edges in enumerate(plan.star_edges):
                for i, e in enumerate(edges):
                    out[position[e]] = tri_bits[3 * j + i]
            for (t, e), bit in zip(plan.carried, carried):
                out[position[e]] = bit
            key = tuple(out)
            pushforward[key] = pushforward.get(key, 0) + w

    target_probs = [new_probs[new_classes[e]] for e in produced]
    target = {bits: _product_weight(bits, target_probs) for bits in product((False, True), repeat=len(produced))}
    tv = total_variation(pushforward, target)
    logger.info(f"Exact step law on {layout.word!r} (w={layout.width}, {direction}): TV = {tv}")
    return StepLaw(plan.influencing, produced, pushforward, target, tv)


# === CROSSING TRANSPORT ===

@dataclass(frozen=True)
class TransportResult:
    connected_before: bool
    connected_after: bool
    sources: Tuple[int, ...]          # tracked vertex ids in the final strip
    targets: Tuple[int, ...]
    max_displacement: float
    final: BondConfig


def _connected_sets(bond_config: BondConfig, a: Sequence[int], b: Sequence[int]) -> bool:
    labels = label_clusters(bond_config).labels
    return bool(set(labels[list(a)].tolist()) & set(labels[list(b)].tolist()))


def _periodic_distance(patch: LatticePatch, p: np.ndarray, q: np.ndarray) -> float:
    width = patch.layout.width * np.sqrt(3.0)
    dx = abs(p[0] - q[0]) % width
    dx = min(dx, width - dx)
    return float(np.hypot(dx, p[1] - q[1]))


def transport_crossing(
    bond_config: BondConfig,
    p: EdgeTriple,
    steps: int,
    sources: Sequence[int],
    targets: Sequence[int],
    direction: str = DOWN,
    seed: int = config.DEFAULT_SEED,
    stream_offset: int = 0,
) -> TransportResult:
    """
    Apply `steps` interface steps and follow two vertex sets.

    A vanished vertex hands its place to its three star neighbours, each at
    distance 1. If the sets were joined by an open path before, they are
    joined after, and no tracked vertex moves more than `steps`.

    Raises:
        InvariantError: A connection was lost
    """
    validate_positive("steps", steps)
    pos = bond_config.patch.float_embedding
    tracked = [
        {v: pos[v] for v in sources},
        {v: pos[v] for v in targets},
    ]
    before = _connected_sets(bond_config, list(tracked[0]), list(tracked[1]))

    current = bond_config
    for step in range(steps):
        plan = plan_step(current.patch.layout, direction)
        current = mixed_lattice_step(current, p, direction, seed, stream=stream_offset + step)
        for i, members in enumerate(tracked):
            moved: Dict[int, np.ndarray] = {}
            for v, origin in members.items():
                if v in plan.survivors:
                    moved.setdefault(plan.survivors[v], origin)
                else:
                    for heir in plan.heirs[v]:
                        moved.setdefault(heir, origin)
            tracked[i] = moved

    after = _connected_sets(current, list(tracked[0]), list(tracked[1]))
    final_pos = current.patch.float_embedding
    displacement = max(
        _periodic_distance(current.patch, final_pos[v], origin)
        for members in tracked for v, origin in members.items()
    )
    if before and not after:
        logger.error(f"Crossing transport lost a connection after {steps} steps")
        raise InvariantError(f"Connection between tracked sets lost after {steps} interface steps")
    if displacement > steps + config.COORDINATE_EPSILON:
        raise InvariantError(f"Tracked vertex moved {displacement:.6f} > {steps} in {steps} steps")

    return TransportResult(
        connected_before=before,
        connected_after=after,
        sources=tuple(sorted(tracked[0])),
        targets=tuple(sorted(tracked[1])),
        max_displacement=displacement,
        final=current,
    )


def estimate_universality(
    p: EdgeTriple,
    width: int,
    steps: int,
    samples: int,
    seed: int = config.DEFAULT_SEED,
    workers: int = config.DEFAULT_WORKERS,
) -> ExperimentReport:
    """
    Transport crossings of the square block through `steps` down-steps.

    Each sample is a strip S^{steps+1} T^2 S with the critical class
    probabilities of p; the tracked sets are two vertical columns of the
    square block, half the width apart. Sample s draws its configuration
    from stream s and its step uniforms from streams past `samples`.

    Raises:
        InvariantError: A connection was lost or a vertex moved too far
    """
    validate_positive("samples", samples)
    validate_positive("steps", steps)
    layout = MixedLayout('S' * (steps + 1) + 'TT' + 'S', width, True)
    patch = build_mixed_patch(layout)
    class_probs = p.mixed_class_probs()
    left = [patch.index[(0, r)] for r in range(steps + 1)]
    col = 2 * (width // 2)
    right = [patch.index[(col, r)] for r in range(steps + 1)]

    logger.info(f"Universality transport: p={p.as_tuple()}, width={width}, steps={steps}, samples={samples}")

    def run_block(block: int, start: int, count: int) -> List[Tuple[bool, bool, float]]:
        out = []
        for s in range(start, start + count):
            bond_config = sample_config(patch, class_probs, seed, s)
            result = transport_crossing(
                bond_config, p, steps, left, right, DOWN, seed,
                stream_offset=samples + s * steps,
            )
            out.append((result.connected_before, result.connected_after, result.max_displacement))
        return out

    try:
        results = [r for block in run_blocks(run_block, samples, workers=workers) for r in block]
    except InvariantError as e:
        logger.error(f"Universality transport failed: {e}")
        raise

    crossed = sum(before for before, _, _ in results)
    estimate, se = binomial_estimate(crossed, samples)
    return ExperimentReport(
        experiment='perc.universality',
        params={'p': list(p.as_tuple()), 'width': width, 'steps': steps},
        estimate=estimate, se=se, samples=samples, seed=seed,
        values={
            'crossed_before': crossed,
            'crossed_after': sum(after for _, after, _ in results),
            'max_displacement': max(d for _, _, d in results),
        },
    )
