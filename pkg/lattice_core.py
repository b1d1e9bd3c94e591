"""
Latticeworks v1.0 - Lattice Core Module
========================================
Finite embedded lattice patches: square, triangular, hexagonal,
the (3,12²) lattice, square/triangular mixed strips, periodic tori,
the half-hexagon regions used by the walk observable, and planar duals.

Coordinates are exact (see exact_geometry); floats are derived on demand.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

import config
from exact_geometry import (
    DIRECTION_VECTORS, Point, add_points, bucket_segments, scale_point,
    point_sum, segments_conflict, squared_distance, to_float,
)
from logger import get_logger
from validators import (
    InvariantError, ValidationError, validate_dimensions,
    validate_family, validate_positive, validate_vertex_count,
)

logger = get_logger(__name__)

Axial = Tuple[int, int]
EdgeTriple = Tuple[int, int, int]


# === DATA TYPES ===

@dataclass(frozen=True)
class MixedLayout:
    """
    Row structure of a square/triangular mixed strip.

    The word lists layers bottom to top: 'S' is a square layer of height 1
    with vertical edges, 'T' a triangle layer of height 3/2. Row r holds
    positions m (x = m·√3/2) of one parity; each T layer flips the parity.
    """
    word: str
    width: int
    periodic: bool = True
    y0: int = 0          # level of row 0, in halves
    parity0: int = 0

    @property
    def n_rows(self) -> int:
        return len(self.word) + 1

    @property
    def interface_height(self) -> int:
        """Number of square layers below the first triangle layer"""
        return len(self.word) - len(self.word.lstrip('S'))

    def row_parity(self, row: int) -> int:
        return (self.parity0 + self.word[:row].count('T')) % 2

    def row_level(self, row: int) -> int:
        prefix = self.word[:row]
        return self.y0 + 2 * prefix.count('S') + 3 * prefix.count('T')

    def positions(self, row: int) -> List[int]:
        parity = self.row_parity(row)
        top = 2 * self.width if self.periodic else 2 * self.width + 1
        return list(range(parity, top, 2))

    def wrap(self, m: int) -> int:
        return m % (2 * self.width) if self.periodic else m

    def blocks(self) -> List[Tuple[str, int]]:
        """Run-length encoding of the layer word"""
        runs: List[Tuple[str, int]] = []
        for ch in self.word:
            if runs and runs[-1][0] == ch:
                runs[-1] = (ch, runs[-1][1] + 1)
            else:
                runs.append((ch, 1))
        return runs


@dataclass(frozen=True)
class LatticePatch:
    """
    Finite embedded graph with edge classes.

    Vertex ids are positions in `vertices` (sorted axial coordinates);
    edges are (u, v, class), with u <= v for built lattices (dual edges keep
    face orientation). `rotation`, when present, is the
    explicit cyclic order of outgoing half-edges (2e for u→v, 2e+1 for v→u)
    and replaces angle sorting.
    """
    family: str
    vertices: Tuple[Axial, ...]
    edges: Tuple[EdgeTriple, ...]
    embedding: Tuple[Point, ...]
    n_classes: int
    periodic: bool = False
    multigraph: bool = False
    scale: int = 1
    rotation: Optional[Tuple[Tuple[int, ...], ...]] = None
    layout: Optional[MixedLayout] = None

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def index(self) -> Dict[Axial, int]:
        return {axial: i for i, axial in enumerate(self.vertices)}

    @cached_property
    def adjacency(self) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
        """Per vertex: (neighbour, edge index) pairs"""
        adj: List[List[Tuple[int, int]]] = [[] for _ in self.vertices]
        for e, (u, v, _) in enumerate(self.edges):
            adj[u].append((v, e))
            if u != v:
                adj[v].append((u, e))
        return tuple(tuple(a) for a in adj)

    @cached_property
    def float_embedding(self) -> np.ndarray:
        return np.array([to_float(p) for p in self.embedding], dtype=np.float64)

    @cached_property
    def edge_classes(self) -> np.ndarray:
        return np.array([c for _, _, c in self.edges], dtype=np.int64)

    @cached_property
    def edge_endpoints(self) -> Tuple[np.ndarray, np.ndarray]:
        u = np.array([a for a, _, _ in self.edges], dtype=np.int64)
        v = np.array([b for _, b, _ in self.edges], dtype=np.int64)
        return u, v

    @cached_property
    def csr(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(indptr, neighbours, edge ids) in adjacency order"""
        indptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        nbrs: List[int] = []
        eids: List[int] = []
        for v, adj in enumerate(self.adjacency):
            for w, e in adj:
                nbrs.append(w)
                eids.append(e)
            indptr[v + 1] = len(nbrs)
        return indptr, np.array(nbrs, dtype=np.int64), np.array(eids, dtype=np.int64)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def other(self, e: int, v: int) -> int:
        a, b, _ = self.edges[e]
        return b if a == v else a

    def edges_of_class(self, cls: int) -> List[int]:
        return [e for e, (_, _, c) in enumerate(self.edges) if c == cls]


@dataclass(frozen=True)
class TorusPatch(LatticePatch):
    """n×n periodic square lattice; `rotated` places (a, b) at (a−b, a+b)"""
    n: int = 0
    rotated: bool = False

    def chart(self, a: int, b: int) -> Tuple[int, int]:
        """Planar chart coordinates of torus vertex (a, b)"""
        return (a - b, a + b) if self.rotated else (a, b)

    def vertex_at(self, x: int, y: int) -> Optional[int]:
        """Torus vertex lying under chart point (x, y), None off-lattice"""
        if self.rotated:
            if (x + y) % 2:
                return None
            a, b = (x + y) // 2, (y - x) // 2
        else:
            a, b = x, y
        return self.index[(a % self.n, b % self.n)]

    def lift_rectangle(self, x0: int, y0: int, x1: int, y1: int) -> Dict[Tuple[int, int], int]:
        """
        Chart points of [x0, x1) × [y0, y1) mapped to torus vertices.

        Raises:
            ValidationError: If the rectangle wraps onto itself
        """
        lifted: Dict[Tuple[int, int], int] = {}
        seen: Dict[int, Tuple[int, int]] = {}
        for x in range(x0, x1):
            for y in range(y0, y1):
                v = self.vertex_at(x, y)
                if v is None:
                    continue
                if v in seen:
                    raise ValidationError(
                        f"Rectangle [{x0},{x1})x[{y0},{y1}) does not embed in the "
                        f"{self.n}x{self.n} torus: {seen[v]} and {(x, y)} coincide"
                    )
                seen[v] = (x, y)
                lifted[(x, y)] = v
        return lifted


@dataclass(frozen=True)
class Region:
    """
    Half-hexagon domain for the walk observable.

    `base` holds the region vertices plus the outside endpoints of its exit
    edges; every base edge touches the region, so midpoint ids coincide
    with base edge indices.
    """
    base: LatticePatch
    h: int
    v: int
    inside: FrozenSet[int]
    start: int                   # midpoint a
    start_vertex: int
    bottom: Tuple[int, ...]      # L_h (a excluded)
    left: Tuple[int, ...]        # T⁻, winding +2π/3
    right: Tuple[int, ...]       # T⁺, winding −2π/3
    top: Tuple[int, ...]         # U

    @property
    def midpoints(self) -> range:
        return range(self.base.n_edges)

    def midpoint_class(self, z: int) -> str:
        if z == self.start:
            return 'a'
        for name, members in (('U', self.top), ('T+', self.right), ('T-', self.left), ('L', self.bottom)):
            if z in members:
                return name
        return 'interior'

    def midpoint_position(self, z: int) -> Tuple[float, float]:
        u, w, _ = self.base.edges[z]
        pu, pw = self.base.float_embedding[u], self.base.float_embedding[w]
        return float((pu[0] + pw[0]) / 2), float((pu[1] + pw[1]) / 2)


@dataclass(frozen=True)
class FaceTrace:
    """Faces of a rotation system, each traced with the face on the left"""
    faces: Tuple[Tuple[int, ...], ...]        # half-edge ids in order
    vertex_cycles: Tuple[Tuple[int, ...], ...]
    outer: Optional[int]
    left_face: Tuple[int, ...]                # indexed by half-edge id

    @property
    def n_faces(self) -> int:
        return len(self.faces)


@dataclass(frozen=True)
class DualMap:
    """Edge bijection between a planar patch and its dual"""
    edge_map: Tuple[int, ...]            # primal edge → dual edge (−1 if dropped)
    face_of_vertex: Tuple[int, ...]      # dual vertex → face index
    outer_vertex: Optional[int]
    scale: int
    trace: FaceTrace

    def dual_edge(self, e: int) -> int:
        return self.edge_map[e]

    def primal_edge(self, e_star: int) -> int:
        return self.edge_map.index(e_star)


# === ASSEMBLY ===

def _assemble(
    family: str,
    axials: Iterable[Axial],
    edge_list: Iterable[Tuple[Axial, Axial, int]],
    embed: Callable[[Axial], Point],
    n_classes: int,
    periodic: bool = False,
    multigraph: bool = False,
    layout: Optional[MixedLayout] = None,
    patch_cls: type = LatticePatch,
    verify: bool = True,
    **extra,
) -> LatticePatch:
    vertices = tuple(sorted(set(axials)))
    validate_vertex_count(len(vertices))
    index = {a: i for i, a in enumerate(vertices)}

    edges: List[EdgeTriple] = []
    seen = set()
    for a, b, cls in edge_list:
        u, v = index[a], index[b]
        if u > v:
            u, v = v, u
        if u == v:
            raise InvariantError(f"Self-loop at {a} in {family} patch")
        if (u, v) in seen and not multigraph:
            raise InvariantError(f"Parallel edge {a}-{b} in {family} patch")
        seen.add((u, v))
        edges.append((u, v, cls))
    edges.sort()

    patch = patch_cls(
        family=family,
        vertices=vertices,
        edges=tuple(edges),
        embedding=tuple(embed(a) for a in vertices),
        n_classes=n_classes,
        periodic=periodic,
        multigraph=multigraph,
        layout=layout,
        **extra,
    )
    if verify:
        _verify_patch(patch)
    return patch


def _verify_patch(patch: LatticePatch) -> None:
    if not is_connected(patch):
        raise InvariantError(f"{patch.family} patch is disconnected")
    if patch.periodic:
        return
    bad = check_edge_lengths(patch)
    if bad is not None:
        raise InvariantError(f"{patch.family} edge {bad} has a non-unit length")
    if patch.n_edges <= config.VERIFY_EMBEDDING_MAX_EDGES:
        conflict = find_embedding_conflict(patch)
        if conflict is not None:
            raise InvariantError(f"{patch.family} edges {conflict} cross in the embedding")


def is_connected(patch: LatticePatch) -> bool:
    if patch.n_vertices == 0:
        return False
    u, v = patch.edge_endpoints
    graph = coo_matrix(
        (np.ones(len(u)), (u, v)), shape=(patch.n_vertices, patch.n_vertices)
    )
    n_comp, _ = connected_components(graph, directed=False)
    return n_comp == 1


def check_edge_lengths(patch: LatticePatch) -> Optional[int]:
    """First edge whose squared length is not allowed for the family, else None"""
    allowed = config.EDGE_LENGTHS_SQUARED.get(patch.family)
    if allowed is None:
        return None
    for e, (u, v, _) in enumerate(patch.edges):
        d2 = squared_distance(patch.embedding[u], patch.embedding[v])
        if not d2.is_rational() or d2.r not in allowed:
            return e
    return None


def find_embedding_conflict(patch: LatticePatch) -> Optional[Tuple[int, int]]:
    """
    Pair of edges meeting away from a shared endpoint, or None.

    Candidates come from float buckets; every decision is exact.
    """
    segments = [(patch.embedding[u], patch.embedding[v]) for u, v, _ in patch.edges]
    if not segments:
        return None
    lengths = np.linalg.norm(
        patch.float_embedding[patch.edge_endpoints[0]] - patch.float_embedding[patch.edge_endpoints[1]],
        axis=1,
    )
    cell = max(float(lengths.max()), 1.0)
    buckets = bucket_segments(segments, cell)

    checked = set()
    for members in buckets.values():
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                a, b = members[i], members[j]
                if (a, b) in checked:
                    continue
                checked.add((a, b))
                if segments_conflict(*segments[a], *segments[b]):
                    return a, b
    return None


def check_planar_embedding(patch: LatticePatch) -> bool:
    """True iff embedded edges meet only at shared endpoints"""
    if patch.periodic:
        return False
    return find_embedding_conflict(patch) is None


# === SQUARE / TRIANGULAR ===

def _square_window(width: int, height: int, verify: bool) -> LatticePatch:
    verts = [(i, j) for i in range(width + 1) for j in range(height + 1)]
    edges = []
    for i, j in verts:
        if i < width:
            edges.append(((i, j), (i + 1, j), 0))
        if j < height:
            edges.append(((i, j), (i, j + 1), 1))
    return _assemble(
        config.SQUARE, verts, edges,
        lambda a: ((2 * a[0], 0), (2 * a[1], 0)),
        n_classes=2, verify=verify,
    )


def _triangular_window(width: int, height: int, verify: bool) -> LatticePatch:
    verts = [(i, j) for i in range(width + 1) for j in range(height + 1)]
    vset = set(verts)
    edges = []
    for i, j in verts:
        for (di, dj), cls in (((1, 0), 0), ((0, 1), 1), ((-1, 1), 2)):
            nb = (i + di, j + dj)
            if nb in vset:
                edges.append(((i, j), nb, cls))
    return _assemble(
        config.TRIANGULAR, verts, edges,
        lambda a: ((2 * a[0] + a[1], 0), (0, a[1])),
        n_classes=3, verify=verify,
    )


# === HEXAGONAL (brick-wall axial (u, t)) ===

def hex_embed(axial: Axial) -> Point:
    """Even u+t sits at y = 3t/2, odd one half lower"""
    u, t = axial
    return (0, u), (3 * t - (u + t) % 2, 0)


def hex_neighbours(axial: Axial) -> List[Axial]:
    u, t = axial
    vertical = (u, t + 1) if (u + t) % 2 == 0 else (u, t - 1)
    return [(u - 1, t), (u + 1, t), vertical]


def hex_direction(a: Axial, b: Axial) -> int:
    """Direction index d (angle π/6 + dπ/3) of the step a → b"""
    (u1, t1), (u2, t2) = a, b
    if t2 == t1 + 1:
        return 1
    if t2 == t1 - 1:
        return 4
    even = (u1 + t1) % 2 == 0
    if u2 == u1 + 1:
        return 5 if even else 0
    return 3 if even else 2


def hex_class(a: Axial, b: Axial) -> int:
    """0: 5π/6 line, 1: π/6 line, 2: vertical"""
    if a[1] != b[1]:
        return 2
    u = min(a[0], b[0])
    return 0 if (u + a[1]) % 2 == 0 else 1


def _prune_pendant(verts: set) -> set:
    changed = True
    while changed:
        changed = False
        for a in list(verts):
            if sum(nb in verts for nb in hex_neighbours(a)) < 2:
                verts.discard(a)
                changed = True
    return verts


def _hexagonal_vertex_set(width: int, height: int) -> set:
    u_max = 2 * width if height == 1 else 2 * width + 1
    verts = {(u, t) for u in range(u_max + 1) for t in range(height + 1)}
    return _prune_pendant(verts)


def _hex_edges(verts: set) -> List[Tuple[Axial, Axial, int]]:
    edges = []
    for a in verts:
        for nb in hex_neighbours(a):
            if nb in verts and a < nb:
                edges.append((a, nb, hex_class(a, nb)))
    return edges


def _hexagonal_window(width: int, height: int, verify: bool) -> LatticePatch:
    verts = _hexagonal_vertex_set(width, height)
    return _assemble(
        config.HEXAGONAL, verts, _hex_edges(verts), hex_embed,
        n_classes=3, verify=verify,
    )


# === ARCHIMEDEAN (3,12²) ===
# кожна вершина стільника → трикутник із трьох вершин

def _slot(a: Axial, b: Axial) -> int:
    """Slot of the corner of a's triangle facing b: left 0, vertical 1, right 2"""
    if a[1] != b[1]:
        return 1
    return 0 if b[0] < a[0] else 2


def _archimedean_window(width: int, height: int, verify: bool) -> LatticePatch:
    hex_verts = _hexagonal_vertex_set(width, height)
    embed: Dict[Axial, Point] = {}
    edges: List[Tuple[Axial, Axial, int]] = []

    for a in hex_verts:
        centre = scale_point(hex_embed(a), 3)
        corners = []
        for nb in hex_neighbours(a):
            corner = (3 * a[0] + _slot(a, nb), a[1])
            embed[corner] = add_points(centre, DIRECTION_VECTORS[hex_direction(a, nb)])
            corners.append(corner)
            if nb in hex_verts and a < nb:
                edges.append((corner, (3 * nb[0] + _slot(nb, a), nb[1]), 1))
        for i in range(3):
            for j in range(i + 1, 3):
                edges.append((corners[i], corners[j], 0))

    return _assemble(
        config.ARCHIMEDEAN, embed.keys(), edges, embed.__getitem__,
        n_classes=2, verify=verify,
    )


_BUILDERS = {
    config.SQUARE: _square_window,
    config.TRIANGULAR: _triangular_window,
    config.HEXAGONAL: _hexagonal_window,
    config.ARCHIMEDEAN: _archimedean_window,
}


def build_lattice_patch(family: str, width: int, height: int, verify: bool = True) -> LatticePatch:
    """
    Build a coordinate-window patch of one of the four lattice families

    Args:
        family: Family name or alias
        width, height: Window size in cells
        verify: Run connectivity, edge-length and planarity self-checks

    Returns:
        LatticePatch

    Raises:
        ValidationError: Unknown family or bad dimensions
        BudgetExceededError: Vertex cap exceeded
    """
    family = validate_family(family)
    validate_dimensions(width, height)
    if family == config.MIXED:
        return build_mixed_lattice(height, width, height)

    try:
        patch = _BUILDERS[family](width, height, verify)
    except InvariantError as e:
        logger.error(f"Patch construction failed: {e}")
        raise
    logger.debug(f"Built {family} {width}x{height}: {patch.n_vertices} vertices, {patch.n_edges} edges")
    return patch


# === MIXED STRIPS ===

def build_mixed_patch(layout: MixedLayout, verify: bool = True) -> LatticePatch:
    """
    Build the strip described by a layout.

    Classes: 0 horizontal, 1 vertical, 2 right edge of an upward
    triangle, 3 left edge of an upward triangle.
    """
    if layout.periodic and layout.width < 3:
        raise ValidationError(f"Periodic mixed strip needs width >= 3, got {layout.width}")

    rows = [set(layout.positions(r)) for r in range(layout.n_rows)]
    verts = [(m, r) for r in range(layout.n_rows) for m in sorted(rows[r])]
    edges = []
    for r in range(layout.n_rows):
        for m in rows[r]:
            right = layout.wrap(m + 2)
            if right in rows[r]:
                edges.append(((m, r), (right, r), 0))
        if r == layout.n_rows - 1:
            continue
        kind = layout.word[r]
        for m in rows[r]:
            if kind == 'S':
                edges.append(((m, r), (m, r + 1), 1))
                continue
            for dm, cls in ((1, 3), (-1, 2)):
                nb = layout.wrap(m + dm)
                if nb in rows[r + 1]:
                    edges.append(((m, r), (nb, r + 1), cls))

    def embed(a: Axial) -> Point:
        return (0, a[0]), (layout.row_level(a[1]), 0)

    return _assemble(
        config.MIXED, verts, edges, embed,
        n_classes=4, periodic=layout.periodic, layout=layout, verify=verify,
    )


def build_mixed_lattice(
    interface_height: int,
    width: int,
    height: int,
    periodic: bool = False,
    verify: bool = True
) -> LatticePatch:
    """
    Square cells below the interface, triangles above

    Raises:
        ValidationError: If interface is out of range
    """
    validate_dimensions(width, height)
    if not isinstance(interface_height, int) or not 0 <= interface_height <= height:
        raise ValidationError(
            f"Interface height out of range: {interface_height} (allowed: 0-{height})"
        )
    word = 'S' * interface_height + 'T' * (height - interface_height)
    return build_mixed_patch(MixedLayout(word, width, periodic), verify=verify)


# === TORUS ===

def build_torus(n: int, rotated: bool = False) -> TorusPatch:
    """
    n×n periodic square lattice

    Raises:
        ValidationError: n < 2, or odd n when rotated
    """
    validate_positive("Torus side", n, minimum=2)
    if rotated and n % 2:
        raise ValidationError(f"Rotated torus needs even n, got {n}")

    verts = [(a, b) for a in range(n) for b in range(n)]
    edges = []
    for a, b in verts:
        edges.append(((a, b), ((a + 1) % n, b), 0))
        edges.append(((a, b), (a, (b + 1) % n), 1))

    if rotated:
        def embed(p: Axial) -> Point:
            return (2 * (p[0] - p[1]), 0), (2 * (p[0] + p[1]), 0)
    else:
        def embed(p: Axial) -> Point:
            return (2 * p[0], 0), (2 * p[1], 0)

    return _assemble(
        config.SQUARE, verts, edges, embed,
        n_classes=2, periodic=True, multigraph=(n == 2),
        patch_cls=TorusPatch, n=n, rotated=rotated,
    )


# === REGION M(h, v) ===

def build_region(h: int, v: int) -> Region:
    """
    Rows t = 0..v−1 of the hexagonal lattice, row t spanning u ∈ [−t, 4h+2+t]

    Row 0 has 2h+1 downward edges with a in the middle; the other 2h form L;
    each row leaves one slanted exit per side; the top row's upward edges
    form U.

    Raises:
        ValidationError: Non-positive h or v
    """
    validate_positive("h", h)
    validate_positive("v", v)

    inside = {(u, t) for t in range(v) for u in range(-t, 4 * h + 3 + t)}
    outside = {nb for a in inside for nb in hex_neighbours(a) if nb not in inside}
    edges = []
    for a in inside:
        for nb in hex_neighbours(a):
            if nb not in inside or a < nb:
                edges.append((a, nb, hex_class(a, nb)))

    base = _assemble(config.HEXAGONAL, inside | outside, edges, hex_embed, n_classes=3)
    index = base.index
    start_axial = (2 * h + 1, 0)

    exits: Dict[int, List[int]] = {1: [], 3: [], 4: [], 5: []}
    start = -1
    for e, (p, q, _) in enumerate(base.edges):
        a, b = base.vertices[p], base.vertices[q]
        if a in inside and b in inside:
            continue
        src, dst = (a, b) if a in inside else (b, a)
        d = hex_direction(src, dst)
        if d == 4 and src == start_axial:
            start = e
            continue
        exits[d].append(e)

    region = Region(
        base=base, h=h, v=v,
        inside=frozenset(index[a] for a in inside),
        start=start,
        start_vertex=index[start_axial],
        bottom=tuple(exits[4]),
        left=tuple(exits[3]),
        right=tuple(exits[5]),
        top=tuple(exits[1]),
    )
    logger.debug(
        f"Region ({h},{v}): |S|={len(inside)}, |L|={len(region.bottom)}, "
        f"|T±|={len(region.left)}, |U|={len(region.top)}"
    )
    return region


# === BOUNDARY AND ORIGIN ===

def _mixed_expected_degree(layout: MixedLayout, row: int) -> int:
    above = layout.word[row] if row < len(layout.word) else None
    below = layout.word[row - 1] if row > 0 else None
    # крайні ряди рахуємо як неповні
    up = {'S': 1, 'T': 2, None: 3}[above]
    down = {'S': 1, 'T': 2, None: 3}[below]
    return 2 + up + down


def boundary_vertices(patch: LatticePatch) -> List[int]:
    """Vertices missing at least one neighbour of the infinite lattice"""
    if patch.periodic and patch.layout is None:
        return []
    if patch.layout is not None:
        layout = patch.layout
        return [
            i for i, (m, r) in enumerate(patch.vertices)
            if patch.degree(i) < _mixed_expected_degree(layout, r)
        ]
    bulk = config.BULK_DEGREE.get(patch.family)
    if bulk is None:
        trace = patch_faces(patch)
        if trace.outer is None:
            return []
        return sorted(set(trace.vertex_cycles[trace.outer]))
    return [i for i in range(patch.n_vertices) if patch.degree(i) < bulk]


def boundary_distances(patch: LatticePatch) -> Dict[int, int]:
    """Graph distance from every vertex to the boundary set"""
    sources = boundary_vertices(patch)
    if not sources:
        return {v: math.inf for v in range(patch.n_vertices)}
    return nx.multi_source_dijkstra_path_length(to_networkx(patch), set(sources))


def origin_vertex(patch: LatticePatch) -> Tuple[int, float]:
    """Deepest vertex (ties: smallest id) and its distance to the boundary"""
    dist = boundary_distances(patch)
    best = max(range(patch.n_vertices), key=lambda v: (dist.get(v, 0), -v))
    return best, dist.get(best, 0)


def to_networkx(patch: LatticePatch) -> nx.MultiGraph:
    """MultiGraph view with axial/pos node attributes and edge class"""
    graph = nx.MultiGraph()
    positions = patch.float_embedding
    for i, axial in enumerate(patch.vertices):
        graph.add_node(i, axial=axial, pos=tuple(positions[i]))
    for e, (u, v, cls) in enumerate(patch.edges):
        graph.add_edge(u, v, key=e, cls=cls)
    return graph


# === FACES ===

def rotation_system(patch: LatticePatch) -> Tuple[Tuple[int, ...], ...]:
    """Outgoing half-edges per vertex in counterclockwise order"""
    if patch.rotation is not None:
        return patch.rotation
    if patch.periodic:
        raise ValidationError("Periodic patches have no planar rotation system")
    pos = patch.float_embedding
    rotation = []
    for v in range(patch.n_vertices):
        outgoing = []
        for w, e in patch.adjacency[v]:
            half = 2 * e if patch.edges[e][0] == v else 2 * e + 1
            dx, dy = pos[w] - pos[v]
            outgoing.append((math.atan2(dy, dx), half))
        outgoing.sort()
        rotation.append(tuple(h for _, h in outgoing))
    return tuple(rotation)


def _tail(patch: LatticePatch, half: int) -> int:
    u, v, _ = patch.edges[half // 2]
    return u if half % 2 == 0 else v


def patch_faces(patch: LatticePatch) -> FaceTrace:
    """
    Trace faces of the rotation system.

    Arriving at v along u→v the walk continues with the half-edge just
    clockwise of v→u, so bounded faces come out counterclockwise. With a
    geometric embedding the outer face is the one of least signed area.
    """
    rotation = rotation_system(patch)
    position = {}
    for v, halves in enumerate(rotation):
        for i, h in enumerate(halves):
            position[h] = (v, i)

    n_half = 2 * patch.n_edges
    left_face = [-1] * n_half
    faces: List[Tuple[int, ...]] = []
    cycles: List[Tuple[int, ...]] = []
    for start in range(n_half):
        if left_face[start] >= 0:
            continue
        face_id = len(faces)
        halves, verts = [], []
        h = start
        while left_face[h] < 0:
            left_face[h] = face_id
            halves.append(h)
            verts.append(_tail(patch, h))
            v, i = position[h ^ 1]
            h = rotation[v][(i - 1) % len(rotation[v])]
        faces.append(tuple(halves))
        cycles.append(tuple(verts))

    outer = None
    if patch.rotation is None:
        pos = patch.float_embedding
        areas = []
        for cyc in cycles:
            pts = pos[list(cyc)]
            x, y = pts[:, 0], pts[:, 1]
            areas.append(0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
        outer = int(np.argmin(areas))

    return FaceTrace(tuple(faces), tuple(cycles), outer, tuple(left_face))


def euler_characteristic(patch: LatticePatch) -> int:
    return patch.n_vertices - patch.n_edges + patch_faces(patch).n_faces


# === DUALITY ===

DUAL_FAMILY = {
    config.SQUARE: config.SQUARE,
    config.TRIANGULAR: config.HEXAGONAL,
    config.HEXAGONAL: config.TRIANGULAR,
}

# клас дуального ребра = напрямок, перпендикулярний до первинного
DUAL_CLASS = {
    config.SQUARE: {0: 1, 1: 0},
    config.TRIANGULAR: {0: 2, 1: 0, 2: 1},
    config.HEXAGONAL: {2: 0, 0: 1, 1: 2},
}


def dual_patch(patch: LatticePatch, drop_outer: bool = False) -> Tuple[LatticePatch, DualMap]:
    """
    Planar dual: one vertex per face, the outer face included.

    Dual edge i crosses primal edge i. Bounded-face vertices sit at
    (scale/size)·Σ corners with scale the lcm of the face sizes, so
    coordinates stay in the exact ring. With drop_outer the outer vertex
    and its edges are removed.

    Raises:
        ValidationError: Periodic or non-planar input
    """
    if patch.periodic:
        raise ValidationError("Dual of a periodic patch is not planar")
    if patch.rotation is None and not check_planar_embedding(patch):
        raise ValidationError(f"{patch.family} patch has no planar embedding")

    trace = patch_faces(patch)
    bounded = [f for f in range(trace.n_faces) if f != trace.outer]
    sizes = [len(trace.vertex_cycles[f]) for f in bounded] or [1]
    scale = reduce(lambda a, b: a * b // math.gcd(a, b), sizes)

    points: Dict[int, Point] = {}
    for f in bounded:
        cyc = trace.vertex_cycles[f]
        points[f] = scale_point(point_sum([patch.embedding[v] for v in cyc]), scale // len(cyc))
    floats = {f: to_float(p) for f, p in points.items()}
    order = sorted(bounded, key=lambda f: (round(floats[f][1], 9), round(floats[f][0], 9), f))

    if trace.outer is not None:
        xs = [p[0] for p in patch.embedding]
        ys = [p[1] for p in patch.embedding]
        min_x = min(a / 2 + b * math.sqrt(3) / 2 for a, b in xs)
        min_y = min(a / 2 + b * math.sqrt(3) / 2 for a, b in ys)
        points[trace.outer] = (
            (2 * (math.floor(min_x) - 1) * scale, 0),
            (2 * (math.floor(min_y) - 1) * scale, 0),
        )
        if not drop_outer:
            order.append(trace.outer)

    vertex_of_face = {f: k for k, f in enumerate(order)}
    class_map = DUAL_CLASS.get(patch.family, {})
    family = DUAL_FAMILY.get(patch.family, config.DUAL) if patch.rotation is None else config.DUAL

    edges: List[EdgeTriple] = []
    edge_map: List[int] = []
    for e, (_, _, cls) in enumerate(patch.edges):
        f_left, f_right = trace.left_face[2 * e], trace.left_face[2 * e + 1]
        if f_left not in vertex_of_face or f_right not in vertex_of_face:
            edge_map.append(-1)
            continue
        edge_map.append(len(edges))
        edges.append((vertex_of_face[f_left], vertex_of_face[f_right], class_map.get(cls, cls)))

    # обертання дуальної вершини = порядок обходу грані
    rotation = None
    if not drop_outer:
        rotation = tuple(
            tuple(2 * edge_map[h // 2] + h % 2 for h in trace.faces[f]) for f in order
        )

    pairs = [(min(u, v), max(u, v)) for u, v, _ in edges]
    multigraph = len(set(pairs)) != len(pairs) or any(u == v for u, v in pairs)

    dual = LatticePatch(
        family=family,
        vertices=tuple((k, 0) for k in range(len(order))),
        edges=tuple(edges),
        embedding=tuple(points[f] for f in order),
        n_classes=patch.n_classes,
        multigraph=multigraph,
        scale=scale * patch.scale,
        rotation=rotation,
    )
    outer_vertex = vertex_of_face.get(trace.outer) if trace.outer is not None else None
    dual_map = DualMap(
        edge_map=tuple(edge_map),
        face_of_vertex=tuple(order),
        outer_vertex=outer_vertex,
        scale=scale,
        trace=trace,
    )
    logger.debug(
        f"Dual of {patch.family}: {dual.n_vertices} vertices, {dual.n_edges} edges"
    )
    return dual, dual_map
