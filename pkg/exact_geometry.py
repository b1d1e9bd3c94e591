"""
Latticeworks v1.0 - Exact Geometry Module
==========================================
Exact arithmetic in the ring generated by 1/2 and √3/2.

Every embedded coordinate is an integer pair (a, b) meaning a/2 + b·√3/2.
Comparisons reduce to the sign of r + s·√3, so planarity and crossing
predicates never touch floating point.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple, Union

# Axis value (a, b) = a/2 + b*sqrt(3)/2; point = (x_pair, y_pair)
AxisPair = Tuple[int, int]
Point = Tuple[AxisPair, AxisPair]
Rational = Union[int, Fraction]

SQRT3 = math.sqrt(3.0)

# Unit vectors at angle pi/6 + d*pi/3, d = 0..5
DIRECTION_VECTORS: Tuple[Point, ...] = (
    ((0, 1), (1, 0)),
    ((0, 0), (2, 0)),
    ((0, -1), (1, 0)),
    ((0, -1), (-1, 0)),
    ((0, 0), (-2, 0)),
    ((0, 1), (-1, 0)),
)


def surd_sign(r: Rational, s: Rational) -> int:
    """Sign of r + s·√3 without rounding"""
    if r >= 0 and s >= 0:
        return 0 if (r == 0 and s == 0) else 1
    if r <= 0 and s <= 0:
        return -1
    # різні знаки: порівнюємо r² і 3s²
    diff = r * r - 3 * s * s
    if diff == 0:
        return 0
    if r > 0:
        return 1 if diff > 0 else -1
    return -1 if diff > 0 else 1


# === SURD ===

@dataclass(frozen=True)
class Surd:
    """Exact number r + s·√3 with rational r, s"""
    r: Fraction = Fraction(0)
    s: Fraction = Fraction(0)

    @classmethod
    def from_pair(cls, pair: AxisPair) -> "Surd":
        a, b = pair
        return cls(Fraction(a, 2), Fraction(b, 2))

    def __add__(self, other: "Surd") -> "Surd":
        return Surd(self.r + other.r, self.s + other.s)

    def __sub__(self, other: "Surd") -> "Surd":
        return Surd(self.r - other.r, self.s - other.s)

    def __neg__(self) -> "Surd":
        return Surd(-self.r, -self.s)

    def __mul__(self, other: "Surd") -> "Surd":
        return Surd(
            self.r * other.r + 3 * self.s * other.s,
            self.r * other.s + self.s * other.r,
        )

    def sign(self) -> int:
        return surd_sign(self.r, self.s)

    def __lt__(self, other: "Surd") -> bool:
        return (self - other).sign() < 0

    def __le__(self, other: "Surd") -> bool:
        return (self - other).sign() <= 0

    def is_zero(self) -> bool:
        return self.r == 0 and self.s == 0

    def is_rational(self) -> bool:
        return self.s == 0

    def __float__(self) -> float:
        return float(self.r) + float(self.s) * SQRT3


# === POINT HELPERS ===

def axis_float(pair: AxisPair) -> float:
    """Float value of an axis pair"""
    return pair[0] / 2.0 + pair[1] * SQRT3 / 2.0


def to_float(point: Point) -> Tuple[float, float]:
    """Float (x, y) of an exact point"""
    return axis_float(point[0]), axis_float(point[1])


def add_points(p: Point, q: Point) -> Point:
    return (p[0][0] + q[0][0], p[0][1] + q[0][1]), (p[1][0] + q[1][0], p[1][1] + q[1][1])


def scale_point(point: Point, factor: int) -> Point:
    (xa, xb), (ya, yb) = point
    return (xa * factor, xb * factor), (ya * factor, yb * factor)


def point_sum(points: Sequence[Point]) -> Point:
    xa = sum(p[0][0] for p in points)
    xb = sum(p[0][1] for p in points)
    ya = sum(p[1][0] for p in points)
    yb = sum(p[1][1] for p in points)
    return (xa, xb), (ya, yb)


def squared_distance(p: Point, q: Point) -> Surd:
    """Exact |q - p|²"""
    dx = Surd.from_pair((q[0][0] - p[0][0], q[0][1] - p[0][1]))
    dy = Surd.from_pair((q[1][0] - p[1][0], q[1][1] - p[1][1]))
    return dx * dx + dy * dy


# === INTEGER PREDICATES ===
# Differences are kept as doubled pairs (a, b) = a + b√3; the common
# positive factor never changes a sign.

def _mul(p: AxisPair, q: AxisPair) -> AxisPair:
    return p[0] * q[0] + 3 * p[1] * q[1], p[0] * q[1] + p[1] * q[0]


def _sub(p: AxisPair, q: AxisPair) -> AxisPair:
    return p[0] - q[0], p[1] - q[1]


def compare_axis(p: AxisPair, q: AxisPair) -> int:
    """Sign of p - q on one axis"""
    return surd_sign(p[0] - q[0], p[1] - q[1])


def orientation(o: Point, p: Point, q: Point) -> int:
    """+1 counterclockwise, -1 clockwise, 0 collinear"""
    ux, uy = _sub(p[0], o[0]), _sub(p[1], o[1])
    vx, vy = _sub(q[0], o[0]), _sub(q[1], o[1])
    left = _mul(ux, vy)
    right = _mul(uy, vx)
    return surd_sign(left[0] - right[0], left[1] - right[1])


def dot_sign(o: Point, p: Point, q: Point) -> int:
    """Sign of (p - o)·(q - o)"""
    ux, uy = _sub(p[0], o[0]), _sub(p[1], o[1])
    vx, vy = _sub(q[0], o[0]), _sub(q[1], o[1])
    a = _mul(ux, vx)
    b = _mul(uy, vy)
    return surd_sign(a[0] + b[0], a[1] + b[1])


def _between(p: AxisPair, q: AxisPair, r: AxisPair) -> bool:
    lo, hi = (p, q) if compare_axis(p, q) <= 0 else (q, p)
    return compare_axis(lo, r) <= 0 and compare_axis(r, hi) <= 0


def _on_segment(p: Point, q: Point, r: Point) -> bool:
    """Collinear r lies within the closed segment pq"""
    return _between(p[0], q[0], r[0]) and _between(p[1], q[1], r[1])


def segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    """Closed segments p1p2 and q1q2 share at least one point"""
    d1 = orientation(q1, q2, p1)
    d2 = orientation(q1, q2, p2)
    d3 = orientation(p1, p2, q1)
    d4 = orientation(p1, p2, q2)

    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    if d1 == 0 and _on_segment(q1, q2, p1):
        return True
    if d2 == 0 and _on_segment(q1, q2, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, q1):
        return True
    if d4 == 0 and _on_segment(p1, p2, q2):
        return True
    return False


def segments_conflict(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    """
    Two embedded edges meet somewhere other than a shared endpoint.

    Edges sharing one endpoint conflict only when they overlap along a line.
    """
    shared = {p1, p2} & {q1, q2}
    if not shared:
        return segments_intersect(p1, p2, q1, q2)
    if len(shared) == 2:
        return True
    common = shared.pop()
    p_other = p2 if p1 == common else p1
    q_other = q2 if q1 == common else q1
    if orientation(common, p_other, q_other) != 0:
        return False
    return dot_sign(common, p_other, q_other) > 0


def segments_cross_properly(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    """Interiors of the two segments cross at a single point"""
    d1 = orientation(q1, q2, p1)
    d2 = orientation(q1, q2, p2)
    d3 = orientation(p1, p2, q1)
    d4 = orientation(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


# === SPATIAL BUCKETS ===

def bucket_segments(
    segments: Sequence[Tuple[Point, Point]],
    cell: float = 1.0
) -> Dict[Tuple[int, int], List[int]]:
    """
    Hash segment indices into the float grid cells their bounding boxes touch.

    Buckets only prune candidate pairs; the decision is always exact.
    """
    buckets: Dict[Tuple[int, int], List[int]] = {}
    pad = 1e-9
    for idx, (p, q) in enumerate(segments):
        (x1, y1), (x2, y2) = to_float(p), to_float(q)
        ix0 = math.floor((min(x1, x2) - pad) / cell)
        ix1 = math.floor((max(x1, x2) + pad) / cell)
        iy0 = math.floor((min(y1, y2) - pad) / cell)
        iy1 = math.floor((max(y1, y2) + pad) / cell)
        for ix in range(ix0, ix1 + 1):
            for iy in range(iy0, iy1 + 1):
                buckets.setdefault((ix, iy), []).append(idx)
    return buckets
