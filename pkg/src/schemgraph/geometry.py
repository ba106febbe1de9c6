"""Polygon and point algebra in the image coordinate frame.

Coordinates are (x, y) with x rightward and y downward. Pixel (row r,
col c) covers the unit square [c, c+1] x [r, r+1]; its center is
(c + 0.5, r + 0.5). "Counterclockwise" throughout means positive
shoelace area of the (x, y) sequence — on screen, with y growing
downward, such a ring renders clockwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateGeometryError
from .raster import BinaryMap, connected_components

Point = tuple[float, float]


@dataclass(frozen=True)
class BoundingBox:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise DegenerateGeometryError(
                f"degenerate box ({self.xmin}, {self.ymin}, {self.xmax}, {self.ymax})")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def clamped(self, width: float, height: float) -> "BoundingBox":
        return BoundingBox(max(0.0, self.xmin), max(0.0, self.ymin),
                           min(float(width), self.xmax), min(float(height), self.ymax))


@dataclass(frozen=True, eq=False)
class Polygon:
    """Implicitly closed vertex ring, float64 (n, 2)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise DegenerateGeometryError(f"polygon needs >= 3 (x, y) vertices, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise DegenerateGeometryError("polygon vertices must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)

    def __len__(self) -> int:
        return len(self.vertices)

    def signed_area(self) -> float:
        x = self.vertices[:, 0]
        y = self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def area(self) -> float:
        return abs(self.signed_area())

    def perimeter(self) -> float:
        d = np.roll(self.vertices, -1, axis=0) - self.vertices
        return float(np.hypot(d[:, 0], d[:, 1]).sum())

    def centroid(self) -> Point:
        """Area centroid; falls back to the vertex mean for zero-area rings."""
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        cross = v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]
        a = cross.sum() / 2.0
        if a == 0.0:
            m = v.mean(axis=0)
            return (float(m[0]), float(m[1]))
        cx = float(((v[:, 0] + nxt[:, 0]) * cross).sum() / (6.0 * a))
        cy = float(((v[:, 1] + nxt[:, 1]) * cross).sum() / (6.0 * a))
        return (cx, cy)

    def bounds(self) -> BoundingBox:
        v = self.vertices
        return BoundingBox(float(v[:, 0].min()), float(v[:, 1].min()),
                           float(v[:, 0].max()), float(v[:, 1].max()))

    def equals(self, other: "Polygon") -> bool:
        return self.vertices.shape == other.vertices.shape and \
            bool(np.array_equal(self.vertices, other.vertices))


def normalize_angle(degrees: float) -> float:
    """Fold into [0, 360)."""
    a = math.fmod(float(degrees), 360.0)
    return a + 360.0 if a < 0 else a


def bbox_to_polygon(box: BoundingBox) -> Polygon:
    return Polygon(np.array([
        [box.xmin, box.ymin],
        [box.xmax, box.ymin],
        [box.xmax, box.ymax],
        [box.xmin, box.ymax],
    ]))


def rasterize(poly: Polygon, width: int, height: int) -> BinaryMap:
    """Even-odd fill sampled at pixel centers; on-edge centers are inside."""
    return BinaryMap(kernels.fill_polygon(poly.vertices, int(height), int(width)))


# Crack-walk directions in (dx, dy): E, S, W, N.
_DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def _walk_boundary(is_stroke, r0: int, c0: int) -> list[tuple[float, float]]:
    """Follow pixel-boundary cracks keeping stroke on the right.

    Starts at the top-left corner of the component's first row-major pixel
    heading East; emits a corner whenever direction changes. Wraps
    8-connected diagonal pinches by preferring left turns.
    """
    start = (c0, r0)
    verts = [(float(c0), float(r0))]
    x, y = c0, r0
    d = 0
    while True:
        dx, dy = _DIRS[d]
        x += dx
        y += dy
        if d == 0:
            lf, rf = (y - 1, x), (y, x)
        elif d == 1:
            lf, rf = (y, x), (y, x - 1)
        elif d == 2:
            lf, rf = (y, x - 1), (y - 1, x - 1)
        else:
            lf, rf = (y - 1, x - 1), (y - 1, x)
        if is_stroke(*lf):
            nd = (d - 1) % 4
        elif is_stroke(*rf):
            nd = d
        else:
            nd = (d + 1) % 4
        if (x, y) == start and nd == 0:
            break
        if nd != d:
            verts.append((float(x), float(y)))
        d = nd
    return verts


def trace_contours(m: BinaryMap) -> list[Polygon]:
    """Outer contour of every 8-connected stroke component.

    Vertices lie on pixel boundaries (integer lattice), rings are
    counterclockwise, and components come out in row-major order of their
    first pixel. Holes are ignored; a component containing holes traces to
    its filled outline. Rings may touch themselves at diagonal pinch
    corners, which the even-odd rasterizer handles.
    """
    lm = connected_components(m, 8)
    if lm.count == 0:
        return []
    labels = lm.labels
    h, w = labels.shape
    flat = labels.ravel()
    nz = np.flatnonzero(flat)
    order, first_idx = np.unique(flat[nz], return_index=True)
    polys = []
    for lab, fi in zip(order.tolist(), nz[first_idx].tolist()):
        r0, c0 = divmod(fi, w)

        def is_stroke(rr: int, cc: int, _lab=lab) -> bool:
            return 0 <= rr < h and 0 <= cc < w and labels[rr, cc] == _lab

        polys.append(Polygon(np.array(_walk_boundary(is_stroke, r0, c0))))
    return polys


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> Polygon:
    """Monotone-chain hull, counterclockwise from the lexicographically smallest vertex.

    Collinear boundary points are dropped (minimal vertex set). Fewer than
    three distinct points, or an all-collinear input, is degenerate.
    """
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) < 3:
        raise DegenerateGeometryError(f"hull needs >= 3 distinct points, got {len(pts)}")
    lower: list[Point] = []
    for p in pts:
        while len(lower) > 1 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) > 1 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    ring = lower[:-1] + upper[:-1]
    if len(ring) < 3:
        raise DegenerateGeometryError("all points are collinear")
    return Polygon(np.array(ring))


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    px, py = p
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    if denom == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / denom
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def border_distance(poly: Polygon, p: Point) -> float:
    """Distance from a point to the polygon's boundary ring."""
    v = poly.vertices
    best = math.inf
    for i in range(len(v)):
        j = (i + 1) % len(v)
        d = point_segment_distance(p, (v[i, 0], v[i, 1]), (v[j, 0], v[j, 1]))
        if d < best:
            best = d
    return best


def border_projection(poly: Polygon, p: Point) -> tuple[float, float]:
    """Project a point onto the boundary; returns (arc position, distance).

    Arc position is measured from vertex 0 along the ring; ties resolve to
    the smaller position.
    """
    v = poly.vertices
    s = 0.0
    best = (math.inf, 0.0)
    for i in range(len(v)):
        j = (i + 1) % len(v)
        ax, ay = float(v[i, 0]), float(v[i, 1])
        bx, by = float(v[j, 0]), float(v[j, 1])
        seg = math.hypot(bx - ax, by - ay)
        if seg == 0.0:
            continue
        t = ((p[0] - ax) * (bx - ax) + (p[1] - ay) * (by - ay)) / (seg * seg)
        t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
        d = math.hypot(p[0] - (ax + t * (bx - ax)), p[1] - (ay + t * (by - ay)))
        if d < best[0]:
            best = (d, s + t * seg)
        s += seg
    return (best[1], best[0])


def _dp_mark(pts: list[Point], lo: int, hi: int, eps: float, keep: list[bool]) -> None:
    if hi - lo < 2:
        return
    dmax = -1.0
    imax = lo
    for i in range(lo + 1, hi):
        d = point_segment_distance(pts[i], pts[lo], pts[hi])
        if d > dmax:
            dmax = d
            imax = i
    if dmax < eps:  # strict: epsilon 0 keeps collinear vertices
        return
    keep[imax] = True
    _dp_mark(pts, lo, imax, eps, keep)
    _dp_mark(pts, imax, hi, eps, keep)


def simplify(poly: Polygon, epsilon: float) -> Polygon:
    """Douglas-Peucker ring reduction.

    Exact consecutive duplicates are always dropped; beyond that a vertex
    is removed only if it lies strictly within epsilon of the simplified
    outline, so epsilon 0 is duplicate removal only. At least 3 vertices
    survive.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    ring: list[Point] = []
    for x, y in poly.vertices.tolist():
        if not ring or ring[-1] != (x, y):
            ring.append((x, y))
    if len(ring) > 1 and ring[0] == ring[-1]:
        ring.pop()
    if len(ring) < 3:
        raise DegenerateGeometryError("polygon collapsed to fewer than 3 distinct vertices")
    if epsilon == 0:
        return Polygon(np.array(ring))
    far = max(range(1, len(ring)),
              key=lambda i: (math.hypot(ring[i][0] - ring[0][0], ring[i][1] - ring[0][1]), -i))
    closed = ring + [ring[0]]
    keep = [False] * len(closed)
    keep[0] = keep[far] = keep[-1] = True
    _dp_mark(closed, 0, far, epsilon, keep)
    _dp_mark(closed, far, len(closed) - 1, epsilon, keep)
    kept_idx = [i for i in range(len(ring)) if keep[i]]
    if len(kept_idx) < 3:
        # floor of 3: re-add the most significant dropped vertex
        extra = max((i for i in range(len(ring)) if not keep[i]),
                    key=lambda i: (point_segment_distance(ring[i], ring[0], ring[far]), -i),
                    default=None)
        if extra is not None:
            kept_idx = sorted(set(kept_idx) | {extra})
    out = [ring[i] for i in kept_idx]
    if len(out) < 3:
        out = ring[:3]
    return Polygon(np.array(out))


def transform_prototype(ports, target: BoundingBox, rotation: float):
    """Rotate unit-frame ports about (0.5, 0.5), then map the frame onto a box.

    `ports` is a sequence of (name, (x, y)) with coordinates in [0, 1]^2;
    rotation is counterclockwise degrees (positive-shoelace convention).
    Names are preserved.
    """
    theta = math.radians(normalize_angle(rotation))
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    out = []
    for name, (u, v) in ports:
        if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
            raise ValueError(f"port {name!r} outside the unit frame: ({u}, {v})")
        du, dv = u - 0.5, v - 0.5
        ru = du * cos_t - dv * sin_t + 0.5
        rv = du * sin_t + dv * cos_t + 0.5
        out.append((name, (target.xmin + ru * target.width,
                           target.ymin + rv * target.height)))
    return out


def iou(a: Polygon, b: Polygon, width: int, height: int) -> float:
    """Pixel-set IoU of the two rasterizations; 0 when the union is empty."""
    ra = kernels.fill_polygon(a.vertices, int(height), int(width))
    rb = kernels.fill_polygon(b.vertices, int(height), int(width))
    union = int((ra | rb).sum())
    if union == 0:
        return 0.0
    return int((ra & rb).sum()) / union
