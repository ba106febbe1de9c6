"""Terminal keypoints from border-stroke intersections, and port assignment.

A symbol's electrical terminals show up where (text-free, eroded) strokes
cross the 1-px boundary ring of its polygon. Intersection pixels are
clustered along the border and reduced to centroids; the clusters are then
matched against the class prototype's rotated/scaled port layout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .annotations import PolygonAnnotation, Port, PrototypeLibrary
from .geometry import BoundingBox, Point, border_projection, rasterize, transform_prototype
from .raster import BinaryMap, dilate, erode, mask_and, mask_subtract

DEFAULT_EROSION_RADIUS = 1
DEFAULT_CLUSTER_GAP = 3.0


class AssignmentStatus(str, Enum):
    VERIFIED = "verified"
    COUNT_MISMATCH = "count-mismatch"
    UNVERIFIED_NO_ROTATION = "unverified-no-rotation"
    NO_PROTOTYPE = "no-prototype"


@dataclass(frozen=True)
class PortAssignment:
    symbol_ref: int
    pairs: tuple[Port, ...]
    status: AssignmentStatus

    def to_dict(self) -> dict:
        return {"symbol_ref": self.symbol_ref,
                "status": self.status.value,
                "pairs": [{"name": p.name, "x": p.x, "y": p.y} for p in self.pairs]}


def border_ring(fill: BinaryMap) -> BinaryMap:
    """1-px-thick outline pixels of a filled mask (fill minus its erosion)."""
    return mask_subtract(fill, erode(fill, 1))


def _cluster_centroids(intersections: BinaryMap, outline, cluster_gap: float) -> list[Point]:
    """Group intersection pixels into runs along the border and average them.

    Pixels are ordered by their arc position on the outline (measured from
    vertex 0); consecutive pixels within ``cluster_gap`` of each other merge,
    including across the ring's wrap point.
    """
    rows, cols = np.nonzero(intersections.bits)
    if len(rows) == 0:
        return []
    items = []
    for r, c in zip(rows.tolist(), cols.tolist()):
        center = (c + 0.5, r + 0.5)
        s, _ = border_projection(outline, center)
        items.append((s, r, c, center))
    items.sort()
    clusters: list[list[tuple[float, float]]] = [[items[0][3]]]
    starts = [items[0][0]]
    last_s = items[0][0]
    for s, _r, _c, center in items[1:]:
        if s - last_s <= cluster_gap:
            clusters[-1].append(center)
        else:
            clusters.append([center])
            starts.append(s)
        last_s = s
    if len(clusters) > 1:
        perimeter = outline.perimeter()
        if (perimeter - last_s) + starts[0] <= cluster_gap:
            clusters[0] = clusters.pop() + clusters[0]
            starts[0] = starts.pop() - perimeter  # wrapped cluster sorts first
    order = sorted(range(len(clusters)), key=lambda i: starts[i])
    out = []
    for i in order:
        pts = clusters[i]
        out.append((sum(p[0] for p in pts) / len(pts), sum(p[1] for p in pts) / len(pts)))
    return out


def generate_keypoints(m: BinaryMap, symbol: PolygonAnnotation, text_polygons=(),
                       erosion_radius: int = DEFAULT_EROSION_RADIUS,
                       cluster_gap: float = DEFAULT_CLUSTER_GAP) -> list[Point]:
    """Terminal keypoints of one symbol polygon.

    Erosion suppresses false positives from the symbol's own boundary
    pixels; text strokes are removed because texts carry no electrical
    connections even when drawn touching a symbol.
    """
    work = erode(m, erosion_radius)
    for text in text_polygons:
        work = mask_subtract(work, rasterize(text.outline, m.width, m.height))
    fill = rasterize(symbol.outline, m.width, m.height)
    intersections = mask_and(work, border_ring(fill))
    return _cluster_centroids(intersections, symbol.outline, cluster_gap)


def wire_keypoints(wire: PolygonAnnotation, m: BinaryMap,
                   cluster_gap: float = DEFAULT_CLUSTER_GAP) -> list[Point]:
    """Contact points where external strokes touch the wire polygon.

    Uses the full (non-eroded) map restricted to pixels just outside the
    wire's fill: the one-pixel outer ring. Each contact cluster marks a
    place where the wire meets another annotation across its boundary.
    """
    fill = rasterize(wire.outline, m.width, m.height)
    outer_ring = mask_subtract(dilate(fill, 1), fill)
    contacts = mask_and(m, outer_ring)
    return _cluster_centroids(contacts, wire.outline, cluster_gap)


def _pairing_distance(keypoints, ports, perm) -> float:
    # ascending keypoint order; the optimality oracle sums the same way
    total = 0.0
    for i, j in enumerate(perm):
        total += math.hypot(keypoints[i][0] - ports[j][1][0],
                            keypoints[i][1] - ports[j][1][1])
    return total


def _greedy_partial(keypoints, placed) -> list[Port]:
    """Nearest-first partial pairing for count-mismatch diagnostics."""
    pairs = []
    free_k = list(range(len(keypoints)))
    free_p = list(range(len(placed)))
    while free_k and free_p:
        best = None
        for ki in free_k:
            for pi in free_p:
                d = math.hypot(keypoints[ki][0] - placed[pi][1][0],
                               keypoints[ki][1] - placed[pi][1][1])
                key = (d, ki, placed[pi][0])
                if best is None or key < best[0]:
                    best = (key, ki, pi)
        _, ki, pi = best
        name, point = placed[pi]
        pairs.append(Port(name, keypoints[ki][0], keypoints[ki][1]))
        free_k.remove(ki)
        free_p.remove(pi)
    return pairs


def assign_ports(keypoints, symbol: PolygonAnnotation, bbox: BoundingBox,
                 rotation: float | None, library: PrototypeLibrary,
                 symbol_ref: int = 0) -> PortAssignment:
    """Match detected keypoints to the prototype's named ports.

    The prototype layout is rotated and scaled onto the symbol's bounding
    box; with matching counts the bijection minimizing total Euclidean
    distance wins (exhaustive over <= 6 ports, ties to the first optimal
    permutation in lexicographic order). All failure modes are encoded in
    the status, never raised.
    """
    prototype = library.get(symbol.label)
    keypoints = [(float(x), float(y)) for x, y in keypoints]
    if prototype is None:
        pairs = tuple(Port(f"kp{i}", x, y) for i, (x, y) in enumerate(keypoints))
        return PortAssignment(symbol_ref, pairs, AssignmentStatus.NO_PROTOTYPE)
    placed = transform_prototype([(p.name, (p.x, p.y)) for p in prototype], bbox,
                                 0.0 if rotation is None else rotation)
    if len(keypoints) != len(placed):
        pairs = tuple(_greedy_partial(keypoints, placed))
        return PortAssignment(symbol_ref, pairs, AssignmentStatus.COUNT_MISMATCH)
    best_perm = None
    best_total = math.inf
    for perm in itertools.permutations(range(len(placed))):
        total = _pairing_distance(keypoints, placed, perm)
        if total < best_total:
            best_total = total
            best_perm = perm
    pairs = tuple(Port(placed[j][0], keypoints[i][0], keypoints[i][1])
                  for i, j in enumerate(best_perm))
    status = (AssignmentStatus.UNVERIFIED_NO_ROTATION if rotation is None
              else AssignmentStatus.VERIFIED)
    return PortAssignment(symbol_ref, pairs, status)
