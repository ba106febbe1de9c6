"""Coarse polygon handling, automatic mask refinement, and wire extraction.

Stage order within one image is fixed: coarse rectangles from boxes,
tighten each against the stroke map, then sweep the uncovered strokes
into wire polygons. Overlaps between annotations in stroke areas are
verified and reported, never auto-resolved.
"""

from __future__ import annotations

import colorsys
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .annotations import (
    ClassTaxonomy,
    ImageAnnotationSet,
    PolygonAnnotation,
    Refinement,
    WIRE_CLASS,
)
from .errors import DegenerateGeometryError, EmptyInteriorError
from .geometry import Polygon, bbox_to_polygon, convex_hull, rasterize, simplify, trace_contours
from .raster import BinaryMap, connected_components, mask_and, mask_subtract

log = logging.getLogger(__name__)

DEFAULT_EPSILON = 1.0
DEFAULT_MIN_WIRE_AREA = 8


@dataclass
class RefinementReport:
    """Per-image counters plus the stroke-area overlap pairs."""

    refined: int = 0
    hull_fallback: int = 0
    empty_interior: int = 0
    overlaps: list[tuple[int, int]] = field(default_factory=list)
    empty_indices: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "refined": self.refined,
            "hull_fallback": self.hull_fallback,
            "empty_interior": self.empty_interior,
            "empty_indices": list(self.empty_indices),
            "overlaps": [list(p) for p in self.overlaps],
        }


def coarse_from_bboxes(anns: ImageAnnotationSet, m: BinaryMap | None = None):
    """One coarse rectangle polygon per box, plus the overlap report.

    Overlap pairs are polygon pairs whose rasterized intersection is
    non-empty; when a binary map is supplied the intersection is further
    restricted to stroke pixels (the annotation goal is overlap freedom
    in stroke areas only).
    """
    polygons = [PolygonAnnotation(b.label, bbox_to_polygon(b.box),
                                  Refinement.COARSE, source_bbox=i)
                for i, b in enumerate(anns.bboxes)]
    fills = [rasterize(p.outline, anns.width, anns.height).bits for p in polygons]
    if m is not None:
        fills = [f & m.bits for f in fills]
    overlaps = [(i, j)
                for i in range(len(fills))
                for j in range(i + 1, len(fills))
                if (fills[i] & fills[j]).any()]
    return polygons, overlaps


def _hull_of_strokes(m: BinaryMap) -> Polygon:
    rows, cols = np.nonzero(m.bits)
    centers = np.stack([cols + 0.5, rows + 0.5], axis=1)
    try:
        return convex_hull(centers)
    except DegenerateGeometryError:
        # collinear pixel centers: hull the pixel corners instead, which
        # still covers every stroke pixel
        corners = []
        for r, c in zip(rows.tolist(), cols.tolist()):
            corners.extend([(c, r), (c + 1, r), (c + 1, r + 1), (c, r + 1)])
        return convex_hull(corners)


def refine_polygon(coarse: PolygonAnnotation, m: BinaryMap,
                   epsilon: float = DEFAULT_EPSILON) -> PolygonAnnotation:
    """Tighten a coarse polygon onto the strokes it covers.

    The stroke mask under the polygon is traced into a contour when it is
    a single connected piece; discontinuous content falls back to the
    convex hull of its stroke pixel centers. An empty mask raises
    EmptyInteriorError so callers can flag (not drop) the annotation.
    """
    fill = rasterize(coarse.outline, m.width, m.height)
    masked = mask_and(fill, m)
    if masked.count() == 0:
        raise EmptyInteriorError(f"{coarse.label!r} polygon covers no strokes")
    ncomp = connected_components(masked, 8).count
    if ncomp == 1:
        outline = simplify(trace_contours(masked)[0], epsilon)
        refinement = Refinement.REFINED
    else:
        outline = _hull_of_strokes(masked)
        refinement = Refinement.HULL_FALLBACK
    return replace(coarse, outline=outline, refinement=refinement)


def refine_all(polygons, m: BinaryMap, epsilon: float = DEFAULT_EPSILON):
    """Refine every coarse polygon; empty interiors keep the coarse outline.

    Returns (polygons, report with refined/hull/empty counts).
    """
    report = RefinementReport()
    out = []
    for i, coarse in enumerate(polygons):
        try:
            ann = refine_polygon(coarse, m, epsilon)
        except EmptyInteriorError:
            report.empty_interior += 1
            report.empty_indices.append(i)
            out.append(coarse)
            continue
        if ann.refinement is Refinement.HULL_FALLBACK:
            report.hull_fallback += 1
        else:
            report.refined += 1
        out.append(ann)
    return out, report


def union_fill(polygons, width: int, height: int) -> BinaryMap:
    acc = np.zeros((height, width), np.uint8)
    for p in polygons:
        acc |= rasterize(p.outline, width, height).bits
    return BinaryMap(acc)


def generate_wire_polygons(m: BinaryMap, polygons, epsilon: float = DEFAULT_EPSILON,
                           min_area: int = DEFAULT_MIN_WIRE_AREA):
    """Sweep strokes not claimed by any polygon into wire annotations.

    One wire polygon per 8-connected residual component with at least
    ``min_area`` pixels, in row-major component order.
    """
    residual = mask_subtract(m, union_fill(polygons, m.width, m.height))
    areas = connected_components(residual, 8).areas()
    wires = []
    for idx, contour in enumerate(trace_contours(residual), start=1):
        if int(areas[idx]) < min_area:
            continue
        wires.append(PolygonAnnotation(WIRE_CLASS, simplify(contour, epsilon),
                                       Refinement.WIRE_AUTO))
    return wires


def class_palette(taxonomy: ClassTaxonomy) -> dict[str, tuple[int, int, int]]:
    """Deterministic class -> RGB table (golden-angle hue spacing)."""
    palette = {}
    for name in list(taxonomy.names) + [WIRE_CLASS]:
        idx = taxonomy.index(name)
        hue = (idx * 0.61803398875) % 1.0
        sat = 0.55 + 0.3 * ((idx * 7) % 3) / 2.0
        val = 0.75 + 0.25 * ((idx * 5) % 2)
        r, g, b = colorsys.hsv_to_rgb(hue, sat, val)
        palette[name] = (int(round(r * 255)), int(round(g * 255)), int(round(b * 255)))
    return palette


def render_semantic_map(m: BinaryMap, polygons, taxonomy: ClassTaxonomy):
    """Color stroke pixels by owning class; unclaimed strokes are wire.

    Returns (index map with 0 = background and 1 + class index otherwise,
    legend mapping class name -> (index, rgb), overlap pairs). When
    polygons overlap on strokes the earlier-listed polygon wins and the
    pair is logged.
    """
    idx_map = np.zeros((m.height, m.width), np.int32)
    owner = np.full((m.height, m.width), -1, np.int32)
    overlaps: list[tuple[int, int]] = []
    for i, ann in enumerate(polygons):
        fill = rasterize(ann.outline, m.width, m.height).bits & m.bits
        contested = (fill == 1) & (owner >= 0)
        if contested.any():
            for j in np.unique(owner[contested]).tolist():
                overlaps.append((int(j), i))
                log.warning("polygons %d and %d overlap on %d stroke pixels",
                            j, i, int(contested.sum()))
        claim = (fill == 1) & (owner < 0)
        owner[claim] = i
        idx_map[claim] = 1 + taxonomy.index(ann.label)
    unclaimed = (m.bits == 1) & (owner < 0)
    idx_map[unclaimed] = 1 + taxonomy.index(WIRE_CLASS)
    palette = class_palette(taxonomy)
    seen = {ann.label for ann in polygons} | ({WIRE_CLASS} if unclaimed.any() else set())
    legend = {name: {"index": 1 + taxonomy.index(name), "rgb": list(palette[name])}
              for name in sorted(seen)}
    return idx_map, legend, overlaps
