from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_rasterize, hull_contains_all, point_in_polygon, random_blob
from schemgraph.errors import DegenerateGeometryError
from schemgraph.geometry import (
    BoundingBox,
    Polygon,
    bbox_to_polygon,
    border_distance,
    convex_hull,
    iou,
    normalize_angle,
    point_segment_distance,
    rasterize,
    simplify,
    trace_contours,
    transform_prototype,
)
from schemgraph.raster import BinaryMap, connected_components


def poly(*pts) -> Polygon:
    return Polygon(np.array(pts, np.float64))


# --- trace_contours ---------------------------------------------------------

def test_trace_empty_map():
    assert trace_contours(BinaryMap(np.zeros((4, 4), np.uint8))) == []


def test_trace_block_is_exact_rectangle():
    m = np.zeros((8, 8), np.uint8)
    m[2:5, 2:5] = 1
    out = trace_contours(BinaryMap(m))
    assert len(out) == 1
    assert out[0].vertices.tolist() == [[2, 2], [5, 2], [5, 5], [2, 5]]
    assert np.array_equal(rasterize(out[0], 8, 8).bits, m)


def test_trace_two_blocks_row_major_order():
    m = np.zeros((10, 10), np.uint8)
    m[6:8, 1:3] = 1  # second in row-major order
    m[1:3, 5:8] = 1  # first
    out = trace_contours(BinaryMap(m))
    assert len(out) == 2
    assert out[0].vertices[0].tolist() == [5, 1]
    assert out[1].vertices[0].tolist() == [1, 6]
    for p, (r0, r1, c0, c1) in zip(out, [(1, 3, 5, 8), (6, 8, 1, 3)]):
        want = np.zeros((10, 10), np.uint8)
        want[r0:r1, c0:c1] = 1
        assert np.array_equal(rasterize(p, 10, 10).bits, want)


def test_trace_is_counterclockwise_by_shoelace():
    m = np.zeros((6, 6), np.uint8)
    m[1:4, 2:5] = 1
    m[3:5, 2:3] = 1  # L-shape
    p = trace_contours(BinaryMap(m))[0]
    assert p.signed_area() > 0


def test_trace_diagonal_pinch_roundtrips():
    m = np.zeros((4, 4), np.uint8)
    m[0, 0] = m[1, 1] = 1
    out = trace_contours(BinaryMap(m))
    assert len(out) == 1
    assert np.array_equal(rasterize(out[0], 4, 4).bits, m)


def test_trace_rasterize_roundtrip_random_blobs():
    rng = np.random.default_rng(11)
    for _ in range(30):
        blob = random_blob(rng, 32)
        m = BinaryMap(blob)
        polys = trace_contours(m)
        assert len(polys) == 1
        back = rasterize(polys[0], m.width, m.height)
        assert np.array_equal(back.bits, blob)


# --- convex hull ------------------------------------------------------------

def test_hull_of_triangle_is_itself():
    h = convex_hull([(0, 0), (4, 0), (2, 3)])
    assert sorted(map(tuple, h.vertices.tolist())) == [(0, 0), (2, 3), (4, 0)]


def test_hull_drops_interior_point():
    h = convex_hull([(0, 0), (1, 0), (0, 1), (1, 1), (0.5, 0.5)])
    assert h.vertices.tolist() == [[0, 0], [1, 0], [1, 1], [0, 1]]


def test_hull_collinear_raises():
    with pytest.raises(DegenerateGeometryError):
        convex_hull([(i, 2 * i) for i in range(5)])


def test_hull_too_few_points_raises():
    with pytest.raises(DegenerateGeometryError):
        convex_hull([(0, 0), (1, 1)])


def test_hull_starts_at_lexicographic_minimum():
    h = convex_hull([(5, 5), (1, 7), (3, 0), (9, 2)])
    assert h.vertices[0].tolist() == [1, 7]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 50), st.integers(0, 50)),
                min_size=3, max_size=20, unique=True))
def test_hull_contains_inputs_and_is_convex(pts):
    try:
        h = convex_hull(pts)
    except DegenerateGeometryError:
        return  # collinear draws are legitimately rejected
    v = h.vertices
    assert hull_contains_all(v.tolist(), pts)
    n = len(v)
    for i in range(n):
        o, a, b = v[i], v[(i + 1) % n], v[(i + 2) % n]
        cross = (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
        assert cross >= 0


# --- simplify ---------------------------------------------------------------

def test_simplify_epsilon_zero_keeps_collinear_drops_duplicates():
    p = poly((0, 0), (1, 0), (1, 0), (2, 0), (2, 2), (0, 2))
    out = simplify(p, 0.0)
    assert out.vertices.tolist() == [[0, 0], [1, 0], [2, 0], [2, 2], [0, 2]]


def test_simplify_removes_edge_midpoint():
    p = poly((0, 0), (2, 0), (2, 2), (1, 2), (0, 2))
    out = simplify(p, 0.5)
    assert out.vertices.tolist() == [[0, 0], [2, 0], [2, 2], [0, 2]]


def test_simplify_triangle_floor():
    t = poly((0, 0), (4, 0), (2, 3))
    for eps in (0.1, 1.0, 100.0):
        assert len(simplify(t, eps)) == 3


def test_simplify_never_adds_vertices_and_bounds_deviation():
    rng = np.random.default_rng(12)
    for _ in range(20):
        blob = random_blob(rng, 24)
        contour = trace_contours(BinaryMap(blob))[0]
        eps = float(rng.uniform(0.5, 3.0))
        out = simplify(contour, eps)
        assert len(out) <= len(contour)
        kept = {tuple(v) for v in out.vertices.tolist()}
        ring = out.vertices.tolist()
        for v in contour.vertices.tolist():
            if tuple(v) in kept:
                continue
            d = min(point_segment_distance(tuple(v), tuple(ring[i]),
                                           tuple(ring[(i + 1) % len(ring)]))
                    for i in range(len(ring)))
            assert d <= eps + 1e-9


# --- bbox_to_polygon / rasterize --------------------------------------------

def test_bbox_to_polygon_pinned():
    p = bbox_to_polygon(BoundingBox(0, 0, 2, 2))
    assert p.vertices.tolist() == [[0, 0], [2, 0], [2, 2], [0, 2]]
    assert p.area() == BoundingBox(0, 0, 2, 2).width * BoundingBox(0, 0, 2, 2).height


def test_degenerate_bbox_rejected():
    with pytest.raises(DegenerateGeometryError):
        BoundingBox(3, 0, 3, 2)


def test_rasterize_unit_square_one_pixel():
    out = rasterize(poly((0, 0), (1, 0), (1, 1), (0, 1)), 2, 2)
    assert out.bits.tolist() == [[1, 0], [0, 0]]


def test_rasterize_outside_bounds_empty():
    out = rasterize(poly((10, 10), (20, 10), (20, 20), (10, 20)), 4, 4)
    assert out.count() == 0


def test_rasterize_full_image_rectangle():
    out = rasterize(poly((0, 0), (5, 0), (5, 4), (0, 4)), 5, 4)
    assert out.count() == 20


def test_rasterize_on_edge_centers_count_inside():
    # every pixel center of the 2x2 frame lies exactly on this ring
    out = rasterize(poly((0.5, 0.5), (1.5, 0.5), (1.5, 1.5), (0.5, 1.5)), 2, 2)
    assert out.count() == 4


def test_rasterize_matches_point_in_polygon_oracle():
    rng = np.random.default_rng(13)
    for _ in range(25):
        pts = rng.uniform(0, 12, size=(int(rng.integers(3, 8)), 2))
        try:
            hull = convex_hull([tuple(p) for p in pts])
        except DegenerateGeometryError:
            continue
        got = rasterize(hull, 12, 12).bits
        want = brute_rasterize(hull.vertices.tolist(), 12, 12)
        assert np.array_equal(got, want)


def test_point_in_polygon_oracle_self_check():
    square = [(0, 0), (2, 0), (2, 2), (0, 2)]
    assert point_in_polygon(1, 1, square)
    assert point_in_polygon(0, 1, square)  # on edge
    assert not point_in_polygon(3, 1, square)


# --- transform_prototype ----------------------------------------------------

def test_transform_scaling_only():
    out = transform_prototype([("a", (1.0, 0.5))], BoundingBox(0, 0, 10, 10), 0)
    assert out == [("a", (10.0, 5.0))]


def test_transform_rotation_90_ccw():
    out = transform_prototype([("a", (1.0, 0.5))], BoundingBox(0, 0, 1, 1), 90)
    (name, (x, y)), = out
    assert name == "a"
    assert math.isclose(x, 0.5, abs_tol=1e-12)
    assert math.isclose(y, 1.0, abs_tol=1e-12)


def test_transform_360_equals_0():
    ports = [("a", (0.3, 0.9)), ("b", (1.0, 0.0))]
    box = BoundingBox(2, 3, 9, 11)
    assert transform_prototype(ports, box, 360) == transform_prototype(ports, box, 0)


def test_transform_rotation_roundtrip_within_1e9():
    ports = [("p", (0.25, 0.75)), ("q", (1.0, 0.5))]
    unit = BoundingBox(0, 0, 1, 1)
    for rot in (30, 45, 123.4, 270):
        once = transform_prototype(ports, unit, rot)
        back = transform_prototype([(n, p) for n, p in once], unit, 360 - rot)
        for (name, (x, y)), (_, (ox, oy)) in zip(back, ports):
            assert math.isclose(x, ox, abs_tol=1e-9)
            assert math.isclose(y, oy, abs_tol=1e-9)


def test_transform_rejects_out_of_frame_ports():
    with pytest.raises(ValueError):
        transform_prototype([("a", (1.2, 0.5))], BoundingBox(0, 0, 1, 1), 0)


def test_normalize_angle():
    assert normalize_angle(360) == 0
    assert normalize_angle(-90) == 270
    assert normalize_angle(725) == 5


# --- iou ----------------------------------------------------------------------

def test_iou_identical_is_one():
    p = poly((1, 1), (5, 1), (5, 4), (1, 4))
    assert iou(p, p, 8, 8) == 1.0


def test_iou_disjoint_is_zero():
    a = poly((0, 0), (2, 0), (2, 2), (0, 2))
    b = poly((4, 4), (6, 4), (6, 6), (4, 6))
    assert iou(a, b, 8, 8) == 0.0


def test_iou_pinned_third():
    a = poly((0, 0), (2, 0), (2, 1), (0, 1))
    b = poly((1, 0), (3, 0), (3, 1), (1, 1))
    assert iou(a, b, 4, 2) == pytest.approx(1 / 3)


def test_iou_symmetric_exactly():
    rng = np.random.default_rng(14)
    for _ in range(10):
        pts_a = rng.uniform(0, 10, size=(5, 2))
        pts_b = rng.uniform(0, 10, size=(5, 2))
        try:
            a = convex_hull(map(tuple, pts_a))
            b = convex_hull(map(tuple, pts_b))
        except DegenerateGeometryError:
            continue
        assert iou(a, b, 10, 10) == iou(b, a, 10, 10)


def test_border_distance():
    p = poly((0, 0), (4, 0), (4, 4), (0, 4))
    assert border_distance(p, (2, 0)) == 0.0
    assert border_distance(p, (2, 2)) == 2.0
    assert border_distance(p, (6, 2)) == 2.0
