from __future__ import annotations

import numpy as np

from model_adapter.contours import largest_component, mask_to_polygon


def shoelace(ring) -> float:
    area = 0.0
    for i in range(len(ring)):
        x1, y1 = ring[i]
        x2, y2 = ring[(i + 1) % len(ring)]
        area += x1 * y2 - x2 * y1
    return area / 2.0


def test_block_contour_is_exact_rectangle():
    mask = np.zeros((8, 8), np.uint8)
    mask[2:5, 3:7] = 1
    ring = mask_to_polygon(mask)
    assert ring == [[3, 2], [7, 2], [7, 5], [3, 5]]


def test_contour_area_equals_pixel_count():
    # for crack-following outlines of hole-free components the shoelace
    # area is exactly the pixel count; independent cross-check of the
    # shared contour semantics
    rng = np.random.default_rng(5)
    for _ in range(20):
        mask = np.zeros((24, 24), np.uint8)
        for _ in range(int(rng.integers(1, 4))):
            r, c = rng.integers(2, 14, 2)
            h, w = rng.integers(3, 9, 2)
            mask[r:r + h, c:c + w] = 1
        comp = largest_component(mask)
        if comp.sum() == 0:
            continue
        ring = mask_to_polygon(mask)
        assert shoelace(ring) == comp.sum()  # also proves positive orientation


def test_diagonal_pinch_one_ring():
    mask = np.zeros((4, 4), np.uint8)
    mask[0, 0] = mask[1, 1] = 1
    ring = mask_to_polygon(mask)
    assert shoelace(ring) == 2


def test_largest_component_wins():
    mask = np.zeros((10, 10), np.uint8)
    mask[0, 0] = 1
    mask[4:8, 4:8] = 1
    ring = mask_to_polygon(mask)
    assert shoelace(ring) == 16


def test_empty_mask_gives_none():
    assert mask_to_polygon(np.zeros((5, 5), np.uint8)) is None
