from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_erode, brute_majority, flood_components, otsu_best_map
from schemgraph.errors import DimensionError
from schemgraph.raster import (
    BinaryMap,
    GrayImage,
    binarize,
    connected_components,
    dilate,
    erode,
    load_binary_map,
    load_image,
    luminance,
    mask_and,
    mask_or,
    mask_subtract,
    median_denoise,
    otsu_threshold,
    save_binary_map,
)


def bmap(rows) -> BinaryMap:
    return BinaryMap(np.array(rows, np.uint8))


def rand_map(rng, h=16, w=16, p=0.4) -> BinaryMap:
    return BinaryMap((rng.random((h, w)) < p).astype(np.uint8))


small_grids = st.integers(2, 12).flatmap(
    lambda h: st.integers(2, 12).flatmap(
        lambda w: st.lists(st.booleans(), min_size=h * w, max_size=h * w).map(
            lambda bits: np.array(bits, np.uint8).reshape(h, w))))


# --- binarize ---------------------------------------------------------------

def test_binarize_uniform_white_is_empty():
    img = GrayImage(np.full((4, 4), 255, np.uint8))
    assert binarize(img, "otsu").count() == 0


def test_binarize_otsu_matches_enumeration_oracle_on_pinned_example():
    values = np.array([[10, 240], [12, 250]], np.uint8)
    out = binarize(GrayImage(values), "otsu")
    assert np.array_equal(out.bits, otsu_best_map(values))
    assert np.array_equal(out.bits, np.array([[1, 0], [1, 0]], np.uint8))


def test_binarize_otsu_matches_enumeration_oracle_randomized():
    rng = np.random.default_rng(7)
    for _ in range(25):
        values = rng.integers(0, 256, size=(6, 6), dtype=np.uint8)
        got = binarize(GrayImage(values), "otsu").bits
        assert np.array_equal(got, otsu_best_map(values))


def test_binarize_fixed_threshold_boundary_is_background():
    img = GrayImage(np.array([[128]], np.uint8))
    assert binarize(img, "fixed", threshold=128).count() == 0
    assert binarize(img, "fixed", threshold=129).count() == 1


def test_binarize_light_polarity_inverts_first():
    img = GrayImage(np.array([[10, 240]], np.uint8))
    out = binarize(img, "fixed", threshold=100, polarity="light")
    # inverted values are 245, 15; strokes where inverted < 100
    assert out.bits.tolist() == [[0, 1]]


def test_binarize_preserves_dimensions():
    img = GrayImage(np.zeros((3, 7), np.uint8))
    out = binarize(img, "otsu")
    assert (out.height, out.width) == (3, 7)


def test_empty_image_rejected():
    with pytest.raises(DimensionError):
        GrayImage(np.zeros((0, 4), np.uint8))


def test_otsu_threshold_tie_breaks_to_smallest():
    # classes {0} and {255}: every T in 1..255 gives the same variance
    assert otsu_threshold(np.array([[0, 255]], np.uint8)) == 1


# --- median_denoise ---------------------------------------------------------

def test_median_radius_zero_is_identity():
    rng = np.random.default_rng(0)
    m = rand_map(rng)
    assert np.array_equal(median_denoise(m, 0).bits, m.bits)


def test_median_removes_isolated_pixel():
    m = bmap([[0, 0, 0], [0, 1, 0], [0, 0, 0]])
    assert median_denoise(m, 1).count() == 0


def test_median_keeps_solid_block_interior():
    m = BinaryMap(np.ones((5, 5), np.uint8))
    assert np.array_equal(median_denoise(m, 1).bits, m.bits)


def test_median_matches_majority_oracle():
    rng = np.random.default_rng(1)
    for radius in (1, 2):
        m = rand_map(rng, 12, 9)
        assert np.array_equal(median_denoise(m, radius).bits,
                              brute_majority(m.bits, radius))


# --- erode / dilate ---------------------------------------------------------

def test_erode_radius_zero_is_identity():
    rng = np.random.default_rng(2)
    m = rand_map(rng)
    assert np.array_equal(erode(m, 0).bits, m.bits)


def test_erode_block_to_center():
    m = np.zeros((5, 5), np.uint8)
    m[1:4, 1:4] = 1
    out = erode(BinaryMap(m), 1)
    want = np.zeros((5, 5), np.uint8)
    want[2, 2] = 1
    assert np.array_equal(out.bits, want)


def test_erode_thin_line_vanishes():
    m = np.zeros((5, 9), np.uint8)
    m[2, :] = 1
    assert erode(BinaryMap(m), 1).count() == 0


def test_erode_matches_neighborhood_oracle():
    rng = np.random.default_rng(3)
    for radius in (1, 2):
        m = rand_map(rng, 10, 14, p=0.7)
        assert np.array_equal(erode(m, radius).bits, brute_erode(m.bits, radius))


@settings(max_examples=40, deadline=None)
@given(grid=small_grids, r1=st.integers(0, 2), r2=st.integers(0, 2))
def test_erode_is_anti_extensive_and_composable(grid, r1, r2):
    m = BinaryMap(grid)
    once = erode(m, r1)
    twice = erode(once, r2)
    # anti-extensive: eroding again only removes strokes
    assert not np.any(twice.bits & ~once.bits)
    assert not np.any(once.bits & ~m.bits)


def test_dilate_is_extensive():
    rng = np.random.default_rng(4)
    m = rand_map(rng, 8, 8, p=0.2)
    assert not np.any(m.bits & ~dilate(m, 1).bits)


# --- connected components ---------------------------------------------------

def test_components_empty_map():
    assert connected_components(bmap([[0, 0], [0, 0]])).count == 0


def test_components_full_map():
    assert connected_components(BinaryMap(np.ones((4, 5), np.uint8))).count == 1


def test_components_diagonal_pair_connectivity():
    m = bmap([[1, 0], [0, 1]])
    assert connected_components(m, 8).count == 1
    assert connected_components(m, 4).count == 2


def test_components_match_flood_fill_oracle():
    rng = np.random.default_rng(5)
    for connectivity in (4, 8):
        for _ in range(20):
            m = rand_map(rng, 13, 11, p=0.45)
            got = connected_components(m, connectivity)
            want, k = flood_components(m.bits, connectivity)
            assert got.count == k
            assert np.array_equal(got.labels, want)  # identical first-encounter order


@settings(max_examples=40, deadline=None)
@given(grid=small_grids, connectivity=st.sampled_from([4, 8]))
def test_components_partition_strokes(grid, connectivity):
    m = BinaryMap(grid)
    lm = connected_components(m, connectivity)
    assert int(lm.areas()[1:].sum()) == m.count()
    assert (lm.labels > 0).sum() == m.count()


# --- mask algebra -----------------------------------------------------------

def test_mask_and_idempotent_commutative():
    rng = np.random.default_rng(6)
    a, b = rand_map(rng), rand_map(rng)
    assert np.array_equal(mask_and(a, a).bits, a.bits)
    assert np.array_equal(mask_and(a, b).bits, mask_and(b, a).bits)


def test_mask_and_with_empty():
    rng = np.random.default_rng(7)
    a = rand_map(rng)
    empty = BinaryMap.blank(a.width, a.height)
    assert mask_and(a, empty).count() == 0


def test_checkerboard_and_inverse_is_empty():
    idx = np.indices((6, 6)).sum(axis=0)
    board = BinaryMap((idx % 2 == 0).astype(np.uint8))
    inverse = BinaryMap((idx % 2 == 1).astype(np.uint8))
    assert mask_and(board, inverse).count() == 0


def test_mask_subtract_examples():
    rng = np.random.default_rng(8)
    a = rand_map(rng)
    empty = BinaryMap.blank(a.width, a.height)
    assert np.array_equal(mask_subtract(a, empty).bits, a.bits)
    assert mask_subtract(a, a).count() == 0


def test_line_minus_middle_third_splits_in_two():
    m = np.zeros((3, 9), np.uint8)
    m[1, :] = 1
    cut = np.zeros((3, 9), np.uint8)
    cut[:, 3:6] = 1
    out = mask_subtract(BinaryMap(m), BinaryMap(cut))
    assert connected_components(out, 8).count == 2


@settings(max_examples=40, deadline=None)
@given(grid=small_grids)
def test_a_splits_into_and_plus_subtract(grid):
    rng = np.random.default_rng(int(grid.sum()))
    a = BinaryMap(grid)
    b = BinaryMap((rng.random(grid.shape) < 0.5).astype(np.uint8))
    rebuilt = mask_or(mask_and(a, b), mask_subtract(a, b))
    assert np.array_equal(rebuilt.bits, a.bits)


def test_dimension_mismatch_raises():
    with pytest.raises(DimensionError):
        mask_and(BinaryMap.blank(3, 3), BinaryMap.blank(4, 3))


# --- luminance and file I/O -------------------------------------------------

def test_luminance_matches_exact_fraction_oracle():
    import math
    rng = np.random.default_rng(9)
    rgb = rng.integers(0, 256, size=(5, 5, 3), dtype=np.uint8)
    got = luminance(rgb)
    for r in range(5):
        for c in range(5):
            exact = (Fraction(299, 1000) * int(rgb[r, c, 0])
                     + Fraction(587, 1000) * int(rgb[r, c, 1])
                     + Fraction(114, 1000) * int(rgb[r, c, 2]))
            want = math.floor(exact + Fraction(1, 2))  # round half up
            assert int(got[r, c]) == want


def test_luminance_half_up_boundary():
    # 0.114 * 250 = 28.5 exactly; half-up gives 29 (naive float math gives 28)
    rgb = np.array([[[0, 0, 250]]], np.uint8)
    assert int(luminance(rgb)[0, 0]) == 29


def test_binary_map_file_roundtrip(tmp_path):
    rng = np.random.default_rng(10)
    m = rand_map(rng)
    path = tmp_path / "m.png"
    save_binary_map(m, path)
    assert np.array_equal(load_binary_map(path).bits, m.bits)


def test_load_image_rgb_uses_integer_luminance(tmp_path):
    from PIL import Image
    rgb = np.zeros((2, 2, 3), np.uint8)
    rgb[0, 0] = (0, 0, 250)
    path = tmp_path / "img.png"
    Image.fromarray(rgb, mode="RGB").save(path)
    img = load_image(path)
    assert int(img.values[0, 0]) == 29
