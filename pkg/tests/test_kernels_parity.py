"""The compiled backend must match the pure NumPy backend bit for bit."""

from __future__ import annotations

import numpy as np
import pytest

from schemgraph.kernels import _pure

_core = pytest.importorskip("schemgraph.kernels._core",
                            reason="compiled kernels not built")


def rand_grid(rng, h, w, p=0.45):
    return (rng.random((h, w)) < p).astype(np.uint8)


def test_erode_dilate_majority_parity():
    rng = np.random.default_rng(21)
    for _ in range(15):
        h, w = int(rng.integers(1, 40)), int(rng.integers(1, 40))
        grid = rand_grid(rng, h, w)
        for radius in (0, 1, 2, 3):
            assert np.array_equal(_core.erode(grid, radius), _pure.erode(grid, radius))
            assert np.array_equal(_core.dilate(grid, radius), _pure.dilate(grid, radius))
            assert np.array_equal(_core.majority(grid, radius), _pure.majority(grid, radius))


def test_connected_components_parity():
    rng = np.random.default_rng(22)
    for _ in range(20):
        grid = rand_grid(rng, int(rng.integers(1, 50)), int(rng.integers(1, 50)))
        for connectivity in (4, 8):
            la, ka = _core.connected_components(grid, connectivity)
            lb, kb = _pure.connected_components(grid, connectivity)
            assert ka == kb
            assert np.array_equal(la, lb)


def test_fill_polygon_parity_random_rings():
    rng = np.random.default_rng(23)
    for _ in range(40):
        n = int(rng.integers(3, 9))
        verts = rng.uniform(-2, 18, size=(n, 2))
        got = _core.fill_polygon(verts, 16, 16)
        want = _pure.fill_polygon(verts, 16, 16)
        assert np.array_equal(got, want)


def test_fill_polygon_parity_lattice_rings():
    # integer and half-integer coordinates exercise the exact on-edge rules
    rng = np.random.default_rng(24)
    for _ in range(40):
        n = int(rng.integers(3, 9))
        verts = rng.integers(0, 12, size=(n, 2)).astype(np.float64)
        if rng.random() < 0.5:
            verts += 0.5
        assert np.array_equal(_core.fill_polygon(verts, 12, 12),
                              _pure.fill_polygon(verts, 12, 12))


def test_backend_reports_compiled():
    from schemgraph import kernels
    assert kernels.backend() in ("compiled", "pure")
