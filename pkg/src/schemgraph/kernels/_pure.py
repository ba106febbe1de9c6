"""Pure NumPy implementations of the pixel kernels.

This is the reference backend: the compiled module `_core` must match it
bit for bit (enforced by tests/test_kernels_parity.py). Grids are uint8
arrays holding 0/1, shaped (height, width).
"""

from __future__ import annotations

import numpy as np

__all__ = ["erode", "dilate", "majority", "connected_components", "fill_polygon"]


def _box_sums(grid: np.ndarray, radius: int, pad_mode: str) -> np.ndarray:
    """Per-pixel sum of the (2r+1)^2 window via an integral image."""
    k = 2 * radius + 1
    padded = np.pad(grid, radius, mode=pad_mode).astype(np.int64)
    ii = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), np.int64)
    ii[1:, 1:] = padded.cumsum(0).cumsum(1)
    h, w = grid.shape
    return ii[k:k + h, k:k + w] - ii[:h, k:k + w] - ii[k:k + h, :w] + ii[:h, :w]


def erode(grid: np.ndarray, radius: int) -> np.ndarray:
    """Keep a pixel only if its full square window is stroke (outside = background)."""
    if radius == 0:
        return grid.copy()
    k = 2 * radius + 1
    return (_box_sums(grid, radius, "constant") == k * k).astype(np.uint8)


def dilate(grid: np.ndarray, radius: int) -> np.ndarray:
    """Set a pixel if any stroke lies in its square window."""
    if radius == 0:
        return grid.copy()
    return (_box_sums(grid, radius, "constant") > 0).astype(np.uint8)


def majority(grid: np.ndarray, radius: int) -> np.ndarray:
    """Majority vote over the square window, border clamped (replicated)."""
    if radius == 0:
        return grid.copy()
    k = 2 * radius + 1
    return (2 * _box_sums(grid, radius, "edge") > k * k).astype(np.uint8)


def _find(parent: list[int], x: int) -> int:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def connected_components(grid: np.ndarray, connectivity: int = 8):
    """Label stroke components 1..k in row-major first-encounter order.

    Returns (labels int32 array, k). Run-based union-find: rows are split
    into stroke runs, runs of adjacent rows merge when their column spans
    overlap (span widened by one for 8-connectivity).
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    h, w = grid.shape
    labels = np.zeros((h, w), np.int32)
    pad = 1 if connectivity == 8 else 0
    parent: list[int] = []
    runs: list[tuple[int, int, int, int]] = []  # (row, c0, c1, run id)
    prev: list[tuple[int, int, int]] = []       # (c0, c1, run id) of row above
    bounded = np.zeros(w + 2, np.uint8)
    for r in range(h):
        row = grid[r]
        if not row.any():
            prev = []
            continue
        bounded[1:-1] = row
        edges = np.flatnonzero(bounded[1:] != bounded[:-1])
        starts = edges[0::2].tolist()
        ends = edges[1::2].tolist()
        cur: list[tuple[int, int, int]] = []
        pi = 0
        for c0, c1 in zip(starts, ends):
            rid = len(parent)
            parent.append(rid)
            runs.append((r, c0, c1, rid))
            while pi < len(prev) and prev[pi][1] <= c0 - pad:
                pi += 1
            pj = pi
            while pj < len(prev) and prev[pj][0] < c1 + pad:
                ra, rb = _find(parent, rid), _find(parent, prev[pj][2])
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
                pj += 1
            cur.append((c0, c1, rid))
        prev = cur
    k = 0
    remap: dict[int, int] = {}
    for r, c0, c1, rid in runs:
        root = _find(parent, rid)
        lab = remap.get(root)
        if lab is None:
            k += 1
            lab = k
            remap[root] = lab
        labels[r, c0:c1] = lab
    return labels, k


def fill_polygon(vertices: np.ndarray, height: int, width: int) -> np.ndarray:
    """Even-odd scanline fill sampled at pixel centers; on-edge centers count inside.

    The polygon is implicitly closed. Crossing parity uses the half-open
    rule in y; centers lying exactly on any edge (including horizontal
    edges and vertices) are inside.
    """
    out = np.zeros((height, width), np.uint8)
    v = np.asarray(vertices, np.float64)
    if len(v) < 3 or height <= 0 or width <= 0:
        return out
    x1 = v[:, 0]
    y1 = v[:, 1]
    x2 = np.roll(x1, -1)
    y2 = np.roll(y1, -1)
    horiz = y1 == y2
    ylo = np.minimum(y1, y2)
    yhi = np.maximum(y1, y2)
    centers = np.arange(width, dtype=np.float64) + 0.5
    row_lo = max(0, int(np.floor(float(ylo.min()) - 0.5)))
    row_hi = min(height - 1, int(np.ceil(float(yhi.max()) - 0.5)))
    for r in range(row_lo, row_hi + 1):
        y = r + 0.5
        inside = np.zeros(width, bool)
        cross = ((y1 <= y) & (y < y2)) | ((y2 <= y) & (y < y1))
        if cross.any():
            xi = x1[cross] + (y - y1[cross]) * (x2[cross] - x1[cross]) / (y2[cross] - y1[cross])
            xi.sort()
            lo = np.searchsorted(xi, centers, side="left")
            inside |= (lo & 1).astype(bool)
            inside |= np.searchsorted(xi, centers, side="right") > lo
        # edges whose excluded endpoint row is exactly this scanline
        touch = ~horiz & (y == yhi)
        if touch.any():
            xe = x1[touch] + (y - y1[touch]) * (x2[touch] - x1[touch]) / (y2[touch] - y1[touch])
            xe.sort()
            lo = np.searchsorted(xe, centers, side="left")
            inside |= np.searchsorted(xe, centers, side="right") > lo
        on_row = horiz & (y1 == y)
        if on_row.any():
            for a, b in zip(x1[on_row], x2[on_row]):
                lo, hi = (a, b) if a <= b else (b, a)
                inside |= (centers >= lo) & (centers <= hi)
        out[r] = inside
    return out
