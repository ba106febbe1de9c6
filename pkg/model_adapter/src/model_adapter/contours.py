"""Outer-contour tracing for predicted masks.

Keeps the same contour semantics as the annotation pipeline: vertices on
pixel boundaries, counterclockwise in the positive-shoelace sense, holes
ignored, 8-connected components. For such crack-following rings the
shoelace area equals the pixel count exactly, which the tests use as an
independent check.
"""

from __future__ import annotations

from collections import deque

import numpy as np

_DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))  # E, S, W, N


def _walk(mask: np.ndarray, r0: int, c0: int) -> list[list[float]]:
    h, w = mask.shape

    def stroke(rr: int, cc: int) -> bool:
        return 0 <= rr < h and 0 <= cc < w and bool(mask[rr, cc])

    start = (c0, r0)
    verts = [[float(c0), float(r0)]]
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
        if stroke(*lf):
            nd = (d - 1) % 4
        elif stroke(*rf):
            nd = d
        else:
            nd = (d + 1) % 4
        if (x, y) == start and nd == 0:
            break
        if nd != d:
            verts.append([float(x), float(y)])
        d = nd
    return verts


def largest_component(mask: np.ndarray) -> np.ndarray:
    """8-connected component with the most pixels (empty in, empty out)."""
    h, w = mask.shape
    seen = np.zeros((h, w), bool)
    best: np.ndarray | None = None
    best_size = 0
    for r in range(h):
        for c in range(w):
            if not mask[r, c] or seen[r, c]:
                continue
            comp = np.zeros((h, w), bool)
            queue = deque([(r, c)])
            seen[r, c] = comp[r, c] = True
            size = 0
            while queue:
                cr, cc = queue.popleft()
                size += 1
                for dr in (-1, 0, 1):
                    for dc in (-1, 0, 1):
                        nr, nc = cr + dr, cc + dc
                        if 0 <= nr < h and 0 <= nc < w and mask[nr, nc] \
                                and not seen[nr, nc]:
                            seen[nr, nc] = comp[nr, nc] = True
                            queue.append((nr, nc))
            if size > best_size:
                best_size, best = size, comp
    if best is None:
        return np.zeros((h, w), np.uint8)
    return best.astype(np.uint8)


def mask_to_polygon(mask: np.ndarray) -> list[list[float]] | None:
    """Outer contour of the mask's largest component; None for empty masks."""
    comp = largest_component(np.asarray(mask).astype(np.uint8))
    nz = np.argwhere(comp)
    if len(nz) == 0:
        return None
    r0, c0 = nz[0]
    verts = _walk(comp, int(r0), int(c0))
    if len(verts) < 3:
        return None
    return verts
