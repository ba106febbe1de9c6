# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pixel kernels.

Semantics (and, for fill_polygon, the floating-point arithmetic) are
bit-for-bit identical to `_pure`; parity is enforced by tests.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc, qsort

cnp.import_array()

ctypedef cnp.uint8_t u8
ctypedef cnp.int32_t i32


def erode(cnp.ndarray[u8, ndim=2] grid, int radius):
    if radius == 0:
        return grid.copy()
    cdef int h = grid.shape[0], w = grid.shape[1]
    cdef cnp.ndarray[u8, ndim=2] out = np.zeros((h, w), np.uint8)
    cdef int r, c, i, j
    cdef bint full
    for r in range(radius, h - radius):
        for c in range(radius, w - radius):
            if grid[r, c] == 0:
                continue
            full = True
            for i in range(r - radius, r + radius + 1):
                for j in range(c - radius, c + radius + 1):
                    if grid[i, j] == 0:
                        full = False
                        break
                if not full:
                    break
            if full:
                out[r, c] = 1
    return out


def dilate(cnp.ndarray[u8, ndim=2] grid, int radius):
    if radius == 0:
        return grid.copy()
    cdef int h = grid.shape[0], w = grid.shape[1]
    cdef cnp.ndarray[u8, ndim=2] out = np.zeros((h, w), np.uint8)
    cdef int r, c, i, j, i0, i1, j0, j1
    cdef bint hit
    for r in range(h):
        for c in range(w):
            i0 = r - radius if r - radius > 0 else 0
            i1 = r + radius if r + radius < h - 1 else h - 1
            j0 = c - radius if c - radius > 0 else 0
            j1 = c + radius if c + radius < w - 1 else w - 1
            hit = False
            for i in range(i0, i1 + 1):
                for j in range(j0, j1 + 1):
                    if grid[i, j]:
                        hit = True
                        break
                if hit:
                    break
            if hit:
                out[r, c] = 1
    return out


def majority(cnp.ndarray[u8, ndim=2] grid, int radius):
    if radius == 0:
        return grid.copy()
    cdef int h = grid.shape[0], w = grid.shape[1]
    cdef cnp.ndarray[u8, ndim=2] out = np.zeros((h, w), np.uint8)
    cdef int k = 2 * radius + 1
    cdef int window = k * k
    cdef int r, c, i, j, ii, jj, count
    for r in range(h):
        for c in range(w):
            count = 0
            for i in range(r - radius, r + radius + 1):
                ii = i
                if ii < 0:
                    ii = 0
                elif ii >= h:
                    ii = h - 1
                for j in range(c - radius, c + radius + 1):
                    jj = j
                    if jj < 0:
                        jj = 0
                    elif jj >= w:
                        jj = w - 1
                    count += grid[ii, jj]
            if 2 * count > window:
                out[r, c] = 1
    return out


cdef i32 _find(i32* parent, i32 x) noexcept nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def connected_components(cnp.ndarray[u8, ndim=2] grid, int connectivity=8):
    """Two-pass union-find labeling; labels ordered by first pixel, row-major."""
    if connectivity != 4 and connectivity != 8:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    cdef int h = grid.shape[0], w = grid.shape[1]
    cdef cnp.ndarray[i32, ndim=2] labels = np.zeros((h, w), np.int32)
    cdef Py_ssize_t cap = (<Py_ssize_t> h) * w // 2 + 2
    cdef i32* parent = <i32*> malloc(cap * sizeof(i32))
    if parent == NULL:
        raise MemoryError()
    cdef i32 next_id = 1  # 0 = background
    cdef i32 roots[4]
    cdef int nroots, t
    cdef i32 best, other, k
    cdef int r, c
    cdef bint diag = connectivity == 8
    cdef cnp.ndarray[i32, ndim=1] remap = np.zeros(cap, np.int32)
    try:
        for r in range(h):
            for c in range(w):
                if grid[r, c] == 0:
                    continue
                nroots = 0
                if c > 0 and labels[r, c - 1]:
                    roots[nroots] = _find(parent, labels[r, c - 1])
                    nroots += 1
                if r > 0:
                    if diag and c > 0 and labels[r - 1, c - 1]:
                        roots[nroots] = _find(parent, labels[r - 1, c - 1])
                        nroots += 1
                    if labels[r - 1, c]:
                        roots[nroots] = _find(parent, labels[r - 1, c])
                        nroots += 1
                    if diag and c + 1 < w and labels[r - 1, c + 1]:
                        roots[nroots] = _find(parent, labels[r - 1, c + 1])
                        nroots += 1
                if nroots == 0:
                    parent[next_id] = next_id
                    labels[r, c] = next_id
                    next_id += 1
                else:
                    best = roots[0]
                    for t in range(1, nroots):
                        if roots[t] < best:
                            best = roots[t]
                    for t in range(nroots):
                        other = roots[t]
                        if other != best:
                            parent[other] = best
                    labels[r, c] = best
        k = 0
        for r in range(h):
            for c in range(w):
                if labels[r, c]:
                    other = _find(parent, labels[r, c])
                    if remap[other] == 0:
                        k += 1
                        remap[other] = k
                    labels[r, c] = remap[other]
        return labels, int(k)
    finally:
        free(parent)


cdef int _dbl_cmp(const void* a, const void* b) noexcept nogil:
    cdef double da = (<double*> a)[0]
    cdef double db = (<double*> b)[0]
    if da < db:
        return -1
    if da > db:
        return 1
    return 0


def fill_polygon(cnp.ndarray[cnp.float64_t, ndim=2] vertices, int height, int width):
    """Even-odd scanline fill at pixel centers, on-edge centers inside.

    The crossing x uses the same expression as _pure.fill_polygon and the
    extension compiles with FP contraction off, keeping parity exact.
    """
    cdef cnp.ndarray[u8, ndim=2] out = np.zeros((height, width), np.uint8)
    cdef int n = vertices.shape[0]
    if n < 3 or height <= 0 or width <= 0:
        return out
    cdef double* xs = <double*> malloc(n * sizeof(double))
    cdef double* xe = <double*> malloc(n * sizeof(double))
    cdef double* hlo = <double*> malloc(n * sizeof(double))
    cdef double* hhi = <double*> malloc(n * sizeof(double))
    if xs == NULL or xe == NULL or hlo == NULL or hhi == NULL:
        free(xs); free(xe); free(hlo); free(hhi)
        raise MemoryError()
    cdef double x1, y1, x2, y2, y, cx, yh
    cdef double ymin_all = vertices[0, 1], ymax_all = vertices[0, 1]
    cdef int i, j, r, c, ncross, ntouch, nspan, pc, pt
    cdef bint ins, odd
    for i in range(n):
        if vertices[i, 1] < ymin_all:
            ymin_all = vertices[i, 1]
        if vertices[i, 1] > ymax_all:
            ymax_all = vertices[i, 1]
    cdef int row_lo = 0
    if ymin_all - 0.5 > 0:
        row_lo = <int> (ymin_all - 0.5)
    try:
        for r in range(row_lo, height):
            y = r + 0.5
            if y > ymax_all + 1.0:
                break
            ncross = 0
            ntouch = 0
            nspan = 0
            for i in range(n):
                j = i + 1 if i + 1 < n else 0
                x1 = vertices[i, 0]; y1 = vertices[i, 1]
                x2 = vertices[j, 0]; y2 = vertices[j, 1]
                if y1 == y2:
                    if y1 == y:
                        hlo[nspan] = x1 if x1 <= x2 else x2
                        hhi[nspan] = x2 if x1 <= x2 else x1
                        nspan += 1
                    continue
                if (y1 <= y and y < y2) or (y2 <= y and y < y1):
                    xs[ncross] = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                    ncross += 1
                else:
                    yh = y1 if y1 > y2 else y2
                    if y == yh:
                        xe[ntouch] = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                        ntouch += 1
            if ncross == 0 and ntouch == 0 and nspan == 0:
                continue
            if ncross:
                qsort(xs, ncross, sizeof(double), _dbl_cmp)
            if ntouch:
                qsort(xe, ntouch, sizeof(double), _dbl_cmp)
            pc = 0
            pt = 0
            for c in range(width):
                cx = c + 0.5
                while pc < ncross and xs[pc] < cx:
                    pc += 1
                while pt < ntouch and xe[pt] < cx:
                    pt += 1
                odd = (pc & 1) == 1
                ins = odd
                if not ins and pc < ncross and xs[pc] == cx:
                    ins = True
                if not ins and pt < ntouch and xe[pt] == cx:
                    ins = True
                if not ins:
                    for i in range(nspan):
                        if hlo[i] <= cx and cx <= hhi[i]:
                            ins = True
                            break
                if ins:
                    out[r, c] = 1
    finally:
        free(xs); free(xe); free(hlo); free(hhi)
    return out
