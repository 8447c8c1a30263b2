# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled SLIC inner loops: windowed assignment and connectivity enforcement."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def assign(const double[:, ::1] feats, Py_ssize_t H, Py_ssize_t W,
           const double[:, ::1] centers, double half_y, double half_x,
           double spatial_w, cnp.int64_t[::1] labels, double[::1] dist):
    """One assignment sweep. ``centers`` rows are (color..., y, x). A pixel
    moves to center ``k`` only when strictly closer, so lower indices win ties."""
    cdef Py_ssize_t K = centers.shape[0], C = feats.shape[1]
    cdef Py_ssize_t k, c, y, x, y0, y1, x0, x1, p
    cdef double cy, cx, dc, d, diff, dy, dx
    with nogil:
        for p in range(H * W):
            dist[p] = 1e300
        for k in range(K):
            cy = centers[k, C]
            cx = centers[k, C + 1]
            y0 = <Py_ssize_t>(cy - half_y)
            y1 = <Py_ssize_t>(cy + half_y) + 1
            x0 = <Py_ssize_t>(cx - half_x)
            x1 = <Py_ssize_t>(cx + half_x) + 1
            if y0 < 0:
                y0 = 0
            if x0 < 0:
                x0 = 0
            if y1 > H:
                y1 = H
            if x1 > W:
                x1 = W
            for y in range(y0, y1):
                for x in range(x0, x1):
                    p = y * W + x
                    dc = 0.0
                    for c in range(C):
                        diff = centers[k, c] - feats[p, c]
                        dc = dc + diff * diff
                    dy = cy - y
                    dx = cx - x
                    d = dc + (dy * dy + dx * dx) * spatial_w
                    if d < dist[p]:
                        dist[p] = d
                        labels[p] = k


def enforce_connectivity(const cnp.int64_t[::1] labels, Py_ssize_t H, Py_ssize_t W, Py_ssize_t min_size):
    """Relabel 4-connected components in raster order of their first pixel.

    Components of ``min_size`` pixels or fewer merge into the neighbouring
    component found first among (left, up, right, down) of their first pixel.
    """
    cdef Py_ssize_t N = H * W
    out_arr = np.full(N, -1, dtype=np.int64)
    queue_arr = np.empty(N, dtype=np.intp)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t[::1] queue = queue_arr
    cdef int[4] dxs
    cdef int[4] dys
    dxs[0] = -1; dxs[1] = 0; dxs[2] = 1; dxs[3] = 0
    dys[0] = 0; dys[1] = -1; dys[2] = 0; dys[3] = 1
    cdef Py_ssize_t start, head, tail, p, q, y, x, ny, nx, i, j
    cdef cnp.int64_t nxt = 0, adj, lab
    with nogil:
        for start in range(N):
            if out[start] >= 0:
                continue
            lab = labels[start]
            out[start] = nxt
            y = start // W
            x = start - y * W
            adj = -1
            for i in range(4):
                ny = y + dys[i]
                nx = x + dxs[i]
                if 0 <= ny < H and 0 <= nx < W and out[ny * W + nx] >= 0:
                    if adj < 0:
                        adj = out[ny * W + nx]
            head = 0
            tail = 1
            queue[0] = start
            while head < tail:
                p = queue[head]
                head += 1
                y = p // W
                x = p - y * W
                for i in range(4):
                    ny = y + dys[i]
                    nx = x + dxs[i]
                    if 0 <= ny < H and 0 <= nx < W:
                        q = ny * W + nx
                        if out[q] < 0 and labels[q] == lab:
                            out[q] = nxt
                            queue[tail] = q
                            tail += 1
            if tail <= min_size and adj >= 0:
                for j in range(tail):
                    out[queue[j]] = adj
            else:
                nxt += 1
    return out_arr, int(nxt)
