"""Pure-Python twin of ``_slic_kernel``; results are bit-identical."""

from __future__ import annotations

from collections import deque

import numpy as np


def assign(feats, H, W, centers, half_y, half_x, spatial_w, labels, dist):
    K, C = centers.shape[0], feats.shape[1]
    img = feats.reshape(H, W, C)
    lab = labels.reshape(H, W)
    dst = dist.reshape(H, W)
    dst[:] = 1e300
    for k in range(K):
        cy, cx = centers[k, C], centers[k, C + 1]
        y0, y1 = max(int(cy - half_y), 0), min(int(cy + half_y) + 1, H)
        x0, x1 = max(int(cx - half_x), 0), min(int(cx + half_x) + 1, W)
        if y0 >= y1 or x0 >= x1:
            continue
        win = img[y0:y1, x0:x1]
        dc = np.zeros(win.shape[:2])
        for c in range(C):
            diff = centers[k, c] - win[:, :, c]
            dc = dc + diff * diff
        dy = (cy - np.arange(y0, y1, dtype=np.float64))[:, None]
        dx = (cx - np.arange(x0, x1, dtype=np.float64))[None, :]
        d = dc + (dy * dy + dx * dx) * spatial_w
        better = d < dst[y0:y1, x0:x1]
        dst[y0:y1, x0:x1][better] = d[better]
        lab[y0:y1, x0:x1][better] = k


def enforce_connectivity(labels, H, W, min_size):
    out = np.full(H * W, -1, dtype=np.int64)
    steps = ((0, -1), (-1, 0), (0, 1), (1, 0))  # left, up, right, down as (dy, dx)
    nxt = 0
    for start in range(H * W):
        if out[start] >= 0:
            continue
        lab = labels[start]
        out[start] = nxt
        y, x = divmod(start, W)
        adj = -1
        for dy, dx in steps:
            ny, nx = y + dy, x + dx
            if 0 <= ny < H and 0 <= nx < W and out[ny * W + nx] >= 0 and adj < 0:
                adj = int(out[ny * W + nx])
        members = [start]
        queue = deque([start])
        while queue:
            p = queue.popleft()
            py, px = divmod(p, W)
            for dy, dx in steps:
                ny, nx = py + dy, px + dx
                if 0 <= ny < H and 0 <= nx < W:
                    q = ny * W + nx
                    if out[q] < 0 and labels[q] == lab:
                        out[q] = nxt
                        members.append(q)
                        queue.append(q)
        if len(members) <= min_size and adj >= 0:
            out[members] = adj
        else:
            nxt += 1
    return out, nxt
