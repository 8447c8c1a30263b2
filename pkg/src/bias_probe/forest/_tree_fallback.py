"""Pure numpy CART growth and traversal.

Twin of the compiled ``_tree_kernel``; the two return bit-identical node
arrays. Summations run in the same sequential order (``np.cumsum``, never
``np.sum``), candidate features are drawn with the same splitmix64 stream,
and ties resolve to the lowest feature index, then the lowest threshold.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def _splitmix(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def _seq_sum(a: np.ndarray) -> float:
    return float(np.cumsum(a)[-1])


def build_tree(X, y, samples, n_classes, min_split, max_depth, mtry, state):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ns = np.array(samples, dtype=np.intp, copy=True)
    n, p = len(ns), X.shape[1]
    n_out = n_classes if n_classes > 0 else 1
    state = int(state) & _MASK

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    n_samples: list[int] = []
    value: list[np.ndarray] = []

    stack = [(0, n, 0, -1, False)]
    while stack:
        start, end, depth, parent, is_left = stack.pop()
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        if parent >= 0:
            if is_left:
                left[parent] = node
            else:
                right[parent] = node
        idx = ns[start:end]
        nn = end - start
        n_samples.append(nn)
        yn = y[idx]

        if n_classes == 0:
            value.append(np.array([_seq_sum(yn) / nn]))
            pure = yn.max() <= yn.min()
            counts = None
        else:
            counts = np.bincount(yn.astype(np.intp), minlength=n_classes).astype(np.float64)
            value.append(counts.copy())
            pure = np.count_nonzero(counts) <= 1

        if nn < min_split or (max_depth >= 0 and depth >= max_depth) or pure:
            continue

        Xn = X[idx]
        nonconst = Xn.max(axis=0) > Xn.min(axis=0)
        perm = list(range(p))
        candidates = []
        i = 0
        while i < p and len(candidates) < mtry:
            state, r = _splitmix(state)
            j = i + r % (p - i)
            perm[i], perm[j] = perm[j], perm[i]
            f = perm[i]
            i += 1
            if nonconst[f]:
                candidates.append(f)
        if not candidates:
            continue

        feats = np.array(sorted(candidates), dtype=np.intp)
        V = Xn[:, feats]
        order = np.argsort(V, axis=0, kind="stable")
        Vs = np.take_along_axis(V, order, axis=0)
        T = yn[order]
        valid = Vs[:-1] < Vs[1:]
        nl = np.arange(1, nn, dtype=np.float64)[:, None]
        nr = nn - nl
        if n_classes == 0:
            cs = np.cumsum(T, axis=0)
            total = cs[-1]
            ls = cs[:-1]
            rs = total - ls
            proxy = ls * ls / nl + rs * rs / nr
        else:
            onehot = (T[:, :, None] == np.arange(n_classes)).astype(np.float64)
            cl = np.cumsum(onehot, axis=0)[:-1]
            cr = counts - cl
            sq_l = np.zeros(cl.shape[:2])
            sq_r = np.zeros(cl.shape[:2])
            for c in range(n_classes):
                sq_l = sq_l + cl[:, :, c] * cl[:, :, c]
                sq_r = sq_r + cr[:, :, c] * cr[:, :, c]
            proxy = sq_l / nl + sq_r / nr
        proxy = np.where(valid, proxy, -np.inf)
        pos = np.argmax(proxy, axis=0)
        col_best = proxy[pos, np.arange(len(feats))]
        c_best = int(np.argmax(col_best))
        t = int(pos[c_best])
        best_f = int(feats[c_best])
        a, b = Vs[t, c_best], Vs[t + 1, c_best]
        thr = (a + b) * 0.5
        if not (thr >= a and thr < b):
            thr = a

        go_left = X[idx, best_f] <= thr
        ns[start:end] = np.concatenate([idx[go_left], idx[~go_left]])
        n_left = int(go_left.sum())
        feature[node] = best_f
        threshold[node] = float(thr)
        stack.append((start + n_left, end, depth + 1, node, False))
        stack.append((start, start + n_left, depth + 1, node, True))

    return (
        np.array(feature, dtype=np.intp),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.intp),
        np.array(right, dtype=np.intp),
        np.array(n_samples, dtype=np.intp),
        np.vstack(value).reshape(len(feature), n_out),
    )


def apply_tree(X, feature, threshold, left, right):
    X = np.asarray(X, dtype=np.float64)
    node = np.zeros(len(X), dtype=np.intp)
    rows = np.arange(len(X))
    active = feature[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[r]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return node
