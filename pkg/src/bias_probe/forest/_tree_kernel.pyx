# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled CART growth and traversal.

Operation-for-operation twin of ``_tree_fallback``: both must return
bit-identical node arrays for the same inputs. Any change to summation order,
tie-breaking or RNG consumption has to be made in both files.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, realloc, free
from libc.math cimport INFINITY
from libc.stdint cimport uint64_t

cnp.import_array()

ctypedef cnp.intp_t intp


cdef inline uint64_t _splitmix(uint64_t* state) noexcept nogil:
    cdef uint64_t z
    state[0] = state[0] + 0x9E3779B97F4A7C15ULL
    z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline bint _lt(double* v, intp* s, intp i, intp j) noexcept nogil:
    return v[i] < v[j] or (v[i] == v[j] and s[i] < s[j])


cdef inline void _swap(double* v, intp* s, double* t, intp i, intp j) noexcept nogil:
    cdef double dv = v[i]
    cdef intp ds = s[i]
    cdef double dt = t[i]
    v[i] = v[j]; s[i] = s[j]; t[i] = t[j]
    v[j] = dv; s[j] = ds; t[j] = dt


cdef void _sort(double* v, intp* s, double* t, intp n) noexcept nogil:
    # Sort by (value, sample id). Equal keys are identical triples, so any
    # correct sort yields the same sequence as a stable argsort on values.
    cdef intp i, j, mid, lo, hi
    while n > 16:
        mid = n // 2
        if _lt(v, s, mid, 0):
            _swap(v, s, t, mid, 0)
        if _lt(v, s, n - 1, 0):
            _swap(v, s, t, n - 1, 0)
        if _lt(v, s, n - 1, mid):
            _swap(v, s, t, n - 1, mid)
        _swap(v, s, t, mid, n - 2)
        lo = 0
        hi = n - 2
        while True:
            lo += 1
            while _lt(v, s, lo, n - 2):
                lo += 1
            hi -= 1
            while _lt(v, s, n - 2, hi):
                hi -= 1
            if lo >= hi:
                break
            _swap(v, s, t, lo, hi)
        _swap(v, s, t, lo, n - 2)
        # recurse on the smaller side, loop on the larger
        if lo < n - lo - 1:
            _sort(v, s, t, lo)
            v += lo + 1; s += lo + 1; t += lo + 1
            n -= lo + 1
        else:
            _sort(v + lo + 1, s + lo + 1, t + lo + 1, n - lo - 1)
            n = lo
    for i in range(1, n):
        j = i
        while j > 0 and _lt(v, s, j, j - 1):
            _swap(v, s, t, j, j - 1)
            j -= 1


cdef struct NodeStore:
    intp cap
    intp n
    intp n_out
    intp* feature
    double* threshold
    intp* left
    intp* right
    intp* n_samples
    double* value


cdef int _grow(NodeStore* st) noexcept nogil:
    cdef intp cap = st.cap * 2 if st.cap > 0 else 64
    cdef void* p
    p = realloc(st.feature, cap * sizeof(intp))
    if p == NULL: return -1
    st.feature = <intp*>p
    p = realloc(st.threshold, cap * sizeof(double))
    if p == NULL: return -1
    st.threshold = <double*>p
    p = realloc(st.left, cap * sizeof(intp))
    if p == NULL: return -1
    st.left = <intp*>p
    p = realloc(st.right, cap * sizeof(intp))
    if p == NULL: return -1
    st.right = <intp*>p
    p = realloc(st.n_samples, cap * sizeof(intp))
    if p == NULL: return -1
    st.n_samples = <intp*>p
    p = realloc(st.value, cap * st.n_out * sizeof(double))
    if p == NULL: return -1
    st.value = <double*>p
    st.cap = cap
    return 0


cdef int _build(double[::1, :] X, double[::1] y, intp* ns, intp n, intp p,
                intp n_classes, intp min_split, intp max_depth, intp mtry,
                uint64_t state, NodeStore* st) noexcept nogil:
    cdef intp n_out = st.n_out
    cdef intp stack_cap = 64, sp = 0
    cdef intp* stack = <intp*>malloc(stack_cap * 5 * sizeof(intp))
    cdef intp* perm = <intp*>malloc(p * sizeof(intp))
    cdef double* vals = <double*>malloc(n * sizeof(double))
    cdef intp* sidx = <intp*>malloc(n * sizeof(intp))
    cdef double* tgt = <double*>malloc(n * sizeof(double))
    cdef intp* buf = <intp*>malloc(n * sizeof(intp))
    cdef double* counts = <double*>malloc((n_classes + 1) * sizeof(double))
    cdef double* cl = <double*>malloc((n_classes + 1) * sizeof(double))
    cdef double* cr = <double*>malloc((n_classes + 1) * sizeof(double))
    cdef intp start, end, depth, parent, is_left, node, nn, t, i, j, f, c, nz
    cdef intp found, best_f, ft, nl, nr, tmp
    cdef double s, yy, ymin, ymax, v, vmin, vmax, total, ls, rs, proxy
    cdef double fb, best, thr, best_thr, a, b, sq_l, sq_r, sq_tot
    cdef bint pure
    cdef void* q
    cdef int rc = 0

    if (stack == NULL or perm == NULL or vals == NULL or sidx == NULL or
            tgt == NULL or buf == NULL or counts == NULL or cl == NULL or cr == NULL):
        rc = -1
        n = 0
    else:
        stack[0] = 0; stack[1] = n; stack[2] = 0; stack[3] = -1; stack[4] = 0
        sp = 1

    while sp > 0 and rc == 0:
        sp -= 1
        start = stack[sp * 5]; end = stack[sp * 5 + 1]; depth = stack[sp * 5 + 2]
        parent = stack[sp * 5 + 3]; is_left = stack[sp * 5 + 4]
        if st.n == st.cap:
            if _grow(st) != 0:
                rc = -1
                break
        node = st.n
        st.n += 1
        if parent >= 0:
            if is_left:
                st.left[parent] = node
            else:
                st.right[parent] = node
        nn = end - start
        st.feature[node] = -1
        st.threshold[node] = 0.0
        st.left[node] = -1
        st.right[node] = -1
        st.n_samples[node] = nn

        if n_classes == 0:
            s = 0.0
            ymin = INFINITY
            ymax = -INFINITY
            for t in range(start, end):
                yy = y[ns[t]]
                s += yy
                if yy < ymin: ymin = yy
                if yy > ymax: ymax = yy
            st.value[node] = s / nn
            pure = ymax <= ymin
        else:
            for c in range(n_classes):
                counts[c] = 0.0
            for t in range(start, end):
                counts[<intp>y[ns[t]]] += 1.0
            nz = 0
            sq_tot = 0.0
            for c in range(n_classes):
                st.value[node * n_out + c] = counts[c]
                if counts[c] > 0:
                    nz += 1
                sq_tot += counts[c] * counts[c]
            pure = nz <= 1

        if nn < min_split or (max_depth >= 0 and depth >= max_depth) or pure:
            continue

        for f in range(p):
            perm[f] = f
        best = -INFINITY
        best_f = -1
        best_thr = 0.0
        found = 0
        i = 0
        while i < p and found < mtry:
            j = i + <intp>(_splitmix(&state) % <uint64_t>(p - i))
            tmp = perm[i]; perm[i] = perm[j]; perm[j] = tmp
            f = perm[i]
            i += 1
            vmin = INFINITY
            vmax = -INFINITY
            for t in range(nn):
                sidx[t] = ns[start + t]
                v = X[sidx[t], f]
                vals[t] = v
                if v < vmin: vmin = v
                if v > vmax: vmax = v
            if vmax <= vmin:
                continue
            found += 1
            for t in range(nn):
                tgt[t] = y[sidx[t]]
            _sort(vals, sidx, tgt, nn)

            fb = -INFINITY
            ft = -1
            if n_classes == 0:
                total = 0.0
                for t in range(nn):
                    total += tgt[t]
                ls = 0.0
                for t in range(nn - 1):
                    ls += tgt[t]
                    if vals[t] < vals[t + 1]:
                        nl = t + 1
                        nr = nn - nl
                        rs = total - ls
                        proxy = ls * ls / nl + rs * rs / nr
                        if proxy > fb:
                            fb = proxy
                            ft = t
            else:
                for c in range(n_classes):
                    cl[c] = 0.0
                    cr[c] = counts[c]
                sq_l = 0.0
                sq_r = sq_tot
                for t in range(nn - 1):
                    c = <intp>tgt[t]
                    sq_l += 2.0 * cl[c] + 1.0
                    cl[c] += 1.0
                    sq_r -= 2.0 * cr[c] - 1.0
                    cr[c] -= 1.0
                    if vals[t] < vals[t + 1]:
                        nl = t + 1
                        nr = nn - nl
                        proxy = sq_l / nl + sq_r / nr
                        if proxy > fb:
                            fb = proxy
                            ft = t
            if ft >= 0 and (fb > best or (fb == best and f < best_f)):
                best = fb
                best_f = f
                a = vals[ft]
                b = vals[ft + 1]
                thr = (a + b) * 0.5
                if not (thr >= a and thr < b):
                    thr = a
                best_thr = thr

        if best_f < 0:
            continue

        nl = 0
        for t in range(start, end):
            if X[ns[t], best_f] <= best_thr:
                buf[nl] = ns[t]
                nl += 1
        nr = nl
        for t in range(start, end):
            if not (X[ns[t], best_f] <= best_thr):
                buf[nr] = ns[t]
                nr += 1
        for t in range(nn):
            ns[start + t] = buf[t]
        st.feature[node] = best_f
        st.threshold[node] = best_thr

        if sp + 2 > stack_cap:
            q = realloc(stack, stack_cap * 2 * 5 * sizeof(intp))
            if q == NULL:
                rc = -1
                break
            stack = <intp*>q
            stack_cap *= 2
        # right first so the left subtree is numbered first (preorder)
        stack[sp * 5] = start + nl; stack[sp * 5 + 1] = end; stack[sp * 5 + 2] = depth + 1
        stack[sp * 5 + 3] = node; stack[sp * 5 + 4] = 0
        sp += 1
        stack[sp * 5] = start; stack[sp * 5 + 1] = start + nl; stack[sp * 5 + 2] = depth + 1
        stack[sp * 5 + 3] = node; stack[sp * 5 + 4] = 1
        sp += 1

    free(stack); free(perm); free(vals); free(sidx); free(tgt); free(buf)
    free(counts); free(cl); free(cr)
    return rc


def build_tree(double[::1, :] X, double[::1] y, cnp.ndarray samples,
               intp n_classes, intp min_split, intp max_depth, intp mtry,
               uint64_t state):
    """Grow one tree on ``samples`` (sorted row indices, repeats allowed).

    ``X`` must be Fortran-ordered. ``n_classes == 0`` selects regression;
    otherwise ``y`` holds class indices stored as floats. ``max_depth < 0``
    means unlimited.
    """
    cdef cnp.ndarray[intp, ndim=1, mode="c"] ns = np.ascontiguousarray(samples, dtype=np.intp).copy()
    cdef intp n = ns.shape[0]
    cdef intp p = X.shape[1]
    cdef NodeStore st
    cdef int rc
    cdef intp k
    st.cap = 0
    st.n = 0
    st.n_out = n_classes if n_classes > 0 else 1
    st.feature = NULL; st.threshold = NULL; st.left = NULL; st.right = NULL
    st.n_samples = NULL; st.value = NULL
    with nogil:
        rc = _build(X, y, &ns[0], n, p, n_classes, min_split, max_depth, mtry, state, &st)
    try:
        if rc != 0:
            raise MemoryError("tree growth ran out of memory")
        k = st.n
        feature = np.empty(k, dtype=np.intp)
        threshold = np.empty(k, dtype=np.float64)
        left = np.empty(k, dtype=np.intp)
        right = np.empty(k, dtype=np.intp)
        n_samples = np.empty(k, dtype=np.intp)
        value = np.empty((k, st.n_out), dtype=np.float64)
        for i in range(k):
            feature[i] = st.feature[i]
            threshold[i] = st.threshold[i]
            left[i] = st.left[i]
            right[i] = st.right[i]
            n_samples[i] = st.n_samples[i]
            for j in range(st.n_out):
                value[i, j] = st.value[i * st.n_out + j]
    finally:
        free(st.feature); free(st.threshold); free(st.left); free(st.right)
        free(st.n_samples); free(st.value)
    return feature, threshold, left, right, n_samples, value


def apply_tree(double[:, :] X, intp[::1] feature, double[::1] threshold,
               intp[::1] left, intp[::1] right):
    """Leaf index reached by every row of ``X``."""
    cdef intp n = X.shape[0]
    cdef cnp.ndarray[intp, ndim=1, mode="c"] out = np.empty(n, dtype=np.intp)
    cdef intp[::1] ov = out
    cdef intp i, node
    with nogil:
        for i in range(n):
            node = 0
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            ov[i] = node
    return out
