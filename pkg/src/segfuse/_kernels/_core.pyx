# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_py.py``.

Must stay result-identical with the fallback: same component labels and
ordering, same split gains (same operation order in float64), same
tie-breaking. tests/test_kernels.py asserts the equivalence.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def label_components(mask):
    """Label 8-connected equal-value components, scanline-first ordering."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2, mode="c"] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0]
    cdef Py_ssize_t w = m.shape[1]
    cdef Py_ssize_t n = h * w
    cdef cnp.ndarray[cnp.int64_t, ndim=1] parent_arr = np.arange(n, dtype=np.int64)
    cdef cnp.int64_t[:] parent = parent_arr
    cdef cnp.ndarray[cnp.int32_t, ndim=2] out = np.empty((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, :] labels = out
    cdef cnp.ndarray[cnp.int32_t, ndim=1] remap_arr = np.full(n, -1, dtype=np.int32)
    cdef cnp.int32_t[:] remap = remap_arr

    cdef Py_ssize_t r, c, i, j, k, root_a, root_b
    cdef cnp.uint8_t v
    cdef cnp.int32_t next_id = 0

    for r in range(h):
        for c in range(w):
            i = r * w + c
            v = m[r, c]
            if c > 0 and m[r, c - 1] == v:
                _union(parent, i, i - 1)
            if r > 0:
                if m[r - 1, c] == v:
                    _union(parent, i, i - w)
                if c > 0 and m[r - 1, c - 1] == v:
                    _union(parent, i, i - w - 1)
                if c + 1 < w and m[r - 1, c + 1] == v:
                    _union(parent, i, i - w + 1)

    for r in range(h):
        for c in range(w):
            i = r * w + c
            j = _find(parent, i)
            if remap[j] < 0:
                remap[j] = next_id
                next_id += 1
            labels[r, c] = remap[j]
    return out


cdef inline Py_ssize_t _find(cnp.int64_t[:] parent, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t root = i
    cdef Py_ssize_t tmp
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        tmp = parent[i]
        parent[i] = root
        i = tmp
    return root


cdef inline void _union(cnp.int64_t[:] parent, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    cdef Py_ssize_t ra = _find(parent, a)
    cdef Py_ssize_t rb = _find(parent, b)
    if ra == rb:
        return
    # lower flat index wins so roots stay scanline-minimal
    if ra < rb:
        parent[rb] = ra
    else:
        parent[ra] = rb


def best_split_scan(values, targets):
    """Best variance-reduction split over pre-sorted samples; see _py twin."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] t = np.ascontiguousarray(targets, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0]
    if n < 2:
        return -np.inf, 0

    cdef double total = 0.0
    cdef Py_ssize_t j
    for j in range(n):
        total += t[j]

    cdef double dn = <double> n
    cdef double tt = total * total / dn
    cdef double left = 0.0
    cdef double right, gain, dk
    cdef double best_gain = -np.inf
    cdef Py_ssize_t best_pos = 0

    for j in range(n - 1):
        left += t[j]
        if v[j + 1] <= v[j]:
            continue
        dk = <double> (j + 1)
        right = total - left
        gain = left * left / dk + right * right / (dn - dk) - tt
        if gain > best_gain:
            best_gain = gain
            best_pos = j + 1
    if best_pos == 0:
        return -np.inf, 0
    return best_gain, best_pos
