# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel for the sentence-similarity inner loop.

Operates on integer token ids; the Python wrapper in ``similarity``
handles interning and the empty-sequence conventions.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def sim_from_ids(cnp.int64_t[::1] ref, cnp.int64_t[::1] hyp):
    """Similarity score for non-empty id sequences (see similarity.sim)."""
    cdef Py_ssize_t nr = ref.shape[0]
    cdef Py_ssize_t nh = hyp.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] match_arr = np.full(nh, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] used_arr = np.zeros(nr, dtype=np.uint8)
    cdef cnp.int64_t[::1] match = match_arr
    cdef cnp.uint8_t[::1] used = used_arr
    cdef Py_ssize_t i, j, m = 0
    cdef double p, r, fmean, frag, penalty
    cdef Py_ssize_t chunks = 0, prev_i = -2, prev_j = -2

    # greedy leftmost alignment: hyp token j -> first unmatched equal ref token
    for j in range(nh):
        for i in range(nr):
            if used[i] == 0 and ref[i] == hyp[j]:
                used[i] = 1
                match[j] = i
                m += 1
                break
    if m == 0:
        return 0.0

    p = <double>m / <double>nh
    r = <double>m / <double>nr
    fmean = 10.0 * p * r / (r + 9.0 * p)

    # chunks: maximal runs contiguous in both sequences
    for j in range(nh):
        i = match[j]
        if i < 0:
            continue
        if not (j == prev_j + 1 and i == prev_i + 1):
            chunks += 1
        prev_j = j
        prev_i = i

    frag = <double>chunks / <double>m
    penalty = 0.5 * frag * frag * frag
    return fmean * (1.0 - penalty)
