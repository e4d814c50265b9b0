# cython: boundscheck=False, wraparound=False, nonecheck=False
"""Compiled tree-walk kernel. Semantics mirror _pathlen.path_lengths exactly."""

import numpy as np

NAME = "compiled"


def path_lengths(const double[:, ::1] X,
                 const int[::1] feature,
                 const double[::1] threshold,
                 const int[::1] left,
                 const int[::1] right,
                 const double[::1] adjust):
    cdef Py_ssize_t n = X.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] out_v = out
    cdef Py_ssize_t i
    cdef int node, f
    cdef double depth
    with nogil:
        for i in range(n):
            node = 0
            depth = 0.0
            f = feature[node]
            while f >= 0:
                if X[i, f] < threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
                depth += 1.0
                f = feature[node]
            out_v[i] = depth + adjust[node]
    return out
