# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled projection kernel; see ``_kernels_py.project`` for the contract."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport calloc, malloc, free

cnp.import_array()

ctypedef cnp.int64_t i64


cdef inline double _tnorm(int kind, double a, double b) noexcept nogil:
    cdef double s
    if kind == 0:
        return a if a < b else b
    elif kind == 1:
        return a * b
    s = a - (1.0 - b)
    return s if s > 0.0 else 0.0


def project(int kind, const double[::1] src, operands, double[::1] out):
    cdef Py_ssize_t k = len(operands)
    cdef Py_ssize_t n_rows = src.shape[0]
    cdef Py_ssize_t n_cols = out.shape[0]
    if k == 0 or n_rows == 0:
        return 0

    cdef i64** ptr = <i64**> malloc(k * sizeof(i64*))
    cdef i64** idx = <i64**> malloc(k * sizeof(i64*))
    cdef double** val = <double**> malloc(k * sizeof(double*))
    cdef int* neg = <int*> malloc(k * sizeof(int))
    cdef double* scratch = <double*> calloc(k * n_cols, sizeof(double))
    keep = []
    cdef Py_ssize_t e, pivot = -1
    cdef cnp.ndarray a_ptr, a_idx, a_val
    try:
        for e in range(k):
            op = operands[e]
            a_ptr = np.ascontiguousarray(op[0], dtype=np.int64)
            a_idx = np.ascontiguousarray(op[1], dtype=np.int64)
            a_val = np.ascontiguousarray(op[2], dtype=np.float64)
            keep.append((a_ptr, a_idx, a_val))
            ptr[e] = <i64*> cnp.PyArray_DATA(a_ptr)
            idx[e] = <i64*> cnp.PyArray_DATA(a_idx)
            val[e] = <double*> cnp.PyArray_DATA(a_val)
            neg[e] = 1 if op[3] else 0
            if pivot < 0 and not neg[e]:
                pivot = e
        return _run(kind, src, out, k, n_rows, n_cols, pivot, ptr, idx, val, neg, scratch)
    finally:
        free(ptr)
        free(idx)
        free(val)
        free(neg)
        free(scratch)


cdef i64 _run(int kind, const double[::1] src, double[::1] out,
              Py_ssize_t k, Py_ssize_t n_rows, Py_ssize_t n_cols, Py_ssize_t pivot,
              i64** ptr, i64** idx, double** val, int* neg, double* scratch) noexcept nogil:
    cdef i64 visits = 0
    cdef Py_ssize_t b, e, c
    cdef i64 j, lo, hi
    cdef double s, acc, v
    for b in range(n_rows):
        s = src[b]
        if not (s > 0.0):
            continue
        for e in range(k):
            if e == pivot:
                continue
            lo = ptr[e][b]
            hi = ptr[e][b + 1]
            visits += hi - lo
            for j in range(lo, hi):
                scratch[e * n_cols + idx[e][j]] = val[e][j]
        if pivot >= 0:
            lo = ptr[pivot][b]
            hi = ptr[pivot][b + 1]
            visits += hi - lo
            for j in range(lo, hi):
                c = idx[pivot][j]
                acc = s
                for e in range(k):
                    if e == pivot:
                        v = val[pivot][j]
                    else:
                        v = scratch[e * n_cols + c]
                        if neg[e]:
                            v = 1.0 - v
                    acc = _tnorm(kind, acc, v)
                if acc > out[c]:
                    out[c] = acc
        else:
            for c in range(n_cols):
                acc = s
                for e in range(k):
                    acc = _tnorm(kind, acc, 1.0 - scratch[e * n_cols + c])
                if acc > out[c]:
                    out[c] = acc
        for e in range(k):
            if e == pivot:
                continue
            for j in range(ptr[e][b], ptr[e][b + 1]):
                scratch[e * n_cols + idx[e][j]] = 0.0
    return visits
