"""Numpy implementation of the projection kernel.

Must agree bitwise with ``_kernels.pyx``; every arithmetic step below is done
in the same order as the compiled loop.
"""
import numpy as np

GODEL, PRODUCT, LUKASIEWICZ = 0, 1, 2


def _tnorm(kind, a, b):
    if kind == GODEL:
        return np.minimum(a, b)
    if kind == PRODUCT:
        return a * b
    return np.maximum(a - (1.0 - b), 0.0)


def _dense_row(indptr, indices, data, b, n_cols):
    row = np.zeros(n_cols)
    lo, hi = indptr[b], indptr[b + 1]
    row[indices[lo:hi]] = data[lo:hi]
    return row


def project(kind, src, operands, out):
    """out[c] <- max(out[c], max_b  src[b] T E_1(b,c) T ... T E_k(b,c)).

    ``operands`` is a sequence of ``(indptr, indices, data, negated)`` CSR
    triples; a negated operand contributes ``1 - P(b, c)``. Returns the number
    of stored entries read.
    """
    k = len(operands)
    n_cols = out.shape[0]
    rows = np.flatnonzero(src > 0.0)
    if rows.size == 0 or k == 0:
        return 0
    pivot = next((e for e, op in enumerate(operands) if not op[3]), -1)

    if k == 1 and pivot == 0:
        indptr, indices, data, _ = operands[0]
        starts = indptr[rows]
        counts = indptr[rows + 1] - starts
        total = int(counts.sum())
        if total == 0:
            return 0
        shift = starts - (np.cumsum(counts) - counts)
        sel = np.repeat(shift, counts) + np.arange(total)
        acc = _tnorm(kind, np.repeat(src[rows], counts), data[sel])
        np.maximum.at(out, indices[sel], acc)
        return total

    visits = 0
    for b in rows:
        s = src[b]
        if pivot >= 0:
            p_ptr, p_idx, p_val, _ = operands[pivot]
            lo, hi = p_ptr[b], p_ptr[b + 1]
            cols = p_idx[lo:hi]
            visits += hi - lo
            acc = np.full(cols.shape[0], s)
            for e, (ptr, idx, val, neg) in enumerate(operands):
                if e == pivot:
                    v = p_val[lo:hi]
                else:
                    visits += ptr[b + 1] - ptr[b]
                    v = _dense_row(ptr, idx, val, b, n_cols)[cols]
                    if neg:
                        v = 1.0 - v
                acc = _tnorm(kind, acc, v)
            out[cols] = np.maximum(out[cols], acc)
        else:
            acc = np.full(n_cols, s)
            for ptr, idx, val, _ in operands:
                visits += ptr[b + 1] - ptr[b]
                acc = _tnorm(kind, acc, 1.0 - _dense_row(ptr, idx, val, b, n_cols))
            np.maximum(out, acc, out=out)
    return int(visits)
