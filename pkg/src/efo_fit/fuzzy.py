"""T-norms, fuzzy vectors and row-sparse fuzzy relation matrices.

A fuzzy vector is a float64 numpy array with entries in [0, 1]. A
:class:`FuzzyMatrix` stores either CSR data (absent entries are exactly 0,
stored entries lie in (0, 1]) or a dense 2-D array; every operation gives the
same bits for both representations.
"""
from __future__ import annotations

import enum

import numpy as np

from . import kernels


class TNorm(enum.IntEnum):
    GODEL = 0
    PRODUCT = 1
    LUKASIEWICZ = 2

    @classmethod
    def parse(cls, name: "str | TNorm") -> "TNorm":
        if isinstance(name, TNorm):
            return name
        key = str(name).strip().lower()
        aliases = {"godel": cls.GODEL, "gödel": cls.GODEL, "min": cls.GODEL,
                   "product": cls.PRODUCT, "prod": cls.PRODUCT,
                   "lukasiewicz": cls.LUKASIEWICZ, "łukasiewicz": cls.LUKASIEWICZ}
        if key not in aliases:
            raise ValueError(f"unknown t-norm {name!r}")
        return aliases[key]


def _check_unit(*values):
    for v in values:
        arr = np.asarray(v, dtype=np.float64)
        if not np.all((arr >= 0.0) & (arr <= 1.0)):
            raise ValueError("fuzzy truth values must lie in [0, 1]")


def _tnorm(kind, a, b):
    if kind == TNorm.GODEL:
        return np.minimum(a, b)
    if kind == TNorm.PRODUCT:
        return a * b
    return np.maximum(a - (1.0 - b), 0.0)


def _tconorm(kind, a, b):
    if kind == TNorm.GODEL:
        return np.maximum(a, b)
    if kind == TNorm.PRODUCT:
        return a + b - a * b
    return np.minimum(a + b, 1.0)


def tnorm(kind, a, b):
    """Apply the t-norm ``kind`` to scalars or arrays in [0, 1]."""
    kind = TNorm.parse(kind)
    _check_unit(a, b)
    out = _tnorm(kind, a, b)
    return float(out) if np.ndim(out) == 0 else out


def tconorm(kind, a, b):
    """The De Morgan dual ``1 - T(1 - a, 1 - b)``, evaluated in closed form."""
    kind = TNorm.parse(kind)
    _check_unit(a, b)
    out = _tconorm(kind, a, b)
    return float(out) if np.ndim(out) == 0 else out


def vec_combine(kind, u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    out = _tnorm(TNorm.parse(kind), u, v)
    _check_unit(out)
    return out


def vec_disjoin(kind, u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    out = _tconorm(TNorm.parse(kind), u, v)
    _check_unit(out)
    return out


class FuzzyMatrix:
    """Fuzzy membership matrix, CSR or dense.

    CSR rows have strictly increasing column indices. Use :meth:`from_coo` or
    :meth:`from_dense` rather than the constructor.
    """

    __slots__ = ("shape", "indptr", "indices", "data", "dense", "_diag", "_sparse")

    def __init__(self, shape, indptr=None, indices=None, data=None, dense=None):
        self.shape = (int(shape[0]), int(shape[1]))
        self.indptr = indptr
        self.indices = indices
        self.data = data
        self.dense = dense
        self._diag = None
        self._sparse = None

    # construction -----------------------------------------------------
    @classmethod
    def from_coo(cls, rows, cols, vals, shape) -> "FuzzyMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if rows.size and (rows.min() < 0 or rows.max() >= shape[0]
                          or cols.min() < 0 or cols.max() >= shape[1]):
            raise ValueError("entry outside matrix shape")
        _check_unit(vals)
        keep = vals > 0.0
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size > 1:
            dup = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
            if dup.any():
                raise ValueError("duplicate matrix entries")
        indptr = np.zeros(shape[0] + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=shape[0]), out=indptr[1:])
        return cls(shape, indptr, cols, vals)

    @classmethod
    def from_dense(cls, array, keep_dense=False) -> "FuzzyMatrix":
        array = np.array(array, dtype=np.float64)
        if array.ndim != 2:
            raise ValueError("dense matrix must be 2-D")
        _check_unit(array)
        if keep_dense:
            return cls(array.shape, dense=array)
        rows, cols = np.nonzero(array)
        return cls.from_coo(rows, cols, array[rows, cols], array.shape)

    @classmethod
    def empty(cls, n_rows, n_cols=None) -> "FuzzyMatrix":
        n_cols = n_rows if n_cols is None else n_cols
        return cls.from_coo([], [], [], (n_rows, n_cols))

    # representation ---------------------------------------------------
    @property
    def is_dense(self) -> bool:
        return self.dense is not None

    @property
    def nnz(self) -> int:
        if self.is_dense:
            return int(np.count_nonzero(self.dense))
        return int(self.indptr[-1])

    def to_dense(self) -> np.ndarray:
        if self.is_dense:
            return self.dense.copy()
        out = np.zeros(self.shape)
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        out[rows, self.indices] = self.data
        return out

    def as_dense(self) -> "FuzzyMatrix":
        return self if self.is_dense else FuzzyMatrix(self.shape, dense=self.to_dense())

    def as_sparse(self) -> "FuzzyMatrix":
        if not self.is_dense:
            return self
        if self._sparse is None:
            self._sparse = FuzzyMatrix.from_dense(self.dense)
        return self._sparse

    def csr(self):
        """(indptr, indices, data); dense matrices are converted, dropping zeros."""
        m = self.as_sparse()
        return m.indptr, m.indices, m.data

    def coo(self):
        m = self.as_sparse()
        rows = np.repeat(np.arange(m.shape[0], dtype=np.int64), np.diff(m.indptr))
        return rows, m.indices, m.data

    # access -----------------------------------------------------------
    def row(self, i: int) -> np.ndarray:
        if self.is_dense:
            return self.dense[i].copy()
        out = np.zeros(self.shape[1])
        lo, hi = self.indptr[i], self.indptr[i + 1]
        out[self.indices[lo:hi]] = self.data[lo:hi]
        return out

    def row_nnz(self, i: int) -> int:
        if self.is_dense:
            return self.shape[1]
        return int(self.indptr[i + 1] - self.indptr[i])

    def get(self, i: int, j: int) -> float:
        if self.is_dense:
            return float(self.dense[i, j])
        lo, hi = self.indptr[i], self.indptr[i + 1]
        k = lo + np.searchsorted(self.indices[lo:hi], j)
        if k < hi and self.indices[k] == j:
            return float(self.data[k])
        return 0.0

    def diag(self) -> np.ndarray:
        if self._diag is None:
            n = min(self.shape)
            if self.is_dense:
                self._diag = np.diagonal(self.dense).copy()
            else:
                rows, cols, vals = self.coo()
                d = np.zeros(n)
                on = rows == cols
                d[rows[on]] = vals[on]
                self._diag = d
        return self._diag

    def transpose(self) -> "FuzzyMatrix":
        if self.is_dense:
            return FuzzyMatrix(self.shape[::-1], dense=self.dense.T.copy())
        rows, cols, vals = self.coo()
        return FuzzyMatrix.from_coo(cols, rows, vals, self.shape[::-1])

    def equals(self, other: "FuzzyMatrix") -> bool:
        return self.shape == other.shape and np.array_equal(self.to_dense(), other.to_dense())

    def __repr__(self):
        kind = "dense" if self.is_dense else f"csr nnz={self.nnz}"
        return f"FuzzyMatrix({self.shape[0]}x{self.shape[1]}, {kind})"


def transpose(m: FuzzyMatrix) -> FuzzyMatrix:
    return m.transpose()


def diag(m: FuzzyMatrix) -> np.ndarray:
    return m.diag().copy()


def mat_col_scale(kind, m: FuzzyMatrix, v) -> FuzzyMatrix:
    """N(i, j) = M(i, j) T v(j); entries that become 0 are dropped."""
    kind = TNorm.parse(kind)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (m.shape[1],):
        raise ValueError(f"vector length {v.shape} does not match {m.shape[1]} columns")
    _check_unit(v)
    if m.is_dense:
        return FuzzyMatrix(m.shape, dense=_tnorm(kind, m.dense, v[None, :]))
    rows, cols, vals = m.coo()
    return FuzzyMatrix.from_coo(rows, cols, _tnorm(kind, vals, v[cols]), m.shape)


def col_max_reduce(m: FuzzyMatrix) -> np.ndarray:
    if m.is_dense:
        return m.dense.max(axis=0, initial=0.0)
    out = np.zeros(m.shape[1])
    np.maximum.at(out, m.indices, m.data)
    return out


def row_max_reduce(m: FuzzyMatrix) -> np.ndarray:
    if m.is_dense:
        return m.dense.max(axis=1, initial=0.0)
    out = np.zeros(m.shape[0])
    rows, _, vals = m.coo()
    np.maximum.at(out, rows, vals)
    return out


def project(kind, src, operands, n_cols=None):
    """Max-T projection of ``src`` through oriented operands.

    ``operands`` is a list of ``(FuzzyMatrix, negated)``; the result is
    ``out[c] = max_b src[b] T E_1(b, c) T ... T E_k(b, c)`` with
    ``E(b, c) = M(b, c)`` or ``1 - M(b, c)``. Returns ``(out, visits)``.
    """
    if not operands:
        raise ValueError("projection needs at least one operand")
    n_cols = operands[0][0].shape[1] if n_cols is None else n_cols
    out = np.zeros(n_cols)
    packed = [(*m.csr(), bool(neg)) for m, neg in operands]
    visits = kernels.project(int(TNorm.parse(kind)), src, packed, out)
    return out, visits
