"""Relation matrices: perfect, consistent and calibrated, plus file formats.

Matrix file layout: one JSON header line, then one block per relation. A
block starts with a little-endian ``u8`` type tag (0 = row-sparse, 1 = dense).
Sparse blocks hold ``u64`` row count, then per non-empty row ``u64 row,
u64 nnz`` and ``nnz`` pairs of ``(u64 col, f64 value)``. Dense blocks hold
``entities * entities`` ``f64`` values in row-major order.

Score file layout: one JSON header line, then ``relations * entities`` rows
of ``entities`` little-endian ``f32`` scores (relation-major, head-major).
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError, KGFormatError
from .fuzzy import FuzzyMatrix
from .kg import KnowledgeGraph

SPARSE_BLOCK, DENSE_BLOCK = 0, 1
_PAIR = np.dtype([("col", "<u8"), ("val", "<f8")])


class MatrixSet:
    """One fuzzy matrix per relation, with cached transposes.

    ``dense`` optionally holds a dense companion per relation; the engine
    reads it for clauses without existential variables.
    """

    def __init__(self, matrices, dense=None):
        self.matrices = list(matrices)
        if not self.matrices:
            raise ValueError("matrix set needs at least one relation")
        self.n = self.matrices[0].shape[0]
        for m in self.matrices:
            if m.shape != (self.n, self.n):
                raise ValueError(f"expected {self.n}x{self.n} matrices, got {m.shape}")
        self.dense = list(dense) if dense is not None else None
        self._t = {}

    @property
    def entity_count(self) -> int:
        return self.n

    @property
    def relation_count(self) -> int:
        return len(self.matrices)

    @property
    def has_dense(self) -> bool:
        return self.dense is not None

    def matrix(self, r: int, transposed: bool = False, dense: bool = False) -> FuzzyMatrix:
        if dense and self.dense is not None:
            base = self.dense[r]
        else:
            base = self.matrices[r]
            dense = False
        if not transposed:
            return base
        key = (r, dense)
        if key not in self._t:
            self._t[key] = base.transpose()
        return self._t[key]

    def row(self, r: int, a: int, transposed: bool = False, dense: bool = False) -> np.ndarray:
        return self.matrix(r, transposed, dense).row(a)

    def with_dense(self) -> "MatrixSet":
        """Same matrices with dense companions materialized from the sparse ones."""
        return MatrixSet(self.matrices, [m.as_dense() for m in self.matrices])

    def dense_arrays(self, prefer_dense: bool = False) -> list:
        src = self.dense if prefer_dense and self.dense is not None else self.matrices
        return [m.to_dense() for m in src]

    def equals(self, other: "MatrixSet") -> bool:
        if self.relation_count != other.relation_count or self.n != other.n:
            return False
        if all(a.equals(b) for a, b in zip(self.matrices, other.matrices)) is False:
            return False
        if (self.dense is None) != (other.dense is None):
            return False
        if self.dense is not None:
            return all(a.equals(b) for a, b in zip(self.dense, other.dense))
        return True


# builders ---------------------------------------------------------------
def perfect_matrices(kg: KnowledgeGraph) -> MatrixSet:
    """P_r(h, t) = 1 exactly when (h, r, t) is in the graph."""
    n = kg.entity_count
    out = []
    for r in range(kg.relation_count):
        t = kg.relation_triples(r)
        out.append(FuzzyMatrix.from_coo(t[:, 0], t[:, 2], np.ones(len(t)), (n, n)))
    return MatrixSet(out)


def consistent_matrices(kg_observed: KnowledgeGraph, rng=None, cap: float = 0.9,
                        noise_rate: float = 0.05) -> MatrixSet:
    """Observed triples read 1; a random share of unobserved pairs get values in (0, cap]."""
    if not 0.0 < cap < 1.0:
        raise ValueError("cap must lie strictly between 0 and 1")
    n = kg_observed.entity_count
    out = []
    for r in range(kg_observed.relation_count):
        t = kg_observed.relation_triples(r)
        dense = np.zeros((n, n))
        if rng is not None and noise_rate > 0:
            mask = rng.random((n, n)) < noise_rate
            # (0, cap]: flip [0, 1) to (0, 1] before scaling
            dense[mask] = cap * (1.0 - rng.random(int(mask.sum())))
        dense[t[:, 0], t[:, 2]] = 1.0
        out.append(FuzzyMatrix.from_dense(dense))
    return MatrixSet(out)


@dataclass(frozen=True)
class CalibrationConfig:
    epsilon: float = 0.005
    delta: float = 0.001
    mode: str = "test"  # train | test | dense-test

    def __post_init__(self):
        if self.mode not in ("train", "test", "dense-test"):
            raise CalibrationError(f"unknown calibration mode {self.mode!r}")
        if not 0.0 <= self.epsilon < 1.0:
            raise CalibrationError("epsilon must lie in [0, 1)")
        if self.mode != "train" and not 0.0 < self.delta < 1.0:
            raise CalibrationError("delta must lie in (0, 1) so unobserved entries stay below 1")


class ScoreSource:
    """Row-oriented link-prediction scores: ``row(r, a)`` gives one score per tail."""

    entities: int
    relations: int

    def row(self, r: int, a: int) -> np.ndarray:
        raise NotImplementedError


class ArrayScores(ScoreSource):
    def __init__(self, scores):
        self.scores = np.asarray(scores)
        if self.scores.ndim != 3 or self.scores.shape[1] != self.scores.shape[2]:
            raise ValueError("scores must have shape (relations, entities, entities)")
        self.relations, self.entities = self.scores.shape[0], self.scores.shape[1]

    def row(self, r, a):
        return np.asarray(self.scores[r, a], dtype=np.float64)


class SyntheticScores(ArrayScores):
    """Deterministic noisy scorer that prefers triples of a reference graph."""

    def __init__(self, kg: KnowledgeGraph, seed: int = 0, signal: float = 3.0, noise: float = 1.0):
        rng = np.random.default_rng(seed)
        n, nr = kg.entity_count, kg.relation_count
        s = rng.normal(0.0, noise, size=(nr, n, n))
        t = kg.triples
        s[t[:, 1], t[:, 0], t[:, 2]] += signal
        super().__init__(s.astype(np.float32))


class ScoreFile(ArrayScores):
    """Memory-mapped score file."""

    def __init__(self, path):
        with open(path, "rb") as fh:
            header = json.loads(fh.readline())
            offset = fh.tell()
        if header.get("dtype") != "f32":
            raise KGFormatError(f"{path}: unsupported score dtype {header.get('dtype')!r}")
        n, nr = int(header["entities"]), int(header["relations"])
        data = np.memmap(path, dtype="<f4", mode="r", offset=offset, shape=(nr, n, n))
        super().__init__(data)
        self.header = header


def write_scores(path, scores):
    scores = np.asarray(scores, dtype="<f4")
    header = {"entities": scores.shape[1], "relations": scores.shape[0], "dtype": "f32",
              "order": "relation-major, head-major rows"}
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode())
        fh.write(np.ascontiguousarray(scores).tobytes())


def softmax(s: np.ndarray) -> np.ndarray:
    z = np.exp(s - s.max())
    return z / z.sum()


def calibrate_row(scores: np.ndarray, observed_tails, cfg: CalibrationConfig) -> np.ndarray:
    """Calibrated membership row for one (head, relation) pair."""
    s = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise CalibrationError("non-finite score")
    p = softmax(s)
    obs = np.asarray(sorted(observed_tails), dtype=np.int64)
    q = obs.size / p[obs].sum() if obs.size else 1.0
    v = p * q
    if cfg.mode == "train":
        return np.minimum(v, 1.0)
    out = np.minimum(v, 1.0 - cfg.delta)
    if cfg.mode == "test":
        out[v < cfg.epsilon] = 0.0
    out[obs] = 1.0
    return out


def calibrate(scores: ScoreSource, kg_observed: KnowledgeGraph, cfg: CalibrationConfig,
              reverse: str = "transpose") -> MatrixSet:
    """Calibrated matrices for every relation of ``kg_observed``.

    When the graph was reverse-enriched (twice the score relations), reverse
    matrices are transposes of the forward ones, or, with
    ``reverse="scores"``, calibrated from the score rows of the stored
    reverse relation.
    """
    n, nr = kg_observed.entity_count, kg_observed.relation_count
    if scores.entities != n:
        raise CalibrationError(f"scores cover {scores.entities} entities, graph has {n}")
    if scores.relations == nr:
        base, enriched = nr, False
    elif 2 * scores.relations == nr and reverse == "transpose":
        base, enriched = scores.relations, True
    else:
        raise CalibrationError(f"scores cover {scores.relations} relations, graph has {nr}")
    mats = []
    for r in range(base):
        rows = np.stack([calibrate_row(scores.row(r, a), kg_observed.tails(a, r), cfg)
                         for a in range(n)])
        mats.append(FuzzyMatrix.from_dense(rows, keep_dense=(cfg.mode != "test")))
    if enriched:
        mats += [m.transpose() for m in mats]
    return MatrixSet(mats)


def calibrated_pair(scores, kg_observed, epsilon=0.005, delta=0.001) -> MatrixSet:
    """Sparse test-mode matrices with dense-test companions attached."""
    sparse = calibrate(scores, kg_observed, CalibrationConfig(epsilon, delta, "test"))
    dense = calibrate(scores, kg_observed, CalibrationConfig(epsilon, delta, "dense-test"))
    return MatrixSet(sparse.matrices, dense.matrices)


# file format ------------------------------------------------------------
def _write_block(fh, m: FuzzyMatrix, dense: bool):
    if dense:
        fh.write(np.uint8(DENSE_BLOCK).tobytes())
        fh.write(np.ascontiguousarray(m.to_dense(), dtype="<f8").tobytes())
        return
    fh.write(np.uint8(SPARSE_BLOCK).tobytes())
    indptr, indices, data = m.csr()
    counts = np.diff(indptr)
    rows = np.flatnonzero(counts)
    fh.write(np.uint64(rows.size).tobytes())
    for i in rows:
        lo, hi = indptr[i], indptr[i + 1]
        fh.write(np.array([i, hi - lo], dtype="<u8").tobytes())
        pairs = np.empty(hi - lo, dtype=_PAIR)
        pairs["col"] = indices[lo:hi]
        pairs["val"] = data[lo:hi]
        fh.write(pairs.tobytes())


def _read_block(buf, pos, n):
    tag = buf[pos]
    pos += 1
    if tag == DENSE_BLOCK:
        arr = np.frombuffer(buf, dtype="<f8", count=n * n, offset=pos).reshape(n, n)
        return FuzzyMatrix.from_dense(arr, keep_dense=True), pos + 8 * n * n
    if tag != SPARSE_BLOCK:
        raise KGFormatError(f"unknown matrix block tag {tag}")
    (n_rows,) = np.frombuffer(buf, dtype="<u8", count=1, offset=pos)
    pos += 8
    rows, cols, vals = [], [], []
    for _ in range(int(n_rows)):
        i, nnz = np.frombuffer(buf, dtype="<u8", count=2, offset=pos)
        pos += 16
        pairs = np.frombuffer(buf, dtype=_PAIR, count=int(nnz), offset=pos)
        pos += 16 * int(nnz)
        rows.append(np.full(int(nnz), int(i)))
        cols.append(pairs["col"].astype(np.int64))
        vals.append(pairs["val"])
    if rows:
        m = FuzzyMatrix.from_coo(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), (n, n))
    else:
        m = FuzzyMatrix.empty(n)
    return m, pos


def save_matrices(ms: MatrixSet, path):
    """Write sparse blocks (plus dense companions, if any) to ``path``."""
    blocks = ["sparse"] * ms.relation_count
    if ms.dense is not None:
        blocks += ["dense"] * ms.relation_count
    header = {"entities": ms.n, "relations": ms.relation_count, "dtype": "f64",
              "layout": "row-sparse", "blocks": blocks}
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode())
        for m in ms.matrices:
            _write_block(fh, m, dense=m.is_dense)
        if ms.dense is not None:
            for m in ms.dense:
                _write_block(fh, m, dense=True)


def load_matrices(path) -> MatrixSet:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        buf = fh.read()
    if header.get("dtype") != "f64":
        raise KGFormatError(f"{path}: unsupported matrix dtype {header.get('dtype')!r}")
    n, nr = int(header["entities"]), int(header["relations"])
    n_blocks = len(header.get("blocks", [])) or nr
    pos, mats = 0, []
    for _ in range(n_blocks):
        m, pos = _read_block(buf, pos, n)
        mats.append(m)
    if pos != len(buf):
        raise KGFormatError(f"{path}: {len(buf) - pos} trailing bytes")
    return MatrixSet(mats[:nr], mats[nr:] if n_blocks > nr else None)
