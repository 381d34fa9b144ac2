"""Fuzzy inference over query graphs.

Each DNF clause is answered by shrinking its query graph while updating a
candidate vector per node. Reductions run in a fixed priority order:
self-loops, constants, leaves, and finally enumeration of one node on a
cycle. Clause answers are merged with the disjunction t-conorm.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fuzzy
from .errors import ConfigError, EnumerationError, TrivialQueryError
from .fuzzy import TNorm
from .logic import clause_is_trivial, to_dnf
from .query_graph import CONSTANT, EXISTENTIAL, FREE, Node, QueryGraph, pick_enumeration_node

REMOVED = "removed"

LOG_EPS = 1e-12


@dataclass(frozen=True)
class InferenceConfig:
    conj: TNorm = TNorm.PRODUCT
    disj: TNorm = TNorm.GODEL
    exist: TNorm = TNorm.GODEL
    budget_m: int = 10
    max_depth: int = 3
    dense_routing: bool = True

    def __post_init__(self):
        object.__setattr__(self, "conj", TNorm.parse(self.conj))
        object.__setattr__(self, "disj", TNorm.parse(self.disj))
        object.__setattr__(self, "exist", TNorm.parse(self.exist))
        if self.exist != TNorm.GODEL:
            raise ConfigError("existential aggregation must be max (Godel): leaf cutting "
                              "moves the max inside the t-norm, which only max allows")
        if self.budget_m < 0:
            raise ConfigError("enumeration budget must be non-negative")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be non-negative")


@dataclass
class FitStats:
    """Work counters: stored entries read, and nodes enumerated."""

    visits: int = 0
    enumerations: int = 0
    candidates: int = 0
    steps: list = field(default_factory=list)
    trace: bool = False

    def log(self, *step):
        if self.trace:
            self.steps.append(step)


@dataclass
class _State:
    kinds: list
    values: list
    cand: dict
    alive: set
    edges: list
    free: int

    def copy(self):
        return _State(list(self.kinds), list(self.values), dict(self.cand), set(self.alive),
                      list(self.edges), self.free)


def prepare(formula) -> list:
    """Normalize and validate a query; returns one QueryGraph per DNF clause."""
    graphs = []
    for clause in to_dnf(formula):
        g = QueryGraph.from_clause(clause, check_connected=False)
        if clause_is_trivial(clause):
            raise TrivialQueryError(f"clause {clause} contains a sentence as a subformula")
        graphs.append(g)
    return graphs


def answer(formula, matrices, cfg: InferenceConfig | None = None, stats: FitStats | None = None):
    """Answer vector of an EFO1 formula: one truth value per entity."""
    cfg = cfg or InferenceConfig()
    return answer_graphs(prepare(formula), matrices, cfg, stats)


def answer_graphs(graphs, matrices, cfg: InferenceConfig, stats: FitStats | None = None):
    stats = stats if stats is not None else FitStats()
    out = None
    for g in graphs:
        v = answer_clause(g, matrices, cfg, stats)
        out = v if out is None else fuzzy._tconorm(cfg.disj, out, v)
    return out


def answer_clause(g: QueryGraph, matrices, cfg: InferenceConfig, stats: FitStats | None = None):
    stats = stats if stats is not None else FitStats()
    n = matrices.entity_count
    dense = cfg.dense_routing and matrices.has_dense and not any(
        nd.kind == EXISTENTIAL for nd in g.nodes)
    kinds = [nd.kind for nd in g.nodes]
    values = [nd.value if nd.kind == CONSTANT else None for nd in g.nodes]
    cand = {}
    for i, nd in enumerate(g.nodes):
        if nd.kind == CONSTANT:
            if not 0 <= nd.value < n:
                raise ValueError(f"entity a{nd.value} outside the {n} known entities")
            cand[i] = _one_hot(n, nd.value)
        else:
            cand[i] = np.ones(n)
    for e in g.edges:
        if not 0 <= e.relation < matrices.relation_count:
            raise ValueError(f"relation r{e.relation} outside the {matrices.relation_count} known relations")
    state = _State(kinds, values, cand, set(range(len(g.nodes))), list(g.edges), g.free)
    return _Run(matrices, cfg, stats, dense).fitc(state, 0)


def _one_hot(n, a):
    v = np.zeros(n)
    v[a] = 1.0
    return v


class _Run:
    def __init__(self, matrices, cfg, stats, dense):
        self.m = matrices
        self.cfg = cfg
        self.kind = cfg.conj
        self.stats = stats
        self.dense = dense

    def combine(self, u, v):
        return fuzzy._tnorm(self.kind, u, v)

    def fitc(self, st: _State, depth: int):
        while True:
            if st.alive == {st.free}:
                return st.cand[st.free]
            if self.remove_self_loops(st):
                continue
            if self.remove_constants(st):
                continue
            done, result = self.cut_leaf(st, depth)
            if done:
                return result
            if result:
                continue
            return self.enumerate(st, depth)

    # step 2: self-loops
    def remove_self_loops(self, st):
        loops = [e for e in st.edges if e.head == e.tail]
        if not loops:
            return False
        for e in loops:
            d = self.m.matrix(e.relation, dense=self.dense).diag()
            self.stats.visits += self.m.n
            st.cand[e.head] = self.combine(st.cand[e.head], d if e.positive else 1.0 - d)
            self.stats.log("self_loop", e)
        st.edges = [e for e in st.edges if e.head != e.tail]
        return True

    # step 3: constants
    def remove_constants(self, st):
        consts = {i for i in st.alive if st.kinds[i] == CONSTANT}
        if not consts:
            return False
        keep = []
        for e in st.edges:
            h_const, t_const = e.head in consts, e.tail in consts
            if h_const and t_const:
                raise TrivialQueryError("edge between two constants")
            if not (h_const or t_const):
                keep.append(e)
                continue
            a, v = (e.head, e.tail) if h_const else (e.tail, e.head)
            mat = self.m.matrix(e.relation, transposed=not h_const, dense=self.dense)
            row = mat.row(st.values[a])
            self.stats.visits += mat.row_nnz(st.values[a])
            st.cand[v] = self.combine(st.cand[v], row if e.positive else 1.0 - row)
            self.stats.log("constant", e)
        st.edges = keep
        st.alive -= consts
        return True

    def _operands(self, edges, src):
        """Edges oriented so that rows are indexed by node ``src``."""
        return [(self.m.matrix(e.relation, transposed=(e.head != src)), not e.positive)
                for e in edges]

    def _project(self, src_vec, operands):
        out, visits = fuzzy.project(self.kind, src_vec, operands, self.m.n)
        self.stats.visits += visits
        return out

    # step 4: leaves
    def cut_leaf(self, st, depth):
        """Returns (finished, progressed); ``finished`` carries the final vector."""
        nbrs = {i: set() for i in st.alive}
        for e in st.edges:
            nbrs[e.head].add(e.tail)
            nbrs[e.tail].add(e.head)
        leaves = sorted(i for i in st.alive if len(nbrs[i]) == 1)
        exist_leaves = [i for i in leaves if st.kinds[i] == EXISTENTIAL]
        if exist_leaves:
            u = exist_leaves[0]
            (v,) = nbrs[u]
            edges = [e for e in st.edges if u in (e.head, e.tail)]
            out = self._project(st.cand[u], self._operands(edges, u))
            st.cand[v] = self.combine(st.cand[v], out)
            st.edges = [e for e in st.edges if u not in (e.head, e.tail)]
            st.alive.discard(u)
            del st.cand[u]
            self.stats.log("leaf", u, v)
            return False, True
        if st.free in leaves:
            f = st.free
            (x,) = nbrs[f]
            edges = [e for e in st.edges if f in (e.head, e.tail)]
            sub = st.copy()
            sub.edges = [e for e in st.edges if f not in (e.head, e.tail)]
            sub.alive.discard(f)
            del sub.cand[f]
            sub.kinds[f] = REMOVED
            sub.kinds[x] = FREE
            sub.free = x
            self.stats.log("free_leaf", f, x)
            sub_answer = self.fitc(sub, depth)
            out = self._project(sub_answer, self._operands(edges, x))
            return True, self.combine(st.cand[f], out)
        return False, False

    # step 5: enumeration
    def enumerate(self, st, depth):
        if depth >= self.cfg.max_depth:
            raise EnumerationError(f"enumeration depth cap {self.cfg.max_depth} reached")
        probe = QueryGraph([Node(k, i) for i, k in enumerate(st.kinds)], [])
        u = pick_enumeration_node(probe, st.alive, st.edges)
        c = st.cand[u]
        order = np.lexsort((np.arange(c.size), -c))
        budget = int(np.count_nonzero(c == 1.0)) + self.cfg.budget_m
        picked = [int(a) for a in order[:budget] if c[a] > 0.0]
        self.stats.enumerations += 1
        self.stats.candidates += len(picked)
        self.stats.log("enumerate", u, len(picked))
        result = np.zeros(self.m.n)
        for a in picked:
            sub = st.copy()
            sub.kinds[u] = CONSTANT
            sub.values[u] = a
            sub.cand[u] = _one_hot(self.m.n, a)
            e_i = self.combine(self.fitc(sub, depth + 1), c[a])
            np.maximum(result, e_i, out=result)
        return result


def loss(answer_vec, truth) -> float:
    """Cross entropy between an answer vector and an answer set."""
    a = np.clip(np.asarray(answer_vec, dtype=np.float64), LOG_EPS, 1.0 - LOG_EPS)
    mask = np.zeros(a.size, dtype=bool)
    mask[list(truth)] = True
    return float(-(np.log(a[mask]).sum() + np.log1p(-a[~mask]).sum()))


def top_k(answer_vec, k: int = 10) -> list:
    """Entities with the highest scores; ties by ascending id."""
    v = np.asarray(answer_vec)
    order = np.lexsort((np.arange(v.size), -v))[:k]
    return [(int(i), float(v[i])) for i in order]
