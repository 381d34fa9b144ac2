"""Reference evaluators used to check the inference engine.

All three are deliberately naive. The fuzzy and the symbolic evaluators
enumerate every assignment of every variable (as one numpy axis per
variable), so their cost is ``|E| ** n_vars``.
"""
from __future__ import annotations

import numpy as np

from . import fuzzy
from .errors import OracleLimitError, QueryValidationError
from .fuzzy import TNorm
from .logic import And, Atom, Const, Exists, Not, Or, children, parse_lisp_tree

DEFAULT_LIMIT = 10 ** 7


def _variables(node) -> list:
    """Every variable name, in first-appearance order; bound names are unique."""
    names = []

    def walk(n):
        if isinstance(n, Exists) and n.var not in names:
            names.append(n.var)
        if isinstance(n, Atom):
            for t in (n.head, n.tail):
                if not isinstance(t, Const) and t.name not in names:
                    names.append(t.name)
        for c in children(n):
            walk(c)

    walk(node)
    return names


def _check_limit(n, k, limit):
    if float(n) ** k > limit:
        raise OracleLimitError(f"{n}^{k} assignments exceed the oracle limit {limit}")


def _evaluate(node, axes, n, leaf, t_and, t_or, t_not, exists):
    """Evaluate over a tensor with one axis per variable name in ``axes``."""
    k = len(axes)

    def term_index(t):
        if isinstance(t, Const):
            return t.id
        shape = [1] * k
        shape[axes[t.name]] = n
        return np.arange(n).reshape(shape)

    def walk(x):
        if isinstance(x, Atom):
            return leaf(x.relation)[term_index(x.head), term_index(x.tail)]
        if isinstance(x, Not):
            return t_not(walk(x.sub))
        if isinstance(x, And):
            return t_and(walk(x.left), walk(x.right))
        if isinstance(x, Or):
            return t_or(walk(x.left), walk(x.right))
        val = np.asarray(walk(x.body))
        ax = axes[x.var]
        if val.ndim == 0:
            return val
        if val.shape[ax] == 1:
            return val
        return exists(val, ax)

    return walk(node)


def _to_vector(val, axes, free, n):
    val = np.asarray(val)
    if val.ndim == 0 or free not in axes:
        return np.full(n, val.max())
    # every non-free axis was reduced by its quantifier and has length 1
    other = tuple(i for i in range(val.ndim) if i != axes[free])
    out = val.max(axis=other) if other else val
    return np.broadcast_to(out, (n,)).copy()


def answer_vector_bruteforce(formula, matrices, conj=TNorm.PRODUCT, disj=TNorm.GODEL,
                             limit: int = DEFAULT_LIMIT, free: str | None = None):
    """``A(a)`` = fuzzy truth value of the formula with ``a`` substituted for the free variable."""
    conj, disj = TNorm.parse(conj), TNorm.parse(disj)
    names = _variables(formula)
    n = matrices.entity_count
    _check_limit(n, len(names), limit)
    axes = {v: i for i, v in enumerate(names)}
    dense = {}

    def leaf(r):
        if r not in dense:
            dense[r] = matrices.matrix(r).to_dense()
        return dense[r]

    val = _evaluate(formula, axes, n, leaf,
                    lambda a, b: fuzzy._tnorm(conj, a, b),
                    lambda a, b: fuzzy._tconorm(disj, a, b),
                    lambda a: 1.0 - a,
                    lambda v, ax: v.max(axis=ax, keepdims=True))
    if free is None:
        bound = {x.var for x in _walk(formula) if isinstance(x, Exists)}
        frees = [v for v in names if v not in bound]
        if len(frees) != 1:
            raise QueryValidationError(f"expected one free variable, found {frees}")
        free = frees[0]
    return np.asarray(_to_vector(val, axes, free, n), dtype=np.float64)


def truth_value(sentence, matrices, conj=TNorm.PRODUCT, disj=TNorm.GODEL,
                limit: int = DEFAULT_LIMIT) -> float:
    """Fuzzy truth value of a formula without free variables."""
    conj, disj = TNorm.parse(conj), TNorm.parse(disj)
    names = _variables(sentence)
    bound = {x.var for x in _walk(sentence) if isinstance(x, Exists)}
    if set(names) - bound:
        raise QueryValidationError("truth_value needs a sentence")
    n = matrices.entity_count
    _check_limit(n, len(names), limit)
    axes = {v: i for i, v in enumerate(names)}
    val = _evaluate(sentence, axes, n, lambda r: matrices.matrix(r).to_dense(),
                    lambda a, b: fuzzy._tnorm(conj, a, b),
                    lambda a, b: fuzzy._tconorm(disj, a, b),
                    lambda a: 1.0 - a,
                    lambda v, ax: v.max(axis=ax, keepdims=True))
    return float(np.asarray(val).max())


def answer_set_symbolic(formula, kg, limit: int = DEFAULT_LIMIT) -> set:
    """Entities that make the formula classically true on ``kg``."""
    names = _variables(formula)
    n = kg.entity_count
    _check_limit(n, len(names), limit)
    axes = {v: i for i, v in enumerate(names)}
    adj = {}

    def leaf(r):
        if r not in adj:
            a = np.zeros((n, n), dtype=bool)
            if r < kg.relation_count:
                t = kg.relation_triples(r)
                a[t[:, 0], t[:, 2]] = True
            adj[r] = a
        return adj[r]

    val = _evaluate(formula, axes, n, leaf, np.logical_and, np.logical_or, np.logical_not,
                    lambda v, ax: v.any(axis=ax, keepdims=True))
    bound = {x.var for x in _walk(formula) if isinstance(x, Exists)}
    frees = [v for v in names if v not in bound]
    if len(frees) != 1:
        raise QueryValidationError(f"expected one free variable, found {frees}")
    vec = _to_vector(val, axes, frees[0], n)
    return {int(i) for i in np.flatnonzero(vec)}


def _walk(node):
    yield node
    for c in children(node):
        yield from _walk(c)


def operator_tree_maxprod(lisp: str, relations, entities, arrays) -> np.ndarray:
    """Bottom-up set-operator evaluation of an operator tree with max-product semantics.

    ``arrays`` is a list of dense ``(n, n)`` relation matrices. Negation is
    only accepted directly over a one-hop projection whose parent is an
    intersection, the shape for which this evaluation is exact.
    """
    tree = parse_lisp_tree(lisp)
    rel_iter, ent_iter = iter(relations), iter(entities)
    n = arrays[0].shape[0]

    def one_hop(node):
        return node.op == "p" and node.args[0].op == "e"

    def walk(node, parent):
        if node.op == "e":
            v = np.zeros(n)
            v[int(next(ent_iter))] = 1.0
            return v
        if node.op == "p":
            P = arrays[int(next(rel_iter))]
            v = walk(node.args[0], "p")
            return (v[:, None] * P).max(axis=0)
        if node.op == "i":
            parts = [walk(a, "i") for a in node.args]
            out = parts[0]
            for p in parts[1:]:
                out = out * p
            return out
        if node.op == "u":
            parts = [walk(a, "u") for a in node.args]
            out = parts[0]
            for p in parts[1:]:
                out = np.maximum(out, p)
            return out
        if parent != "i" or not one_hop(node.args[0]):
            raise QueryValidationError("negation must sit under an intersection, over a one-hop projection")
        return 1.0 - walk(node.args[0], "n")

    return walk(tree, None)
