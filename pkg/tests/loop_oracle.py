"""Assignment-by-assignment evaluator used as an independent second route in tests.

Walks the formula with an explicit dict of variable values; shares no code
with the tensor evaluator in ``efo_fit.oracle``.
"""
from efo_fit.logic import And, Atom, Const, Exists, Not, Or, free_variable


def truth(node, env, mat, conj, disj, n):
    if isinstance(node, Atom):
        def val(t):
            return t.id if isinstance(t, Const) else env[t.name]
        return float(mat[node.relation][val(node.head), val(node.tail)])
    if isinstance(node, Not):
        return 1.0 - truth(node.sub, env, mat, conj, disj, n)
    if isinstance(node, And):
        return conj(truth(node.left, env, mat, conj, disj, n), truth(node.right, env, mat, conj, disj, n))
    if isinstance(node, Or):
        return disj(truth(node.left, env, mat, conj, disj, n), truth(node.right, env, mat, conj, disj, n))
    if isinstance(node, Exists):
        return max(truth(node.body, {**env, node.var: b}, mat, conj, disj, n) for b in range(n))
    raise TypeError(node)


def answer_vector(formula, dense_mats, conj=lambda a, b: a * b, disj=max):
    n = dense_mats[0].shape[0]
    f = free_variable(formula)
    return [truth(formula, {f: a}, dense_mats, conj, disj, n) for a in range(n)]


def classical_answers(formula, kg):
    n = kg.entity_count
    mats = [[[0.0] * n for _ in range(n)] for _ in range(kg.relation_count)]
    for h, r, t in kg.triple_set():
        mats[r][h][t] = 1.0
    rows = [_Rows(m) for m in mats]
    vec = answer_vector(formula, rows, conj=min, disj=max)
    return {a for a, v in enumerate(vec) if v == 1.0}


class _Rows:
    def __init__(self, m):
        self.m = m
        self.shape = (len(m), len(m))

    def __getitem__(self, ij):
        return self.m[ij[0]][ij[1]]

