"""Oracle-backed correctness suites runnable from the command line.

Each suite draws random graphs, answers every structure with the engine
and compares against an independent evaluator. ``corrupt=True`` flips one
matrix entry before answering, as a negative control that must fail.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import InferenceConfig, answer
from .fuzzy import FuzzyMatrix, TNorm
from .kg import random_graph, random_split
from .matrices import MatrixSet, SyntheticScores, calibrated_pair, consistent_matrices, perfect_matrices
from .oracle import answer_set_symbolic, operator_tree_maxprod
from .structures import ALL, EXISTENTIAL_FREE, NEGATION_FREE, TREE_EXACT, get


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: int = 0
    counterexample: str | None = None

    @property
    def passed(self) -> bool:
        return self.checked > 0 and self.failures == 0

    def fail(self, text):
        self.failures += 1
        if self.counterexample is None:
            self.counterexample = text

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"; first counterexample: {self.counterexample}" if self.counterexample else ""
        return f"{status} {self.name}: {self.checked} checks, {self.failures} failures{extra}"


def random_instance(seed: int, n_range=(8, 30), r_range=(2, 4), density=(0.05, 0.15)):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    nr = int(rng.integers(r_range[0], r_range[1] + 1))
    kg = random_graph(n, nr, float(rng.uniform(*density)), rng)
    return kg, rng


def random_grounding(rng, n, nr):
    """Relations and pairwise-distinct anchors for every placeholder."""
    rels = {k: int(rng.integers(nr)) for k in range(1, 7)}
    ents = {k + 1: int(e) for k, e in enumerate(rng.choice(n, 3, replace=False))}
    return rels, ents


def corrupt_matrices(ms: MatrixSet, rng) -> MatrixSet:
    """Copy of ``ms`` with one entry of one matrix toggled between 0 and 1."""
    mats = list(ms.matrices)
    r = int(rng.integers(len(mats)))
    d = mats[r].to_dense()
    i, j = (int(x) for x in rng.integers(ms.n, size=2))
    d[i, j] = 1.0 - d[i, j]
    mats[r] = FuzzyMatrix.from_dense(d)
    return MatrixSet(mats)


def _groundings_that_matter(kg, rng, name, tries=20):
    """Prefer groundings whose answer set is non-empty so corruption is observable."""
    s = get(name)
    best = None
    for _ in range(tries):
        rels, ents = random_grounding(rng, kg.entity_count, kg.relation_count)
        f = s.ground(rels, ents)
        best = f
        if answer_set_symbolic(f, kg):
            return f
    return best


def perfectness_suite(seeds, quick=False, corrupt=False, conjs=(TNorm.PRODUCT, TNorm.GODEL)) -> SuiteResult:
    res = SuiteResult("perfectness")
    n_range = (8, 15) if quick else (8, 30)
    for seed in seeds:
        kg, rng = random_instance(seed, n_range)
        ms = perfect_matrices(kg)
        if corrupt:
            ms = corrupt_matrices(ms, rng)
        for name in ALL:
            f = _groundings_that_matter(kg, rng, name)
            want = answer_set_symbolic(f, kg)
            for conj in conjs:
                v = answer(f, ms, InferenceConfig(conj=conj, budget_m=kg.entity_count))
                got = {int(i) for i in np.flatnonzero(v)}
                res.checked += 1
                if got != want or not np.all((v == 0.0) | (v == 1.0)):
                    res.fail(f"seed {seed} {name} conj={TNorm(conj).name}: got {sorted(got)}, want {sorted(want)}")
    return res


def faithfulness_suite(seeds, quick=False, cap=0.9) -> SuiteResult:
    res = SuiteResult("faithfulness")
    n_range = (8, 15) if quick else (8, 30)
    for seed in seeds:
        kg, rng = random_instance(seed, n_range)
        obs = random_split(kg, 0.7, rng)
        ms = consistent_matrices(obs, rng, cap)
        for name in NEGATION_FREE:
            f = _groundings_that_matter(obs, rng, name)
            easy = answer_set_symbolic(f, obs)
            v = answer(f, ms, InferenceConfig(budget_m=kg.entity_count))
            res.checked += 1
            if not all(v[a] == 1.0 for a in easy):
                res.fail(f"seed {seed} {name}: deductible answers {sorted(easy)} scored {v[sorted(easy)]}")
    return res


def operator_tree_suite(seeds, quick=False) -> SuiteResult:
    res = SuiteResult("operator-tree-coincidence")
    n_range = (8, 15) if quick else (8, 30)
    for seed in seeds:
        kg, rng = random_instance(seed, n_range)
        ms = calibrated_pair(SyntheticScores(kg, seed), kg)
        for name in TREE_EXACT:
            s = get(name)
            rels, ents = random_grounding(rng, kg.entity_count, kg.relation_count)
            lisp, lr, le = s.ground_lisp(rels, ents)
            arrays = ms.dense_arrays(prefer_dense=name in EXISTENTIAL_FREE)
            want = operator_tree_maxprod(lisp, lr, le, arrays)
            got = answer(s.ground(rels, ents), ms, InferenceConfig(conj=TNorm.PRODUCT, budget_m=10))
            res.checked += 1
            if not np.array_equal(got, want):
                res.fail(f"seed {seed} {name}: max |diff| {np.abs(got - want).max():.3g}")
    return res


def run_all(seeds=range(10), quick=False, corrupt=False) -> list:
    return [perfectness_suite(seeds, quick, corrupt), faithfulness_suite(seeds, quick),
            operator_tree_suite(seeds, quick)]
