import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from efo_fit.engine import FitStats, InferenceConfig, answer, loss, prepare, top_k
from efo_fit.errors import ConfigError, EnumerationError, TrivialQueryError
from efo_fit.fuzzy import FuzzyMatrix, TNorm
from efo_fit.kg import KnowledgeGraph, random_graph
from efo_fit.logic import parse_efo1
from efo_fit.matrices import MatrixSet, SyntheticScores, calibrated_pair, perfect_matrices
from efo_fit.oracle import answer_vector_bruteforce
from efo_fit.structures import ALL, get

from loop_oracle import answer_vector

EXACT = InferenceConfig(budget_m=10_000)


def run(text, ms, cfg=EXACT):
    return answer(parse_efo1(text), ms, cfg)


def test_toy_examples(toy_matrices):
    # frozen from the loop evaluator on the toy graph
    assert np.array_equal(run("r0(a0,f)", toy_matrices), [0, 1, 1, 0])
    assert np.array_equal(run("r0(a0,x1)&r1(x1,f)", toy_matrices), [0, 1, 0, 1])
    assert np.array_equal(run("r0(a0,f)&r1(x1,f)", toy_matrices), [0, 1, 0, 0])
    assert np.array_equal(run("!r0(a0,f)", toy_matrices), [1, 0, 0, 1])
    assert np.array_equal(run("r0(a0,f)&!r1(a2,f)", toy_matrices), [0, 0, 1, 0])


def test_toy_examples_match_loop_evaluator(toy_matrices):
    dense = [m.to_dense() for m in toy_matrices.matrices]
    for text in ["r0(a0,f)", "r0(a0,x1)&r1(x1,f)", "r0(a0,f)&r1(x1,f)", "!r0(a0,f)",
                 "r0(a0,x1)&r1(x1,x2)&r1(x2,f)", "r0(a0,x1)&r1(x1,f)&r1(x1,x2)&r1(x2,f)"]:
        assert np.array_equal(run(text, toy_matrices), answer_vector(parse_efo1(text), dense)), text


def test_empty_matrices_give_zero():
    ms = perfect_matrices(KnowledgeGraph(5, 2, np.zeros((0, 3), dtype=np.int64)))
    for name in ["1p", "2p", "3c", "2u", "im"]:
        f = get(name).ground({k: k % 2 for k in range(1, 7)}, {1: 0, 2: 1, 3: 2})
        assert not answer(f, ms, EXACT).any()


def test_parallel_edges_combine_rows():
    rng = np.random.default_rng(0)
    mats = [FuzzyMatrix.from_dense(rng.random((5, 5))) for _ in range(2)]
    ms = MatrixSet(mats)
    got = run("r0(a0,f)&r1(a0,f)", ms, InferenceConfig())
    assert np.array_equal(got, mats[0].row(0) * mats[1].row(0))


def test_self_loops():
    kg = KnowledgeGraph(3, 2, np.array([[0, 0, 1], [0, 0, 2], [1, 0, 1], [0, 1, 2]]))
    ms = perfect_matrices(kg)
    # positive loop keeps only entities with the loop
    assert np.array_equal(run("r0(a0,x1)&r0(x1,x1)&r0(x1,f)", ms), [0, 1, 0])
    # empty diagonal: positive loop kills, negated loop is neutral
    assert not run("r1(a0,x1)&r1(x1,x1)&r0(x1,f)", ms).any()
    assert np.array_equal(run("r1(a0,f)&!r1(f,f)", ms), run("r1(a0,f)", ms))


def test_trace_records_steps(toy_matrices):
    stats = FitStats(trace=True)
    answer(parse_efo1("r0(a0,f)"), toy_matrices, EXACT, stats)
    assert [s[0] for s in stats.steps] == ["constant"]
    assert stats.visits == 2
    stats = FitStats(trace=True)
    answer(parse_efo1("r0(a0,x1)&r1(x1,f)"), toy_matrices, EXACT, stats)
    assert [s[0] for s in stats.steps] == ["constant", "leaf"]


def test_cyclic_query_exact_with_full_budget():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        kg = random_graph(10, 3, 0.2, rng)
        ms = calibrated_pair(SyntheticScores(kg, seed), kg)
        for name in ["3c", "3cm", "3mp"]:
            f = get(name).ground({k: int(rng.integers(3)) for k in range(1, 7)}, {1: 0, 2: 1, 3: 2})
            want = answer_vector_bruteforce(f, ms)
            got = answer(f, ms, InferenceConfig(budget_m=kg.entity_count))
            assert np.abs(got - want).max() <= 1e-12, (seed, name)


def test_zero_budget_is_exact_on_perfect_matrices():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        kg = random_graph(12, 3, 0.15, rng)
        ms = perfect_matrices(kg)
        f = get("3c").ground({k: int(rng.integers(3)) for k in range(1, 7)}, {1: 0, 2: 1, 3: 2})
        assert np.array_equal(answer(f, ms, InferenceConfig(budget_m=0)), answer_vector_bruteforce(f, ms))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000), name=st.sampled_from(["3c", "3cm", "3mp"]))
def test_budget_monotone(seed, name):
    rng = np.random.default_rng(seed)
    kg = random_graph(12, 2, 0.15, rng)
    ms = calibrated_pair(SyntheticScores(kg, seed), kg)
    f = get(name).ground({k: int(rng.integers(2)) for k in range(1, 7)}, {1: 0, 2: 1, 3: 2})
    prev = None
    for m in (0, 1, 3, 12):
        cur = answer(f, ms, InferenceConfig(budget_m=m))
        if prev is not None:
            assert np.all(cur >= prev)
        prev = cur


@pytest.mark.parametrize("name", ALL)
def test_clause_literal_order_does_not_matter(name):
    # product is commutative only up to rounding, so compare with Godel
    rng = np.random.default_rng(7)
    kg = random_graph(9, 3, 0.2, rng)
    ms = calibrated_pair(SyntheticScores(kg, 7), kg)
    f = get(name).ground({k: int(rng.integers(3)) for k in range(1, 7)}, {1: 0, 2: 1, 3: 2})
    cfg = InferenceConfig(conj="godel", budget_m=9)
    base = answer(f, ms, cfg)
    from efo_fit.engine import answer_graphs
    from efo_fit.query_graph import QueryGraph
    graphs = prepare(f)
    flipped = [QueryGraph(g.nodes, list(reversed(g.edges))) for g in graphs]
    assert np.array_equal(answer_graphs(flipped, ms, cfg), base)


def test_depth_cap():
    rng = np.random.default_rng(0)
    kg = random_graph(6, 2, 0.3, rng)
    f = get("3c").ground({k: k % 2 for k in range(1, 7)}, {1: 0, 2: 1})
    with pytest.raises(EnumerationError):
        answer(f, perfect_matrices(kg), InferenceConfig(max_depth=0))


def test_invalid_queries(toy_matrices):
    with pytest.raises(TrivialQueryError):
        run("r0(a0,a1)&r1(a0,f)", toy_matrices)
    with pytest.raises(ValueError):
        run("r7(a0,f)", toy_matrices)
    with pytest.raises(ConfigError):
        InferenceConfig(exist="product")
    with pytest.raises(ConfigError):
        InferenceConfig(budget_m=-1)


def test_loss_examples():
    assert loss([1.0, 0.0, 0.0], {0}) <= 3 * 2e-12
    assert loss([0.5] * 4, {1}) == pytest.approx(4 * math.log(2), abs=1e-12)
    assert loss([0.25], {0}) == pytest.approx(math.log(4), abs=1e-12)


def test_top_k_ties_by_id():
    assert top_k(np.array([0.5, 0.9, 0.5, 0.1]), 3) == [(1, 0.9), (0, 0.5), (2, 0.5)]


@pytest.mark.parametrize("conj", list(TNorm))
def test_all_tnorms_match_oracle_on_acyclic_structures(conj):
    rng = np.random.default_rng(11)
    kg = random_graph(8, 3, 0.2, rng)
    ms = calibrated_pair(SyntheticScores(kg, 11), kg)
    for name in ["2p", "3p", "ip", "pi", "inp", "pin", "2il", "3il", "up"]:
        f = get(name).ground({k: int(rng.integers(3)) for k in range(1, 7)}, {1: 0, 2: 1, 3: 2})
        got = answer(f, ms, InferenceConfig(conj=conj, budget_m=8))
        want = answer_vector_bruteforce(f, ms, conj=conj)
        assert np.abs(got - want).max() <= 1e-12, name
