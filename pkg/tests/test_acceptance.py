"""Acceptance criteria 1-9, one test each.

Every test compares the engine against an evaluator that does not share its
code path, and records a PASS/FAIL line shown in the terminal summary.
Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import numpy as np
import pytest

from efo_fit.engine import FitStats, InferenceConfig, answer
from efo_fit.evaluation import evaluate
from efo_fit.fuzzy import FuzzyMatrix, TNorm, _tconorm, _tnorm
from efo_fit.kg import random_graph, random_split
from efo_fit.logic import (And, Atom, Const, Exists, ExistVar, FreeVar, Not, Or, free_variables, parse_efo1,
                           to_dnf)
from efo_fit.matrices import (CalibrationConfig, MatrixSet, SyntheticScores, calibrate, calibrated_pair,
                              consistent_matrices, perfect_matrices)
from efo_fit.oracle import answer_set_symbolic, answer_vector_bruteforce, operator_tree_maxprod
from efo_fit.sampler import emit_dataset
from efo_fit.selftest import random_grounding, random_instance
from efo_fit.structures import ALL, EXISTENTIAL_FREE, NEGATION_FREE, TREE_EXACT, get

pytestmark = pytest.mark.acceptance


def ground_with_answers(kg, rng, name, tries=20):
    """A grounding of ``name``, preferring ones with a non-empty answer set."""
    s = get(name)
    f = None
    for _ in range(tries):
        f = s.ground(*random_grounding(rng, kg.entity_count, kg.relation_count))
        if answer_set_symbolic(f, kg):
            break
    return f


def test_c1_perfectness(criterion):
    checked, bad = 0, []
    for seed in range(100):
        kg, rng = random_instance(seed, (8, 30), (2, 4), (0.05, 0.15))
        ms = perfect_matrices(kg)
        for name in ALL:
            f = ground_with_answers(kg, rng, name)
            want = answer_set_symbolic(f, kg)
            for conj in (TNorm.PRODUCT, TNorm.GODEL):
                v = answer(f, ms, InferenceConfig(conj=conj, budget_m=kg.entity_count))
                checked += 1
                if {int(i) for i in np.flatnonzero(v)} != want or not np.all((v == 0) | (v == 1)):
                    bad.append((seed, name, conj.name))
    ok = not bad
    criterion(1, ok, f"{checked} checks over 100 graphs x {len(ALL)} structures x 2 t-norms, "
                     f"{len(bad)} mismatches{'' if ok else f', first {bad[0]}'}")
    assert ok


def test_c2_faithfulness(criterion, tmp_path):
    checked, bad = 0, []
    for seed in range(100):
        kg, rng = random_instance(seed)
        obs = random_split(kg, 0.7, rng)
        ms = consistent_matrices(obs, rng, cap=0.9)
        for name in NEGATION_FREE:
            f = ground_with_answers(obs, rng, name)
            easy = sorted(answer_set_symbolic(f, obs))
            v = answer(f, ms, InferenceConfig(budget_m=kg.entity_count))
            checked += 1
            if not np.all(v[easy] == 1.0):
                bad.append((seed, name))
    # faithfulness-mode MRR on a sampled dataset
    rng = np.random.default_rng(2024)
    complete = random_graph(30, 3, 0.1, rng)
    observed = random_split(complete, 0.7, rng)
    samples = emit_dataset(NEGATION_FREE, 3, observed, complete, seed=7,
                           path=tmp_path / "c2.jsonl")
    report = evaluate(samples, consistent_matrices(observed, np.random.default_rng(1), cap=0.9),
                      InferenceConfig(budget_m=30), mode="faithful")
    mrrs = {s: r["mrr"] for s, r in report.rows.items()}
    ok = not bad and report.failures == 0 and mrrs and all(m == 100.0 for m in mrrs.values())
    criterion(2, ok, f"{checked} groundings, {len(bad)} deductible answers below 1.0; faithful MRR over "
                     f"{len(mrrs)} structures: min {min(mrrs.values()):.2f}")
    assert ok


def test_c3_operator_tree_coincidence(criterion):
    checked, bad = 0, []
    for seed in range(50):
        kg, rng = random_instance(seed)
        ms = calibrated_pair(SyntheticScores(kg, seed), kg)
        for name in TREE_EXACT:
            s = get(name)
            rels, ents = random_grounding(rng, kg.entity_count, kg.relation_count)
            lisp, lr, le = s.ground_lisp(rels, ents)
            want = operator_tree_maxprod(lisp, lr, le, ms.dense_arrays(prefer_dense=name in EXISTENTIAL_FREE))
            got = answer(s.ground(rels, ents), ms, InferenceConfig(conj=TNorm.PRODUCT))
            checked += 1
            if not np.array_equal(got, want):
                bad.append((seed, name, float(np.abs(got - want).max())))
    ok = not bad
    criterion(3, ok, f"{checked} instances over 50 calibrated graphs, {len(bad)} not bitwise equal"
                     f"{'' if ok else f', first {bad[0]}'}")
    assert ok


# random EFO1 formulas over f, x1, x2 ------------------------------------
def random_formula(rng, depth=3, scope=(), pool=("x1", "x2")):
    terms = ["a0", "a1", "f", *scope]

    def term(name):
        if name.startswith("a"):
            return Const(int(name[1:]))
        return FreeVar(name) if name == "f" else ExistVar(name)

    def atom():
        return Atom(int(rng.integers(3)), term(str(rng.choice(terms))), term(str(rng.choice(terms))))

    roll = rng.random()
    if depth == 0 or roll < 0.25:
        a = atom()
        return Not(a) if rng.random() < 0.3 else a
    free_names = [v for v in pool if v not in scope]
    if roll < 0.45 and free_names:
        v = str(rng.choice(free_names))
        return Exists(v, random_formula(rng, depth - 1, scope + (v,), pool))
    cls = And if rng.random() < 0.55 else Or
    left = random_formula(rng, depth - 1, scope, pool)
    used = _bound(left)
    right = random_formula(rng, depth - 1, scope, tuple(v for v in pool if v not in used))
    return cls(left, right)


def _bound(node):
    if isinstance(node, Exists):
        return {node.var} | _bound(node.body)
    if isinstance(node, (And, Or)):
        return _bound(node.left) | _bound(node.right)
    return set()


def _dnf_gap(disj, count=500, crisp=False):
    """Max |clause aggregate - formula| over ``count`` random formulas and all substitutions."""
    rng = np.random.default_rng(0)
    n, worst, done = 5, 0.0, 0
    while done < count:
        formula = random_formula(rng)
        if "f" not in free_variables(formula):
            continue  # a sentence, not a query
        if crisp:
            mats = MatrixSet([FuzzyMatrix.from_dense((rng.random((n, n)) < 0.4).astype(float)) for _ in range(3)])
        else:
            mats = MatrixSet([FuzzyMatrix.from_dense(rng.random((n, n)) * (rng.random((n, n)) < 0.5))
                              for _ in range(3)])
        want = answer_vector_bruteforce(formula, mats, TNorm.PRODUCT, disj, free="f")
        got = None
        for clause in to_dnf(formula):
            v = answer_vector_bruteforce(clause.to_formula(), mats, TNorm.PRODUCT, disj, free="f")
            got = v if got is None else _tconorm(disj, got, v)
        worst = max(worst, float(np.abs(got - want).max()))
        done += 1
    return worst


def test_c4_dnf_soundness(criterion):
    godel = _dnf_gap(TNorm.GODEL)
    prod = _dnf_gap(TNorm.PRODUCT)
    ok = godel == 0.0 and prod <= 1e-12
    criterion(4, ok, f"500 formulas each; max |diff| Godel disjunction {godel:.3g} (need 0), "
                     f"Product disjunction {prod:.3g} (need <= 1e-12)")
    assert ok


def test_c4_support_product_disjunction_exact_on_crisp_values():
    # on {0,1} values both disjunctions are Boolean, so the rewrite is exact
    assert _dnf_gap(TNorm.PRODUCT, 200, crisp=True) == 0.0


def test_c4_support_product_disjunction_does_not_distribute():
    # (a | b) & c against (a & c) | (b & c) with the product pair, all values 0.5
    a = b = c = 0.5
    lhs = _tnorm(TNorm.PRODUCT, _tconorm(TNorm.PRODUCT, a, b), c)
    rhs = _tconorm(TNorm.PRODUCT, _tnorm(TNorm.PRODUCT, a, c), _tnorm(TNorm.PRODUCT, b, c))
    assert (lhs, rhs) == (0.375, 0.4375)


def test_c5_tnorm_axioms(criterion):
    rng = np.random.default_rng(5)
    a, b, c = rng.random((3, 100_000))
    # include the boundary values
    a[:4], b[:4], c[:4] = [0, 1, 0, 1], [0, 0, 1, 1], [1, 0, 0, 1]
    worst = 0.0
    for kind in TNorm:
        t = lambda x, y: _tnorm(kind, x, y)  # noqa: E731
        lo, hi = np.minimum(b, c), np.maximum(b, c)
        gaps = [np.abs(t(a, b) - t(b, a)).max(),
                np.abs(t(a, t(b, c)) - t(t(a, b), c)).max(),
                np.abs(t(a, np.ones_like(a)) - a).max(),
                np.clip(t(a, lo) - t(a, hi), 0, None).max(),
                np.abs(_tconorm(kind, a, b) - (1.0 - t(1.0 - a, 1.0 - b))).max()]
        worst = max(worst, *map(float, gaps))
    ok = worst <= 1e-12
    criterion(5, ok, f"3 kinds x 1e5 triples: commutativity, associativity, neutrality, monotonicity, "
                     f"duality; max violation {worst:.3g}")
    assert ok


def _softmax_reference(row):
    e = np.exp(row - row.max())
    return e / e.sum()


def test_c6_calibration_contract(criterion):
    eps, delta = 0.005, 0.001
    entries, bad = 0, 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        kg = random_graph(25, 3, 0.1, rng)
        obs = random_split(kg, 0.7, rng)
        scores = SyntheticScores(kg, seed, signal=4.0)
        ms = calibrate(scores, obs, CalibrationConfig(eps, delta, "test"))
        for r in range(obs.relation_count):
            stored = ms.matrix(r)
            dense = stored.to_dense()
            present = np.zeros_like(dense, dtype=bool)
            indptr, indices, _ = stored.csr()
            for i in range(dense.shape[0]):
                present[i, indices[indptr[i]:indptr[i + 1]]] = True
            for h in range(obs.entity_count):
                tails = obs.tail_set(h, r)
                p = _softmax_reference(scores.row(r, h))
                q = len(tails) / sum(p[t] for t in tails) if tails else 1.0
                raw = p * q
                for t in range(obs.entity_count):
                    entries += 1
                    v = dense[h, t]
                    if t in tails:
                        good = v == 1.0
                    elif present[h, t]:
                        good = eps <= v <= 1.0 - delta
                    else:
                        good = raw[t] < eps
                    bad += not good
    ok = bad == 0
    criterion(6, ok, f"{entries} entries over 10 graphs, {bad} violate observed=1 / stored in [eps,1-delta] / "
                     f"dropped < eps")
    assert ok


def test_c7_budget_monotone(criterion):
    checked, non_mono, worst = 0, 0, 0.0
    for seed in range(30):
        rng = np.random.default_rng(seed)
        kg = random_graph(int(rng.integers(10, 21)), 3, 0.12, rng)
        ms = calibrated_pair(SyntheticScores(kg, seed), kg)
        for name in ("3c", "3cm"):
            f = get(name).ground(*random_grounding(rng, kg.entity_count, kg.relation_count))
            vecs = [answer(f, ms, InferenceConfig(budget_m=m)) for m in (0, 5, 10, kg.entity_count)]
            non_mono += sum(int(np.any(b < a)) for a, b in zip(vecs, vecs[1:]))
            worst = max(worst, float(np.abs(vecs[-1] - answer_vector_bruteforce(f, ms)).max()))
            checked += 1
    ok = non_mono == 0 and worst <= 1e-12
    criterion(7, ok, f"{checked} cyclic instances: {non_mono} non-monotone steps over M in (0,5,10,|E|), "
                     f"max |diff| at M=|E| {worst:.3g}")
    assert ok


def test_c8_chain_complexity(criterion):
    kg = random_graph(1000, 3, 0.003, np.random.default_rng(0))
    ms = perfect_matrices(kg)
    chains = {2: "r0(a{a},x1)&r1(x1,f)",
              3: "r0(a{a},x1)&r1(x1,x2)&r2(x2,f)",
              4: "r0(a{a},x1)&r1(x1,x2)&r2(x2,x3)&r0(x3,f)"}
    total = {k: 0 for k in chains}
    for a in range(kg.entity_count):
        for k, text in chains.items():
            stats = FitStats()
            answer(parse_efo1(text.format(a=a)), ms, InferenceConfig(), stats)
            total[k] += stats.visits
    inc = [total[3] - total[2], total[4] - total[3]]
    ratio = max(inc) / min(inc)
    ok = ratio <= 2.0
    criterion(8, ok, f"visits summed over all anchors {total}; per-hop increments {inc}, ratio {ratio:.2f} "
                     f"(need <= 2)")
    assert ok


def test_c8_support_per_hop_cost_bounded_by_stored_entries():
    # each extra hop reads at most the stored entries of its matrix
    kg = random_graph(1000, 3, 0.003, np.random.default_rng(0))
    ms = perfect_matrices(kg)
    nnz = [m.nnz for m in ms.matrices]
    prefix = "r0(a{a},x1)"
    for a in range(0, kg.entity_count, 7):
        prev, body = None, prefix
        for hop, r in enumerate([1, 2, 0, 1]):
            text = body + f"&r{r}(x{hop + 1},f)"
            stats = FitStats()
            answer(parse_efo1(text.format(a=a)), ms, InferenceConfig(), stats)
            if prev is not None:
                assert 0 <= stats.visits - prev <= nnz[r] + nnz[[1, 2, 0, 1][hop - 1]]
            prev = stats.visits
            body += f"&r{r}(x{hop + 1},x{hop + 2})"


def test_c9_external_scores_protocol(criterion, tmp_path):
    # absolute benchmark MRRs need pretrained score files that are not shipped;
    # this runs the same protocol end to end on a supplied score file instead
    from efo_fit.matrices import ScoreFile, write_scores
    rng = np.random.default_rng(9)
    complete = random_graph(30, 3, 0.1, rng)
    observed = random_split(complete, 0.7, rng)
    write_scores(tmp_path / "scores.bin", SyntheticScores(complete, 9).scores)
    ms = calibrated_pair(ScoreFile(tmp_path / "scores.bin"), observed)
    samples = emit_dataset(["1p", "2p", "2in", "3c"], 3, observed, complete, seed=9,
                           path=tmp_path / "q.jsonl")
    report = evaluate(samples, ms, InferenceConfig())
    ran = report.failures == 0 and set(report.rows) == {"1p", "2p", "2in", "3c"}
    criterion(9, False, "published benchmark MRRs are not reproducible here (no pretrained score "
                        f"matrices); protocol run on a supplied score file "
                        f"{'completed' if ran else 'FAILED'}, avg MRR {report.averages()['all']:.1f}")
    assert ran
    pytest.xfail("absolute benchmark numbers need external pretrained scores")

