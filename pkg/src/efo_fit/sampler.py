"""Grounded query generation with deductible / predicted answer splits.

Sampling is answer-first: pick an entity for the free variable, then walk
positive template edges through the complete graph to assign the other
nodes and relations, so the instance has at least one answer by
construction. Negated atoms are grounded afterwards with triples absent from
the complete graph.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import __version__
from .engine import InferenceConfig, answer_graphs, prepare
from .errors import OracleLimitError, SamplingError
from .logic import (Const, detect_trivial_subsentence, parse_efo1,
                    parse_lisp, to_dnf, to_text)
from .matrices import perfect_matrices
from .oracle import DEFAULT_LIMIT, answer_set_symbolic
from .structures import ALL, get


@dataclass
class QuerySample:
    structure: str
    formula: object
    easy_answers: set
    hard_answers: set
    lisp: str | None = None
    lisp_relations: list | None = None
    lisp_entities: list | None = None

    def to_json(self) -> dict:
        out = {"structure": self.structure, "formula": to_text(self.formula),
               "easy_answers": sorted(self.easy_answers), "hard_answers": sorted(self.hard_answers)}
        if self.lisp is not None:
            out.update(lisp=self.lisp, relations=list(self.lisp_relations),
                       entities=list(self.lisp_entities))
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "QuerySample":
        return cls(obj["structure"], parse_efo1(obj["formula"]), set(obj["easy_answers"]),
                   set(obj["hard_answers"]), obj.get("lisp"), obj.get("relations"), obj.get("entities"))


def _key(term):
    """Placeholder identity of a template term."""
    return ("a", term.id) if isinstance(term, Const) else ("v", term.name)


def answer_set(formula, kg, limit=DEFAULT_LIMIT, perfect=None) -> set:
    """Exact answer set: brute force when small enough, else inference on perfect matrices."""
    try:
        return answer_set_symbolic(formula, kg, limit)
    except OracleLimitError:
        ms = perfect if perfect is not None else perfect_matrices(kg)
        v = answer_graphs(prepare(formula), ms, InferenceConfig(budget_m=kg.entity_count))
        return {int(i) for i in np.flatnonzero(v)}


class _Grounder:
    def __init__(self, kg, rng):
        self.kg = kg
        self.rng = rng
        self.n = kg.entity_count
        self.nr = kg.relation_count

    def neighbours(self, e, r, forward):
        return self.kg.tails(e, r) if forward else self.kg.heads(e, r)

    def witness(self, clause):
        """Assign entities to placeholders along positive literals, or None."""
        lits = [l for l in clause.literals if l.positive]
        rels, nodes = {}, {}
        free = ("v", clause.free)
        touched = np.unique(self.kg.triples[:, [0, 2]])
        if touched.size == 0:
            return None
        nodes[free] = int(self.rng.choice(touched))
        pending = list(lits)
        while pending:
            progress = False
            for lit in list(pending):
                h, t = _key(lit.head), _key(lit.tail)
                if h not in nodes and t not in nodes:
                    continue
                pending.remove(lit)
                progress = True
                if h in nodes and t in nodes:
                    r = rels.get(lit.relation)
                    options = [r] if r is not None else list(range(self.nr))
                    ok = [q for q in options if (nodes[h], q, nodes[t]) in self.kg]
                    if not ok:
                        return None
                    rels[lit.relation] = int(self.rng.choice(ok))
                    continue
                known, forward = (h, True) if h in nodes else (t, False)
                other = t if forward else h
                r = rels.get(lit.relation)
                if r is None:
                    order = self.rng.permutation(self.nr)
                else:
                    order = [r]
                for q in order:
                    cands = self.neighbours(nodes[known], int(q), forward)
                    if cands.size:
                        rels[lit.relation] = int(q)
                        nodes[other] = int(self.rng.choice(cands))
                        break
                else:
                    return None
            if not progress:
                # reachable from the free variable only through negated atoms
                lit = pending[0]
                nodes[_key(lit.tail)] = int(self.rng.choice(touched))
        return rels, nodes

    def ground_negations(self, clause, rels, nodes):
        for lit in clause.literals:
            if lit.positive:
                continue
            h, t = _key(lit.head), _key(lit.tail)
            for _ in range(50):
                trial_nodes = dict(nodes)
                for k in (h, t):
                    if k not in trial_nodes:
                        trial_nodes[k] = int(self.rng.integers(self.n))
                r = rels.get(lit.relation, int(self.rng.integers(self.nr)))
                if (trial_nodes[h], r, trial_nodes[t]) not in self.kg:
                    nodes.update(trial_nodes)
                    rels[lit.relation] = r
                    break
            else:
                return False
        return True


def _valid_grounding(formula) -> bool:
    """No self-loop atom and no repeated or contradictory parallel atom."""
    for clause in to_dnf(formula):
        seen = set()
        for lit in clause.literals:
            h, t = _key(lit.head), _key(lit.tail)
            if h == t:
                return False
            key = (lit.relation, h, t)
            if key in seen:
                return False
            seen.add(key)
    return True


def sample(structure: str, kg_observed, kg_complete, rng, max_attempts: int = 200,
           limit: int = DEFAULT_LIMIT, perfect=None) -> QuerySample:
    """Draw one grounded instance of ``structure`` with a non-empty hard answer set.

    ``perfect`` optionally holds prebuilt (observed, complete) perfect
    matrices for answer sets too large for brute force.
    """
    s = get(structure)
    template = s.formula()
    clauses = to_dnf(template)
    g = _Grounder(kg_complete, rng)
    for _ in range(max_attempts):
        clause = clauses[int(rng.integers(len(clauses)))]
        found = g.witness(clause)
        if found is None:
            continue
        rels, nodes = found
        if not g.ground_negations(clause, rels, nodes):
            continue
        # witness edges must not be self-loops in the graph
        if any(nodes[_key(l.head)] == nodes[_key(l.tail)] for l in clause.literals):
            continue
        for placeholder in range(1, 7):
            rels.setdefault(placeholder, int(rng.integers(g.nr)))
        for lit in (l for c in clauses for l in c.literals):
            for term in (lit.head, lit.tail):
                if isinstance(term, Const):
                    nodes.setdefault(("a", term.id), int(rng.integers(g.n)))
        anchors = {k[1]: v for k, v in nodes.items() if k[0] == "a"}
        if len(set(anchors.values())) != len(anchors):
            continue
        formula = s.ground(rels, anchors)
        if not _valid_grounding(formula):
            continue
        if detect_trivial_subsentence(formula):
            continue
        p_obs, p_all = perfect if perfect is not None else (None, None)
        easy = answer_set(formula, kg_observed, limit, p_obs)
        full = answer_set(formula, kg_complete, limit, p_all)
        hard = full - easy
        if not hard:
            continue
        lisp, lrels, lents = s.ground_lisp(rels, anchors)
        return QuerySample(structure, formula, easy, hard, lisp, lrels, lents)
    raise SamplingError(f"no valid {structure} instance after {max_attempts} attempts")


def emit_dataset(structures, counts, kg_observed, kg_complete, seed: int, path,
                 max_attempts: int = 200, metadata: dict | None = None) -> list:
    """Write ``counts[i]`` samples of ``structures[i]`` as JSON lines; deterministic in ``seed``."""
    if isinstance(counts, int):
        counts = [counts] * len(structures)
    for name in structures:
        get(name)
    perfect = (perfect_matrices(kg_observed), perfect_matrices(kg_complete))
    samples = []
    for name, count in zip(structures, counts):
        for j in range(count):
            rng = np.random.default_rng(np.random.SeedSequence([seed, ALL.index(name), j]))
            samples.append(sample(name, kg_observed, kg_complete, rng, max_attempts, perfect=perfect))
    with open(path, "w", encoding="utf-8") as fh:
        for smp in samples:
            fh.write(json.dumps(smp.to_json()) + "\n")
    meta = {"seed": seed, "structures": list(structures), "counts": list(counts),
            "tool_version": __version__}
    meta.update(metadata or {})
    with open(str(path) + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return samples


def load_dataset(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(QuerySample.from_json(json.loads(line)))
    return out


def verify_sample(smp: QuerySample, kg_observed, kg_complete, limit=DEFAULT_LIMIT) -> bool:
    """Recompute both answer sets and compare with the stored ones."""
    easy = answer_set(smp.formula, kg_observed, limit)
    hard = answer_set(smp.formula, kg_complete, limit) - easy
    return easy == smp.easy_answers and hard == smp.hard_answers and bool(hard)


def lisp_twin(smp: QuerySample):
    if smp.lisp is None:
        return None
    return parse_lisp(smp.lisp, smp.lisp_relations, smp.lisp_entities)
