"""Filtered MRR and dataset-level reports."""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import InferenceConfig, answer
from .errors import EfoFitError
from .logic import has_negation


def mrr_filtered(scores, targets, filtered=()) -> float:
    """Mean reciprocal rank of ``targets`` against non-answers.

    Entities in ``targets`` or ``filtered`` never count against a target.
    Equal scores rank the lower entity id first.
    """
    targets = sorted(set(int(t) for t in targets))
    if not targets:
        raise ValueError("mrr needs at least one target answer")
    v = np.asarray(scores, dtype=np.float64)
    skip = np.zeros(v.size, dtype=bool)
    skip[targets] = True
    skip[list(filtered)] = True
    others = np.flatnonzero(~skip)
    ov = v[others]
    total = 0.0
    for a in targets:
        rank = 1 + int(np.count_nonzero(ov > v[a])) + int(np.count_nonzero((ov == v[a]) & (others < a)))
        total += 1.0 / rank
    return total / len(targets)


@dataclass
class EvalReport:
    rows: dict = field(default_factory=dict)  # structure -> {"mrr", "n", "negated"}
    failures: int = 0

    def averages(self) -> dict:
        def mean(names):
            vals = [self.rows[s]["mrr"] for s in names]
            return float(np.mean(vals)) if vals else None
        pos = [s for s, r in self.rows.items() if not r["negated"]]
        neg = [s for s, r in self.rows.items() if r["negated"]]
        return {"positive": mean(pos), "negative": mean(neg), "all": mean(list(self.rows))}

    def to_json(self) -> dict:
        out = {s: {"mrr": r["mrr"], "n": r["n"]} for s, r in self.rows.items()}
        out["averages"] = self.averages()
        out["failures"] = self.failures
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    def to_table(self) -> str:
        lines = [f"{'structure':<10} {'n':>6} {'MRR':>7}"]
        for s, r in self.rows.items():
            lines.append(f"{s:<10} {r['n']:>6} {r['mrr']:>7.2f}")
        for key, val in self.averages().items():
            shown = "-" if val is None else f"{val:.2f}"
            lines.append(f"{'avg ' + key:<10} {'':>6} {shown:>7}")
        if self.failures:
            lines.append(f"failures: {self.failures}")
        return "\n".join(lines)


def _score_one(smp, matrices, cfg, mode):
    vec = answer(smp.formula, matrices, cfg)
    if mode == "faithful":
        return mrr_filtered(vec, smp.easy_answers, smp.hard_answers)
    return mrr_filtered(vec, smp.hard_answers, smp.easy_answers)


def evaluate(samples, matrices, cfg: InferenceConfig | None = None, mode: str = "hard",
             threads: int | None = None) -> EvalReport:
    """Per-structure MRR (percent) in dataset order of first appearance.

    ``mode="hard"`` ranks predicted answers; ``mode="faithful"`` ranks the
    deductible ones. Samples without targets in the chosen mode are skipped;
    samples that raise are counted as failures.
    """
    if mode not in ("hard", "faithful"):
        raise ValueError(f"unknown evaluation mode {mode!r}")
    cfg = cfg or InferenceConfig()
    threads = threads or int(os.environ.get("EFO_FIT_THREADS", "1"))
    todo = [s for s in samples if (s.easy_answers if mode == "faithful" else s.hard_answers)]

    def run(smp):
        try:
            return _score_one(smp, matrices, cfg, mode)
        except (EfoFitError, ValueError):
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, todo))
    else:
        results = [run(s) for s in todo]
    report = EvalReport()
    acc = {}
    for smp, res in zip(todo, results):
        if res is None:
            report.failures += 1
            continue
        row = acc.setdefault(smp.structure, {"sum": 0.0, "n": 0, "negated": has_negation(smp.formula)})
        row["sum"] += res
        row["n"] += 1
    for s, row in acc.items():
        report.rows[s] = {"mrr": 100.0 * row["sum"] / row["n"], "n": row["n"], "negated": row["negated"]}
    return report
