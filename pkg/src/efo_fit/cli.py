"""Command line entry point: ``efo-fit {build,sample,answer,eval,selftest}``.

Exit codes: 0 success, 2 usage or input-file problems, 3 invalid query,
4 resource limit (oracle size or enumeration depth).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .engine import InferenceConfig, answer, top_k
from .errors import (CalibrationError, ConfigError, EnumerationError, KGFormatError, OracleLimitError,
                     ParseError, QueryValidationError, SamplingError, SplitError)
from .evaluation import evaluate
from .kg import LabelMaps, load_split, load_triples, read_label_map
from .logic import classify, parse_efo1, parse_lisp
from .matrices import (CalibrationConfig, MatrixSet, ScoreFile, calibrate, consistent_matrices,
                       load_matrices, perfect_matrices, save_matrices)
from .sampler import emit_dataset, load_dataset
from .selftest import run_all
from .structures import ALL

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_LIMIT = 0, 2, 3, 4


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("EFO_FIT_THREADS", "1")))
    except ValueError:
        return 1


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_provenance(out, args, inputs):
    record = {"tool_version": __version__, "command": args.command, "config": _config(args),
              "inputs": {str(p): _sha256(p) for p in inputs if p and os.path.exists(p)}}
    with open(str(out) + ".provenance.json", "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def _inference_config(args) -> InferenceConfig:
    return InferenceConfig(conj=args.conj, disj=args.disj, budget_m=args.budget_m)


def _label_maps(args):
    if getattr(args, "entities", None) and getattr(args, "relations", None):
        return LabelMaps(read_label_map(args.entities), read_label_map(args.relations))
    return None


# commands -----------------------------------------------------------------
def cmd_build(args):
    mode = args.mode or "perfect"
    maps = _label_maps(args)
    if mode == "perfect":
        path = args.kg or args.kg_complete
        if not path:
            raise _Usage("build --mode perfect needs --kg")
        ms = perfect_matrices(load_triples(path, maps))
        inputs = [path]
    elif mode == "consistent":
        if not args.kg_observed:
            raise _Usage("build --mode consistent needs --kg-observed")
        ms = consistent_matrices(load_triples(args.kg_observed, maps), np.random.default_rng(args.seed),
                                 args.cap, args.noise)
        inputs = [args.kg_observed]
    elif mode in ("train", "test", "dense-test"):
        kg_path = args.kg_observed or args.kg
        if not args.scores or not os.path.exists(args.scores):
            raise _Usage(f"build --mode {mode} needs an existing --scores file")
        if not kg_path:
            raise _Usage(f"build --mode {mode} needs --kg-observed")
        kg = load_triples(kg_path, maps)
        scores = ScoreFile(args.scores)
        ms = calibrate(scores, kg, CalibrationConfig(args.eps, args.delta, mode))
        if args.with_dense and mode == "test":
            dense = calibrate(scores, kg, CalibrationConfig(args.eps, args.delta, "dense-test"))
            ms = MatrixSet(ms.matrices, dense.matrices)
        inputs = [kg_path, args.scores]
    else:
        raise _Usage(f"unknown build mode {mode!r}")
    if not args.out:
        raise _Usage("build needs --out")
    save_matrices(ms, args.out)
    _write_provenance(args.out, args, inputs)
    print(json.dumps({"wrote": args.out, "entities": ms.n, "relations": ms.relation_count}))
    return EXIT_OK


def cmd_sample(args):
    if not (args.kg_observed and args.kg_complete and args.out):
        raise _Usage("sample needs --kg-observed, --kg-complete and --out")
    structures = ALL if args.structures == "all" else [s.strip() for s in args.structures.split(",")]
    unknown = [s for s in structures if s not in ALL]
    if unknown:
        raise _Usage(f"unknown structures {unknown}; choose from {', '.join(ALL)}")
    observed, complete = load_split(args.kg_observed, args.kg_complete, _label_maps(args))
    samples = emit_dataset(structures, args.count, observed, complete, args.seed, args.out,
                           metadata={"kg_observed": args.kg_observed, "kg_complete": args.kg_complete})
    _write_provenance(args.out, args, [args.kg_observed, args.kg_complete])
    print(json.dumps({"wrote": args.out, "samples": len(samples)}))
    return EXIT_OK


def _read_queries(args) -> list:
    if args.query:
        return [args.query]
    if args.queries:
        out = []
        with open(args.queries, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                out.append(json.loads(line) if line.startswith("{") else line)
        return out
    raise _Usage("answer needs a query (positional) or --queries")


def _to_formula(q):
    if isinstance(q, dict):
        if "formula" in q:
            return q["formula"], parse_efo1(q["formula"])
        if "lisp" in q:
            return q["lisp"], parse_lisp(q["lisp"], q["relations"], q["entities"])
        raise ParseError("query object needs a 'formula' or 'lisp' field")
    return q, parse_efo1(q)


def cmd_answer(args):
    queries = [_to_formula(q) for q in _read_queries(args)]
    if args.classify_only:
        for text, f in queries:
            print(json.dumps({"query": text, "classes": sorted(c.value for c in classify(f))}))
        return EXIT_OK
    if not args.matrices:
        raise _Usage("answer needs --matrices (or --classify-only)")
    ms = load_matrices(args.matrices)
    cfg = _inference_config(args)

    def run(item):
        text, f = item
        return {"query": text, "top_k": [[e, s] for e, s in top_k(answer(f, ms, cfg), args.top_k)]}

    if _threads() > 1 and len(queries) > 1:
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            results = list(pool.map(run, queries))
    else:
        results = [run(q) for q in queries]
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for r in results:
            out.write(json.dumps(r) + "\n")
    finally:
        if args.out:
            out.close()
            _write_provenance(args.out, args, [args.matrices, args.queries])
    return EXIT_OK


def cmd_eval(args):
    if not (args.dataset and args.matrices):
        raise _Usage("eval needs --dataset and --matrices")
    mode = args.mode or "hard"
    if mode not in ("hard", "faithful"):
        raise _Usage("eval --mode must be 'hard' or 'faithful'")
    report = evaluate(load_dataset(args.dataset), load_matrices(args.matrices), _inference_config(args),
                      mode=mode, threads=_threads())
    print(report.to_table())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.dumps() + "\n")
        with open(os.path.splitext(args.out)[0] + ".txt", "w", encoding="utf-8") as fh:
            fh.write(report.to_table() + "\n")
        _write_provenance(args.out, args, [args.dataset, args.matrices])
    return EXIT_OK


def cmd_selftest(args):
    seeds = range(args.seed, args.seed + args.seeds)
    results = run_all(seeds, quick=args.quick, corrupt=args.corrupt)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else 1


# parser -------------------------------------------------------------------
class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kg-observed", help="observed triples TSV")
    common.add_argument("--kg-complete", help="complete triples TSV")
    common.add_argument("--matrices", help="matrix file")
    common.add_argument("--conj", default="product", choices=["product", "godel", "lukasiewicz"])
    common.add_argument("--disj", default="godel", choices=["godel", "product", "lukasiewicz"])
    common.add_argument("--eps", type=float, default=0.005)
    common.add_argument("--delta", type=float, default=0.001)
    common.add_argument("--budget-m", type=int, default=10)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--mode")
    common.add_argument("--out")
    common.add_argument("--entities", help="entity label map (label<TAB>id)")
    common.add_argument("--relations", help="relation label map (label<TAB>id)")

    p = argparse.ArgumentParser(prog="efo-fit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[common], help="build relation matrices")
    b.add_argument("--kg", help="triples TSV for perfect matrices")
    b.add_argument("--scores", help="score file for calibrated modes")
    b.add_argument("--cap", type=float, default=0.9, help="consistent mode: max unobserved value")
    b.add_argument("--noise", type=float, default=0.05, help="consistent mode: share of noisy pairs")
    b.add_argument("--with-dense", action="store_true", help="test mode: attach dense companions")
    b.set_defaults(func=cmd_build)

    s = sub.add_parser("sample", parents=[common], help="generate a query dataset")
    s.add_argument("--structures", default="all", help="comma separated names or 'all'")
    s.add_argument("--count", type=int, default=10, help="samples per structure")
    s.set_defaults(func=cmd_sample)

    a = sub.add_parser("answer", parents=[common], help="answer queries")
    a.add_argument("query", nargs="?", help="EFO1 query text, e.g. 'r0(a0,x1)&r1(x1,f)'")
    a.add_argument("--queries", help="file of query lines or JSON objects")
    a.add_argument("--top-k", type=int, default=10)
    a.add_argument("--classify-only", action="store_true")
    a.set_defaults(func=cmd_answer)

    e = sub.add_parser("eval", parents=[common], help="evaluate a dataset (--mode hard|faithful)")
    e.add_argument("--dataset", help="query JSONL")
    e.set_defaults(func=cmd_eval)

    t = sub.add_parser("selftest", parents=[common], help="run oracle-backed suites")
    t.add_argument("--quick", action="store_true", help="graphs with at most 15 entities")
    t.add_argument("--seeds", type=int, default=10, help="number of consecutive seeds")
    t.add_argument("--corrupt", action="store_true", help="negative control: corrupt one matrix entry")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _inference_config(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps({"command": args.command, "config": _config(args),
                      "inference": {"conj": cfg.conj.name, "disj": cfg.disj.name, "exist": cfg.exist.name,
                                    "budget_m": cfg.budget_m}}), file=sys.stderr)
    try:
        return args.func(args)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QueryValidationError as exc:
        print(f"invalid query ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ParseError as exc:
        print(f"invalid query (ParseError): {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OracleLimitError, EnumerationError) as exc:
        print(f"limit reached: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (KGFormatError, SplitError, CalibrationError, ConfigError, SamplingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
