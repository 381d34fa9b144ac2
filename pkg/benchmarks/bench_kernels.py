"""Compare the compiled and numpy projection kernels on random sparse matrices.

Usage: python3 benchmarks/bench_kernels.py [--entities N] [--density D] [--repeat R]
"""
import argparse
import time

import numpy as np

from efo_fit import kernels
from efo_fit.fuzzy import FuzzyMatrix, TNorm


def random_matrix(n, density, rng):
    nnz = int(n * n * density)
    rows = rng.integers(n, size=nnz)
    cols = rng.integers(n, size=nnz)
    keys = np.unique(rows * n + cols)
    return FuzzyMatrix.from_coo(keys // n, keys % n, rng.uniform(0.01, 1.0, keys.size), (n, n))


def bench(name, kind, src, operands, n, repeat):
    out = np.zeros(n)
    best = float("inf")
    for _ in range(repeat):
        out[:] = 0.0
        t = time.perf_counter()
        kernels.project(kind, src, operands, out, backend=name)
        best = min(best, time.perf_counter() - t)
    return best, out.copy()


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--entities", type=int, default=5000)
    p.add_argument("--density", type=float, default=0.002)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    rng = np.random.default_rng(0)
    n = args.entities
    a, b = random_matrix(n, args.density, rng), random_matrix(n, args.density, rng)
    src = np.where(rng.random(n) < 0.3, rng.random(n), 0.0)
    cases = {
        "one edge": [(*a.csr(), False)],
        "two parallel edges": [(*a.csr(), False), (*b.csr(), False)],
        "edge + negated edge": [(*a.csr(), False), (*b.csr(), True)],
    }
    print(f"entities={n} nnz/matrix={a.nnz} active rows={np.count_nonzero(src)}")
    print(f"backends: {kernels.available_backends()}")
    for label, ops in cases.items():
        for kind in (TNorm.PRODUCT, TNorm.GODEL):
            times, outs = {}, {}
            for name in kernels.available_backends():
                times[name], outs[name] = bench(name, int(kind), src, ops, n, args.repeat)
            same = all(np.array_equal(outs["python"], o) for o in outs.values())
            speed = ""
            if "cython" in times:
                speed = f" speedup x{times['python'] / times['cython']:.1f}"
            shown = " ".join(f"{k}={v * 1e3:.2f}ms" for k, v in times.items())
            print(f"{label:<22} {kind.name:<8} {shown}{speed} identical={same}")


if __name__ == "__main__":
    main()
