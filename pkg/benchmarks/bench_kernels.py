"""Compiled vs pure-Python reciprocal-test kernels.

Usage: python3 benchmarks/bench_kernels.py [--d 3] [--n 65536] [--repeat 3]
"""
import argparse
import time

import numpy as np

from radonshell.geometry import SphereShell, partition_indices, regular_inscribed_simplex
from radonshell.mc._backend import COMPILED, PYTHON
from radonshell.mc.engine import sample_shell


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--n", type=int, default=65536)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    d = args.d
    shell = SphereShell(1.0, 0.2, d)
    A = np.ascontiguousarray(regular_inscribed_simplex(1.0, d).vertices[None])
    X = sample_shell(shell, np.random.default_rng(0), (args.n, d + 1))
    ga, gb = partition_indices(d)
    results = {}
    for be in (PYTHON, COMPILED):
        if be is None:
            print(f"{'cython':8s} unavailable")
            continue
        t, (det, acc) = _time(lambda: be.reciprocal_block(A, X, ga, gb, 1.0, 1e-12), args.repeat)
        results[be.name] = (det, acc)
        print(f"{be.name:8s} {t * 1e3:9.2f} ms  {args.n / t / 1e6:7.3f} M tuples/s")
    if len(results) == 2:
        (d0, a0), (d1, a1) = results.values()
        print("identical accept flags:", bool(np.array_equal(a0, a1)),
              " max |det| difference:", float(np.max(np.abs(d0 - d1))))


if __name__ == "__main__":
    main()
