#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Runs pairwise_dots and linkage_average at a few realistic sizes under both
backends (importing each implementation module directly, so the environment
override is not needed) and prints a timing table plus speedups. Results are
asserted identical along the way, mirroring the guarantee the dispatcher
relies on.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sitquery.kernels import pyref

try:
    from sitquery.kernels import _cy
except ImportError:
    _cy = None


def unit_rows(rng, n, dim):
    vectors = rng.normal(size=(n, dim))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    return np.ascontiguousarray(vectors)


def best_of(repeat, fn, *args):
    best = float("inf")
    result = None
    for _ in range(repeat):
        started = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - started)
    return best, result


def check_dots_equal(a, b):
    if not np.array_equal(np.asarray(a), np.asarray(b)):
        raise AssertionError("backends disagree on pairwise_dots")


def check_merges_equal(a, b):
    if list(a) != list(b):
        raise AssertionError("backends disagree on linkage_average")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5,
                        help="timing repetitions; best run wins")
    args = parser.parse_args()

    if _cy is None:
        print("compiled extension not importable; nothing to compare")
        return 1

    rng = np.random.default_rng(20240817)
    rows = []

    for n, dim in ((100, 256), (400, 256), (800, 256)):
        vectors = unit_rows(rng, n, dim)
        py_time, py_out = best_of(args.repeat, pyref.pairwise_dots, vectors, vectors)
        cy_time, cy_out = best_of(args.repeat, _cy.pairwise_dots, vectors, vectors)
        check_dots_equal(py_out, cy_out)
        rows.append((f"pairwise_dots n={n} d={dim}", py_time, cy_time))

    for n in (50, 100, 200):
        vectors = unit_rows(rng, n, 64)
        dist = 1.0 - np.asarray(_cy.pairwise_dots(vectors, vectors))
        np.fill_diagonal(dist, 0.0)
        dist = np.ascontiguousarray(dist)
        py_time, py_out = best_of(args.repeat, pyref.linkage_average, dist)
        cy_time, cy_out = best_of(args.repeat, _cy.linkage_average, dist)
        check_merges_equal(py_out, cy_out)
        rows.append((f"linkage_average n={n}", py_time, cy_time))

    width = max(len(name) for name, *_ in rows)
    print(f"{'kernel':<{width}}  {'python':>10}  {'cython':>10}  {'speedup':>8}")
    for name, py_time, cy_time in rows:
        print(f"{name:<{width}}  {py_time * 1e3:>8.2f}ms  {cy_time * 1e3:>8.2f}ms  "
              f"{py_time / cy_time:>7.1f}x")
    print("\nresults identical across backends for every case")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
