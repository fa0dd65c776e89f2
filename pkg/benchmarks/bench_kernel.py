"""Compare the pure-Python and compiled interpreter kernels.

Runs three workloads on both kernels, checks that results agree, and prints
the median wall time per workload:

* ``loop``: a tight arithmetic while-loop (statement dispatch).
* ``calls``: recursive calls (frame setup).
* ``fitness``: full mutation scoring of a fixture suite.

Usage: python benchmarks/bench_kernel.py [--repeat N]
"""

import argparse
import statistics
import time

from suitevolve import fixtures
from suitevolve.evolution import FitnessEvaluator
from suitevolve.minilang.interp import MAX_CALL_DEPTH, get_kernel
from suitevolve.minilang.program import parse, parse_file
from suitevolve.mutation import enumerate_mutants
from suitevolve.suite import split_methods

LOOP = """
fn work(n) {
    let i = 0;
    let acc = 0;
    while (i < n) {
        acc = (acc * 31 + i) % 1000003;
        i = i + 1;
    }
    return acc;
}
"""

CALLS = """
fn fib(n) {
    if (n < 2) {
        return n;
    }
    return fib(n - 1) + fib(n - 2);
}
"""


def _time(fn, repeat):
    samples = []
    result = None
    for _ in range(repeat):
        t = time.perf_counter()
        result = fn()
        samples.append(time.perf_counter() - t)
    return statistics.median(samples), result


def workloads():
    loop = parse(LOOP, "loop.mini")
    calls = parse(CALLS, "calls.mini")
    tri = parse_file(fixtures.path("triangle"))
    tri_suite = split_methods(fixtures.read("triangle", suite=True), "triangle.test.mini")
    mutants = enumerate_mutants(tri, True)  # built once; only execution is timed
    return {
        "loop": lambda k: k.call_value(loop.code, "work", [20_000], 1_000_000, MAX_CALL_DEPTH),
        "calls": lambda k: k.call_value(calls.code, "fib", [18], 1_000_000, MAX_CALL_DEPTH),
        "fitness": lambda k: FitnessEvaluator(tri, kernel=k, mutants=mutants).evaluate(tri_suite).as_dict(),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    py = get_kernel("python")
    try:
        cy = get_kernel("cython")
    except ImportError:
        print("compiled kernel not built; run: python setup.py build_ext --inplace")
        return 1
    print(f"{'workload':<10}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for name, fn in workloads().items():
        tp, rp = _time(lambda: fn(py), args.repeat)
        tc, rc = _time(lambda: fn(cy), args.repeat)
        if rp != rc:
            raise SystemExit(f"{name}: kernels disagree: {rp!r} vs {rc!r}")
        print(f"{name:<10}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
