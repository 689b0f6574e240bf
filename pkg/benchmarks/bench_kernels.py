"""Timing comparison of the statistic kernels: compiled extension vs numpy.

Imports both backend modules directly (bypassing the import-time selection)
and times them on identical inputs across a range of sample sizes. Doubles
as a consistency check: exits nonzero if the backends disagree beyond
floating-point summation noise.

Usage:
    python3 benchmarks/bench_kernels.py [--sizes 100 400 1600] [--repeats 30]
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from shiftreg._fast import _stats_py

try:
    from shiftreg._fast import _stats as _compiled
except ImportError:
    _compiled = None

REL_TOL = 1e-9


def median_seconds(fn, args, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def relative_gap(got, ref):
    got = np.atleast_1d(np.asarray(got, dtype=float))
    ref = np.atleast_1d(np.asarray(ref, dtype=float))
    scale = np.maximum(np.abs(ref), 1e-30)
    return float(np.max(np.abs(got - ref) / scale))


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="compare the compiled statistic kernels against the numpy fallback"
    )
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 400, 1600],
                        help="sample sizes to benchmark (default: 100 400 1600)")
    parser.add_argument("--repeats", type=int, default=30,
                        help="timed calls per kernel and size; the median is reported")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if _compiled is None:
        print("compiled extension not available; build it first "
              "(pip install -e . --no-build-isolation)", file=sys.stderr)
        return 1

    rng = np.random.default_rng(args.seed)
    kernels = [
        ("dcov_terms", _compiled.dcov_terms, _stats_py.dcov_terms),
        ("kendall_tau", _compiled.kendall_tau, _stats_py.kendall_tau),
    ]

    header = (f"{'kernel':<12} {'n':>6} {'compiled':>12} {'numpy':>12} "
              f"{'speedup':>8}")
    print(header)
    print("-" * len(header))

    worst = 0.0
    for n in args.sizes:
        a = rng.normal(size=n)
        b = rng.normal(size=n)
        for name, fast, slow in kernels:
            worst = max(worst, relative_gap(fast(a, b), slow(a, b)))
            t_fast = median_seconds(fast, (a, b), args.repeats)
            t_slow = median_seconds(slow, (a, b), args.repeats)
            print(f"{name:<12} {n:>6} {t_fast * 1e6:>10.1f}us "
                  f"{t_slow * 1e6:>10.1f}us {t_slow / t_fast:>7.1f}x")

    if worst > REL_TOL:
        print(f"backend mismatch: relative error {worst:.2e} > {REL_TOL:.0e}",
              file=sys.stderr)
        return 1
    print(f"\nbackends agree (worst relative error {worst:.2e})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
