"""Compiled core vs pure-NumPy fallback on the hot kernels.

Run:  python benchmarks/bench_backends.py [--quick]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fdbench import backend
from fdbench.backend import pure


def _time(fn, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true",
                        help="smaller sizes, fewer repeats")
    args = parser.parse_args()

    compiled, name = backend._load("auto")
    if name != "compiled":
        print("compiled core not built; nothing to compare")
        return

    rng = np.random.default_rng(0)
    rows = []

    sizes = [(256, 64), (1024, 64)] if args.quick else \
        [(256, 64), (1024, 64), (4096, 64), (1024, 512)]
    for n, d in sizes:
        x = rng.standard_normal((n, d))
        y = rng.standard_normal((n, d))
        for kind, params, label in [
                (pure.KIND_RBF, (1.0, 0.0, 0.0), "rbf"),
                (pure.KIND_POLY, (3.0, 1.0 / d, 1.0), "poly3"),
                (pure.KIND_RQ, (1.0, 1.0, 0.0), "rq")]:
            tc = _time(lambda: compiled.pair_sum(x, y, kind, *params))
            tp = _time(lambda: pure.pair_sum(x, y, kind, *params))
            rows.append((f"pair_sum {label} n={n} d={d}", tc, tp))

    perm_ns = [8, 9] if args.quick else [8, 9, 10]
    for n in perm_ns:
        x = np.arange(float(n))
        y = rng.permutation(n).astype(float)
        tc = _time(lambda: compiled.perm_tail_count(x, y, n * (n - 1) // 4),
                   repeats=1)
        tp = _time(lambda: pure.perm_tail_count(x, y, n * (n - 1) // 4),
                   repeats=1)
        rows.append((f"perm_tail_count n={n} ({n}! orderings)", tc, tp))

    n = 2000
    x = rng.standard_normal(n)
    y = rng.standard_normal(n)
    tc = _time(lambda: compiled.kendall_s(x, y))
    tp = _time(lambda: pure.kendall_s(x, y))
    rows.append((f"kendall_s n={n}", tc, tp))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel'.ljust(width)}  {'compiled':>10}  {'pure':>10}  "
          f"{'speedup':>8}")
    for label, tc, tp in rows:
        print(f"{label.ljust(width)}  {tc * 1e3:>8.2f}ms  {tp * 1e3:>8.2f}ms"
              f"  {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
