"""Measure normalisation cost on generated diagram families.

Two families: deletion chains (unit-join, snake, handler-unit pairs) and
shallow associativity ladders.  Reports reduction counts against the 2N
bound and the fitted runtime exponent.

usage: python scripts/complexity_sweep.py
"""

import math
import sys
import time

sys.path.insert(0, "src")

from effparse.diagrams import (Diagram, eq_normalize, eta_adj_cell, eta_cell,
                               epsilon_cell, handler_cell, mu_cell, validate)


def deletion_family(n):
    nodes = []
    k = 0
    while len(nodes) + 2 <= n:
        which = k % 3
        if which == 0:
            nodes += [eta_cell(1, "F1"), mu_cell(1, "F1")]
        elif which == 1:
            nodes += [eta_adj_cell(1, "L", "R"), epsilon_cell(0, "L", "R")]
        else:
            nodes += [eta_cell(0, "F1"), handler_cell(0, "h1", "F1")]
        k += 1
    return Diagram(inputs=("F1", "R"), nodes=tuple(nodes))


def assoc_family(n):
    m = n // 2
    nodes = []
    for j in range(m):
        nodes += [mu_cell(j + 1, "F1"), mu_cell(j, "F1")]
    return Diagram(inputs=("F1",) * (3 * m), nodes=tuple(nodes))


def fit(sizes, times):
    xs = [math.log(s) for s in sizes]
    ys = [math.log(t) for t in times]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    return (sum((x - mx) * (y - my) for x, y in zip(xs, ys))
            / sum((x - mx) ** 2 for x in xs))


def main() -> int:
    sizes = (10, 20, 40, 80, 160, 200)
    ok = True
    for build in (deletion_family, assoc_family):
        times = []
        print(f"-- {build.__name__}")
        for n in sizes:
            d = build(n)
            assert validate(d)
            best, stats = None, {}
            for _ in range(3):
                stats = {}
                t0 = time.perf_counter()
                eq_normalize(d, stats=stats)
                dt = time.perf_counter() - t0
                best = dt if best is None else min(best, dt)
            times.append(best)
            bound_ok = stats["reductions"] <= 2 * d.node_count
            ok &= bound_ok
            print(f"  N={n:4d} reductions={stats['reductions']:4d} "
                  f"(2N={2 * d.node_count}) {'ok' if bound_ok else 'OVER'} "
                  f"t={best * 1000:7.2f}ms")
        exponent = fit(sizes, times)
        ok &= exponent <= 2.3
        print(f"  fitted runtime exponent: {exponent:.3f}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
