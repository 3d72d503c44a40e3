"""Chart-parsing scale experiment on the "a cat (in a box)^k" family.

Builds the lazy type-pair closure with one pass, then measures warm
per-sentence parse cost, chart statistics, and the Lemma bound on the
retained trees.

usage: python scripts/parse_scale.py [max_k]
"""

import math
import sys
import time

sys.path.insert(0, "src")

from effparse.combine import load_syntax, mode_count, parse_forest
from effparse.lexicon import load_language


def fit(sizes, times):
    xs = [math.log(s) for s in sizes]
    ys = [math.log(t) for t in times]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    return (sum((x - mx) * (y - my) for x, y in zip(xs, ys))
            / sum((x - mx) ** 2 for x in xs))


def main(max_k: int = 8) -> int:
    lex = load_language("data/english.lang")
    syn = load_syntax("data/english.cfg")
    c = len(lex.registry.adjunctions())
    m = max(lex.max_effect_rank, 1)
    sents = [("a cat" + " in a box" * k).split() for k in range(1, max_k + 1)]
    for toks in sents:
        parse_forest(toks, lex, syntax=syn, seq_cap=64)
    sizes, times = [], []
    for toks in sents:
        n = len(toks)
        best = None
        for _ in range(5):
            t0 = time.perf_counter()
            forest = parse_forest(toks, lex, syntax=syn, seq_cap=64)
            dt = time.perf_counter() - t0
            best = dt if best is None else min(best, dt)
        derivs = forest.derivations(limit=64)
        lemma = (2 + c) * m * (n + 1) * (n - 1) + (n - 1)
        worst = max((mode_count(d) for d in derivs), default=0)
        print(f"n={n:2d} cells={forest.cell_count():3d} "
              f"packed={forest.packed_node_count():5d} derivs={len(derivs):3d} "
              f"tree-modes<= {worst:3d} (lemma {lemma:4d}) t={best * 1000:7.2f}ms")
        sizes.append(n)
        times.append(best)
    print(f"warm wall-clock exponent: {fit(sizes, times):.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main(int(sys.argv[1]) if len(sys.argv) > 1 else 8))
