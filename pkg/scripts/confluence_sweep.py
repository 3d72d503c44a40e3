"""Exhaustively check confluence of the diagram reduction system.

Enumerates every valid diagram up to a cell budget (one representative
per exchange class) over a registry with two monads, one adjunction, and
one handler, follows every maximal reduction order, and reports whether
all orders reach one normal form.

usage: python scripts/confluence_sweep.py [max_cells]
"""

import sys
import time

sys.path.insert(0, "src")

from effparse.diagrams import all_normal_forms, enumerate_diagrams, eq_normalize


def main(max_cells: int = 6) -> int:
    words = [(), ("F1",), ("F1", "F1"), ("F1", "F1", "F1"), ("R",), ("L",)]
    t0 = time.perf_counter()
    memo = {}
    count = divergent = 0
    for d in enumerate_diagrams(words, max_cells=max_cells, up_to_exchange=True):
        nfs = all_normal_forms(d, memo)
        if len(nfs) != 1:
            divergent += 1
            print(f"divergent: {d}")
        elif count % 1000 == 0 and next(iter(nfs)) != eq_normalize(d):
            print(f"schedule mismatch: {d}")
            divergent += 1
        count += 1
    dt = time.perf_counter() - t0
    print(f"{count} diagrams (<= {max_cells} cells), {divergent} divergent, {dt:.1f}s")
    return 0 if divergent == 0 else 1


if __name__ == "__main__":
    sys.exit(main(int(sys.argv[1]) if len(sys.argv) > 1 else 6))
