"""Kernel decay constants per scale for every built-in family, side by side.

    python3 scripts/decay_table.py [--m 9] [--d 1]

The trapezoid column is a diagnostic only: its members have one weak
derivative, so the |x|^-(d+1) tail bound is not expected to hold uniformly.
"""

import argparse

from lpbmo.grid import Grid
from lpbmo.multipliers import KINDS, make_family
from lpbmo.operators import check_kernel_decay


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--m", type=int, default=9)
    parser.add_argument("--d", type=int, default=1)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    grid = Grid(args.d, args.m)
    fams = {kind: make_family(kind, grid, seed=args.seed) for kind in KINDS}
    print(f"{'n':>3} " + " ".join(f"{k.split('-')[0] + '.' + q:>14}" for k in KINDS for q in ("peak", "tail", "l1")))
    for n in range(2, grid.m - 1):
        cells = []
        for kind in KINDS:
            r = check_kernel_decay(fams[kind], n, grid)
            cells += [r.c_peak, r.c_tail, r.c_l1]
        print(f"{n:>3} " + " ".join(f"{v:>14.6f}" for v in cells))


if __name__ == "__main__":
    main()
