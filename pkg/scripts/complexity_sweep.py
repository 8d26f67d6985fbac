#!/usr/bin/env python3
"""Cost of the cross-user attack versus the number of analysed query elements.

Writes the sweep as CSV (K, S, n, comparisons, fitted slope footer).
"""

import argparse
import sys

from mupir.adversary import complexity_sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--K", type=int, default=2)
    parser.add_argument("--S", default="2-6", help="range of source counts, e.g. 2-6")
    parser.add_argument("--trials", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out")
    args = parser.parse_args()

    lo, hi = (int(x) for x in args.S.split("-"))
    result = complexity_sweep([(args.K, S) for S in range(lo, hi + 1)], trials=args.trials, seed=args.seed)
    text = result.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
