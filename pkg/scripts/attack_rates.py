#!/usr/bin/env python3
"""Tie rate of the per-user attack and hit rate of the cross-user attack.

Honest single-database runs over a (K, S) grid; one row per configuration.
"""

import argparse
import random

from mupir import MessageSet, SystemConfig, observed_sets, run_retrieval
from mupir.adversary import SingletonCatalog, infer_cross_user, infer_single_user


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-K", type=int, default=4)
    parser.add_argument("--max-S", type=int, default=4)
    parser.add_argument("--seeds", type=int, default=20)
    args = parser.parse_args()

    print("K,S,runs,single_user_tie_rate,cross_user_hit_rate")
    for K in range(2, args.max_K + 1):
        for S in range(2, args.max_S + 1):
            config = SystemConfig(K, 1, S)
            catalog = SingletonCatalog(K, config.L)
            runs = ties = hits = sets = 0
            for seed in range(args.seeds):
                theta = seed % K + 1
                t = run_retrieval(config, theta, MessageSet.random(K, config.L, random.Random(seed)), seed)
                view = observed_sets(t, 1)
                runs += 1
                hits += infer_cross_user(view, catalog).verdict == theta
                for _, elements in view:
                    sets += 1
                    ties += infer_single_user(elements, catalog).tie
            print(f"{K},{S},{runs},{ties / sets:.3f},{hits / runs:.3f}")


if __name__ == "__main__":
    main()
