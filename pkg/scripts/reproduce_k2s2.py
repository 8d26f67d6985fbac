#!/usr/bin/env python3
"""Reproduce the two-user, one-database example: L=4, D=6, rate 2/3.

Prints both users' query tables (identity permutations, so bit names match
a1..a4 / b1..b4), then a randomized run and both attacks on it.
"""

import argparse
import random

from mupir import MessageSet, SystemConfig, build_plan, capacity, observed_sets, run_retrieval
from mupir.adversary import SingletonCatalog, infer_cross_user, infer_single_user


def name(ref):
    return f"{'abcdefgh'[ref.message - 1]}{ref.position}"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    config = SystemConfig(K=2, N=1, U=2)
    plan = build_plan(config, 1, [(1, 2, 3, 4)] * 2)
    for user, elements in enumerate(plan.query_sets, start=1):
        print(f"U{user}: " + ", ".join("+".join(name(t) for t in el.sorted_terms()) for el in elements))

    messages = MessageSet.random(2, config.L, random.Random(args.seed))
    t = run_retrieval(config, 1, messages, args.seed)
    print(f"L={t.L} D={t.D} rate={t.rate} capacity={capacity(config.S, config.K)} correct={t.correct}")

    catalog = SingletonCatalog(2, config.L)
    view = observed_sets(t, 1)
    for user, elements in view:
        r = infer_single_user(elements, catalog)
        print(f"single-user attack on U{user}: beta={list(r.beta)} verdict={'tie' if r.tie else r.verdict}")
    r = infer_cross_user(view, catalog)
    print(f"cross-user attack: beta={list(r.beta)} verdict={r.verdict} (theta=1)")


if __name__ == "__main__":
    main()
