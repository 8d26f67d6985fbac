"""Exit criteria for the whole package, one test per criterion.

Run ``pytest tests/test_acceptance.py`` (or this file directly); a
PASS/FAIL line per criterion is printed in the terminal summary.
"""

import random
import time
from fractions import Fraction

import pytest

from conftest import ACCEPTANCE_RESULTS, GRID, KS_GRID, ks_config
from mupir.adversary import SingletonCatalog, complexity_sweep, infer_cross_user, infer_single_user
from mupir.core import MessageSet, SystemConfig, capacity, query_cardinality
from mupir.privacylab import enumerate_distribution, mutual_information_with_theta, shape_symmetry_check
from mupir.scheme import generate_plan
from mupir.simnet import observed_sets, run_retrieval

SEEDS = range(100)
SLOPE_TARGET, SLOPE_TOL = 2.0, 0.3


def record(name, passed, detail):
    ACCEPTANCE_RESULTS.append((name, bool(passed), detail))
    assert passed, f"{name}: {detail}"


def test_c1_k2s2_reproduction():
    start = time.perf_counter()
    config = SystemConfig(K=2, N=1, U=2)
    messages = MessageSet.random(2, 4, random.Random(0))
    t = run_retrieval(config, 1, messages, seed=0)
    elapsed = time.perf_counter() - start
    ok = (
        (t.L, t.D) == (4, 6)
        and t.rate == Fraction(2, 3) == capacity(2, 2)
        and isinstance(t.rate, Fraction)
        and t.recovered == messages.message(1)
        and elapsed < 1.0
    )
    record("C1 K=2, S=2 worked example", ok, f"L={t.L} D={t.D} rate={t.rate} correct={t.correct} ({elapsed * 1e3:.1f} ms)")


def test_c2_capacity_grid():
    start = time.perf_counter()
    bad = []
    runs = 0
    for K, N, U in GRID:
        config = SystemConfig(K, N, U)
        S = config.S
        for theta in range(1, K + 1):
            t = run_retrieval(config, theta, MessageSet.random(K, config.L, random.Random(theta)), seed=theta)
            runs += 1
            sizes = [len(d.elements) for ds in t.deliveries.values() for d in ds]
            if t.rate != capacity(S, K) or t.rate > capacity(S, K):
                bad.append((K, N, U, theta, "rate"))
            if len(sizes) != S or any(n != query_cardinality(S, K) for n in sizes):
                bad.append((K, N, U, theta, "cardinality"))
    elapsed = time.perf_counter() - start
    record(
        "C2 capacity-achievement grid",
        not bad and elapsed < 10,
        f"{runs} runs over {len(GRID)} (K,N,U), failures={bad[:3]}, {elapsed:.2f} s (limit 10 s)",
    )


@pytest.fixture(scope="module")
def grid_sweep():
    """100 seeds x every (K, N, U) x every theta: decode failures and per-source attack ties."""
    runs = failures = sets = ties = uniform = 0
    for K, N, U in GRID:
        config = SystemConfig(K, N, U)
        catalog = SingletonCatalog(K, config.L)
        for theta in range(1, K + 1):
            for seed in SEEDS:
                rng = random.Random(seed * 1000 + theta)
                messages = MessageSet.random(K, config.L, rng)
                t = run_retrieval(config, theta, messages, seed=seed)
                runs += 1
                failures += t.recovered != messages.message(theta)
                for ds in t.deliveries.values():
                    for d in ds:
                        r = infer_single_user(d.elements, catalog)
                        sets += 1
                        uniform += len(set(r.beta)) == 1
                        ties += r.tie or K == 1
    return {"runs": runs, "failures": failures, "sets": sets, "ties": ties, "uniform": uniform}


def test_c3_decode_correctness(grid_sweep):
    record(
        "C3 decode correctness",
        grid_sweep["failures"] == 0 and grid_sweep["runs"] == 100 * sum(K for K, _, _ in GRID),
        f"{grid_sweep['failures']} failures in {grid_sweep['runs']} runs",
    )


def test_c4_privacy():
    start = time.perf_counter()
    details = []
    ok = True
    for source in (1, 2):
        dists = [enumerate_distribution(2, 2, source, theta) for theta in (1, 2)]
        mi = mutual_information_with_theta(dists)
        same = dists[0].support == dists[1].support
        ok &= same and mi == 0 and isinstance(mi, Fraction)
        details.append(f"source {source}: identical={same} MI={mi}")
    plans = asymmetric = 0
    for K, S in KS_GRID:
        for theta in range(1, K + 1):
            for seed in SEEDS:
                plans += 1
                asymmetric += not shape_symmetry_check(generate_plan(ks_config(K, S), theta, seed))
    ok &= asymmetric == 0
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60
    details.append(f"shape symmetry violations {asymmetric}/{plans}")
    record("C4 privacy (exhaustive K=2,S=2; shape symmetry)", ok, "; ".join(details) + f" ({elapsed:.1f} s, limit 60 s)")


def test_c5_per_source_attack_futility(grid_sweep):
    record(
        "C5 per-source attack futility",
        grid_sweep["ties"] == grid_sweep["uniform"] == grid_sweep["sets"],
        f"uniform beta on {grid_sweep['uniform']}/{grid_sweep['sets']} source sets, ties {grid_sweep['ties']} (K=1 counted as trivially uniform)",
    )


def test_c6_cross_user_attack_success():
    runs = hits = 0
    for K in range(2, 5):
        for S in range(2, 6):
            config = SystemConfig(K, 1, S)
            catalog = SingletonCatalog(K, config.L)
            for theta in range(1, K + 1):
                for seed in SEEDS:
                    messages = MessageSet.random(K, config.L, random.Random(seed))
                    t = run_retrieval(config, theta, messages, seed=seed)
                    runs += 1
                    hits += infer_cross_user(observed_sets(t, 1), catalog).verdict == theta
    t = run_retrieval(SystemConfig(2, 1, 2), 1, MessageSet.random(2, 4, random.Random(0)), seed=0)
    k2s2 = infer_cross_user(observed_sets(t, 1), SingletonCatalog(2, 4))
    record(
        "C6 cross-user attack success",
        hits == runs and k2s2.beta == (4, 2) and k2s2.verdict == 1,
        f"verdict = theta in {hits}/{runs} runs; K=2,S=2 example beta={list(k2s2.beta)}",
    )


def test_c7_quadratic_cost():
    result = complexity_sweep([(2, S) for S in range(2, 7)], trials=3, seed=0)
    series = ", ".join(f"n={n}:{c:g}" for _, _, n, c in result.points)
    record(
        "C7 quadratic cost",
        result.slope is not None and abs(result.slope - SLOPE_TARGET) <= SLOPE_TOL,
        f"fitted slope {result.slope:.3f} (target {SLOPE_TARGET} +/- {SLOPE_TOL}); {series}",
    )


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
