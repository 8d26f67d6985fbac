import itertools

import pytest

from mupir import SystemConfig

# (K, N, U) with K <= 4 and S = N + U - 1 <= 5
GRID = [
    (K, N, U)
    for K in range(1, 5)
    for N in range(1, 6)
    for U in range(1, 6)
    if N + U - 1 <= 5
]

# one representative configuration per (K, S)
KS_GRID = [(K, S) for K in range(1, 5) for S in range(1, 6)]


def ks_config(K, S):
    return SystemConfig(K=K, N=1, U=S)


@pytest.fixture
def k2s2_config():
    return SystemConfig(K=2, N=1, U=2)


def identity_perms(K, L):
    return [tuple(range(1, L + 1))] * K


def subsets(K):
    for k in range(1, K + 1):
        yield from itertools.combinations(range(1, K + 1), k)


# (criterion, passed, detail) rows appended by test_acceptance.py
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
