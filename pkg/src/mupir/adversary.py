"""Brute-force index inference by a database that inspects query sets.

A query element is read as its characteristic vector over the K*L bit
positions, so XOR of two elements is the symmetric difference of their
term sets. A vector is "identifiable" when it is a single bit, in which
case the catalog tells which message it belongs to.

``infer_single_user`` looks at one user's set in isolation.
``infer_cross_user`` lets the database XOR elements presented by different
users against each other, which is where side information leaks.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass
from math import log
from typing import Iterable, Sequence

from .core import ConfigurationError, MessageSet, ProtocolViolation, SystemConfig
from .simnet import observed_sets, run_retrieval


class SingletonCatalog:
    """Maps every unit index vector (one stored bit) to its message.

    Index vectors are Python ints over K*L bits; bit ``(m - 1) * L + p - 1``
    stands for position p of message m.
    """

    def __init__(self, K: int, L: int):
        if K < 1 or L < 1:
            raise ConfigurationError(f"need K >= 1 and L >= 1, got K={K}, L={L}")
        self.K = K
        self.L = L

    def __len__(self) -> int:
        return self.K * self.L

    def check(self, ref) -> None:
        if not (1 <= ref.message <= self.K and 1 <= ref.position <= self.L):
            raise ProtocolViolation(f"{ref} is outside the catalog (K={self.K}, L={self.L})")

    def vector(self, terms: Iterable) -> int:
        v = 0
        for ref in terms:
            self.check(ref)
            v |= 1 << ((ref.message - 1) * self.L + ref.position - 1)
        return v

    def lookup(self, vector: int) -> int | None:
        """Message index if ``vector`` is a single bit, else None."""
        if vector and not vector & (vector - 1):
            return (vector.bit_length() - 1) // self.L + 1
        return None


def _encode(groups: Sequence, catalog: SingletonCatalog) -> tuple[list, list]:
    """Dense bitmasks over only the bits the groups reference.

    Returns the per-group vectors and ``owner[i]``, the message of dense bit
    i. XOR and the singleton test behave exactly as on the full K*L space.
    """
    index: dict = {}
    owner: list = []
    encoded = []
    for elements in groups:
        vectors = []
        for el in elements:
            v = 0
            for ref in el.terms:
                i = index.get(ref)
                if i is None:
                    catalog.check(ref)
                    i = index[ref] = len(owner)
                    owner.append(ref.message)
                v |= 1 << i
            vectors.append(v)
        encoded.append(vectors)
    return encoded, owner


@dataclass(frozen=True)
class AttackReport:
    beta: tuple
    verdict: int | None  # None means tie
    tied_indices: frozenset
    comparisons: int

    @property
    def tie(self) -> bool:
        return self.verdict is None

    def to_dict(self) -> dict:
        return {
            "beta": list(self.beta),
            "verdict": "tie" if self.tie else self.verdict,
            "tied_indices": sorted(self.tied_indices),
            "comparisons": self.comparisons,
        }


def _report(beta: list[int], comparisons: int) -> AttackReport:
    top = max(beta)
    winners = frozenset(m for m, b in enumerate(beta, start=1) if b == top)
    # zero evidence is reported as a tie even when K = 1
    if len(winners) > 1 or top == 0:
        return AttackReport(tuple(beta), None, frozenset(range(1, len(beta) + 1)) if top == 0 else winners, comparisons)
    (winner,) = winners
    return AttackReport(tuple(beta), winner, frozenset(), comparisons)


def infer_single_user(query_set: Iterable, catalog: SingletonCatalog) -> AttackReport:
    """Count identifiable bits per message within one user's query set."""
    (vectors,), owner = _encode([list(query_set)], catalog)
    beta = [0] * catalog.K
    comparisons = 0
    for alpha in vectors:
        if alpha & (alpha - 1):
            # alpha not in the catalog: XOR it against every element
            for other in vectors:
                x = alpha ^ other
                if x and not x & (x - 1):
                    beta[owner[x.bit_length() - 1] - 1] += 1
            comparisons += len(vectors)
        else:
            beta[owner[alpha.bit_length() - 1] - 1] += 1
    return _report(beta, comparisons)


def infer_cross_user(sets_by_user: Sequence, catalog: SingletonCatalog) -> AttackReport:
    """Cross-reference the query sets presented by different users.

    ``sets_by_user`` is a list of ``(user, elements)`` pairs; sets presented
    by the same user are pooled. Singletons are counted once per *other*
    user, exactly as the loop nesting dictates.
    """
    grouped: dict = {}
    for user, elements in sets_by_user:
        grouped.setdefault(user, []).extend(elements)
    users = list(grouped)
    encoded, owner = _encode([grouped[u] for u in users], catalog)

    beta = [0] * catalog.K
    comparisons = 0
    for u, mine in enumerate(encoded):
        for alpha in mine:
            identifiable = not alpha & (alpha - 1)
            for v, theirs in enumerate(encoded):
                if v == u:
                    continue
                if not identifiable:
                    for other in theirs:
                        x = alpha ^ other
                        if x and not x & (x - 1):
                            beta[owner[x.bit_length() - 1] - 1] += 1
                    comparisons += len(theirs)
                else:
                    beta[owner[alpha.bit_length() - 1] - 1] += 1
    return _report(beta, comparisons)


@dataclass(frozen=True)
class SweepResult:
    points: tuple  # (K, S, n, mean comparisons)
    slope: float | None

    def to_csv(self) -> str:
        lines = ["K,S,n,comparisons"]
        lines += [f"{K},{S},{n},{c}" for K, S, n, c in self.points]
        lines.append(f"# fitted_slope,{'' if self.slope is None else f'{self.slope:.6f}'}")
        return "\n".join(lines) + "\n"


def loglog_slope(ns: Sequence[float], counts: Sequence[float]) -> float | None:
    """Least-squares slope of log(count) against log(n), skipping zero counts."""
    pts = [(log(n), log(c)) for n, c in zip(ns, counts) if n > 0 and c > 0]
    if len({x for x, _ in pts}) < 2:
        return None
    xs, ys = zip(*pts)
    return statistics.linear_regression(xs, ys).slope


def complexity_sweep(sizes: Sequence, trials: int = 1, seed: int = 0) -> SweepResult:
    """Cross-user attack cost on honest single-database runs.

    For each ``(K, S)`` a system with N = 1 and U = S is simulated ``trials``
    times; ``n`` is the number of query elements the database analyzes.
    """
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    rng = random.Random(seed)
    points = []
    for K, S in sizes:
        config = SystemConfig(K=K, N=1, U=S)
        catalog = SingletonCatalog(K, config.L)
        ns, counts = [], []
        for _ in range(trials):
            theta = rng.randint(1, K)
            messages = MessageSet.random(K, config.L, rng)
            t = run_retrieval(config, theta, messages, seed=rng.getrandbits(32))
            view = observed_sets(t, 1)
            ns.append(sum(len(q) for _, q in view))
            counts.append(infer_cross_user(view, catalog).comparisons)
        points.append((K, S, ns[0], statistics.fmean(counts)))
    slope = loglog_slope([p[2] for p in points], [p[3] for p in points])
    return SweepResult(tuple(points), slope)
