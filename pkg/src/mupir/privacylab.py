"""Empirical checks that a source's query carries no information about theta.

Exhaustive mode walks every permutation tuple and every ordering of the
source's list that the generator can emit, and accumulates exact
probabilities over canonical query sets. Mutual information is then zero
exactly when the per-theta distributions coincide as maps of fractions.
"""

from __future__ import annotations

import itertools
import json
import random
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, log2
from typing import Callable, Sequence

from .core import ConfigurationError, SystemConfig, block_length, query_cardinality
from .scheme import RetrievalPlan, build_plan, canonical_json, canonical_shape, generate_plan

# permutation tuples x orderings that exhaustive mode is willing to visit
ENUMERATION_BOUND = 200_000


class EnumerationBoundError(ConfigurationError):
    pass


def canonical_key(elements) -> str:
    """Order- and id-independent serialization of one query set."""
    rows = sorted((sorted(el.messages), [t.position for t in el.sorted_terms()]) for el in elements)
    return canonical_json(rows)


def structural_key(elements) -> str:
    """Coarser key that forgets which positions were drawn.

    Keeps the subset shape and, for every referenced bit, the multiset of
    element types it occurs in, so a reused bit still stands out.
    """
    occurrences = defaultdict(list)
    for el in elements:
        kind = tuple(sorted(el.messages))
        for t in el.terms:
            occurrences[t].append(kind)
    profile = Counter((ref.message, tuple(sorted(kinds))) for ref, kinds in occurrences.items())
    shape = sorted(canonical_shape(elements).items())
    return canonical_json({"shape": shape, "bits": sorted([list(k), v] for k, v in profile.items())})


@dataclass(frozen=True)
class QueryDistribution:
    K: int
    S: int
    source: int
    theta: int
    support: dict  # canonical key -> Fraction
    mode: str = "exhaustive"

    def __post_init__(self):
        total = sum(self.support.values(), Fraction(0))
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @property
    def instance(self) -> tuple:
        return (self.K, self.S, self.source)

    def to_json(self) -> str:
        return canonical_json(
            {
                "K": self.K,
                "S": self.S,
                "source": self.source,
                "theta": self.theta,
                "mode": self.mode,
                "support": {k: str(v) for k, v in self.support.items()},
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "QueryDistribution":
        d = json.loads(text)
        return cls(d["K"], d["S"], d["source"], d["theta"], {k: Fraction(v) for k, v in d["support"].items()}, d["mode"])


def enumeration_size(K: int, S: int) -> int:
    L = block_length(S, K)
    return factorial(L) ** K * factorial(query_cardinality(S, K))


def _config_for(K: int, S: int) -> SystemConfig:
    # only S matters for the plan; route everything through one database
    return SystemConfig(K=K, N=1, U=S)


def enumerate_distribution(
    K: int,
    S: int,
    source: int,
    theta: int,
    mode: str = "exhaustive",
    samples: int = 10_000,
    seed: int = 0,
    builder: Callable[..., RetrievalPlan] = build_plan,
) -> QueryDistribution:
    """Distribution of the query set seen by ``source`` when ``theta`` is wanted.

    ``builder`` must accept ``(config, theta, permutations)``; tests swap in
    deliberately broken generators.
    """
    config = _config_for(K, S)
    if not 1 <= source <= S:
        raise ConfigurationError(f"source must be in [1, {S}], got {source}")
    if not 1 <= theta <= K:
        raise ConfigurationError(f"theta must be in [1, {K}], got {theta}")

    if mode == "exhaustive":
        size = enumeration_size(K, S)
        if size > ENUMERATION_BOUND:
            raise EnumerationBoundError(
                f"exhaustive enumeration of K={K}, S={S} needs {size} cases (bound {ENUMERATION_BOUND}); use sampled mode"
            )
        L = config.L
        per_tuple = Fraction(1, factorial(L) ** K)
        support: dict = defaultdict(Fraction)
        for perms in itertools.product(itertools.permutations(range(1, L + 1)), repeat=K):
            elements = builder(config, theta, perms).query_sets[source - 1]
            orderings = Counter(canonical_key(o) for o in itertools.permutations(elements))
            n = sum(orderings.values())
            for key, c in orderings.items():
                support[key] += per_tuple * Fraction(c, n)
        return QueryDistribution(K, S, source, theta, dict(support), mode)

    if mode == "sampled":
        if samples < 1:
            raise ConfigurationError("samples must be >= 1")
        rng = random.Random(seed)
        counts = Counter()
        for _ in range(samples):
            plan = generate_plan(config, theta, rng.getrandbits(64))
            counts[structural_key(plan.query_sets[source - 1])] += 1
        return QueryDistribution(K, S, source, theta, {k: Fraction(c, samples) for k, c in counts.items()}, mode)

    raise ConfigurationError(f"unknown mode {mode!r}")


def _check_family(distributions: Sequence[QueryDistribution]) -> None:
    if not distributions:
        raise ConfigurationError("need at least one distribution")
    instance = distributions[0].instance
    if any(d.instance != instance for d in distributions):
        raise ConfigurationError("distributions describe different instances")
    if sorted(d.theta for d in distributions) != list(range(1, distributions[0].K + 1)):
        raise ConfigurationError("need exactly one distribution per theta in [1, K]")


def mutual_information_with_theta(distributions: Sequence[QueryDistribution]) -> Fraction | float:
    """I(Q_s; theta) under a uniform prior.

    Returns ``Fraction(0)`` when every conditional distribution is the same
    map, otherwise a positive float in bits.
    """
    _check_family(distributions)
    first = distributions[0].support
    if all(d.support == first for d in distributions):
        return Fraction(0)
    prior = Fraction(1, len(distributions))
    marginal: dict = defaultdict(Fraction)
    for d in distributions:
        for q, p in d.support.items():
            marginal[q] += prior * p
    info = 0.0
    for d in distributions:
        for q, p in d.support.items():
            if p:
                info += float(prior * p) * log2(float(p / marginal[q]))
    return info


def total_variation(a: QueryDistribution, b: QueryDistribution) -> Fraction:
    keys = set(a.support) | set(b.support)
    return sum((abs(a.support.get(k, 0) - b.support.get(k, 0)) for k in keys), Fraction(0)) / 2


def shape_symmetry_check(plan: RetrievalPlan) -> bool:
    """True iff every source asks (S-1)^(k-1) elements of every k-subset, and nothing else."""
    S, K = plan.S, plan.config.K
    expected = {
        subset: (S - 1) ** (k - 1)
        for k in range(1, K + 1)
        for subset in itertools.combinations(range(1, K + 1), k)
    }
    expected = {m: c for m, c in expected.items() if c}
    return all(dict(canonical_shape(q)) == expected for q in plan.query_sets)
