"""Capacity-achieving query plans, GF(2) answers, and decoding.

The requester draws a secret permutation of ``[L]`` for every message and
then grows the query sets round by round:

* round 1 gives every source one fresh singleton of every message;
* round k pairs a fresh desired bit with a round-(k-1) undesired sum that
  was asked at a *different* source (side information), and asks brand new
  undesired k-sums that later rounds will reuse.

Each source ends up with ``(S-1)**(k-1)`` elements for every k-subset of
messages, which hides the desired index, and ``L = S**K`` desired bits are
recovered from ``S * query_cardinality(S, K)`` answers.
"""

from __future__ import annotations

import itertools
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .core import (
    MAX_BLOCK_LENGTH,
    BitRef,
    ConfigurationError,
    IncompleteTranscriptError,
    InvariantViolation,
    MessageSet,
    ProtocolViolation,
    QueryElement,
    SystemConfig,
    block_length,
    query_cardinality,
)

Orderer = Callable[[int, list], Sequence[QueryElement]]


@dataclass(frozen=True)
class LedgerEntry:
    carrier: int
    side_info: tuple = ()


@dataclass(frozen=True)
class DecodeLedger:
    """``entries[i]`` recovers the i-th fresh desired bit (0-based consumption order)."""

    entries: tuple


@dataclass(frozen=True)
class RetrievalPlan:
    config: SystemConfig
    theta: int
    # permutations[m - 1][i] is the storage position of fresh bit i of message m
    permutations: tuple
    query_sets: tuple
    ledger: DecodeLedger
    fresh_used: tuple
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_id = {}
        for elements in self.query_sets:
            for el in elements:
                if el.id in by_id:
                    raise InvariantViolation(f"duplicate element id {el.id}")
                by_id[el.id] = el
        object.__setattr__(self, "_by_id", by_id)

    @property
    def S(self) -> int:
        return self.config.S

    @property
    def L(self) -> int:
        return len(self.permutations[0])

    @property
    def download_size(self) -> int:
        return sum(len(q) for q in self.query_sets)

    def element(self, element_id: int) -> QueryElement:
        return self._by_id[element_id]

    def source_of(self, element_id: int) -> int:
        for s, elements in enumerate(self.query_sets, start=1):
            if any(el.id == element_id for el in elements):
                return s
        raise KeyError(element_id)


@dataclass(frozen=True)
class AnswerSheet:
    source: int
    bits: dict


def _check_theta(config: SystemConfig, theta: int) -> None:
    if not isinstance(theta, int) or not 1 <= theta <= config.K:
        raise ConfigurationError(f"theta must be in [1, {config.K}], got {theta!r}")


def _check_permutations(permutations: Sequence[Sequence[int]], K: int, L: int) -> tuple:
    if len(permutations) != K:
        raise ConfigurationError(f"need {K} permutations, got {len(permutations)}")
    full = set(range(1, L + 1))
    out = []
    for perm in permutations:
        perm = tuple(perm)
        if len(perm) != L or set(perm) != full:
            raise ConfigurationError(f"not a permutation of 1..{L}: {perm[:8]}...")
        out.append(perm)
    return tuple(out)


def build_plan(
    config: SystemConfig,
    theta: int,
    permutations: Sequence[Sequence[int]],
    order: Orderer | None = None,
) -> RetrievalPlan:
    """Deterministic plan for the given permutations.

    ``order(source, elements)`` may reorder a source's list after all ids
    are assigned; the default keeps generation order.
    """
    _check_theta(config, theta)
    S, K = config.S, config.K
    L = block_length(S, K, limit=MAX_BLOCK_LENGTH)
    perms = _check_permutations(permutations, K, L)

    cursor = [0] * K
    ids = itertools.count(1)
    lists: list[list[QueryElement]] = [[] for _ in range(S)]
    ledger: dict[int, LedgerEntry] = {}

    def fresh(m: int) -> BitRef:
        i = cursor[m - 1]
        if i >= L:
            raise InvariantViolation(f"message {m} ran out of fresh bits")
        cursor[m - 1] += 1
        return BitRef(m, perms[m - 1][i])

    # undesired sums asked in the previous round, by source and message subset
    pure_prev: list[dict[frozenset, list[QueryElement]]] = [{} for _ in range(S)]
    for s in range(S):
        for m in range(1, K + 1):
            i = cursor[m - 1]
            el = QueryElement(next(ids), frozenset({fresh(m)}))
            lists[s].append(el)
            if m == theta:
                ledger[i] = LedgerEntry(el.id)
            else:
                pure_prev[s][frozenset({m})] = [el]

    for k in range(2, K + 1):
        pure_now: list[dict[frozenset, list[QueryElement]]] = [{} for _ in range(S)]
        for s in range(S):
            for subset in itertools.combinations(range(1, K + 1), k):
                M = frozenset(subset)
                if theta in M:
                    rest = M - {theta}
                    for other in range(S):
                        if other == s:
                            continue
                        for side in pure_prev[other].get(rest, ()):
                            i = cursor[theta - 1]
                            el = QueryElement(next(ids), side.terms | {fresh(theta)})
                            lists[s].append(el)
                            ledger[i] = LedgerEntry(el.id, (side.id,))
                else:
                    made = []
                    for _ in range((S - 1) ** (k - 1)):
                        el = QueryElement(next(ids), frozenset(fresh(m) for m in subset))
                        lists[s].append(el)
                        made.append(el)
                    pure_now[s][M] = made
        pure_prev = pure_now

    if cursor[theta - 1] != L or len(ledger) != L:
        raise InvariantViolation(
            f"consumed {cursor[theta - 1]} desired bits and built {len(ledger)} ledger entries, expected {L}"
        )
    if order is not None:
        lists = [list(order(s, lst)) for s, lst in enumerate(lists, start=1)]
    return RetrievalPlan(
        config=config,
        theta=theta,
        permutations=perms,
        query_sets=tuple(tuple(lst) for lst in lists),
        ledger=DecodeLedger(tuple(ledger[i] for i in range(L))),
        fresh_used=tuple(cursor),
    )


def generate_plan(config: SystemConfig, theta: int, rng: random.Random | int) -> RetrievalPlan:
    """Randomized plan: uniform permutations, then a uniform shuffle of every source's list."""
    _check_theta(config, theta)
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    L = block_length(config.S, config.K, limit=MAX_BLOCK_LENGTH)
    perms = [tuple(rng.sample(range(1, L + 1), L)) for _ in range(config.K)]

    def shuffled(_source: int, elements: list) -> list:
        rng.shuffle(elements)
        return elements

    return build_plan(config, theta, perms, order=shuffled)


def verify_plan(plan: RetrievalPlan) -> None:
    """Raise InvariantViolation unless every structural plan invariant holds."""
    S, K, theta = plan.S, plan.config.K, plan.theta
    expected = query_cardinality(S, K)
    for s, elements in enumerate(plan.query_sets, start=1):
        if len(elements) != expected:
            raise InvariantViolation(f"source {s} has {len(elements)} elements, expected {expected}")
        shape = canonical_shape(elements)
        for k in range(1, K + 1):
            for subset in itertools.combinations(range(1, K + 1), k):
                if shape.get(subset, 0) != (S - 1) ** (k - 1):
                    raise InvariantViolation(f"source {s} has {shape.get(subset, 0)} elements of type {subset}")

    where = {el.id: s for s, elements in enumerate(plan.query_sets, start=1) for el in elements}
    carriers = set()
    for i, entry in enumerate(plan.ledger.entries):
        bit = BitRef(theta, plan.permutations[theta - 1][i])
        carrier = plan.element(entry.carrier)
        if bit not in carrier.terms:
            raise InvariantViolation(f"carrier {entry.carrier} lacks desired bit {bit}")
        if entry.carrier in carriers:
            raise InvariantViolation(f"carrier {entry.carrier} used twice")
        carriers.add(entry.carrier)
        if carrier.round == 1:
            if entry.side_info:
                raise InvariantViolation(f"singleton carrier {entry.carrier} has side information")
        else:
            if len(entry.side_info) != 1:
                raise InvariantViolation(f"carrier {entry.carrier} needs exactly one side-info element")
            side = plan.element(entry.side_info[0])
            if side.terms != carrier.terms - {bit}:
                raise InvariantViolation(f"side info {side.id} does not cancel carrier {entry.carrier}")
            if where[side.id] == where[carrier.id]:
                raise InvariantViolation(f"side info {side.id} asked at the carrier's own source")

    # freshness: no desired storage position is referenced by two elements
    seen = Counter(
        t.position for elements in plan.query_sets for el in elements for t in el.terms if t.message == theta
    )
    if sorted(seen) != list(range(1, plan.L + 1)) or any(c != 1 for c in seen.values()):
        raise InvariantViolation("desired positions are not each referenced exactly once")


def evaluate_answers(messages: MessageSet, elements: Iterable[QueryElement], source: int = 1) -> AnswerSheet:
    """Answer every element with the XOR of the stored bits it addresses."""
    bits = {}
    for el in elements:
        acc = 0
        for ref in el.terms:
            acc ^= messages.bit(ref)
        bits[el.id] = acc
    return AnswerSheet(source=source, bits=bits)


def decode(plan: RetrievalPlan, sheets: Sequence[AnswerSheet]) -> tuple:
    """Recover the desired message, in storage order, from one sheet per source."""
    answers = {}
    for sheet in sheets:
        answers.update(sheet.bits)
    theta = plan.theta
    perm = plan.permutations[theta - 1]
    out = [None] * plan.L
    for i, entry in enumerate(plan.ledger.entries):
        try:
            bit = answers[entry.carrier]
            for side in entry.side_info:
                bit ^= answers[side]
        except KeyError as exc:
            raise IncompleteTranscriptError(f"no answer for element {exc.args[0]}") from None
        position = perm[i]
        if out[position - 1] is not None:
            raise InvariantViolation(f"position {position} decoded twice")
        out[position - 1] = bit
    if any(b is None for b in out):
        raise InvariantViolation("ledger does not cover every desired position")
    return tuple(out)


def canonical_shape(elements: Iterable[QueryElement]) -> Counter:
    """Count of elements per message subset (as a sorted tuple); positions and ids dropped."""
    return Counter(tuple(sorted(el.messages)) for el in elements)


# -- canonical JSON -------------------------------------------------------


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def element_to_dict(el: QueryElement) -> dict:
    return {"id": el.id, "round": el.round, "terms": [list(t) for t in el.sorted_terms()]}


def element_from_dict(data: dict) -> QueryElement:
    el = QueryElement(int(data["id"]), frozenset(BitRef(int(m), int(p)) for m, p in data["terms"]))
    if "round" in data and int(data["round"]) != el.round:
        raise ProtocolViolation(f"element {el.id}: round {data['round']} disagrees with its terms")
    return el


def sheet_to_dict(sheet: AnswerSheet) -> dict:
    return {"source": sheet.source, "bits": {str(k): v for k, v in sorted(sheet.bits.items())}}


def sheet_from_dict(data: dict) -> AnswerSheet:
    return AnswerSheet(int(data["source"]), {int(k): int(v) for k, v in data["bits"].items()})


def plan_to_dict(plan: RetrievalPlan) -> dict:
    c = plan.config
    return {
        "config": {"K": c.K, "N": c.N, "U": c.U, "S": c.S},
        "theta": plan.theta,
        "permutations": [list(p) for p in plan.permutations],
        "query_sets": [[element_to_dict(el) for el in q] for q in plan.query_sets],
        "ledger": [{"carrier": e.carrier, "side_info": list(e.side_info)} for e in plan.ledger.entries],
        "fresh_used": list(plan.fresh_used),
    }


def plan_from_dict(data: dict) -> RetrievalPlan:
    c = data["config"]
    return RetrievalPlan(
        config=SystemConfig(int(c["K"]), int(c["N"]), int(c["U"])),
        theta=int(data["theta"]),
        permutations=tuple(tuple(p) for p in data["permutations"]),
        query_sets=tuple(tuple(element_from_dict(e) for e in q) for q in data["query_sets"]),
        ledger=DecodeLedger(tuple(LedgerEntry(e["carrier"], tuple(e["side_info"])) for e in data["ledger"])),
        fresh_used=tuple(data["fresh_used"]),
    )
