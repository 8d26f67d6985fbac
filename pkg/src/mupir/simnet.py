"""In-process simulation of one retrieval among users and databases.

User 1 is the requester; users 2..U are helpers. Sources 1..N are the
requester's direct channels to databases 1..N, and source N + h is the
channel through helper user h + 1, which forwards to one database.

Messages travel through a small discrete-event loop (one time unit per hop)
so the transcript records who presented which query set to whom.
"""

from __future__ import annotations

import heapq
import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import (
    ConfigurationError,
    MessageSet,
    SystemConfig,
    bits_to_hex,
    capacity,
    hex_to_bits,
    rate_of,
)
from .scheme import (
    AnswerSheet,
    RetrievalPlan,
    decode,
    element_from_dict,
    element_to_dict,
    evaluate_answers,
    generate_plan,
    sheet_from_dict,
    sheet_to_dict,
)

REQUESTER = 1


@dataclass(frozen=True)
class Channel:
    source: int
    database: int
    user: int  # presenting user; REQUESTER for a direct channel

    @property
    def direct(self) -> bool:
        return self.user == REQUESTER


@dataclass(frozen=True)
class RoutingTable:
    config: SystemConfig
    channels: tuple

    def __post_init__(self):
        N, U, S = self.config.N, self.config.U, self.config.S
        if len(self.channels) != S:
            raise ConfigurationError(f"routing table has {len(self.channels)} channels, need S={S}")
        if [c.source for c in self.channels] != list(range(1, S + 1)):
            raise ConfigurationError("channels must be listed for sources 1..S in order")
        direct = sorted(c.database for c in self.channels if c.direct)
        if direct != list(range(1, N + 1)):
            raise ConfigurationError(f"need exactly one direct channel per database, got {direct}")
        helpers = sorted(c.user for c in self.channels if not c.direct)
        if helpers != list(range(2, U + 1)):
            raise ConfigurationError(f"need exactly one channel per helper user, got {helpers}")
        for c in self.channels:
            if not 1 <= c.database <= N:
                raise ConfigurationError(f"channel {c.source} ends at unknown database {c.database}")

    @classmethod
    def fixed(cls, config: SystemConfig, helper_databases: Sequence[int]) -> "RoutingTable":
        """Helper user h + 1 forwards to ``helper_databases[h - 1]``."""
        if len(helper_databases) != config.U - 1:
            raise ConfigurationError(
                f"fixed routing needs {config.U - 1} database choices, got {len(helper_databases)}"
            )
        channels = [Channel(s, s, REQUESTER) for s in range(1, config.N + 1)]
        for h, db in enumerate(helper_databases, start=1):
            channels.append(Channel(config.N + h, int(db), h + 1))
        return cls(config, tuple(channels))

    @classmethod
    def uniform(cls, config: SystemConfig, rng: random.Random) -> "RoutingTable":
        return cls.fixed(config, [rng.randint(1, config.N) for _ in range(config.U - 1)])

    def channel(self, source: int) -> Channel:
        return self.channels[source - 1]


@dataclass(frozen=True)
class Delivery:
    user: int
    source: int
    elements: tuple


@dataclass(frozen=True)
class Transcript:
    config: SystemConfig
    theta: int
    seed: int
    routing: RoutingTable
    deliveries: dict  # database -> tuple of Delivery, in arrival order
    sheets: tuple
    messages: MessageSet
    recovered: tuple
    D: int
    events: tuple = ()

    @property
    def L(self) -> int:
        return self.messages.L

    @property
    def rate(self) -> Fraction:
        return rate_of(self.L, self.D)

    @property
    def capacity(self) -> Fraction:
        return capacity(self.config.S, self.config.K)

    @property
    def correct(self) -> bool:
        return self.recovered == self.messages.message(self.theta)

    def to_dict(self) -> dict:
        c = self.config
        return {
            "config": {"K": c.K, "N": c.N, "U": c.U, "S": c.S},
            "theta": self.theta,
            "seed": self.seed,
            "routing": [
                {"source": ch.source, "database": ch.database, "user": ch.user} for ch in self.routing.channels
            ],
            "deliveries": {
                str(db): [
                    {"user": d.user, "source": d.source, "elements": [element_to_dict(e) for e in d.elements]}
                    for d in ds
                ]
                for db, ds in sorted(self.deliveries.items())
            },
            "sheets": [sheet_to_dict(s) for s in self.sheets],
            "L": self.L,
            "D": self.D,
            "rate": str(self.rate),
            "capacity": str(self.capacity),
            "messages": self.messages.to_hex(),
            "recovered": bits_to_hex(self.recovered),
            "events": [list(e) for e in self.events],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Transcript":
        c = data["config"]
        config = SystemConfig(int(c["K"]), int(c["N"]), int(c["U"]))
        L = int(data["L"])
        routing = RoutingTable(
            config, tuple(Channel(int(r["source"]), int(r["database"]), int(r["user"])) for r in data["routing"])
        )
        deliveries = {
            int(db): tuple(
                Delivery(int(d["user"]), int(d["source"]), tuple(element_from_dict(e) for e in d["elements"]))
                for d in ds
            )
            for db, ds in data["deliveries"].items()
        }
        return cls(
            config=config,
            theta=int(data["theta"]),
            seed=int(data["seed"]),
            routing=routing,
            deliveries=deliveries,
            sheets=tuple(sheet_from_dict(s) for s in data["sheets"]),
            messages=MessageSet.from_hex(data["messages"], L),
            recovered=hex_to_bits(data["recovered"], L),
            D=int(data["D"]),
            events=tuple(tuple(e) for e in data.get("events", ())),
        )


def _simulate(plan: RetrievalPlan, routing: RoutingTable, messages: MessageSet):
    """Run the event loop; returns deliveries, sheets (by source), and the event log."""
    seq = itertools.count()
    queue: list = []
    log = []
    deliveries: dict[int, list[Delivery]] = {n: [] for n in range(1, plan.config.N + 1)}
    sheets: dict[int, AnswerSheet] = {}

    def post(time, kind, payload):
        heapq.heappush(queue, (time, next(seq), kind, payload))

    for source in range(1, plan.S + 1):
        ch = routing.channel(source)
        if ch.direct:
            post(1, "query_at_db", (source, REQUESTER))
        else:
            post(1, "query_at_helper", (source,))

    while queue:
        time, _, kind, payload = heapq.heappop(queue)
        if kind == "query_at_helper":
            (source,) = payload
            ch = routing.channel(source)
            log.append((time, "forward", ch.user, f"db{ch.database}", source))
            post(time + 1, "query_at_db", (source, ch.user))
        elif kind == "query_at_db":
            source, user = payload
            ch = routing.channel(source)
            elements = plan.query_sets[source - 1]
            deliveries[ch.database].append(Delivery(user, source, elements))
            log.append((time, "answer", f"db{ch.database}", user, source))
            sheet = evaluate_answers(messages, elements, source=source)
            post(time + 1, "answer_at_user", (source, user, sheet))
        elif kind == "answer_at_user":
            source, user, sheet = payload
            if user != REQUESTER:
                log.append((time, "return", user, REQUESTER, source))
                post(time + 1, "answer_at_user", (source, REQUESTER, sheet))
            else:
                log.append((time, "received", REQUESTER, REQUESTER, source))
                sheets[source] = sheet
        else:  # pragma: no cover
            raise AssertionError(kind)
    return deliveries, [sheets[s] for s in sorted(sheets)], log


def run_retrieval(
    config: SystemConfig,
    theta: int,
    messages: MessageSet,
    seed: int,
    routing: str | Sequence[int] | RoutingTable = "uniform",
) -> Transcript:
    """End-to-end retrieval of message ``theta``.

    ``routing`` is ``"uniform"`` (each helper picks a database with the
    seeded generator), a list of databases for helpers 2..U, or a ready
    RoutingTable.
    """
    if messages.K != config.K:
        raise ConfigurationError(f"message set has K={messages.K}, config has K={config.K}")
    if messages.L != config.L:
        raise ConfigurationError(f"messages must be L=S^K={config.L} bits, got {messages.L}")
    rng = random.Random(seed)
    plan = generate_plan(config, theta, rng)
    if isinstance(routing, RoutingTable):
        if routing.config != config:
            raise ConfigurationError("routing table was built for a different configuration")
        table = routing
    elif routing == "uniform":
        table = RoutingTable.uniform(config, rng)
    elif isinstance(routing, str):
        raise ConfigurationError(f"unknown routing policy {routing!r}")
    else:
        table = RoutingTable.fixed(config, routing)

    deliveries, sheets, log = _simulate(plan, table, messages)
    return Transcript(
        config=config,
        theta=theta,
        seed=seed,
        routing=table,
        deliveries={db: tuple(ds) for db, ds in deliveries.items()},
        sheets=tuple(sheets),
        messages=messages,
        recovered=decode(plan, sheets),
        D=sum(len(s.bits) for s in sheets),
        events=tuple(log),
    )


def observed_sets(transcript: Transcript, database: int) -> list:
    """(presenting user, query set) pairs that reached ``database``."""
    if not 1 <= database <= transcript.config.N:
        raise ConfigurationError(f"database must be in [1, {transcript.config.N}], got {database}")
    return [(d.user, d.elements) for d in transcript.deliveries.get(database, ())]
