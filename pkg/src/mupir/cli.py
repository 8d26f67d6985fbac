"""Command-line entry point: ``mupir {capacity,run,attack,privacy}``.

Exit status is 0 only when every check a command performs passes, so the
commands can be chained in CI.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .adversary import SingletonCatalog, infer_cross_user, infer_single_user
from .core import (
    ConfigurationError,
    MessageSet,
    SystemConfig,
    block_length,
    capacity,
    query_cardinality,
)
from .privacylab import (
    EnumerationBoundError,
    enumerate_distribution,
    mutual_information_with_theta,
    total_variation,
)
from .scheme import canonical_json
from .simnet import Transcript, observed_sets, run_retrieval

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    K: int | None = None
    N: int | None = None
    U: int | None = None
    theta: int | None = None
    seed: int | None = None
    routing: str = "uniform"
    routing_table: list | None = None
    messages: list | None = None
    out: str | None = None
    format: str = "table"

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "ExperimentConfig":
        base = {}
        if getattr(args, "config", None):
            base = json.loads(Path(args.config).read_text())
            unknown = set(base) - {f.name for f in fields(cls)}
            if unknown:
                raise UsageError(f"unknown config keys: {sorted(unknown)}")
        for f in fields(cls):
            value = getattr(args, f.name, None)
            if value is not None:
                base[f.name] = value
        return cls(**base)

    def system(self) -> SystemConfig:
        missing = [n for n in ("K", "N", "U") if getattr(self, n) is None]
        if missing:
            raise UsageError(f"missing required parameters: {', '.join(missing)}")
        return SystemConfig(int(self.K), int(self.N), int(self.U))


def parse_range(text: str) -> list[int]:
    """'3', '1-4', '1..4' or '1,2,5' -> list of ints."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        sep = ".." if ".." in part else ("-" if "-" in part[1:] else None)
        if sep:
            lo, hi = (int(x) for x in part.split(sep, 1))
            if hi < lo:
                raise UsageError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out or min(out) < 1:
        raise UsageError(f"range {text!r} must contain positive integers")
    return out


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _table(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols}
    lines = ["  ".join(c.rjust(widths[c]) for c in cols)]
    lines += ["  ".join(str(r[c]).rjust(widths[c]) for c in cols) for r in rows]
    return "\n".join(lines) + "\n"


def cmd_capacity(args) -> int:
    try:
        Ks, Ns, Us = parse_range(args.K), parse_range(args.N), parse_range(args.U)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = []
    for K in Ks:
        for N in Ns:
            for U in Us:
                config = SystemConfig(K, N, U)
                S = config.S
                Q = query_cardinality(S, K)
                C = capacity(S, K)
                rows.append(
                    {
                        "K": K,
                        "N": N,
                        "U": U,
                        "S": S,
                        "L": block_length(S, K),
                        "Q": Q,
                        "D": S * Q,
                        "C": str(C),
                        "C_decimal": f"{float(C):.6f}",
                    }
                )
    if args.format == "json":
        text = json.dumps(rows, indent=2, sort_keys=True) + "\n"
    elif args.format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        text = _table(rows)
    _emit(text, args.out)
    return EXIT_OK


def _read_messages(path: str, K: int, L: int) -> MessageSet:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
        hexes = data["messages"] if isinstance(data, dict) else data
    except json.JSONDecodeError:
        hexes = [line.strip() for line in text.splitlines() if line.strip()]
    if len(hexes) != K:
        raise UsageError(f"{path} holds {len(hexes)} messages, expected K={K}")
    return MessageSet.from_hex(hexes, L)


def cmd_run(args) -> int:
    exp = ExperimentConfig.from_args(args)
    config = exp.system()
    if exp.theta is None:
        raise UsageError("--theta is required")
    if exp.seed is None:
        raise UsageError("--seed is required")
    seed = int(exp.seed)
    if exp.messages:
        messages = MessageSet.from_hex(exp.messages, config.L)
    elif getattr(args, "messages_file", None):
        messages = _read_messages(args.messages_file, config.K, config.L)
    else:
        messages = MessageSet.random(config.K, block_length(config.S, config.K, limit=10**6), random.Random(seed))

    if exp.routing == "uniform":
        routing = "uniform"
    elif exp.routing == "file":
        table = exp.routing_table
        if getattr(args, "routing_file", None):
            table = json.loads(Path(args.routing_file).read_text())
        if table is None:
            raise UsageError("--routing file needs --routing-file or routing_table in the config")
        routing = [int(x) for x in table]
    else:
        raise UsageError(f"unknown routing policy {exp.routing!r}")

    t = run_retrieval(config, int(exp.theta), messages, seed, routing)
    if exp.out:
        Path(exp.out).write_text(json.dumps(t.to_dict(), sort_keys=True, indent=1) + "\n")
    match = t.rate == t.capacity
    print(
        f"L={t.L} D={t.D} rate={t.rate} capacity={t.capacity} "
        f"match={'yes' if match else 'no'} correct={'yes' if t.correct else 'no'}"
    )
    return EXIT_OK if match and t.correct else EXIT_FAIL


def cmd_attack(args) -> int:
    try:
        t = Transcript.from_dict(json.loads(Path(args.transcript).read_text()))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: cannot read transcript {args.transcript}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    view = observed_sets(t, args.database)
    catalog = SingletonCatalog(t.config.K, t.L)
    if args.mode == "single":
        users = [u for u, _ in view]
        user = args.user if args.user is not None else users[0]
        if user not in users:
            raise UsageError(f"user {user} presented nothing to database {args.database}; saw {users}")
        elements = [el for u, q in view if u == user for el in q]
        report = infer_single_user(elements, catalog)
    else:
        report = infer_cross_user(view, catalog)
    payload = report.to_dict() | {"theta": t.theta, "mode": args.mode, "database": args.database}
    if args.out:
        Path(args.out).write_text(canonical_json(payload) + "\n")
    verdict = "tie" if report.tie else report.verdict
    print(f"verdict={verdict} theta={t.theta} beta={list(report.beta)} comparisons={report.comparisons}")
    return EXIT_OK


def cmd_privacy(args) -> int:
    K, S = args.K, args.S
    if args.mode == "sampled" and args.seed is None:
        raise UsageError("--seed is required in sampled mode")
    ok = True
    lines = []
    for source in range(1, S + 1):
        try:
            dists = [
                enumerate_distribution(K, S, source, theta, args.mode, samples=args.samples, seed=args.seed or 0)
                for theta in range(1, K + 1)
            ]
        except EnumerationBoundError as exc:
            raise UsageError(str(exc)) from None
        if args.mode == "exhaustive":
            mi = mutual_information_with_theta(dists)
            same = all(d.support == dists[0].support for d in dists)
            ok &= same and mi == 0
            mi_text = "0 exact" if mi == 0 else f"{mi:.6f} bits"
            lines.append(f"source={source} MI={mi_text}, distributions identical: {'yes' if same else 'no'}")
        else:
            tv = max(total_variation(dists[0], d) for d in dists)
            ok &= tv < args.tv_threshold
            lines.append(f"source={source} max TV distance={float(tv):.4f} (threshold {args.tv_threshold})")
    if K == 1:
        lines.append("K=1: a single message, nothing to hide")
    print("\n".join(lines))
    print(f"private={'yes' if ok else 'no'}")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mupir", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="capacity table over a grid of K, N, U")
    p.add_argument("--K", default="1-4")
    p.add_argument("--N", default="1")
    p.add_argument("--U", default="1-4")
    p.add_argument("--format", choices=["table", "csv", "json"], default="table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("run", help="simulate one retrieval and write its transcript")
    p.add_argument("--config", help="JSON file with the same keys as the flags")
    p.add_argument("--K", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--U", type=int)
    p.add_argument("--theta", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--routing", choices=["uniform", "file"])
    p.add_argument("--routing-file", dest="routing_file", help="JSON list: database for each helper user")
    p.add_argument("--messages-file", dest="messages_file", help="one hex string per message")
    p.add_argument("--out")
    p.add_argument("--format", choices=["json"])
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("attack", help="run a brute-force inference attack on a transcript")
    p.add_argument("--transcript", required=True)
    p.add_argument("--mode", choices=["single", "cross"], default="cross")
    p.add_argument("--database", type=int, default=1)
    p.add_argument("--user", type=int, help="single mode: which presenting user to analyze")
    p.add_argument("--out")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("privacy", help="check that per-source queries are independent of theta")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--S", type=int, required=True)
    p.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--tv-threshold", dest="tv_threshold", type=float, default=0.05)
    p.set_defaults(func=cmd_privacy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigurationError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
