"""Shared domain types and closed-form capacity formulas.

All rate and capacity arithmetic is done with :class:`fractions.Fraction`
so that "rate == capacity" is an exact comparison.

Indices exposed to callers (messages, positions, sources, databases, users)
are 1-based throughout the package.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import NamedTuple, Sequence

Rational = Fraction

# generate_plan refuses blocks longer than this
MAX_BLOCK_LENGTH = 10**6


class ConfigurationError(ValueError):
    """Invalid system parameters (K, N, U, theta, ...)."""


class ProtocolViolation(ValueError):
    """A query or answer addresses something that does not exist."""


class IncompleteTranscriptError(ValueError):
    """An answer needed for decoding is missing."""


class InvariantViolation(RuntimeError):
    """Internal bookkeeping is inconsistent; indicates a bug."""


@dataclass(frozen=True)
class SystemConfig:
    """K messages replicated on N databases, U cooperating users."""

    K: int
    N: int
    U: int

    def __post_init__(self):
        for name in ("K", "N", "U"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigurationError(f"{name} must be an integer >= 1, got {value!r}")

    @property
    def S(self) -> int:
        return source_count(self.N, self.U)

    @property
    def L(self) -> int:
        return block_length(self.S, self.K)


class BitRef(NamedTuple):
    """One stored bit: (message, position), both 1-based."""

    message: int
    position: int


@dataclass(frozen=True)
class QueryElement:
    """A k-sum: XOR of one bit from each of k distinct messages."""

    id: int
    terms: frozenset

    def __post_init__(self):
        if not self.terms:
            raise ProtocolViolation(f"query element {self.id} has no terms")
        if len({t.message for t in self.terms}) != len(self.terms):
            raise ProtocolViolation(
                f"query element {self.id} references a message more than once"
            )

    @property
    def round(self) -> int:
        return len(self.terms)

    @property
    def messages(self) -> frozenset:
        return frozenset(t.message for t in self.terms)

    def sorted_terms(self) -> list[BitRef]:
        return sorted(self.terms)


@dataclass(frozen=True)
class MessageSet:
    """K equal-length bit vectors; ``messages[m - 1][p - 1]`` is bit p of message m."""

    messages: tuple

    def __post_init__(self):
        if not self.messages:
            raise ConfigurationError("a message set needs at least one message")
        lengths = {len(m) for m in self.messages}
        if len(lengths) != 1:
            raise ConfigurationError(f"messages have unequal lengths {sorted(lengths)}")
        for m in self.messages:
            if any(b not in (0, 1) for b in m):
                raise ConfigurationError("message bits must be 0 or 1")

    @property
    def K(self) -> int:
        return len(self.messages)

    @property
    def L(self) -> int:
        return len(self.messages[0])

    def bit(self, ref: BitRef) -> int:
        if not (1 <= ref.message <= self.K and 1 <= ref.position <= self.L):
            raise ProtocolViolation(f"{ref} is outside K={self.K}, L={self.L}")
        return self.messages[ref.message - 1][ref.position - 1]

    def message(self, index: int) -> tuple:
        return self.messages[index - 1]

    @classmethod
    def random(cls, K: int, L: int, rng: random.Random) -> "MessageSet":
        return cls(tuple(tuple(rng.getrandbits(1) for _ in range(L)) for _ in range(K)))

    @classmethod
    def from_hex(cls, hex_strings: Sequence[str], L: int) -> "MessageSet":
        return cls(tuple(hex_to_bits(h, L) for h in hex_strings))

    def to_hex(self) -> list[str]:
        return [bits_to_hex(m) for m in self.messages]


def bits_to_hex(bits: Sequence[int]) -> str:
    """Hex string with position 1 as the most significant bit.

    The vector is right-padded with zeros to a whole number of nibbles.
    """
    if not bits:
        return ""
    pad = (-len(bits)) % 4
    value = 0
    for b in list(bits) + [0] * pad:
        value = (value << 1) | b
    return format(value, f"0{(len(bits) + pad) // 4}x")


def hex_to_bits(text: str, L: int) -> tuple:
    text = text.strip().lower()
    if text.startswith("0x"):
        text = text[2:]
    if len(text) != (L + 3) // 4:
        raise ConfigurationError(f"hex string of {len(text)} digits cannot hold exactly L={L} bits")
    value = int(text, 16) if text else 0
    width = len(text) * 4
    bits = tuple((value >> (width - 1 - i)) & 1 for i in range(width))
    if any(bits[L:]):
        raise ConfigurationError("nonzero padding bits after position L")
    return bits[:L]


def source_count(N: int, U: int) -> int:
    """Number of information sources S = N + U - 1."""
    if N < 1 or U < 1:
        raise ConfigurationError(f"need N >= 1 and U >= 1, got N={N}, U={U}")
    return N + U - 1


def _check_sk(S: int, K: int) -> None:
    if S < 1 or K < 1:
        raise ConfigurationError(f"need S >= 1 and K >= 1, got S={S}, K={K}")


def capacity(S: int, K: int) -> Fraction:
    """(1 + 1/S + ... + 1/S^(K-1))^-1 as an exact fraction."""
    _check_sk(S, K)
    if S == 1:
        return Fraction(1, K)
    return Fraction(S ** (K - 1) * (S - 1), S**K - 1)


def query_cardinality(S: int, K: int) -> int:
    """Elements per source: sum over k of C(K, k) * (S-1)^(k-1), with 0^0 = 1."""
    _check_sk(S, K)
    # Python already evaluates 0 ** 0 as 1
    return sum(comb(K, k) * (S - 1) ** (k - 1) for k in range(1, K + 1))


def block_length(S: int, K: int, limit: int | None = None) -> int:
    """Bits per message for one capacity-achieving block, S^K.

    ``limit`` turns an over-large block into an ``OverflowError`` instead
    of an allocation attempt.
    """
    _check_sk(S, K)
    L = S**K
    if limit is not None and L > limit:
        raise OverflowError(f"block length S^K = {S}^{K} exceeds the limit {limit}")
    return L


def rate_of(L: int, D: int) -> Fraction:
    if D <= 0:
        raise ConfigurationError("download size D must be positive")
    if L < 1:
        raise ConfigurationError("message length L must be positive")
    return Fraction(L, D)
