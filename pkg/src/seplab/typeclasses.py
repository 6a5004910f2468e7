"""Method-of-types machinery: empirical types, type classes, permutations.

A *type* of a length-n sequence is its empirical distribution, always exact
(rational mode).  A *type class* is the set of sequences sharing a type; its
cardinality is the multinomial coefficient n! / prod_y (n q(y))!.  Uniform
sampling from a type class shuffles the canonical (sorted) member, and full
enumeration walks distinct permutations in lexicographic order.

Sequences are tuples over a distribution's alphabet.  Epsilon-typicality uses
the letterwise criterion: x is epsilon-typical for p when
|type_x(a) - p(a)| <= epsilon for every letter a.  Comparisons mix Fractions
and floats, which Python evaluates exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .probability import Distribution, as_fraction

__all__ = [
    "Permutation",
    "TypeClassHandle",
    "UniformSourceSpec",
    "type_of",
    "base_blocklength",
    "type_class",
    "achievable_types",
    "achievable_type_count",
    "sample_uniform",
    "is_epsilon_typical",
]

ENUMERATION_BUDGET = 10**6


# ---------------------------------------------------------------------------
# permutations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Permutation:
    """A bijection on positions 0..n-1; ``apply`` sends x to (x[image[0]], ...)."""

    image: tuple

    def __post_init__(self):
        n = len(self.image)
        if sorted(self.image) != list(range(n)):
            raise ValueError("image is not a bijection on 0..n-1")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Permutation":
        return cls(tuple(int(i) for i in rng.permutation(n)))

    def apply(self, seq: Sequence) -> tuple:
        if len(seq) != len(self.image):
            raise ValueError("length mismatch")
        return tuple(seq[i] for i in self.image)

    def __len__(self):
        return len(self.image)


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


def type_of(seq: Sequence, alphabet: Sequence) -> Distribution:
    """Empirical distribution of ``seq`` on ``alphabet`` (exact)."""
    symbols = tuple(alphabet)
    n = len(seq)
    if n == 0:
        raise ValueError("empty sequence has no type")
    counts = {s: 0 for s in symbols}
    for letter in seq:
        if letter not in counts:
            raise ValueError(f"letter {letter!r} outside the alphabet")
        counts[letter] += 1
    return Distribution.rational(symbols, tuple(Fraction(counts[s], n) for s in symbols))


def base_blocklength(p: Distribution) -> int:
    """Least n0 with n0 * p(a) integral for every letter a.

    Equals the lcm of the mass denominators.  Only defined in rational mode.
    """
    if not p.is_rational():
        raise ValueError("base_blocklength requires a rational-mode distribution")
    n0 = 1
    for m in p.masses:
        n0 = math.lcm(n0, m.denominator)
    return n0


@dataclass(frozen=True)
class UniformSourceSpec:
    """A rational pmf together with its minimal integral blocklength.

    Admissible working blocklengths are the positive multiples of ``n0``.
    """

    law: Distribution
    n0: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n0", base_blocklength(self.law))

    def is_admissible(self, n: int) -> bool:
        return n > 0 and n % self.n0 == 0

    def require_admissible(self, n: int) -> None:
        if not self.is_admissible(n):
            raise ValueError(
                f"blocklength {n} is not a positive multiple of n0={self.n0}"
            )

    def counts_at(self, n: int) -> tuple:
        self.require_admissible(n)
        return tuple(int(m * n) for m in self.law.masses)


# ---------------------------------------------------------------------------
# type classes
# ---------------------------------------------------------------------------


def _multinomial(n: int, counts: Sequence[int]) -> int:
    value = math.factorial(n)
    for c in counts:
        value //= math.factorial(c)
    return value


@dataclass(frozen=True)
class TypeClassHandle:
    """All length-n sequences with letter counts ``counts`` over ``alphabet``."""

    alphabet: tuple
    n: int
    counts: tuple

    def __post_init__(self):
        if len(self.counts) != len(self.alphabet):
            raise ValueError("counts/alphabet length mismatch")
        if any(c < 0 for c in self.counts) or sum(self.counts) != self.n:
            raise ValueError("counts must be non-negative and sum to n")

    @property
    def q(self) -> Distribution:
        return Distribution.rational(
            self.alphabet, tuple(Fraction(c, self.n) for c in self.counts)
        )

    @property
    def cardinality(self) -> int:
        return _multinomial(self.n, self.counts)

    def canonical(self) -> tuple:
        """Lexicographically smallest member: letters in alphabet order."""
        out = []
        for letter, c in zip(self.alphabet, self.counts):
            out.extend([letter] * c)
        return tuple(out)

    def contains(self, seq: Sequence) -> bool:
        if len(seq) != self.n:
            return False
        try:
            t = type_of(seq, self.alphabet)
        except ValueError:
            return False
        return tuple(int(m * self.n) for m in t.masses) == self.counts

    def members(self, budget: int = ENUMERATION_BUDGET) -> Iterator[tuple]:
        """Yield all members in lexicographic order (alphabet order on letters)."""
        if self.cardinality > budget:
            raise ValueError(
                f"type class cardinality {self.cardinality} exceeds the "
                f"enumeration budget {budget}"
            )
        rank = {letter: i for i, letter in enumerate(self.alphabet)}
        current = [rank[letter] for letter in self.canonical()]
        n = self.n
        while True:
            yield tuple(self.alphabet[i] for i in current)
            # next distinct permutation in lexicographic order
            i = n - 2
            while i >= 0 and current[i] >= current[i + 1]:
                i -= 1
            if i < 0:
                return
            j = n - 1
            while current[j] <= current[i]:
                j -= 1
            current[i], current[j] = current[j], current[i]
            current[i + 1 :] = reversed(current[i + 1 :])

    def member_array(self, budget: int = ENUMERATION_BUDGET) -> np.ndarray:
        """Members as an (cardinality, n) array of alphabet indices."""
        rank = {letter: i for i, letter in enumerate(self.alphabet)}
        rows = [[rank[letter] for letter in member] for member in self.members(budget)]
        return np.array(rows, dtype=np.int64)

    def sample(self, rng: np.random.Generator) -> tuple:
        base = self.canonical()
        order = rng.permutation(self.n)
        return tuple(base[i] for i in order)


def type_class(n: int, q: Distribution) -> TypeClassHandle:
    """Handle for the type class of pmf ``q`` at blocklength ``n``.

    ``q`` must be rational with n*q(a) integral for every letter.
    """
    if n <= 0:
        raise ValueError("blocklength must be positive")
    if not q.is_rational():
        raise ValueError("type_class requires a rational-mode pmf")
    counts = []
    for m in q.masses:
        scaled = m * n
        if scaled.denominator != 1:
            raise ValueError(f"type {tuple(q.masses)} is not achievable at n={n}")
        counts.append(int(scaled))
    return TypeClassHandle(q.alphabet, n, tuple(counts))


def achievable_type_count(n: int, alphabet_size: int) -> int:
    """Number of types at blocklength n: C(n + |A| - 1, |A| - 1)."""
    return math.comb(n + alphabet_size - 1, alphabet_size - 1)


def achievable_types(n: int, alphabet: Sequence) -> list[Distribution]:
    """All pmfs with denominators dividing n, in lexicographic mass order."""
    symbols = tuple(alphabet)
    k = len(symbols)
    if n <= 0 or k == 0:
        raise ValueError("need a positive blocklength and non-empty alphabet")
    out: list[Distribution] = []

    def fill(prefix: list[int], remaining: int, slots: int) -> None:
        if slots == 1:
            out.append(
                Distribution.rational(
                    symbols, tuple(Fraction(c, n) for c in prefix + [remaining])
                )
            )
            return
        for c in range(remaining + 1):
            fill(prefix + [c], remaining - c, slots - 1)

    fill([], n, k)
    return out


def sample_uniform(handle: TypeClassHandle, rng: np.random.Generator) -> tuple:
    """Uniform draw from a type class (shuffle of the canonical member)."""
    return handle.sample(rng)


def is_epsilon_typical(seq: Sequence, p: Distribution, epsilon) -> bool:
    """Letterwise typicality: |type(a) - p(a)| <= epsilon for every letter a."""
    eps = epsilon if isinstance(epsilon, Fraction) else as_fraction(epsilon)
    if eps < 0:
        raise ValueError("epsilon must be non-negative")
    t = type_of(seq, p.alphabet)
    for tm, pm in zip(t.masses, p.masses):
        if abs(tm - as_fraction(pm)) > eps:
            return False
    return True


def typicality_count_bounds(n: int, p: Distribution, epsilon) -> list[tuple[int, int]]:
    """Per-letter [lo, hi] count windows equivalent to epsilon-typicality."""
    eps = as_fraction(epsilon)
    if eps < 0:
        raise ValueError("epsilon must be non-negative")
    bounds = []
    for m in p.masses:
        pm = as_fraction(m)
        lo = max(0, math.ceil(n * (pm - eps)))
        hi = min(n, math.floor(n * (pm + eps)))
        bounds.append((lo, hi))
    return bounds
