"""Channel kernels, coder pairs, and black-box composition.

A kernel maps input blocks to random output blocks.  Three realizations are
provided: memoryless per-letter kernels (:class:`Dmc`), the half-lying channel
(block-structured: honest with probability 1/2, independent uniform output
otherwise), and compositions encoder -> kernel -> decoder viewed as a single
black box.  Kernels expose sampling always and exact per-block output
distributions when the output space is small enough to enumerate
(|space|^n <= EXACT_STATE_LIMIT).

Rational-mode kernels (Fraction entries) keep exact arithmetic through
composition; float kernels stay float.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .probability import Distribution, as_fraction

__all__ = [
    "Dmc",
    "HalfLyingChannel",
    "ComposedChannel",
    "CompoundChannel",
    "CoderPair",
    "bsc",
    "identity_channel",
    "half_lying_channel",
    "compose",
]

EXACT_STATE_LIMIT = 4096


def _require_exact_space(size: int, n: int) -> None:
    if size**n > EXACT_STATE_LIMIT:
        raise ValueError(
            f"exact mode needs |alphabet|^n <= {EXACT_STATE_LIMIT}; "
            f"got {size}^{n}"
        )


class Dmc:
    """Discrete memoryless kernel given by a row-stochastic per-letter matrix."""

    def __init__(self, input_alphabet: Sequence, output_alphabet: Sequence, rows):
        self.input_alphabet = tuple(input_alphabet)
        self.output_alphabet = tuple(output_alphabet)
        self.rational = all(
            isinstance(v, (int, Fraction, str)) for row in rows for v in row
        )
        if self.rational:
            self.rows_exact = tuple(
                tuple(as_fraction(v) for v in row) for row in rows
            )
            for row in self.rows_exact:
                if sum(row) != 1 or any(v < 0 for v in row):
                    raise ValueError("rows must be pmfs")
        else:
            self.rows_exact = None
        self.rows = np.array(
            [[float(v) for v in row] for row in rows], dtype=float
        )
        if self.rows.shape != (len(self.input_alphabet), len(self.output_alphabet)):
            raise ValueError("matrix shape must be |input| x |output|")
        if np.any(self.rows < 0) or np.max(np.abs(self.rows.sum(axis=1) - 1)) > 1e-12:
            raise ValueError("rows must be pmfs")
        self._cum = np.cumsum(self.rows, axis=1)
        self._in_index = {s: i for i, s in enumerate(self.input_alphabet)}

    # -- sampling -----------------------------------------------------------

    def sample(self, block: Sequence, rng: np.random.Generator) -> tuple:
        idx = np.array([self._in_index[s] for s in block], dtype=np.int64)
        out = self.sample_indices(idx, rng)
        return tuple(self.output_alphabet[j] for j in out)

    def sample_indices(self, idx: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Vectorized sampling on alphabet indices (any array shape)."""
        u = rng.random(idx.shape)
        cum = self._cum[idx]  # (..., |output|)
        return (u[..., None] < cum).argmax(axis=-1)

    # -- exact mode ---------------------------------------------------------

    def letter_prob(self, x, y):
        i = self.input_alphabet.index(x)
        j = self.output_alphabet.index(y)
        if self.rows_exact is not None:
            return self.rows_exact[i][j]
        return self.rows[i, j]

    def output_distribution(self, block: Sequence) -> Distribution:
        """Exact output law over output blocks (tuples)."""
        n = len(block)
        if n == 0:
            raise ValueError("empty block")
        _require_exact_space(len(self.output_alphabet), n)
        idx = [self._in_index[s] for s in block]
        outputs = list(itertools.product(self.output_alphabet, repeat=n))
        if self.rows_exact is not None:
            masses = []
            for out in outputs:
                m = Fraction(1)
                for i, y in zip(idx, out):
                    m *= self.rows_exact[i][self.output_alphabet.index(y)]
                masses.append(m)
            return Distribution(tuple(outputs), tuple(masses), "rational")
        masses_f = []
        for out in outputs:
            m = 1.0
            for i, y in zip(idx, out):
                m *= self.rows[i, self.output_alphabet.index(y)]
            masses_f.append(m)
        return Distribution(tuple(outputs), tuple(masses_f), "float")


class HalfLyingChannel:
    """Binary block channel: emits the input with probability 1/2, otherwise a
    fresh uniform block independent of the input.

    P(y | x) = 1/2 * 1[y = x] + 1/2 * 2^-n, so the exact-match frequency for
    any input block is 1/2 + 1/2 * 2^-n.
    """

    def __init__(self, n: int | None = None):
        self.input_alphabet = (0, 1)
        self.output_alphabet = (0, 1)
        self.n = n

    def _check(self, block: Sequence) -> None:
        if len(block) == 0:
            raise ValueError("empty block")
        if self.n is not None and len(block) != self.n:
            raise ValueError(f"channel pinned to blocklength {self.n}")
        if any(s not in (0, 1) for s in block):
            raise ValueError("binary alphabet required")

    def sample(self, block: Sequence, rng: np.random.Generator) -> tuple:
        self._check(block)
        if rng.random() < 0.5:
            return tuple(block)
        return tuple(int(b) for b in rng.integers(0, 2, size=len(block)))

    def sample_indices(self, idx: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Vectorized over axis 0 = independent blocks."""
        if idx.ndim != 2 or idx.shape[1] == 0:
            raise ValueError("expected a (trials, n) index array")
        trials, n = idx.shape
        honest = rng.random(trials) < 0.5
        fresh = rng.integers(0, 2, size=(trials, n))
        return np.where(honest[:, None], idx, fresh)

    def output_distribution(self, block: Sequence) -> Distribution:
        self._check(block)
        n = len(block)
        _require_exact_space(2, n)
        base = Fraction(1, 2) * Fraction(1, 2**n)
        outputs = list(itertools.product((0, 1), repeat=n))
        masses = [
            base + (Fraction(1, 2) if out == tuple(block) else Fraction(0))
            for out in outputs
        ]
        return Distribution(tuple(outputs), tuple(masses), "rational")

    def match_probability(self, n: int) -> Fraction:
        if n <= 0:
            raise ValueError("blocklength must be positive")
        return Fraction(1, 2) + Fraction(1, 2) * Fraction(1, 2**n)


@dataclass(frozen=True)
class CoderPair:
    """Deterministic block encoder/decoder around a kernel.

    ``encode`` maps source blocks to kernel-input blocks; ``decode`` maps
    kernel-output blocks to reproduction blocks.  Randomized coders are
    realized upstream as seeded draws of deterministic pairs (shared
    randomness), so every CoderPair instance is deterministic.
    """

    encode: Callable[[tuple], tuple]
    decode: Callable[[tuple], tuple]
    source_alphabet: tuple
    repro_alphabet: tuple

    @classmethod
    def identity(cls, alphabet: Sequence) -> "CoderPair":
        symbols = tuple(alphabet)
        return cls(lambda x: tuple(x), lambda y: tuple(y), symbols, symbols)


class ComposedChannel:
    """The black box decode(kernel(encode(x))) seen as a channel X^n -> Y^n."""

    def __init__(self, coder: CoderPair, kernel):
        self.coder = coder
        self.kernel = kernel
        self.input_alphabet = coder.source_alphabet
        self.output_alphabet = coder.repro_alphabet

    def sample(self, block: Sequence, rng: np.random.Generator) -> tuple:
        inner = self.coder.encode(tuple(block))
        received = self.kernel.sample(inner, rng)
        return tuple(self.coder.decode(tuple(received)))

    def output_distribution(self, block: Sequence) -> Distribution:
        inner = self.coder.encode(tuple(block))
        law = self.kernel.output_distribution(inner)
        n = len(block)
        _require_exact_space(len(self.output_alphabet), n)
        outputs = list(itertools.product(self.output_alphabet, repeat=n))
        index = {out: k for k, out in enumerate(outputs)}
        zero = Fraction(0) if law.mode == "rational" else 0.0
        masses = [zero] * len(outputs)
        for received, mass in zip(law.alphabet, law.masses):
            decoded = tuple(self.coder.decode(tuple(received)))
            masses[index[decoded]] += mass
        return Distribution(tuple(outputs), tuple(masses), law.mode)

    def block_matrix(self, n: int):
        """Exact (|X|^n, |Y|^n) transition matrix; rows in product order."""
        _require_exact_space(len(self.input_alphabet), n)
        inputs = list(itertools.product(self.input_alphabet, repeat=n))
        rows = []
        for x in inputs:
            law = self.output_distribution(x)
            rows.append(law.masses)
        return inputs, list(itertools.product(self.output_alphabet, repeat=n)), rows


@dataclass(frozen=True)
class CompoundChannel:
    """A finite family of kernels sharing input and output alphabets."""

    kernels: tuple

    def __post_init__(self):
        if not self.kernels:
            raise ValueError("compound set must be non-empty")
        first = self.kernels[0]
        for k in self.kernels:
            if (
                k.input_alphabet != first.input_alphabet
                or k.output_alphabet != first.output_alphabet
            ):
                raise ValueError("kernels must share alphabets")

    @property
    def input_alphabet(self):
        return self.kernels[0].input_alphabet

    @property
    def output_alphabet(self):
        return self.kernels[0].output_alphabet

    def __len__(self):
        return len(self.kernels)

    def __iter__(self):
        return iter(self.kernels)


# ---------------------------------------------------------------------------
# builtins and composition
# ---------------------------------------------------------------------------


def bsc(p) -> Dmc:
    """Binary symmetric channel with crossover probability p.

    Rational inputs (int, Fraction, "num/den" or decimal string) build an
    exact kernel; Python floats build a float kernel.
    """
    if isinstance(p, (int, Fraction, str)):
        q = as_fraction(p)
        if not 0 <= q <= 1:
            raise ValueError("crossover probability must lie in [0, 1]")
        return Dmc((0, 1), (0, 1), [[1 - q, q], [q, 1 - q]])
    pf = float(p)
    if not 0.0 <= pf <= 1.0:
        raise ValueError("crossover probability must lie in [0, 1]")
    return Dmc((0, 1), (0, 1), [[1.0 - pf, pf], [pf, 1.0 - pf]])


def identity_channel(alphabet: Sequence = (0, 1)) -> Dmc:
    symbols = tuple(alphabet)
    rows = [[1 if i == j else 0 for j in range(len(symbols))] for i in range(len(symbols))]
    return Dmc(symbols, symbols, rows)


def half_lying_channel(n: int | None = None) -> HalfLyingChannel:
    return HalfLyingChannel(n)


def compose(coder: CoderPair, kernel) -> ComposedChannel:
    """View encode -> kernel -> decode as one channel."""
    return ComposedChannel(coder, kernel)


def repetition_coder(factor: int) -> CoderPair:
    """Binary repetition encoder with majority decoding (odd factor)."""
    if factor < 1 or factor % 2 == 0:
        raise ValueError("repetition factor must be odd and positive")

    def encode(x: tuple) -> tuple:
        out = []
        for bit in x:
            out.extend([bit] * factor)
        return tuple(out)

    def decode(received: tuple) -> tuple:
        if len(received) % factor:
            raise ValueError("received length is not a repetition multiple")
        out = []
        for k in range(0, len(received), factor):
            chunk = received[k : k + factor]
            out.append(1 if sum(chunk) * 2 > factor else 0)
        return tuple(out)

    return CoderPair(encode, decode, (0, 1), (0, 1))
