"""Finite probability distributions with dual numeric modes.

Two currencies run through the package.  Rational mode keeps every mass as a
``fractions.Fraction`` so that enumeration-based results (probabilities,
cardinalities, total-variation distances) are exact.  Float mode uses IEEE
doubles and is the currency of iterative optimization and Monte Carlo.

Information quantities are always in bits (logs base 2) with the convention
``0 * log 0 = 0``.  For rational-mode identities that must hold *exactly*
(e.g. the Kullback-Leibler chain decomposition), values are represented as
formal rational combinations of ``log2`` of primes; see :class:`ExactLogValue`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Distribution",
    "JointDistribution",
    "ExactLogValue",
    "entropy",
    "entropy_exact",
    "kl_divergence",
    "kl_divergence_exact",
    "mutual_information",
    "information_density",
    "entropy_bits",
    "mi_bits",
]

_FLOAT_SUM_TOL = 1e-12

Mass = Fraction | float


def as_fraction(value: object) -> Fraction:
    """Coerce ints, Fractions, and ``"num/den"`` / decimal strings to Fraction.

    Floats are interpreted with decimal semantics (``0.3`` means 3/10, not the
    nearest binary double), which keeps config-supplied constants exact.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r} is not rational")
        return Fraction(repr(value))
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def _fraction_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Distribution:
    """A pmf on a finite ordered alphabet.

    ``masses[i]`` is the probability of ``alphabet[i]``.  In rational mode the
    masses are Fractions and must sum to exactly 1; in float mode they must
    sum to 1 within 1e-12.  Alphabet symbols may be any hashable values
    (letters, integers, or tuples for block alphabets).
    """

    alphabet: tuple
    masses: tuple
    mode: str

    def __post_init__(self):
        if self.mode not in ("rational", "float"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(self.alphabet) != len(self.masses):
            raise ValueError("alphabet and masses must have equal length")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("alphabet symbols must be distinct")
        if self.mode == "rational":
            if not all(isinstance(m, Fraction) for m in self.masses):
                raise TypeError("rational mode requires Fraction masses")
            if any(m < 0 for m in self.masses):
                raise ValueError("negative mass")
            if sum(self.masses) != 1:
                raise ValueError("rational masses must sum to exactly 1")
        else:
            if any(m < 0 for m in self.masses):
                raise ValueError("negative mass")
            if abs(math.fsum(self.masses) - 1.0) > _FLOAT_SUM_TOL:
                raise ValueError("float masses must sum to 1 within 1e-12")

    # -- constructors -------------------------------------------------------

    @classmethod
    def rational(cls, alphabet: Iterable, masses: Iterable) -> "Distribution":
        return cls(tuple(alphabet), tuple(as_fraction(m) for m in masses), "rational")

    @classmethod
    def from_floats(cls, alphabet: Iterable, masses: Iterable) -> "Distribution":
        return cls(tuple(alphabet), tuple(float(m) for m in masses), "float")

    @classmethod
    def uniform(cls, alphabet: Iterable) -> "Distribution":
        symbols = tuple(alphabet)
        if not symbols:
            raise ValueError("empty alphabet")
        return cls(symbols, tuple(Fraction(1, len(symbols)) for _ in symbols), "rational")

    @classmethod
    def point_mass(cls, alphabet: Iterable, symbol) -> "Distribution":
        symbols = tuple(alphabet)
        return cls(
            symbols,
            tuple(Fraction(1) if s == symbol else Fraction(0) for s in symbols),
            "rational",
        )

    # -- accessors ----------------------------------------------------------

    def index(self, symbol) -> int:
        try:
            return self.alphabet.index(symbol)
        except ValueError:
            raise KeyError(f"symbol {symbol!r} not in alphabet") from None

    def mass(self, symbol) -> Mass:
        return self.masses[self.index(symbol)]

    def as_floats(self) -> np.ndarray:
        return np.array([float(m) for m in self.masses], dtype=float)

    @property
    def support(self) -> tuple:
        return tuple(s for s, m in zip(self.alphabet, self.masses) if m > 0)

    def is_rational(self) -> bool:
        return self.mode == "rational"

    def to_float_mode(self) -> "Distribution":
        if self.mode == "float":
            return self
        return Distribution(self.alphabet, tuple(float(m) for m in self.masses), "float")

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        if self.mode == "rational":
            masses = [_fraction_str(m) for m in self.masses]
        else:
            masses = [float(m) for m in self.masses]
        return {"alphabet": list(self.alphabet), "masses": masses, "mode": self.mode}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Distribution":
        alphabet = tuple(_freeze_symbol(s) for s in obj["alphabet"])
        mode = obj["mode"]
        if mode == "rational":
            return cls(alphabet, tuple(as_fraction(m) for m in obj["masses"]), "rational")
        if mode == "float":
            return cls(alphabet, tuple(float(m) for m in obj["masses"]), "float")
        raise ValueError(f"unknown mode {mode!r}")

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Distribution":
        return cls.from_json_dict(json.loads(text))


def _freeze_symbol(symbol):
    # JSON round-trips tuples as lists; restore hashability.
    if isinstance(symbol, list):
        return tuple(_freeze_symbol(s) for s in symbol)
    return symbol


@dataclass(frozen=True)
class JointDistribution:
    """A pmf on a product alphabet, stored row-major."""

    row_alphabet: tuple
    col_alphabet: tuple
    masses: tuple  # tuple of rows, each a tuple of masses
    mode: str

    def __post_init__(self):
        if len(self.masses) != len(self.row_alphabet):
            raise ValueError("mass matrix shape mismatch")
        for row in self.masses:
            if len(row) != len(self.col_alphabet):
                raise ValueError("mass matrix shape mismatch")
        # reuse Distribution validation on the flattened cells
        self.flatten()

    @classmethod
    def rational(cls, rows: Iterable, cols: Iterable, masses) -> "JointDistribution":
        return cls(
            tuple(rows),
            tuple(cols),
            tuple(tuple(as_fraction(m) for m in row) for row in masses),
            "rational",
        )

    @classmethod
    def from_floats(cls, rows: Iterable, cols: Iterable, masses) -> "JointDistribution":
        return cls(
            tuple(rows),
            tuple(cols),
            tuple(tuple(float(m) for m in row) for row in masses),
            "float",
        )

    @classmethod
    def product(cls, p: Distribution, q: Distribution) -> "JointDistribution":
        if p.mode != q.mode:
            raise ValueError("mode mismatch between factors")
        masses = tuple(tuple(pm * qm for qm in q.masses) for pm in p.masses)
        return cls(p.alphabet, q.alphabet, masses, p.mode)

    def flatten(self) -> Distribution:
        alphabet = tuple((r, c) for r in self.row_alphabet for c in self.col_alphabet)
        cells = tuple(m for row in self.masses for m in row)
        return Distribution(alphabet, cells, self.mode)

    def marginal_row(self) -> Distribution:
        if self.mode == "rational":
            sums = tuple(sum(row, Fraction(0)) for row in self.masses)
        else:
            sums = tuple(math.fsum(row) for row in self.masses)
        return Distribution(self.row_alphabet, sums, self.mode)

    def marginal_col(self) -> Distribution:
        cols = list(zip(*self.masses))
        if self.mode == "rational":
            sums = tuple(sum(col, Fraction(0)) for col in cols)
        else:
            sums = tuple(math.fsum(col) for col in cols)
        return Distribution(self.col_alphabet, sums, self.mode)

    def cell(self, row_symbol, col_symbol) -> Mass:
        i = self.row_alphabet.index(row_symbol)
        j = self.col_alphabet.index(col_symbol)
        return self.masses[i][j]

    def as_floats(self) -> np.ndarray:
        return np.array([[float(m) for m in row] for row in self.masses], dtype=float)


# ---------------------------------------------------------------------------
# exact log arithmetic
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _factorize(n: int) -> tuple:
    """Prime factorization by trial division; returns ((prime, exponent), ...)."""
    if n <= 0:
        raise ValueError("factorize expects a positive integer")
    factors = []
    remaining = n
    p = 2
    while p * p <= remaining:
        if remaining % p == 0:
            e = 0
            while remaining % p == 0:
                remaining //= p
                e += 1
            factors.append((p, e))
        p += 1 if p == 2 else 2
    if remaining > 1:
        factors.append((remaining, 1))
    return tuple(factors)


class ExactLogValue:
    """Exact real number of the form sum_p c_p * log2(p) over primes p.

    Because {log2 p : p prime} is linearly independent over the rationals,
    equality of two such values is decided by equality of their coefficient
    maps.  This gives exact verification of identities between entropies and
    divergences of rational distributions.  A flag marks +infinity (support
    violations in divergences); infinity absorbs finite addends and compares
    equal to infinity.
    """

    __slots__ = ("coeffs", "infinite")

    def __init__(self, coeffs: dict | None = None, infinite: bool = False):
        self.infinite = bool(infinite)
        self.coeffs: dict[int, Fraction] = {}
        if coeffs and not infinite:
            for prime, c in coeffs.items():
                if c != 0:
                    self.coeffs[prime] = c

    @classmethod
    def zero(cls) -> "ExactLogValue":
        return cls()

    @classmethod
    def infinity(cls) -> "ExactLogValue":
        return cls(infinite=True)

    @classmethod
    def log2_of(cls, value: Fraction | int) -> "ExactLogValue":
        r = as_fraction(value)
        if r <= 0:
            raise ValueError("log of a non-positive rational")
        coeffs: dict[int, Fraction] = {}
        for prime, e in _factorize(r.numerator):
            coeffs[prime] = coeffs.get(prime, Fraction(0)) + e
        for prime, e in _factorize(r.denominator):
            coeffs[prime] = coeffs.get(prime, Fraction(0)) - e
        return cls(coeffs)

    def scaled(self, c: Fraction | int) -> "ExactLogValue":
        if self.infinite:
            if c == 0:
                return ExactLogValue.zero()
            if c < 0:
                raise ValueError("negative scaling of an infinite value")
            return ExactLogValue.infinity()
        factor = as_fraction(c)
        return ExactLogValue({p: v * factor for p, v in self.coeffs.items()})

    def __add__(self, other: "ExactLogValue") -> "ExactLogValue":
        if self.infinite or other.infinite:
            return ExactLogValue.infinity()
        merged = dict(self.coeffs)
        for prime, c in other.coeffs.items():
            merged[prime] = merged.get(prime, Fraction(0)) + c
        return ExactLogValue(merged)

    def __sub__(self, other: "ExactLogValue") -> "ExactLogValue":
        if other.infinite:
            raise ValueError("cannot subtract an infinite value")
        return self + other.scaled(-1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExactLogValue):
            return NotImplemented
        if self.infinite or other.infinite:
            return self.infinite and other.infinite
        return self.coeffs == other.coeffs

    def __hash__(self):
        if self.infinite:
            return hash("ExactLogValue-inf")
        return hash(frozenset(self.coeffs.items()))

    def is_zero(self) -> bool:
        return not self.infinite and not self.coeffs

    def to_float(self) -> float:
        if self.infinite:
            return math.inf
        return math.fsum(float(c) * math.log2(p) for p, c in self.coeffs.items())

    def __repr__(self):
        if self.infinite:
            return "ExactLogValue(+inf)"
        terms = " + ".join(f"({c})*log2({p})" for p, c in sorted(self.coeffs.items()))
        return f"ExactLogValue({terms or '0'})"


# ---------------------------------------------------------------------------
# information quantities (floats, bits)
# ---------------------------------------------------------------------------


def entropy_bits(masses: Sequence[float] | np.ndarray) -> float:
    """Shannon entropy in bits of a float mass vector; 0 log 0 = 0."""
    arr = np.asarray(masses, dtype=float)
    positive = arr[arr > 0]
    return float(-np.sum(positive * np.log2(positive)))


def entropy(dist: Distribution) -> float:
    """Entropy in bits of a Distribution (either mode)."""
    return entropy_bits(dist.as_floats())


def entropy_exact(dist: Distribution) -> ExactLogValue:
    """Entropy of a rational-mode pmf as an exact log combination."""
    if not dist.is_rational():
        raise ValueError("entropy_exact requires rational mode")
    total = ExactLogValue.zero()
    for m in dist.masses:
        if m > 0:
            total = total + ExactLogValue.log2_of(m).scaled(-m)
    return total


def _check_same_alphabet(p: Distribution, q: Distribution) -> None:
    if p.alphabet != q.alphabet:
        raise ValueError("distributions must share an alphabet")


def kl_divergence(p: Distribution, q: Distribution) -> float:
    """D(p || q) in bits; +inf when p puts mass outside q's support."""
    _check_same_alphabet(p, q)
    total = 0.0
    for pm, qm in zip(p.masses, q.masses):
        pf, qf = float(pm), float(qm)
        if pf == 0.0:
            continue
        if qf == 0.0:
            return math.inf
        total += pf * math.log2(pf / qf)
    return total


def kl_divergence_exact(p: Distribution, q: Distribution) -> ExactLogValue:
    """D(p || q) for rational-mode pmfs as an exact log combination."""
    _check_same_alphabet(p, q)
    if not (p.is_rational() and q.is_rational()):
        raise ValueError("kl_divergence_exact requires rational mode")
    total = ExactLogValue.zero()
    for pm, qm in zip(p.masses, q.masses):
        if pm == 0:
            continue
        if qm == 0:
            return ExactLogValue.infinity()
        total = total + ExactLogValue.log2_of(pm / qm).scaled(pm)
    return total


def _transition_matrix(transition) -> np.ndarray:
    rows = np.array(
        [[float(m) for m in row] for row in transition],
        dtype=float,
    )
    if rows.ndim != 2:
        raise ValueError("transition must be a matrix")
    if np.any(rows < -1e-15):
        raise ValueError("negative transition mass")
    if np.max(np.abs(rows.sum(axis=1) - 1.0)) > 1e-9:
        raise ValueError("transition rows must each sum to 1")
    return rows


def mi_bits(input_masses: Sequence[float] | np.ndarray, rows: np.ndarray) -> float:
    """Mutual information in bits for input pmf ``q`` and row-stochastic ``rows``.

    Computed as H(output marginal) - sum_i q_i H(row_i), which is exact for the
    convention 0 log 0 = 0 and robust when some inputs have zero mass.
    """
    q = np.asarray(input_masses, dtype=float)
    out = q @ rows
    h_rows = np.array([entropy_bits(row) for row in rows])
    return entropy_bits(out) - float(np.dot(q, h_rows))


def mutual_information(input_dist: Distribution, transition) -> float:
    """I(input; output) in bits through a per-letter transition matrix.

    ``transition[i][j]`` is the probability of output letter j given input
    letter ``input_dist.alphabet[i]``.
    """
    rows = _transition_matrix(transition)
    if rows.shape[0] != len(input_dist.alphabet):
        raise ValueError("transition row count must match the input alphabet")
    return mi_bits(input_dist.as_floats(), rows)


def information_density(
    a,
    b,
    input_dist: Distribution,
    transition,
    output_alphabet: Sequence | None = None,
) -> float:
    """log2 P(b|a) / P(b) under input law ``input_dist`` and the transition.

    Raises ``ValueError`` when the output symbol has zero marginal probability
    (the density is undefined there) and ``KeyError`` for unknown symbols.
    """
    rows = _transition_matrix(transition)
    i = input_dist.index(a)
    if output_alphabet is None:
        output_alphabet = tuple(range(rows.shape[1]))
    else:
        output_alphabet = tuple(output_alphabet)
        if len(output_alphabet) != rows.shape[1]:
            raise ValueError("output alphabet does not match transition width")
    try:
        j = output_alphabet.index(b)
    except ValueError:
        raise KeyError(f"symbol {b!r} not in output alphabet") from None
    marginal = float(np.dot(input_dist.as_floats(), rows[:, j]))
    if marginal <= 0.0:
        raise ValueError(f"output symbol {b!r} has zero probability")
    conditional = rows[i, j]
    if conditional == 0.0:
        return -math.inf
    return math.log2(conditional / marginal)
