"""Distortion measures on blocks.

Two kinds of spec exist.  *Additive* specs carry a per-letter matrix and the
block value is the sum of per-letter values (callers divide by n when they
want a per-letter average); they are permutation invariant by construction.
*General* specs carry an arbitrary block evaluator and must earn a
permutation-invariance certificate from :func:`check_permutation_invariance`
before the covering-packing operations will accept them.

Builtins: Hamming distance and sorted-sequence distance (Hamming distance
between the sorted versions of the two blocks, the canonical non-additive but
permutation-invariant example).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .probability import Distribution, as_fraction
from .typeclasses import Permutation

__all__ = [
    "DistortionSpec",
    "InvarianceReport",
    "hamming",
    "sorted_hamming",
    "block_distortion",
    "check_permutation_invariance",
    "d_max",
]

EXHAUSTIVE_LIMIT = 6


@dataclass(frozen=True)
class InvarianceReport:
    passed: bool
    n: int
    mode: str  # "exhaustive" | "trials"
    cases_checked: int
    counterexample: tuple | None = None  # (permutation image, x, y, d_orig, d_permuted)


@dataclass(frozen=True, eq=False)
class DistortionSpec:
    """A block distortion measure between source and reproduction alphabets."""

    x_alphabet: tuple
    y_alphabet: tuple
    kind: str  # "additive" | "general"
    name: str = "distortion"
    matrix: tuple | None = None  # rows over x_alphabet, columns over y_alphabet
    evaluator: Callable[[Sequence, Sequence], object] | None = None
    _certificates: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind == "additive":
            if self.matrix is None:
                raise ValueError("additive spec requires a matrix")
            if len(self.matrix) != len(self.x_alphabet) or any(
                len(row) != len(self.y_alphabet) for row in self.matrix
            ):
                raise ValueError("matrix shape must be |X| x |Y|")
            if any(v < 0 for row in self.matrix for v in row):
                raise ValueError("distortion values must be non-negative")
        elif self.kind == "general":
            if self.evaluator is None:
                raise ValueError("general spec requires an evaluator")
        else:
            raise ValueError(f"unknown distortion kind {self.kind!r}")

    # -- evaluation ---------------------------------------------------------

    def letter(self, x, y):
        if self.kind != "additive":
            raise ValueError("per-letter values exist only for additive specs")
        return self.matrix[self.x_alphabet.index(x)][self.y_alphabet.index(y)]

    def matrix_floats(self) -> np.ndarray:
        if self.kind != "additive":
            raise ValueError("no matrix for a general spec")
        return np.array([[float(v) for v in row] for row in self.matrix], dtype=float)

    def matrix_fractions(self) -> list[list[Fraction]]:
        if self.kind != "additive":
            raise ValueError("no matrix for a general spec")
        return [[as_fraction(v) for v in row] for row in self.matrix]

    # -- certification ------------------------------------------------------

    def is_certified(self, n: int) -> bool:
        if self.kind == "additive":
            return True
        report = self._certificates.get(n)
        return report is not None and report.passed

    def require_certificate(self, n: int) -> None:
        if not self.is_certified(n):
            raise ValueError(
                f"distortion spec {self.name!r} lacks a permutation-invariance "
                f"certificate at blocklength {n}; run check_permutation_invariance"
            )

    def record_certificate(self, report: InvarianceReport) -> None:
        self._certificates[report.n] = report


def hamming(alphabet: Sequence) -> DistortionSpec:
    """0/1 mismatch distortion on a shared alphabet."""
    symbols = tuple(alphabet)
    matrix = tuple(
        tuple(0 if a == b else 1 for b in symbols) for a in symbols
    )
    return DistortionSpec(symbols, symbols, "additive", name="hamming", matrix=matrix)


def sorted_hamming(alphabet: Sequence) -> DistortionSpec:
    """Hamming distance between sorted blocks; depends only on the two types."""
    symbols = tuple(alphabet)
    rank = {s: i for i, s in enumerate(symbols)}

    def evaluate(x: Sequence, y: Sequence) -> int:
        if len(x) != len(y):
            raise ValueError("block length mismatch")
        xs = sorted(x, key=rank.__getitem__)
        ys = sorted(y, key=rank.__getitem__)
        return sum(1 for a, b in zip(xs, ys) if a != b)

    return DistortionSpec(
        symbols, symbols, "general", name="sorted_hamming", evaluator=evaluate
    )


def block_distortion(spec: DistortionSpec, x: Sequence, y: Sequence):
    """Total (not per-letter) distortion of a block pair."""
    if len(x) != len(y):
        raise ValueError("block length mismatch")
    if len(x) == 0:
        raise ValueError("empty blocks have no distortion")
    if spec.kind == "additive":
        xi = [spec.x_alphabet.index(a) for a in x]
        yi = [spec.y_alphabet.index(b) for b in y]
        return sum(spec.matrix[i][j] for i, j in zip(xi, yi))
    return spec.evaluator(tuple(x), tuple(y))


def check_permutation_invariance(
    spec: DistortionSpec,
    n: int,
    mode: str = "exhaustive",
    trials: int = 200,
    rng: np.random.Generator | None = None,
    record: bool = True,
) -> InvarianceReport:
    """Test d(pi x, pi y) == d(x, y) and optionally certify the measure at n.

    Exhaustive mode enumerates every (permutation, x, y) triple and is allowed
    only for n <= 6.  Trials mode samples random triples with the supplied
    generator.  On failure the report carries a witness triple.
    """
    if mode == "exhaustive":
        if n > EXHAUSTIVE_LIMIT:
            raise ValueError(f"exhaustive check limited to n <= {EXHAUSTIVE_LIMIT}")
        xs = itertools.product(spec.x_alphabet, repeat=n)
        report = _run_invariance(
            spec,
            n,
            mode,
            (
                (Permutation(pi), x, y)
                for x in xs
                for y in itertools.product(spec.y_alphabet, repeat=n)
                for pi in itertools.permutations(range(n))
            ),
        )
    elif mode == "trials":
        if rng is None:
            raise ValueError("trials mode requires an rng")
        def _sampled():
            for _ in range(trials):
                pi = Permutation.random(n, rng)
                x = tuple(spec.x_alphabet[i] for i in rng.integers(0, len(spec.x_alphabet), size=n))
                y = tuple(spec.y_alphabet[i] for i in rng.integers(0, len(spec.y_alphabet), size=n))
                yield pi, x, y
        report = _run_invariance(spec, n, mode, _sampled())
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if record and report.passed:
        spec.record_certificate(report)
    return report


def _run_invariance(spec, n, mode, triples) -> InvarianceReport:
    checked = 0
    for pi, x, y in triples:
        checked += 1
        original = block_distortion(spec, x, y)
        permuted = block_distortion(spec, pi.apply(x), pi.apply(y))
        if original != permuted:
            return InvarianceReport(
                False, n, mode, checked, (pi.image, x, y, original, permuted)
            )
    return InvarianceReport(True, n, mode, checked)


def d_max(spec: DistortionSpec, p: Distribution):
    """Smallest expected distortion achievable by a constant reproduction.

    d_max = min_y sum_x p(x) d(x, y).  Exact (Fraction) when both the matrix
    and the pmf are rational; float otherwise.
    """
    if spec.kind != "additive":
        raise ValueError("d_max requires an additive spec")
    if p.alphabet != spec.x_alphabet:
        raise ValueError("pmf alphabet must match the measure's source alphabet")
    best = None
    rational = p.is_rational() and all(
        isinstance(v, (int, Fraction)) for row in spec.matrix for v in row
    )
    for j in range(len(spec.y_alphabet)):
        if rational:
            value = sum(
                (as_fraction(p.masses[i]) * as_fraction(spec.matrix[i][j])
                 for i in range(len(spec.x_alphabet))),
                Fraction(0),
            )
        else:
            value = math.fsum(
                float(p.masses[i]) * float(spec.matrix[i][j])
                for i in range(len(spec.x_alphabet))
            )
        if best is None or value < best:
            best = value
    return best
