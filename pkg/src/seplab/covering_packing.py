"""Exact excess-distortion probabilities over type classes and their duality.

Two probabilities are computed for a source type and a reproduction type at
a common blocklength: the *channel-side* value draws the source block
uniformly from its type class against a fixed representative of the
reproduction class, and the *source-side* value fixes a source
representative against a uniform draw from the reproduction class.  For
permutation-invariant distortion the two values are equal, and
:func:`verify_duality` asserts that equality exactly in rational arithmetic,
along with invariance under replacing either representative.

Everything here is exact (Fractions); Monte Carlo appears only in
:func:`mc_packing_covering`, which cross-checks the product formulas
(no false candidate among M-1 independent draws; no cover among M draws)
against direct simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .distortion import DistortionSpec, block_distortion
from .probability import Distribution, as_fraction
from .seeding import derive_rng
from .typeclasses import TypeClassHandle, achievable_types, type_class

__all__ = [
    "DualitySample",
    "DualityMismatch",
    "MinExcessReport",
    "ThresholdTrace",
    "PackingCoveringCheck",
    "excess_prob_channel_side",
    "excess_prob_source_side",
    "verify_duality",
    "min_excess_over_types",
    "threshold_trace",
    "mc_packing_covering",
]

REPRESENTATIVE_SEED = 49
EXACT_POWER_BIT_LIMIT = 1 << 16


class DualityMismatch(AssertionError):
    """The two sides disagreed; carries both exact values."""

    def __init__(self, channel_side: Fraction, source_side: Fraction, context: str):
        self.channel_side = channel_side
        self.source_side = source_side
        super().__init__(
            f"duality violated {context}: channel side {channel_side} != "
            f"source side {source_side}"
        )


def _require_rational(dist: Distribution, what: str) -> None:
    if not dist.is_rational():
        raise ValueError(f"{what} must be rational for exact evaluation")


def _require_achievable(n: int, dist: Distribution, what: str) -> None:
    for m in dist.masses:
        f = as_fraction(m)
        if (n * f).denominator != 1:
            raise ValueError(f"{what} is not an achievable type at blocklength {n}")


def _threshold(n: int, level) -> Fraction:
    lv = as_fraction(level)
    if lv < 0:
        raise ValueError("distortion level must be non-negative")
    return n * lv


def _is_binary_hamming(spec: DistortionSpec) -> bool:
    if spec.kind != "additive" or spec.x_alphabet != spec.y_alphabet:
        return False
    if len(spec.x_alphabet) != 2:
        return False
    return all(
        as_fraction(spec.matrix[i][j]) == (0 if i == j else 1)
        for i in range(2)
        for j in range(2)
    )


def _ones(block, alphabet) -> int:
    one = alphabet[1]
    return sum(1 for s in block if s == one)


def _excess_by_enumeration(
    random_handle: TypeClassHandle, fixed_block: tuple, spec, threshold: Fraction,
    member_is_source: bool,
) -> Fraction:
    hits = 0
    total = 0
    for member in random_handle.members():
        d = (
            block_distortion(spec, member, fixed_block)
            if member_is_source
            else block_distortion(spec, fixed_block, member)
        )
        if as_fraction(d) > threshold:
            hits += 1
        total += 1
    return Fraction(hits, total)


def _excess_channel_closed_form(n, w, k, threshold: Fraction) -> Fraction:
    """Uniform source block with w ones against a fixed block with k ones;
    overlap counting over the k one-positions."""
    total = Fraction(0)
    denom = math.comb(n, w)
    for a in range(max(0, w - (n - k)), min(w, k) + 1):
        if Fraction(w + k - 2 * a) > threshold:
            total += Fraction(math.comb(k, a) * math.comb(n - k, w - a), denom)
    return total


def _excess_source_closed_form(n, w, k, threshold: Fraction) -> Fraction:
    """Fixed source block with w ones against a uniform draw with k ones;
    overlap counting over the w one-positions."""
    total = Fraction(0)
    denom = math.comb(n, k)
    for a in range(max(0, k - (n - w)), min(w, k) + 1):
        if Fraction(w + k - 2 * a) > threshold:
            total += Fraction(math.comb(w, a) * math.comb(n - w, k - a), denom)
    return total


def _prepare(n, p_x, q, spec, level):
    _require_rational(p_x, "source law")
    _require_rational(q, "reproduction type")
    if tuple(p_x.alphabet) != tuple(spec.x_alphabet):
        raise ValueError("source law must live on the measure's source alphabet")
    if tuple(q.alphabet) != tuple(spec.y_alphabet):
        raise ValueError("reproduction type must live on the measure's reproduction alphabet")
    _require_achievable(n, p_x, "source law")
    _require_achievable(n, q, "reproduction type")
    spec.require_certificate(n)
    return _threshold(n, level)


def excess_prob_channel_side(
    n: int, p_x: Distribution, q: Distribution, spec: DistortionSpec, level,
    *, method: str = "auto", representative: tuple | None = None,
) -> Fraction:
    """P[ per-letter distortion of (uniform source block, fixed reproduction
    representative) exceeds the level ], exactly."""
    threshold = _prepare(n, p_x, q, spec, level)
    u_handle = type_class(n, p_x)
    y_block = representative if representative is not None else type_class(n, q).canonical()
    if method not in ("auto", "enumerate", "closed-form"):
        raise ValueError(f"unknown method {method!r}")
    if method == "closed-form" or (method == "auto" and _is_binary_hamming(spec)):
        if not _is_binary_hamming(spec):
            raise ValueError("closed form available only for binary 0/1 mismatch")
        return _excess_channel_closed_form(
            n, u_handle.counts[1], _ones(y_block, spec.y_alphabet), threshold
        )
    return _excess_by_enumeration(u_handle, tuple(y_block), spec, threshold, True)


def excess_prob_source_side(
    n: int, p_x: Distribution, q: Distribution, spec: DistortionSpec, level,
    *, method: str = "auto", representative: tuple | None = None,
) -> Fraction:
    """P[ per-letter distortion of (fixed source representative, uniform
    reproduction block) exceeds the level ], exactly."""
    threshold = _prepare(n, p_x, q, spec, level)
    v_handle = type_class(n, q)
    u_block = representative if representative is not None else type_class(n, p_x).canonical()
    if method not in ("auto", "enumerate", "closed-form"):
        raise ValueError(f"unknown method {method!r}")
    if method == "closed-form" or (method == "auto" and _is_binary_hamming(spec)):
        if not _is_binary_hamming(spec):
            raise ValueError("closed form available only for binary 0/1 mismatch")
        return _excess_source_closed_form(
            n, _ones(u_block, spec.x_alphabet), v_handle.counts[1], threshold
        )
    return _excess_by_enumeration(v_handle, tuple(u_block), spec, threshold, False)


@dataclass(frozen=True)
class DualitySample:
    n: int
    source_law: Distribution
    reproduction_type: Distribution
    level: Fraction
    channel_side: Fraction
    source_side: Fraction
    representative_checks: int


def verify_duality(
    n: int, p_x: Distribution, q: Distribution, spec: DistortionSpec, level,
    *, representatives: int = 5,
) -> DualitySample:
    """Both sides computed independently, asserted equal, and re-asserted
    under random representative replacement on each side."""
    channel = excess_prob_channel_side(n, p_x, q, spec, level)
    source = excess_prob_source_side(n, p_x, q, spec, level)
    if channel != source:
        raise DualityMismatch(channel, source, f"(n={n}, q={q.masses}, level={level})")
    u_handle = type_class(n, p_x)
    v_handle = type_class(n, q)
    for i in range(representatives):
        rng = derive_rng(REPRESENTATIVE_SEED, "duality-representative", n, i)
        alt_channel = excess_prob_channel_side(
            n, p_x, q, spec, level, representative=v_handle.sample(rng)
        )
        if alt_channel != channel:
            raise DualityMismatch(
                alt_channel, source, f"(channel-side representative {i}, n={n})"
            )
        alt_source = excess_prob_source_side(
            n, p_x, q, spec, level, representative=u_handle.sample(rng)
        )
        if alt_source != source:
            raise DualityMismatch(
                channel, alt_source, f"(source-side representative {i}, n={n})"
            )
    lv = as_fraction(level)
    return DualitySample(n, p_x, q, lv, channel, source, 2 * representatives)


@dataclass(frozen=True)
class MinExcessReport:
    n: int
    value: Fraction
    minimizer: Distribution  # lexicographically smallest among ties
    per_type: tuple  # (type, exact probability) for every achievable type


def min_excess_over_types(
    n: int, p_x: Distribution, spec: DistortionSpec, level
) -> MinExcessReport:
    """Minimum channel-side excess probability over all achievable
    reproduction types at blocklength n."""
    table = []
    best = None
    best_q = None
    for q in achievable_types(n, spec.y_alphabet):
        value = excess_prob_channel_side(n, p_x, q, spec, level)
        table.append((q, value))
        if best is None or value < best:
            best = value
            best_q = q
    return MinExcessReport(n, best, best_q, tuple(table))


@dataclass(frozen=True)
class ThresholdTrace:
    rate: Fraction
    blocklengths: tuple
    min_excess: tuple  # exact Fractions
    message_counts: tuple
    channel_factor: tuple  # floats: min_excess^(M-1)
    source_factor: tuple  # floats: min_excess^M
    channel_factor_exact: tuple  # Fractions or None when too large
    source_factor_exact: tuple
    channel_monotone_up: bool
    source_monotone_down: bool


def _power(base: Fraction, k: int) -> tuple[Fraction | None, float]:
    if k == 0:
        return Fraction(1), 1.0
    if base == 0:
        return Fraction(0), 0.0
    if base == 1:
        return Fraction(1), 1.0
    bits = base.numerator.bit_length() + base.denominator.bit_length()
    exact = base**k if k * bits <= EXACT_POWER_BIT_LIMIT else None
    approx = math.exp(k * math.log(base)) if exact is None else float(exact)
    return exact, approx


def threshold_trace(
    p_x: Distribution, spec: DistortionSpec, level, rate, blocklengths
) -> ThresholdTrace:
    """Tabulate the packing and covering product factors along blocklengths.

    Reports finite-blocklength values and monotone-trend flags only; no
    asymptotic extrapolation is attempted.
    """
    r = as_fraction(rate)
    ns = tuple(blocklengths)
    a_vals = []
    m_vals = []
    ch_exact, ch_float, src_exact, src_float = [], [], [], []
    for n in ns:
        report = min_excess_over_types(n, p_x, spec, level)
        a_vals.append(report.value)
        m = 2 ** math.floor(n * r)
        m_vals.append(m)
        e, f = _power(report.value, m - 1)
        ch_exact.append(e)
        ch_float.append(f)
        e, f = _power(report.value, m)
        src_exact.append(e)
        src_float.append(f)
    up = all(a <= b + 1e-15 for a, b in zip(ch_float, ch_float[1:]))
    down = all(a >= b - 1e-15 for a, b in zip(src_float, src_float[1:]))
    return ThresholdTrace(
        r, ns, tuple(a_vals), tuple(m_vals),
        tuple(ch_float), tuple(src_float),
        tuple(ch_exact), tuple(src_exact),
        up, down,
    )


@dataclass(frozen=True)
class PackingCoveringCheck:
    n: int
    rate: Fraction
    trials: int
    message_count: int
    exact_no_impostor: float
    empirical_no_impostor: float
    sigma_no_impostor: float
    no_impostor_within_3_sigma: bool
    exact_cover_error: float
    empirical_cover_error: float
    sigma_cover_error: float
    cover_error_within_3_sigma: bool


def mc_packing_covering(
    n: int,
    p_x: Distribution,
    q: Distribution,
    spec: DistortionSpec,
    level,
    rate,
    trials: int,
    seed: int,
) -> PackingCoveringCheck:
    """Simulate the two product events with uniform-on-type-class codebooks.

    Event one: none of the M-1 non-transmitted codewords is within the level
    of a uniform source block (the no-false-candidate factor).  Event two:
    none of M codewords covers the block.  Both have exact probabilities
    s^(M-1) and s^M with s the excess probability, cross-checked here.
    """
    threshold = _prepare(n, p_x, q, spec, level)
    s = excess_prob_channel_side(n, p_x, q, spec, level)
    m = 2 ** math.floor(n * as_fraction(rate))
    u_handle = type_class(n, p_x)
    v_handle = type_class(n, q)
    hit_no_impostor = 0
    hit_cover_error = 0
    for t in range(trials):
        rng = derive_rng(seed, "packing-covering-trial", t)
        u = u_handle.sample(rng)
        words = [v_handle.sample(rng) for _ in range(m)]
        others_excess = all(
            as_fraction(block_distortion(spec, u, w)) > threshold for w in words[1:]
        )
        if others_excess:
            hit_no_impostor += 1
        all_excess = others_excess and (
            as_fraction(block_distortion(spec, u, words[0])) > threshold
        )
        if all_excess:
            hit_cover_error += 1
    exact_ni = float(s ** (m - 1))
    exact_ce = float(s**m)
    emp_ni = hit_no_impostor / trials
    emp_ce = hit_cover_error / trials
    sig_ni = math.sqrt(max(exact_ni * (1 - exact_ni), 1e-12) / trials)
    sig_ce = math.sqrt(max(exact_ce * (1 - exact_ce), 1e-12) / trials)
    return PackingCoveringCheck(
        n, as_fraction(rate), trials, m,
        exact_ni, emp_ni, sig_ni, abs(emp_ni - exact_ni) <= 3 * sig_ni,
        exact_ce, emp_ce, sig_ce, abs(emp_ce - exact_ce) <= 3 * sig_ce,
    )
