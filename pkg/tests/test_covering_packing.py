"""Exact excess probabilities, their duality, and the Monte Carlo cross-check."""

from fractions import Fraction
from itertools import product

import pytest

from seplab.covering_packing import (
    DualityMismatch,
    excess_prob_channel_side,
    excess_prob_source_side,
    mc_packing_covering,
    min_excess_over_types,
    threshold_trace,
    verify_duality,
)
from seplab.distortion import check_permutation_invariance, hamming, sorted_hamming
from seplab.probability import Distribution
from seplab.seeding import derive_rng
from seplab.typeclasses import achievable_types


HAMMING = hamming((0, 1))
UNIFORM = Distribution.uniform((0, 1))


def _q(num, den):
    return Distribution.rational((0, 1), [Fraction(num, den), Fraction(den - num, den)])


def test_balanced_example_both_sides():
    # distances of the 6 balanced blocks to 0011 are {0,2,2,2,2,4}
    assert excess_prob_channel_side(4, UNIFORM, UNIFORM, HAMMING, 0.25) == Fraction(5, 6)
    assert excess_prob_source_side(4, UNIFORM, UNIFORM, HAMMING, 0.25) == Fraction(5, 6)


def test_point_mass_reproduction_type():
    q = _q(4, 4)  # all-zero reproduction blocks
    assert excess_prob_channel_side(4, UNIFORM, q, HAMMING, 0.25) == 1


def test_level_at_or_above_max_gives_zero():
    assert excess_prob_channel_side(4, UNIFORM, UNIFORM, HAMMING, 1) == 0
    assert excess_prob_source_side(4, UNIFORM, UNIFORM, HAMMING, 1) == 0


def test_exact_match_at_level_zero():
    # V uniform on {01, 10} against u = 01: matches half the time
    assert excess_prob_source_side(2, UNIFORM, UNIFORM, HAMMING, 0) == Fraction(1, 2)
    assert excess_prob_channel_side(2, UNIFORM, UNIFORM, HAMMING, 0) == Fraction(1, 2)


def test_closed_form_matches_enumeration():
    for n in (4, 6, 8):
        p = UNIFORM
        for q_num in range(n + 1):
            q = Distribution.rational((0, 1), [Fraction(q_num, n), Fraction(n - q_num, n)])
            for d_num in range(n + 1):
                level = Fraction(d_num, n)
                fast = excess_prob_channel_side(n, p, q, HAMMING, level, method="closed-form")
                slow = excess_prob_channel_side(n, p, q, HAMMING, level, method="enumerate")
                assert fast == slow
                fast = excess_prob_source_side(n, p, q, HAMMING, level, method="closed-form")
                slow = excess_prob_source_side(n, p, q, HAMMING, level, method="enumerate")
                assert fast == slow


def test_duality_across_all_types_skewed_source():
    p = Distribution.rational((0, 1), ["1/3", "2/3"])
    for q in achievable_types(6, (0, 1)):
        for level in (0, Fraction(1, 6), Fraction(1, 3)):
            sample = verify_duality(6, p, q, HAMMING, level)
            assert sample.channel_side == sample.source_side
            assert sample.representative_checks == 10


def test_duality_with_certified_non_additive_spec():
    spec = sorted_hamming((0, 1))
    check_permutation_invariance(spec, 4, mode="exhaustive")
    sample = verify_duality(4, UNIFORM, _q(1, 4), spec, 0.25)
    assert sample.channel_side == sample.source_side


def test_uncertified_general_spec_rejected():
    spec = sorted_hamming((0, 1))
    with pytest.raises(ValueError, match="certificate"):
        excess_prob_channel_side(4, UNIFORM, UNIFORM, spec, 0.25)


def test_non_achievable_type_rejected():
    with pytest.raises(ValueError, match="achievable"):
        excess_prob_channel_side(4, UNIFORM, Distribution.rational((0, 1), ["1/3", "2/3"]), HAMMING, 0.25)
    with pytest.raises(ValueError, match="achievable"):
        excess_prob_channel_side(5, UNIFORM, _q(2, 5), HAMMING, 0.25)


def test_float_inputs_rejected_for_exact_work():
    with pytest.raises(ValueError, match="rational"):
        excess_prob_channel_side(
            4, Distribution.from_floats((0, 1), [0.5, 0.5]), UNIFORM, HAMMING, 0.25
        )


def test_min_excess_table_and_tie_break():
    report = min_excess_over_types(4, UNIFORM, HAMMING, 0.25)
    values = [v for _, v in report.per_type]
    assert values == [1, Fraction(1, 2), Fraction(5, 6), Fraction(1, 2), 1]
    assert report.value == Fraction(1, 2)
    assert report.minimizer.masses == (Fraction(1, 4), Fraction(3, 4))


def test_min_excess_trivial_levels():
    assert min_excess_over_types(4, UNIFORM, HAMMING, 1).value == 0
    report = min_excess_over_types(2, UNIFORM, HAMMING, 0)
    assert report.value == Fraction(1, 2)
    assert report.minimizer.masses == (Fraction(1, 2), Fraction(1, 2))


def test_representative_invariance_is_exercised():
    # verify_duality internally recomputes both sides with resampled
    # representatives; a mismatch would raise DualityMismatch
    sample = verify_duality(8, UNIFORM, _q(3, 8), HAMMING, 0.25)
    assert isinstance(sample.channel_side, Fraction)


def test_duality_mismatch_carries_both_values():
    err = DualityMismatch(Fraction(1, 2), Fraction(1, 3), "(test)")
    assert err.channel_side == Fraction(1, 2)
    assert err.source_side == Fraction(1, 3)


def test_threshold_trace_zero_rate():
    trace = threshold_trace(UNIFORM, HAMMING, 0.25, 0, [4, 8, 12])
    assert trace.channel_factor == (1.0, 1.0, 1.0)
    assert all(v == 1 for v in trace.channel_factor_exact)
    # source factor is the min excess itself at rate 0 (exponent 2^0 = 1)
    assert trace.source_factor_exact == trace.min_excess


def test_threshold_trace_zero_min_excess():
    trace = threshold_trace(UNIFORM, HAMMING, 1, 0.5, [4])
    assert trace.min_excess == (0,)
    assert trace.source_factor == (0.0,)
    assert trace.channel_factor == (0.0,)


def test_threshold_trace_values_match_direct_powers():
    trace = threshold_trace(UNIFORM, HAMMING, 0.25, 0.1, [4, 8, 12])
    for n, a, m, ch, src in zip(
        trace.blocklengths, trace.min_excess, trace.message_counts,
        trace.channel_factor_exact, trace.source_factor_exact,
    ):
        direct = min_excess_over_types(n, UNIFORM, HAMMING, 0.25).value
        assert a == direct
        assert ch == direct ** (m - 1)
        assert src == direct**m


def test_threshold_trace_large_exponent_falls_back_to_floats():
    trace = threshold_trace(UNIFORM, HAMMING, 0.25, 2, [12])
    assert trace.message_counts == (2**24,)
    assert trace.channel_factor_exact == (None,)
    assert 0.0 <= trace.channel_factor[0] < 1e-200


def test_mc_cross_check_matches_exact_formulas():
    check = mc_packing_covering(
        4, UNIFORM, UNIFORM, HAMMING, 0.25, rate=0.5, trials=10_000, seed=23
    )
    assert check.message_count == 4
    assert check.exact_no_impostor == pytest.approx(float(Fraction(5, 6) ** 3))
    assert check.exact_cover_error == pytest.approx(float(Fraction(5, 6) ** 4))
    assert check.no_impostor_within_3_sigma
    assert check.cover_error_within_3_sigma


def test_mc_level_one_never_covers_anything():
    check = mc_packing_covering(
        4, UNIFORM, UNIFORM, HAMMING, 1, rate=0.5, trials=500, seed=3
    )
    # excess never happens, so covering always succeeds
    assert check.empirical_cover_error == 0.0
    assert check.exact_cover_error == 0.0


def test_mc_single_codeword_uniform_match_law():
    check = mc_packing_covering(
        4, UNIFORM, UNIFORM, HAMMING, 0, rate=0, trials=10_000, seed=11
    )
    assert check.message_count == 1
    # M - 1 = 0 other codewords: the no-false-candidate event is certain
    assert check.empirical_no_impostor == 1.0
    assert check.exact_cover_error == pytest.approx(1 - 1 / 6)
    assert check.cover_error_within_3_sigma


def test_duality_holds_on_ternary_alphabet():
    spec = hamming((0, 1, 2))
    p = Distribution.rational((0, 1, 2), ["1/3", "1/3", "1/3"])
    for q in achievable_types(3, (0, 1, 2)):
        sample = verify_duality(3, p, q, spec, Fraction(1, 3))
        assert sample.channel_side == sample.source_side
