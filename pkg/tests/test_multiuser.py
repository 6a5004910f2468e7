"""Media, unicast simulation, and the exact replacement-distribution check."""

import math
from fractions import Fraction

import pytest

from seplab.channels import bsc, identity_channel
from seplab.distortion import hamming
from seplab.multiuser import (
    UnicastDemand,
    UnicastSystem,
    end_to_end_separation,
    independent_links_medium,
    joint_signal_law,
    layered_replacement,
    simulate_unicast,
    xor_interference_medium,
)
from seplab.probability import Distribution


UNIFORM = Distribution.uniform((0, 1))
HAMMING = hamming((0, 1))


def _two_demands(level):
    return (
        UnicastDemand(0, 1, UNIFORM, HAMMING, level),
        UnicastDemand(1, 0, UNIFORM, HAMMING, level),
    )


def _noiseless():
    return independent_links_medium(
        {(0, 1): identity_channel(), (1, 0): identity_channel()}
    )


def _bsc_links(p="1/10"):
    return independent_links_medium({(0, 1): bsc(p), (1, 0): bsc(p)})


def test_noiseless_links_zero_level_never_exceed():
    profile = simulate_unicast(_noiseless(), _two_demands(0), n=8, trials=200, seed=1)
    for entry in profile.entries:
        assert entry.excess_count == 0
        assert not entry.degenerate


def test_bsc_links_match_binomial_tail_oracle():
    n, level, trials = 64, 0.15, 2000
    profile = simulate_unicast(_bsc_links(), _two_demands(level), n=n, trials=trials, seed=7)
    # identity modems: excess iff the link flips more than level*n letters;
    # the exact tail P[Bin(64, 0.1) >= 10] is 0.10279
    exact = sum(
        math.comb(n, k) * 0.1**k * 0.9 ** (n - k)
        for k in range(n + 1)
        if k > level * n
    )
    assert 0.09 < exact < 0.11
    for pair in ((0, 1), (1, 0)):
        entry = profile.at(0, pair)
        sigma = max(math.sqrt(exact * (1 - exact) / trials), 1e-4)
        assert abs(entry.estimate - exact) <= 4 * sigma


def test_negative_level_is_degenerate_and_certain():
    profile = simulate_unicast(_noiseless(), _two_demands(-0.1), n=4, trials=50, seed=3)
    for entry in profile.entries:
        assert entry.degenerate
        assert entry.estimate == 1.0


def test_independent_links_joint_event_factorizes():
    n, trials = 16, 2000
    profile = simulate_unicast(_bsc_links(), _two_demands(0.05), n=n, trials=trials, seed=11)
    a = profile.at(0, (0, 1)).estimate
    b = profile.at(0, (1, 0)).estimate
    joint = profile.all_pairs_excess[0] / trials
    sigma = math.sqrt(max(a * b * (1 - a * b), 1e-6) / trials)
    assert abs(joint - a * b) <= 4 * sigma


def test_media_set_reports_per_medium():
    profile = simulate_unicast(
        [_noiseless(), _bsc_links("1/4")], _two_demands(0.1), n=16, trials=200, seed=5
    )
    assert len(profile.entries) == 4
    assert profile.worst_case((0, 1)) == profile.at(1, (0, 1)).estimate


def test_xor_medium_letter_law():
    med = xor_interference_medium(Fraction(1, 10))
    law = med.letter_distribution((1, 1))
    # inputs xor to 0; user 1 hears user 0's letter 1
    assert law.mass((0, 1)) == Fraction(9, 10) * Fraction(9, 10)
    assert law.mass((0, 0)) == Fraction(9, 10) * Fraction(1, 10)
    assert law.mass((1, 1)) == Fraction(1, 10) * Fraction(9, 10)
    assert sum(law.masses) == 1


def test_xor_medium_asymmetry_in_simulation():
    med = xor_interference_medium(Fraction(1, 10))
    profile = simulate_unicast(med, _two_demands(0.25), n=32, trials=500, seed=9)
    clean = profile.at(0, (0, 1)).estimate  # user 1 hears user 0 cleanly
    jammed = profile.at(0, (1, 0)).estimate  # user 0 hears the XOR
    assert clean <= 0.05
    assert jammed >= 0.5


def test_replacement_preserves_other_pair_exactly_independent_links():
    system = UnicastSystem.fresh(_noiseless(), _two_demands(0.1), n=2)
    _, report = layered_replacement(system, (0, 1))
    assert report.matched
    assert report.total_variation == 0


def test_replacement_preserves_other_pair_exactly_xor_medium():
    med = xor_interference_medium(Fraction(1, 10))
    system = UnicastSystem.fresh(med, _two_demands(0.1), n=2)
    _, report = layered_replacement(system, (0, 1))
    assert report.total_variation == 0
    # and the skewed-but-matched case
    skewed = Distribution.rational((0, 1), ["1/3", "2/3"])
    demands = (
        UnicastDemand(0, 1, skewed, HAMMING, 0.1),
        UnicastDemand(1, 0, UNIFORM, HAMMING, 0.1),
    )
    system = UnicastSystem.fresh(med, demands, n=2)
    _, report = layered_replacement(system, (0, 1))
    assert report.total_variation == 0


def test_mismatched_codebook_law_detected_exactly():
    med = xor_interference_medium(Fraction(1, 10))
    system = UnicastSystem.fresh(med, _two_demands(0.1), n=2)
    wrong = Distribution.rational((0, 1), ["1/4", "3/4"])
    _, report = layered_replacement(system, (0, 1), codebook_law=wrong)
    assert not report.matched
    assert report.total_variation > Fraction(1, 1000)


def test_replacement_order_commutes_exactly():
    med = xor_interference_medium(Fraction(1, 5))
    demands = _two_demands(0.1)
    law_a = Distribution.rational((0, 1), ["2/5", "3/5"])
    law_b = Distribution.rational((0, 1), ["1/5", "4/5"])
    base = UnicastSystem.fresh(med, demands, n=2)
    one, _ = layered_replacement(base, (0, 1), codebook_law=law_a)
    one, _ = layered_replacement(one, (1, 0), codebook_law=law_b)
    other, _ = layered_replacement(base, (1, 0), codebook_law=law_b)
    other, _ = layered_replacement(other, (0, 1), codebook_law=law_a)
    assert joint_signal_law(one) == joint_signal_law(other)


def test_replacement_unknown_pair_rejected():
    system = UnicastSystem.fresh(_noiseless(), _two_demands(0.1), n=2)
    with pytest.raises(ValueError):
        layered_replacement(system, (1, 3))


def test_end_to_end_noiseless_links_cover_well():
    profile = end_to_end_separation(
        _noiseless(), _two_demands(0.15),
        source_rates={(0, 1): 0.75, (1, 0): 0.75},
        n=64, trials=300, seed=2,
    )
    assert profile.worst_case((0, 1)) <= 0.1
    assert profile.worst_case((1, 0)) <= 0.1


def test_end_to_end_rate_zero_pair_fails_alone():
    profile = end_to_end_separation(
        _noiseless(), _two_demands(0.25),
        source_rates={(0, 1): 0.75, (1, 0): 0},
        n=32, trials=300, seed=6,
    )
    assert profile.at(0, (1, 0)).estimate >= 0.4
    assert profile.at(0, (0, 1)).estimate <= 0.1


def test_end_to_end_noisy_link_uses_channel_code():
    medium = _bsc_links("1/20")
    profile = end_to_end_separation(
        medium,
        (UnicastDemand(0, 1, UNIFORM, HAMMING, 0.25),),
        source_rates={(0, 1): 0.25},
        channel_rates={(0, 1): 0.3},
        n=24, trials=300, seed=8,
    )
    entry = profile.at(0, (0, 1))
    assert entry.estimate <= 0.5


def test_end_to_end_zero_demands_empty_report():
    profile = end_to_end_separation(_noiseless(), (), source_rates={}, n=8, trials=10, seed=0)
    assert profile.entries == ()


def test_end_to_end_requires_independent_links():
    med = xor_interference_medium(Fraction(1, 10))
    with pytest.raises(ValueError):
        end_to_end_separation(
            med, _two_demands(0.1), source_rates={(0, 1): 0.5, (1, 0): 0.5},
            n=8, trials=10, seed=0,
        )


def test_duplicate_sender_rejected():
    demands = (
        UnicastDemand(0, 1, UNIFORM, HAMMING, 0.1),
        UnicastDemand(0, 1, UNIFORM, HAMMING, 0.2),
    )
    with pytest.raises(ValueError):
        simulate_unicast(_noiseless(), demands, n=4, trials=10, seed=0)


def test_simulation_is_deterministic():
    a = simulate_unicast(_bsc_links(), _two_demands(0.1), n=16, trials=100, seed=13)
    b = simulate_unicast(_bsc_links(), _two_demands(0.1), n=16, trials=100, seed=13)
    assert a == b
