"""Exponent solve and the exact divergence chain identity."""

import math
from fractions import Fraction

import numpy as np
import pytest

from seplab.distortion import DistortionSpec, hamming
from seplab.exponent import error_exponent_bound, kl_chain_report
from seplab.probability import Distribution, JointDistribution
from seplab.rate_distortion import blahut_arimoto
from seplab.seeding import derive_rng


UNIFORM = Distribution.uniform((0, 1))
HAMMING = hamming((0, 1))


def _h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def test_pinned_marginal_exponent_equals_rate_distortion_value():
    # With eps = 0 the Z-marginal is pinned to the source law, so the
    # minimized divergence reduces to min I(Z;Y) under the distortion budget.
    rep = error_exponent_bound(UNIFORM, HAMMING, 0, 0.1, rate=0.25, n=16)
    assert rep.feasible
    assert rep.exponent == pytest.approx(1 - _h2(0.1), abs=1e-6)
    # independent route: the iterative curve solver
    assert rep.exponent == pytest.approx(
        blahut_arimoto(UNIFORM, HAMMING, 0.1).rate, abs=1e-6
    )


def test_pinned_marginal_skewed_source():
    p = Distribution.rational((0, 1), ["1/5", "4/5"])
    rep = error_exponent_bound(p, HAMMING, 0, 0.1, rate=0.25, n=16)
    want = _h2(0.2) - _h2(0.1)
    assert rep.exponent == pytest.approx(want, abs=1e-6)
    assert rep.exponent == pytest.approx(blahut_arimoto(p, HAMMING, 0.1).rate, abs=1e-6)


def test_exponent_vanishes_when_constraints_are_loose():
    rep = error_exponent_bound(UNIFORM, HAMMING, 0.5, 0.75, rate=0.25, n=16)
    assert rep.exponent == pytest.approx(0.0, abs=1e-7)


def test_exponent_monotone_in_box_width_and_level():
    vals = [
        error_exponent_bound(UNIFORM, HAMMING, e, 0.1, rate=0.25, n=16).exponent
        for e in (0, 0.02, 0.05, 0.1)
    ]
    assert all(a >= b - 1e-7 for a, b in zip(vals, vals[1:]))
    vals = [
        error_exponent_bound(UNIFORM, HAMMING, 0.02, d, rate=0.25, n=16).exponent
        for d in (0.05, 0.1, 0.2, 0.4)
    ]
    assert all(a >= b - 1e-7 for a, b in zip(vals, vals[1:]))


def test_infeasible_constraint_set_reports_zero_bound():
    costly = DistortionSpec(
        (0, 1),
        (0, 1),
        "additive",
        name="no-zero-cost",
        matrix=(
            (Fraction(1, 2), Fraction(1)),
            (Fraction(1), Fraction(1, 2)),
        ),
    )
    rep = error_exponent_bound(UNIFORM, costly, 0.05, 0.2, rate=0.25, n=16)
    assert not rep.feasible
    assert rep.exponent == math.inf
    assert rep.bound == 0.0
    assert rep.log2_bound == -math.inf


def test_optimizer_satisfies_constraints_and_attains_value():
    rep = error_exponent_bound(UNIFORM, HAMMING, 0.05, 0.1, rate=0.25, n=16)
    q = rep.optimizer
    assert q.shape == (2, 2)
    assert q.sum() == pytest.approx(1.0, abs=1e-7)
    row = q.sum(axis=1)
    assert np.all(row >= 0.45 - 1e-7) and np.all(row <= 0.55 + 1e-7)
    dmat = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert float((q * dmat).sum()) <= 0.1 + 1e-7
    col = q.sum(axis=0)
    ref = np.outer(UNIFORM.as_floats(), col)
    div = float((q * np.log2(np.maximum(q, 1e-300) / np.maximum(ref, 1e-300))).sum())
    assert div == pytest.approx(rep.exponent, abs=1e-6)


def test_bound_assembly_and_decay():
    reps = [
        error_exponent_bound(UNIFORM, HAMMING, 0.05, 0.1, rate=0.1, n=n)
        for n in (256, 1024, 4096)
    ]
    for rep in reps:
        want = 4 * math.log2(rep.n + 1) + rep.rate_floor - rep.n * rep.exponent
        assert rep.log2_bound == pytest.approx(want, abs=1e-9)
        assert rep.bound == pytest.approx(2.0**rep.log2_bound, rel=1e-12)
    # rate 0.1 sits far below the exponent, so the bound must collapse with n
    assert reps[0].log2_bound > reps[1].log2_bound > reps[2].log2_bound


def test_bound_handles_overflow_gracefully():
    # tiny exponent, huge rate floor: the 2^x lands above float range
    rep = error_exponent_bound(UNIFORM, HAMMING, 0.5, 0.75, rate=2, n=4096)
    assert rep.bound == math.inf or rep.bound > 1e300


def _random_rational_joint(rng, rows, cols):
    raw = [[int(rng.integers(1, 30)) for _ in range(cols)] for _ in range(rows)]
    total = sum(sum(r) for r in raw)
    masses = [[Fraction(v, total) for v in r] for r in raw]
    return JointDistribution.rational(tuple(range(rows)), tuple(range(cols)), masses)


def test_chain_identity_exact_on_random_rational_joints():
    rng = derive_rng(100, "chain-exact")
    for _ in range(50):
        rows = int(rng.integers(2, 4))
        cols = int(rng.integers(2, 4))
        joint = _random_rational_joint(rng, rows, cols)
        raw = [int(rng.integers(1, 20)) for _ in range(rows)]
        ref = Distribution.rational(
            tuple(range(rows)), [Fraction(v, sum(raw)) for v in raw]
        )
        rep = kl_chain_report(joint, ref)
        assert rep.mode == "rational"
        assert rep.identity_holds
        assert rep.total == pytest.approx(rep.marginal_term + rep.dependence_term, abs=1e-9)


def test_chain_identity_infinite_case():
    joint = JointDistribution.rational(
        (0, 1), ("a", "b"), [["1/4", "1/4"], ["1/4", "1/4"]]
    )
    ref = Distribution.point_mass((0, 1), 0)
    rep = kl_chain_report(joint, ref)
    assert rep.identity_holds
    assert rep.total == math.inf and rep.marginal_term == math.inf


def test_chain_identity_float_mode():
    joint = JointDistribution.from_floats(
        (0, 1), (0, 1), [[0.1, 0.3], [0.2, 0.4]]
    )
    ref = Distribution.from_floats((0, 1), [0.35, 0.65])
    rep = kl_chain_report(joint, ref)
    assert rep.mode == "float"
    assert rep.identity_holds


def test_chain_identity_alphabet_mismatch():
    joint = JointDistribution.rational((0, 1), (0, 1), [["1/4", "1/4"], ["1/4", "1/4"]])
    with pytest.raises(ValueError):
        kl_chain_report(joint, Distribution.uniform(("x", "y")))
