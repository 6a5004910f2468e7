import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seplab.probability import (
    Distribution,
    ExactLogValue,
    JointDistribution,
    entropy,
    entropy_exact,
    information_density,
    kl_divergence,
    kl_divergence_exact,
    mi_bits,
    mutual_information,
)

# Frozen expected values, each recomputed from its defining formula here.
ENTROPY_QUARTER = -(0.25 * math.log2(0.25) + 0.75 * math.log2(0.75))  # 0.811278
KL_HALF_VS_QUARTER = 0.5 * math.log2(0.5 / 0.25) + 0.5 * math.log2(0.5 / 0.75)  # 0.207519


def binary_entropy(x: float) -> float:
    return -(x * math.log2(x) + (1 - x) * math.log2(1 - x))


def bsc_rows(p: float):
    return [[1 - p, p], [p, 1 - p]]


class TestDistribution:
    def test_rational_sum_must_be_exact(self):
        with pytest.raises(ValueError):
            Distribution.rational((0, 1), (Fraction(1, 2), Fraction(1, 3)))

    def test_float_sum_tolerance(self):
        Distribution.from_floats((0, 1), (0.5, 0.5 + 5e-13))
        with pytest.raises(ValueError):
            Distribution.from_floats((0, 1), (0.5, 0.51))

    def test_negative_mass_rejected(self):
        with pytest.raises(ValueError):
            Distribution.rational((0, 1), (Fraction(3, 2), Fraction(-1, 2)))

    def test_duplicate_symbols_rejected(self):
        with pytest.raises(ValueError):
            Distribution.uniform((0, 0))

    def test_json_round_trip_rational(self):
        p = Distribution.rational((0, 1, 2), ("1/6", "1/3", "1/2"))
        blob = p.to_json()
        assert json.loads(blob)["masses"] == ["1/6", "1/3", "1/2"]
        assert Distribution.from_json(blob) == p

    def test_json_round_trip_float(self):
        p = Distribution.from_floats(("a", "b"), (0.25, 0.75))
        assert Distribution.from_json(p.to_json()) == p

    def test_decimal_string_coercion(self):
        p = Distribution.rational((0, 1), ("0.3", "0.7"))
        assert p.mass(0) == Fraction(3, 10)

    def test_point_mass_and_support(self):
        p = Distribution.point_mass((0, 1, 2), 1)
        assert p.support == (1,)
        assert entropy(p) == 0.0


class TestJoint:
    def test_marginals_of_product(self):
        p = Distribution.rational((0, 1), ("1/3", "2/3"))
        q = Distribution.rational(("a", "b"), ("1/4", "3/4"))
        j = JointDistribution.product(p, q)
        assert j.marginal_row() == p
        assert j.marginal_col() == q

    def test_flatten_preserves_mass(self):
        j = JointDistribution.rational((0, 1), (0, 1), [["1/2", "1/8"], ["1/8", "1/4"]])
        flat = j.flatten()
        assert sum(flat.masses) == 1
        assert flat.mass((0, 0)) == Fraction(1, 2)


class TestEntropy:
    def test_uniform_binary(self):
        assert entropy(Distribution.uniform((0, 1))) == pytest.approx(1.0, abs=1e-12)

    def test_quarter_three_quarter(self):
        p = Distribution.rational((0, 1), ("1/4", "3/4"))
        assert entropy(p) == pytest.approx(ENTROPY_QUARTER, abs=1e-12)
        assert entropy(p) == pytest.approx(0.811278, abs=1e-6)

    def test_exact_matches_float(self):
        p = Distribution.rational((0, 1, 2), ("1/6", "1/3", "1/2"))
        assert entropy_exact(p).to_float() == pytest.approx(entropy(p), abs=1e-12)


class TestKl:
    def test_known_value(self):
        p = Distribution.uniform((0, 1))
        q = Distribution.rational((0, 1), ("1/4", "3/4"))
        assert kl_divergence(p, q) == pytest.approx(KL_HALF_VS_QUARTER, abs=1e-12)
        assert kl_divergence(p, q) == pytest.approx(0.207519, abs=1e-6)

    def test_support_violation_is_infinite(self):
        p = Distribution.uniform((0, 1))
        q = Distribution.point_mass((0, 1), 0)
        assert kl_divergence(p, q) == math.inf
        assert kl_divergence_exact(p, q).infinite

    def test_alphabet_mismatch(self):
        with pytest.raises(ValueError):
            kl_divergence(Distribution.uniform((0, 1)), Distribution.uniform((0, 2)))


def rational_pmfs(size: int):
    """Strategy: pmfs with masses k/total over a fixed alphabet."""
    return (
        st.lists(st.integers(min_value=0, max_value=12), min_size=size, max_size=size)
        .filter(lambda ws: sum(ws) > 0)
        .map(
            lambda ws: Distribution.rational(
                tuple(range(size)), tuple(Fraction(w, sum(ws)) for w in ws)
            )
        )
    )


class TestKlProperties:
    @settings(max_examples=60, deadline=None)
    @given(rational_pmfs(3), rational_pmfs(3))
    def test_nonnegative_and_zero_iff_equal(self, p, q):
        value = kl_divergence_exact(p, q)
        if value.infinite:
            assert any(pm > 0 and qm == 0 for pm, qm in zip(p.masses, q.masses))
            return
        assert value.to_float() >= -1e-12
        assert value.is_zero() == (p.masses == q.masses)

    @settings(max_examples=40, deadline=None)
    @given(rational_pmfs(4))
    def test_self_divergence_is_exactly_zero(self, p):
        assert kl_divergence_exact(p, p).is_zero()


def random_rational_joint(rng: np.random.Generator, rows: int, cols: int) -> JointDistribution:
    weights = rng.integers(0, 12, size=(rows, cols))
    if weights.sum() == 0:
        weights[0, 0] = 1
    total = int(weights.sum())
    masses = [[Fraction(int(w), total) for w in row] for row in weights]
    return JointDistribution.rational(tuple(range(rows)), tuple(range(cols)), masses)


class TestChainIdentity:
    """D(q_ZY || p x q_Y) = D(q_Z || p) + D(q_ZY || q_Z x q_Y), exactly."""

    def _terms(self, joint, p):
        q_z = joint.marginal_row()
        q_y = joint.marginal_col()
        flat = joint.flatten()
        ref_outer = JointDistribution.product(p, q_y).flatten()
        ref_inner = JointDistribution.product(q_z, q_y).flatten()
        return (
            kl_divergence_exact(flat, ref_outer),
            kl_divergence_exact(q_z, p),
            kl_divergence_exact(flat, ref_inner),
        )

    def test_exact_on_seeded_random_joints(self):
        rng = np.random.default_rng(7)
        p = Distribution.rational((0, 1, 2), ("1/6", "1/3", "1/2"))
        for _ in range(100):
            joint = random_rational_joint(rng, 3, 3)
            lhs, mid, inner = self._terms(joint, p)
            assert lhs == mid + inner

    def test_float_mode_within_1e_10(self):
        rng = np.random.default_rng(11)
        p = Distribution.from_floats((0, 1), (0.3, 0.7))
        for _ in range(100):
            w = rng.random((2, 2))
            w /= w.sum()
            joint = JointDistribution.from_floats((0, 1), (0, 1), w)
            q_z = joint.marginal_row()
            q_y = joint.marginal_col()
            flat = joint.flatten()
            lhs = kl_divergence(flat, JointDistribution.product(p, q_y).flatten())
            rhs = kl_divergence(q_z, p) + kl_divergence(flat, JointDistribution.product(q_z, q_y).flatten())
            assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_infinite_case_still_holds(self):
        joint = JointDistribution.rational((0, 1), (0, 1), [["1/2", "1/4"], ["1/8", "1/8"]])
        p = Distribution.point_mass((0, 1), 1)  # q_Z has mass outside p's support
        lhs, mid, inner = self._terms(joint, p)
        assert lhs.infinite and mid.infinite and not inner.infinite
        assert lhs == mid + inner


class TestMutualInformation:
    def test_bsc_point_one(self):
        p = Distribution.uniform((0, 1))
        value = mutual_information(p, bsc_rows(0.1))
        assert value == pytest.approx(1 - binary_entropy(0.1), abs=1e-12)
        assert value == pytest.approx(0.531004, abs=1e-6)

    def test_matches_joint_vs_product_divergence(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            q = rng.random(3)
            q /= q.sum()
            rows = rng.random((3, 4))
            rows /= rows.sum(axis=1, keepdims=True)
            joint = np.outer(q, np.ones(4)) * rows
            marg_out = joint.sum(axis=0)
            ref = np.outer(q, marg_out)
            mask = joint > 0
            direct = float(np.sum(joint[mask] * np.log2(joint[mask] / ref[mask])))
            assert mi_bits(q, rows) == pytest.approx(direct, abs=1e-10)

    def test_zero_mass_inputs_ignored(self):
        p = Distribution.rational((0, 1, 2), ("1/2", "1/2", "0"))
        rows = [[1, 0], [0, 1], [0.5, 0.5]]
        assert mutual_information(p, rows) == pytest.approx(1.0, abs=1e-12)


class TestInformationDensity:
    def test_known_value(self):
        p = Distribution.uniform((0, 1))
        value = information_density(0, 0, p, bsc_rows(0.1), output_alphabet=(0, 1))
        assert value == pytest.approx(math.log2(0.9 / 0.5), abs=1e-12)
        assert value == pytest.approx(0.847997, abs=1e-6)

    def test_expectation_equals_mutual_information(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            qv = rng.random(3)
            qv /= qv.sum()
            rows = rng.random((3, 3))
            rows /= rows.sum(axis=1, keepdims=True)
            p = Distribution.from_floats((0, 1, 2), qv)
            expectation = 0.0
            for i, a in enumerate(p.alphabet):
                for b in range(3):
                    mass = qv[i] * rows[i][b]
                    if mass > 0:
                        expectation += mass * information_density(a, b, p, rows)
            assert expectation == pytest.approx(mi_bits(qv, rows), abs=1e-10)

    def test_zero_probability_output_rejected(self):
        p = Distribution.uniform((0, 1))
        rows = [[1, 0], [1, 0]]
        with pytest.raises(ValueError):
            information_density(0, 1, p, rows)


class TestExactLogValue:
    def test_log_algebra(self):
        v = ExactLogValue.log2_of(Fraction(8)) - ExactLogValue.log2_of(Fraction(2))
        assert v == ExactLogValue.log2_of(Fraction(4))
        assert v.to_float() == pytest.approx(2.0, abs=1e-15)

    def test_distinct_primes_not_equal(self):
        assert ExactLogValue.log2_of(Fraction(3)) != ExactLogValue.log2_of(Fraction(5))

    def test_infinity_absorbs(self):
        inf = ExactLogValue.infinity()
        finite = ExactLogValue.log2_of(Fraction(3, 2))
        assert (inf + finite).infinite
        assert inf == inf + finite
