from fractions import Fraction

import numpy as np
import pytest

from seplab.distortion import (
    DistortionSpec,
    block_distortion,
    check_permutation_invariance,
    d_max,
    hamming,
    sorted_hamming,
)
from seplab.probability import Distribution


class TestBlockDistortion:
    def test_hamming_block(self):
        spec = hamming((0, 1))
        assert block_distortion(spec, (0, 1, 1, 0), (0, 0, 1, 1)) == 2

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            block_distortion(hamming((0, 1)), (0, 1), (0,))

    def test_empty_blocks_rejected(self):
        with pytest.raises(ValueError):
            block_distortion(hamming((0, 1)), (), ())

    def test_sorted_hamming_ignores_order(self):
        spec = sorted_hamming((0, 1))
        assert block_distortion(spec, (0, 1), (1, 0)) == 0
        assert block_distortion(spec, (0, 0), (1, 1)) == 2
        # depends only on the count difference for binary alphabets
        assert block_distortion(spec, (0, 1, 1, 1), (1, 1, 0, 0)) == 1

    def test_sorted_hamming_not_additive(self):
        # no per-letter matrix reproduces both d((0,1),(1,0))=0 and d((0,0),(1,1))=2
        spec = sorted_hamming((0, 1))
        with pytest.raises(ValueError):
            spec.letter(0, 1)


class TestInvariance:
    def test_additive_certified_by_construction(self):
        spec = hamming((0, 1))
        assert spec.is_certified(17)
        spec.require_certificate(17)

    def test_sorted_hamming_exhaustive_n4(self):
        spec = sorted_hamming((0, 1))
        report = check_permutation_invariance(spec, 4, mode="exhaustive")
        assert report.passed
        assert report.cases_checked == 24 * 16 * 16
        assert spec.is_certified(4)

    def test_position_weighted_counterexample(self):
        def weighted(x, y):
            return sum(i * (a != b) for i, (a, b) in enumerate(zip(x, y), start=1))

        spec = DistortionSpec(
            (0, 1), (0, 1), "general", name="position_weighted", evaluator=weighted
        )
        report = check_permutation_invariance(spec, 3, mode="exhaustive", record=False)
        assert not report.passed
        pi_image, x, y, d1, d2 = report.counterexample
        assert weighted(x, y) == d1
        assert d1 != d2
        assert not spec.is_certified(3)

    def test_uncertified_spec_refused(self):
        spec = sorted_hamming((0, 1))
        with pytest.raises(ValueError):
            spec.require_certificate(8)

    def test_trials_mode(self):
        spec = sorted_hamming((0, 1))
        rng = np.random.default_rng(0)
        report = check_permutation_invariance(spec, 12, mode="trials", trials=300, rng=rng)
        assert report.passed and report.cases_checked == 300
        assert spec.is_certified(12)

    def test_exhaustive_budget(self):
        with pytest.raises(ValueError):
            check_permutation_invariance(hamming((0, 1)), 7, mode="exhaustive")


class TestDmax:
    def test_uniform_binary_hamming(self):
        assert d_max(hamming((0, 1)), Distribution.uniform((0, 1))) == Fraction(1, 2)

    def test_skewed_source(self):
        p = Distribution.rational((0, 1), ("1/3", "2/3"))
        # constant reproduction 1 errs on the 0s only
        assert d_max(hamming((0, 1)), p) == Fraction(1, 3)

    def test_float_mode(self):
        p = Distribution.from_floats((0, 1), (0.25, 0.75))
        assert d_max(hamming((0, 1)), p) == pytest.approx(0.25)

    def test_general_spec_rejected(self):
        with pytest.raises(ValueError):
            d_max(sorted_hamming((0, 1)), Distribution.uniform((0, 1)))
