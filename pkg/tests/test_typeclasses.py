import math
from fractions import Fraction

import numpy as np
import pytest

from seplab.probability import Distribution
from seplab.typeclasses import (
    Permutation,
    UniformSourceSpec,
    achievable_type_count,
    achievable_types,
    base_blocklength,
    is_epsilon_typical,
    sample_uniform,
    type_class,
    type_of,
    typicality_count_bounds,
)


class TestTypeOf:
    def test_simple_count(self):
        t = type_of((0, 1, 1, 0, 1), (0, 1))
        assert t.masses == (Fraction(2, 5), Fraction(3, 5))

    def test_letter_outside_alphabet(self):
        with pytest.raises(ValueError):
            type_of((0, 2), (0, 1))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        seq = tuple(rng.integers(0, 3, size=12))
        for _ in range(20):
            pi = Permutation.random(12, rng)
            assert type_of(pi.apply(seq), (0, 1, 2)) == type_of(seq, (0, 1, 2))


class TestBaseBlocklength:
    def test_lcm_of_denominators(self):
        assert base_blocklength(Distribution.rational((0, 1), ("3/10", "7/10"))) == 10
        assert base_blocklength(Distribution.rational((0, 1), ("1/2", "1/2"))) == 2
        assert base_blocklength(Distribution.rational((0, 1, 2), ("1/2", "1/3", "1/6"))) == 6

    def test_float_mode_rejected(self):
        with pytest.raises(ValueError):
            base_blocklength(Distribution.from_floats((0, 1), (0.5, 0.5)))

    def test_uniform_source_spec(self):
        spec = UniformSourceSpec(Distribution.rational((0, 1), ("1/3", "2/3")))
        assert spec.n0 == 3
        assert spec.is_admissible(9) and not spec.is_admissible(10)
        assert spec.counts_at(6) == (2, 4)


class TestTypeClass:
    def test_cardinality_multinomial(self):
        handle = type_class(4, Distribution.uniform((0, 1)))
        assert handle.cardinality == 6

    def test_not_achievable(self):
        with pytest.raises(ValueError):
            type_class(2, Distribution.rational((0, 1), ("1/3", "2/3")))

    def test_members_lexicographic_and_complete(self):
        handle = type_class(4, Distribution.uniform((0, 1)))
        members = list(handle.members())
        assert members[0] == (0, 0, 1, 1)
        assert members == sorted(members)
        assert len(set(members)) == 6

    def test_enumeration_sums_over_all_types(self):
        # sum of type class sizes over all types equals |A|^n
        n, alphabet = 5, (0, 1, 2)
        total = sum(type_class(n, q).cardinality for q in achievable_types(n, alphabet))
        assert total == 3**5

    def test_canonical_is_lex_smallest(self):
        handle = type_class(4, Distribution.rational((0, 1), ("1/4", "3/4")))
        assert handle.canonical() == (0, 1, 1, 1)
        assert handle.canonical() == min(handle.members())

    def test_budget_guard(self):
        handle = type_class(30, Distribution.uniform((0, 1)))
        assert handle.cardinality > 10**6
        with pytest.raises(ValueError):
            list(handle.members())

    def test_contains(self):
        handle = type_class(4, Distribution.uniform((0, 1)))
        assert handle.contains((1, 0, 1, 0))
        assert not handle.contains((1, 1, 1, 0))


class TestAchievableTypes:
    def test_binary_n2(self):
        types = achievable_types(2, (0, 1))
        masses = [t.masses for t in types]
        assert masses == [
            (Fraction(0), Fraction(1)),
            (Fraction(1, 2), Fraction(1, 2)),
            (Fraction(1), Fraction(0)),
        ]

    def test_count_stars_and_bars(self):
        assert len(achievable_types(6, (0, 1, 2))) == achievable_type_count(6, 3)
        assert achievable_type_count(6, 3) == math.comb(8, 2)

    def test_lexicographic_order(self):
        types = achievable_types(3, (0, 1, 2))
        keys = [t.masses for t in types]
        assert keys == sorted(keys)


class TestSampling:
    def test_uniformity_five_sigma(self):
        handle = type_class(4, Distribution.uniform((0, 1)))
        members = list(handle.members())
        rng = np.random.default_rng(42)
        draws = 100_000
        counts = {m: 0 for m in members}
        for _ in range(draws):
            counts[sample_uniform(handle, rng)] += 1
        p = 1 / 6
        sigma = math.sqrt(p * (1 - p) / draws)
        for m in members:
            assert abs(counts[m] / draws - p) <= 5 * sigma

    def test_sample_has_right_type(self):
        handle = type_class(9, Distribution.rational((0, 1, 2), ("1/3", "1/3", "1/3")))
        rng = np.random.default_rng(1)
        for _ in range(50):
            assert handle.contains(handle.sample(rng))


class TestTypicality:
    def test_letterwise_window(self):
        p = Distribution.rational((0, 1), ("1/2", "1/2"))
        assert is_epsilon_typical((0, 0, 1, 1), p, 0)
        assert is_epsilon_typical((0, 1, 1, 1), p, "1/4")
        assert not is_epsilon_typical((0, 1, 1, 1), p, "1/5")

    def test_negative_epsilon_rejected(self):
        with pytest.raises(ValueError):
            is_epsilon_typical((0, 1), Distribution.uniform((0, 1)), -0.1)

    def test_count_bounds_match_predicate(self):
        p = Distribution.rational((0, 1), ("1/3", "2/3"))
        n = 9
        bounds = typicality_count_bounds(n, p, "1/9")
        handle_ok = type_class(n, Distribution.rational((0, 1), ("2/9", "7/9")))
        seq = handle_ok.canonical()
        zeros = seq.count(0)
        agrees = bounds[0][0] <= zeros <= bounds[0][1]
        assert agrees == is_epsilon_typical(seq, p, "1/9")


class TestPermutation:
    def test_identity(self):
        assert Permutation.identity(3).apply((5, 6, 7)) == (5, 6, 7)

    def test_non_bijection_rejected(self):
        with pytest.raises(ValueError):
            Permutation((0, 0, 2))
