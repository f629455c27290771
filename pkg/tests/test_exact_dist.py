import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from stratmc import enumeration
from stratmc.discrete import DiscreteDist
from stratmc.errors import PreconditionError, RangeError, SupportSizeError
from stratmc.exact_dist import (
    cdf_sup_censored,
    dist_integral,
    dist_integral_censored,
    dist_sup,
    lp_loss,
    poisson_binomial,
    q_coefficient,
    variance_integral_noisy,
)
from stratmc.function_model import NoiseSpec, PiecewiseConstantFn, global_mean
from stratmc.generators import random_instance, random_monotone_grid_function, random_split_sequence
from stratmc.measure_space import BaseMeasure, Box, Partition, Stratum, coarsest_partition, finest_partition, merge_strata

HALF = F(1, 2)


def law(pairs):
    return DiscreteDist.from_pairs(pairs)


class TestSup:
    def test_constant(self):
        assert dist_sup(PiecewiseConstantFn.constant(3), finest_partition(3)) == DiscreteDist.point_mass(3)

    def test_three_valued(self, three_valued, halves):
        coarse, fine = halves
        assert dist_sup(three_valued, coarse) == law([(2, F(1, 16)), (4, F(8, 16)), (6, F(7, 16))])
        assert dist_sup(three_valued, fine) == law([(4, HALF), (6, HALF)])

    def test_matches_enumeration(self, three_valued, halves):
        for p in halves:
            assert dist_sup(three_valued, p) == enumeration.enumerate_sup(three_valued, p)


class TestCensoredSup:
    def test_q_values(self):
        f = PiecewiseConstantFn.constant(HALF, declared_range=True)
        s = coarsest_partition(1).strata[0]
        assert q_coefficient(f, s, None, F(1, 4)) == F(3, 4)
        assert q_coefficient(f, s, None, 1) == 1

    def test_q_requires_range(self, three_valued):
        with pytest.raises(RangeError):
            q_coefficient(three_valued, coarsest_partition(1).strata[0], None, HALF)

    def test_zero_function(self):
        cdf = cdf_sup_censored(PiecewiseConstantFn.constant(0, declared_range=True), finest_partition(3))
        assert cdf.atom_at_zero == 1
        assert all(cdf(t) == 1 for t in (0, F(1, 3), HALF, 1))

    def test_one_function_is_uniform(self):
        cdf = cdf_sup_censored(PiecewiseConstantFn.constant(1, declared_range=True), coarsest_partition(1))
        assert all(cdf(F(j, 7)) == F(j, 7) for j in range(8))

    def test_half_function(self):
        cdf = cdf_sup_censored(PiecewiseConstantFn.constant(HALF, declared_range=True), coarsest_partition(1))
        for t in (0, F(1, 8), F(1, 4), HALF, F(3, 4), F(99, 100)):
            assert cdf(t) == min(t, HALF) + HALF
        assert cdf.atom_at_zero == HALF
        assert cdf(-F(1, 10)) == 0 and cdf.cdf_left(0) == 0

    def test_merge_identity_for_q(self):
        rng = random.Random(3)
        for _ in range(20):
            f = random_instance(rng, unit_range=True).f
            fine = finest_partition(4)
            coarse, _ = merge_strata(fine, [[0, 1], [2, 3]])
            for t in (0, F(1, 5), HALF, F(7, 9), 1):
                for c, (a, b) in enumerate(((0, 1), (2, 3))):
                    qc = q_coefficient(f, coarse.strata[c], None, t)
                    qa = q_coefficient(f, fine.strata[a], None, t)
                    qb = q_coefficient(f, fine.strata[b], None, t)
                    assert qc == (qa + qb) / 2

    def test_matches_subset_enumeration(self):
        f = PiecewiseConstantFn.step([F(1, 3), F(2, 3)], [F(1, 4), F(3, 4), F(1, 2)], declared_range=True)
        for p in (coarsest_partition(2), finest_partition(2), finest_partition(3)):
            cdf = cdf_sup_censored(f, p)
            for t in cdf.evaluation_grid(5):
                assert cdf(t) == enumeration.enumerate_censored_sup_cdf(f, p, t)


class TestIntegral:
    def test_three_valued(self, three_valued, halves):
        coarse, fine = halves
        assert dist_integral(three_valued, coarse) == law(zip(range(2, 7), [F(c, 16) for c in (1, 4, 6, 4, 1)]))
        assert dist_integral(three_valued, fine) == law([(3, HALF), (5, HALF)])

    def test_constant(self):
        assert dist_integral(PiecewiseConstantFn.constant(F(2, 3)), finest_partition(4)) == DiscreteDist.point_mass(F(2, 3))

    def test_support_cap(self):
        f = PiecewiseConstantFn.step([F(j, 8) for j in range(1, 8)], [F(j, 61) for j in (0, 3, 7, 13, 19, 29, 41, 60)])
        with pytest.raises(SupportSizeError):
            dist_integral(f, coarsest_partition(6), support_cap=100)

    def test_large_support_path_agrees(self):
        f = PiecewiseConstantFn.step([HALF], [0, F(1, 100003)])
        p = coarsest_partition(3)
        assert dist_integral(f, p) == law([(0, F(1, 8)), (F(1, 300009), F(3, 8)), (F(2, 300009), F(3, 8)), (F(1, 100003), F(1, 8))])

    def test_requires_uniform_base(self, three_valued):
        skewed = BaseMeasure(1, (lambda w: w,))
        with pytest.raises(PreconditionError):
            dist_integral(three_valued, coarsest_partition(2, skewed))


class TestCensoredIntegral:
    def test_half_function(self):
        f = PiecewiseConstantFn.constant(HALF, declared_range=True)
        expected = law([(0, F(1, 4)), (HALF, HALF), (1, F(1, 4))])
        assert dist_integral_censored(f, coarsest_partition(2)) == expected
        assert dist_integral_censored(f, finest_partition(2)) == expected

    def test_one_function(self):
        f = PiecewiseConstantFn.constant(1, declared_range=True)
        assert dist_integral_censored(f, finest_partition(3)) == DiscreteDist.point_mass(1)

    def test_deterministic_successes(self):
        f = PiecewiseConstantFn.step([HALF], [1, 0], declared_range=True)
        assert dist_integral_censored(f, finest_partition(2)) == DiscreteDist.point_mass(HALF)

    def test_poisson_binomial_brute_force(self):
        ps = [F(1, 3), F(1, 2), F(4, 5), 0]
        acc = {}
        for bits in itertools.product((0, 1), repeat=len(ps)):
            w = F(1)
            for b, q in zip(bits, ps):
                w *= q if b else 1 - q
            acc[sum(bits)] = acc.get(sum(bits), 0) + w
        assert poisson_binomial(ps) == DiscreteDist.from_mapping(acc)


class TestNoisyVariance:
    def test_three_valued(self, three_valued, halves):
        coarse, fine = halves
        assert variance_integral_noisy(three_valued, coarse) == 1
        assert variance_integral_noisy(three_valued, fine) == 1

    def test_pure_noise(self):
        f = PiecewiseConstantFn.constant(7)
        assert variance_integral_noisy(f, finest_partition(4), noise=NoiseSpec.gaussian(1)) == F(1, 4)
        assert variance_integral_noisy(f, finest_partition(4), noise=NoiseSpec.two_point(2)) == 1


class TestLoss:
    def test_three_valued(self, three_valued, halves):
        coarse, fine = halves
        assert lp_loss(dist_integral(three_valued, coarse), 4, 1) == F(12, 16)
        assert lp_loss(dist_integral(three_valued, fine), 4, 1) == 1
        assert lp_loss(dist_integral(three_valued, fine), 4, 2) == 1

    def test_point_mass(self):
        d = DiscreteDist.point_mass(F(2, 9))
        assert lp_loss(d, F(2, 9), 1) == 0
        assert lp_loss(d, F(2, 9), 2.5) == 0.0

    def test_fractional_power_is_float(self):
        d = law([(0, HALF), (1, HALF)])
        assert lp_loss(d, 0, 1.5) == pytest.approx(0.5)


# -- property tests against the enumeration oracle ---------------------------

small = st.builds(lambda seed: random_instance(random.Random(seed), max_n=4, max_values=3, max_cells=4),
                  st.integers(0, 10**6))


@given(inst=small)
def test_sup_law_matches_enumeration(inst):
    for p in (inst.coarse, inst.fine):
        assert dist_sup(inst.f, p) == enumeration.enumerate_sup(inst.f, p)


@given(inst=small)
def test_integral_law_matches_enumeration(inst):
    for p in (inst.coarse, inst.fine):
        assert dist_integral(inst.f, p) == enumeration.enumerate_integral(inst.f, p)


@given(inst=small)
def test_censored_integral_law_matches_enumeration(inst):
    for p in (inst.coarse, inst.fine):
        assert dist_integral_censored(inst.f, p) == enumeration.enumerate_integral_censored(inst.f, p)


@given(seed=st.integers(0, 10**6), t=st.fractions(0, 1, max_denominator=40))
def test_censored_sup_cdf_matches_enumeration(seed, t):
    inst = random_instance(random.Random(seed), max_n=3, max_values=3, max_cells=4)
    for p in (inst.coarse, inst.fine):
        assert cdf_sup_censored(inst.f, p)(t) == enumeration.enumerate_censored_sup_cdf(inst.f, p, t)


@given(inst=small)
def test_integral_is_unbiased_with_decomposed_variance(inst):
    for p in (inst.coarse, inst.fine):
        d = dist_integral(inst.f, p)
        assert d.mean == global_mean(inst.f)
        assert d.variance == variance_integral_noisy(inst.f, p)
        assert dist_integral_censored(inst.f, p).mean == global_mean(inst.f)


@given(seed=st.integers(0, 10**6))
def test_two_dimensional_split_laws_match_enumeration(seed):
    rng = random.Random(seed)
    f = random_monotone_grid_function(rng, d=2, max_cells_per_axis=2)
    seq = random_split_sequence(rng, rng.randint(2, 3), 2, 3)
    p = seq[-1]
    assert dist_integral(f, p) == enumeration.enumerate_integral(f, p)
    assert dist_sup(f, p) == enumeration.enumerate_sup(f, p)


def test_disconnected_stratum_law():
    f = PiecewiseConstantFn.step([F(1, 4), HALF, F(3, 4)], [0, 1, 2, 3])
    p = Partition((
        Stratum((Box((0,), (F(1, 4),)), Box((HALF,), (F(3, 4),))), 1),
        Stratum((Box((F(1, 4),), (HALF,)), Box((F(3, 4),), (1,))), 1),
    ), 2)
    assert dist_integral(f, p) == enumeration.enumerate_integral(f, p)
    assert dist_integral(f, p).as_dict() == {F(1, 2): F(1, 4), F(3, 2): HALF, F(5, 2): F(1, 4)}
