import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from stratmc.discrete import DiscreteDist
from stratmc.errors import PreconditionError, StratError
from stratmc.estimators import replicate
from stratmc.exact_dist import cdf_sup_censored, dist_integral, dist_integral_censored, dist_sup
from stratmc.function_model import PiecewiseConstantFn
from stratmc.generators import random_majorization_pair
from stratmc.measure_space import coarsest_partition, finest_partition
from stratmc.orders import (
    GridDensity,
    MajorizationVector,
    block_average,
    conditional_split_st,
    dkw_band,
    dkw_validate,
    dominates_cx,
    dominates_icx,
    dominates_st,
    dominates_st_cdf,
    increasing_sets,
    is_mtp2,
    karlin_novikoff_check,
    majorizes,
    mixture_max_check,
)

HALF = F(1, 2)
point = DiscreteDist.point_mass


def binom2(p):
    p = F(p)
    return DiscreteDist.from_pairs([(0, (1 - p) ** 2), (HALF, 2 * p * (1 - p)), (1, p * p)])


class TestMajorization:
    def test_examples(self):
        assert majorizes((2, 0), (1, 1))
        assert not majorizes((1, 1), (2, 0))
        assert majorizes(MajorizationVector((1, 1, 0, 0)), MajorizationVector((HALF,) * 4))

    def test_unequal_totals(self):
        assert not majorizes((2, 0), (1, 0))

    def test_expanded(self):
        assert MajorizationVector.expanded([HALF, 1], [2, 1]).entries == (HALF, HALF, 1)

    def test_block_average(self):
        assert block_average((1, 1, 0, 0), [[0, 2], [1, 3]]) == [HALF] * 4


class TestStochasticOrder:
    def test_point_masses(self):
        assert dominates_st(point(0), point(1))
        assert not dominates_st(point(1), point(0))

    def test_sup_laws_of_the_three_valued_function(self, three_valued, halves):
        coarse, fine = halves
        assert dominates_st(dist_sup(three_valued, coarse), dist_sup(three_valued, fine))

    def test_crossing_cdfs(self):
        v = dominates_st(binom2(HALF), point(HALF))
        assert not v and v.witness == HALF

    def test_verdict_is_bool_like(self):
        v = dominates_st(point(0), point(1))
        assert v == True  # noqa: E712
        assert v.report(point(0), point(1))["result"] is True
        assert len(v.report(1)["inputs_digest"]) == 16


class TestCensoredCdfOrder:
    def test_reflexive(self):
        f = PiecewiseConstantFn.step([HALF], [F(1, 4), F(3, 4)], declared_range=True)
        c = cdf_sup_censored(f, finest_partition(2))
        assert dominates_st_cdf(c, c)

    def test_constant_function_gives_equal_laws(self):
        f = PiecewiseConstantFn.constant(HALF, declared_range=True)
        lo, hi = cdf_sup_censored(f, coarsest_partition(2)), cdf_sup_censored(f, finest_partition(2))
        assert all(lo(t) == hi(t) for t in lo.evaluation_grid(8))
        assert dominates_st_cdf(lo, hi)

    def test_three_valued_unit_range(self):
        f = PiecewiseConstantFn.step([F(1, 2), F(3, 4)], [F(1, 2), F(1, 4), F(3, 4)], declared_range=True)
        assert dominates_st_cdf(cdf_sup_censored(f, coarsest_partition(2)), cdf_sup_censored(f, finest_partition(2)))

    def test_breakpoints_must_match(self):
        a = cdf_sup_censored(PiecewiseConstantFn.constant(HALF, declared_range=True), coarsest_partition(1))
        b = cdf_sup_censored(PiecewiseConstantFn.constant(F(1, 3), declared_range=True), coarsest_partition(1))
        with pytest.raises(PreconditionError):
            dominates_st_cdf(a, b)


class TestConvexOrder:
    def test_counterexample_is_incomparable(self, three_valued, halves):
        coarse, fine = halves
        law_c, law_f = dist_integral(three_valued, coarse), dist_integral(three_valued, fine)
        v = dominates_cx(law_f, law_c)
        assert not v and v.witness == 4 and v.reason == "stop-loss"
        assert law_f.stop_loss(4) == HALF and law_c.stop_loss(4) == F(3, 8)
        w = dominates_cx(law_c, law_f)
        assert not w and w.reason == "stop-loss"
        # any reported witness must be a genuine violation
        assert law_c.stop_loss(w.witness) > law_f.stop_loss(w.witness)
        assert law_c.stop_loss(5) > law_f.stop_loss(5)

    def test_point_mass_at_the_mean(self, three_valued, halves):
        law = dist_integral(three_valued, halves[0])
        assert dominates_cx(point(law.mean), law)

    def test_censored_refinement(self):
        f = PiecewiseConstantFn.step([F(1, 4), F(3, 4)], [1, 0, F(1, 2)], declared_range=True)
        assert dominates_cx(dist_integral_censored(f, finest_partition(4)), dist_integral_censored(f, coarsest_partition(4)))

    def test_mean_mismatch(self):
        v = dominates_cx(point(0), point(1))
        assert not v and v.reason == "mean"


class TestIncreasingConvexOrder:
    def test_shift(self, three_valued, halves):
        law = dist_integral(three_valued, halves[0])
        assert dominates_icx(law, law.map(lambda v: v + 1))

    def test_point_masses(self):
        assert not dominates_icx(point(1), point(0))

    def test_binomials(self):
        assert dominates_icx(binom2(HALF), binom2(F(3, 4)))


class TestMtp2:
    def test_examples(self):
        assert is_mtp2(GridDensity(np.array([[1, 1], [1, 1]])))
        assert is_mtp2(GridDensity(np.array([[3, 2], [2, 3]])))
        assert not is_mtp2(GridDensity(np.array([[2, 3], [3, 2]])))

    def test_non_lattice_support(self):
        assert not is_mtp2(GridDensity(np.array([[0, 1], [1, 0]])))

    def test_normalises(self):
        g = GridDensity(np.array([[1, 1], [1, 1]]))
        assert g.values[0, 0] == F(1, 4)


class TestConditionalSplit:
    def test_uniform_top_corner(self):
        g = GridDensity(np.ones((2, 2), dtype=int))
        G = np.array([[False, False], [False, True]])
        assert conditional_split_st(g, G)

    def test_whole_grid_is_rejected(self):
        with pytest.raises(StratError):
            conditional_split_st(GridDensity(np.ones((2, 2), dtype=int)), np.ones((2, 2), dtype=bool))

    def test_non_increasing_set_is_rejected(self):
        with pytest.raises(StratError):
            conditional_split_st(GridDensity(np.ones((2, 2), dtype=int)), np.array([[True, False], [False, False]]))

    def test_negatively_dependent_grid_can_fail(self):
        g = GridDensity(np.array([[1, 8], [8, 1]]))
        G = np.array([[False, False], [True, True]])
        assert not conditional_split_st(g, G)

    def test_increasing_sets_count(self):
        # monotone Boolean functions on a 2x2 poset: 6 up-sets
        assert len(increasing_sets((2, 2))) == 6
        assert len(increasing_sets((3,))) == 4


class TestKarlinNovikoff:
    def test_examples(self):
        assert karlin_novikoff_check((HALF, HALF), (1, 0))
        assert karlin_novikoff_check((F(1, 3),) * 3, (1, 0, 0))

    def test_precondition(self):
        with pytest.raises(PreconditionError):
            karlin_novikoff_check((1, 0), (HALF, HALF))


class TestMixtureMax:
    def test_identical_blocks(self):
        law = DiscreteDist.from_pairs([(0, HALF), (1, HALF)])
        assert mixture_max_check([(law, 1), (law, 2)], [[0, 1]])

    def test_two_point_masses(self):
        assert mixture_max_check([(point(0), 1), (point(1), 1)], [[0, 1]])

    def test_grouping_must_cover(self):
        with pytest.raises(StratError):
            mixture_max_check([(point(0), 1), (point(1), 1)], [[0]])


class TestDkw:
    def test_band(self):
        assert dkw_band(10_000, 0.01) == pytest.approx(0.01628, abs=1e-5)

    def test_constant(self):
        rep = replicate("INT", PiecewiseConstantFn.constant(2), finest_partition(2), seed=0, R=100)
        res = dkw_validate(rep, point(2))
        assert res.discrepancy == 0 and res.passed

    def test_shifted_law_fails(self, three_valued, halves):
        coarse = halves[0]
        rep = replicate("INT", three_valued, coarse, seed=0, R=10_000)
        law = dist_integral(three_valued, coarse)
        assert dkw_validate(rep, law).passed
        assert not dkw_validate(rep, law.map(lambda v: v + HALF)).passed

    def test_continuous_callable(self):
        f = PiecewiseConstantFn.constant(1, declared_range=True)
        rep = replicate("CSUP", f, coarsest_partition(1), seed=1, R=5000)
        assert dkw_validate(rep, lambda t: min(max(t, 0), 1)).passed

    def test_needs_enough_replicates(self):
        rep = replicate("INT", PiecewiseConstantFn.constant(2), finest_partition(2), seed=0, R=10)
        with pytest.raises(PreconditionError):
            dkw_validate(rep, point(2))


# -- property tests -------------------------------------------------------------

fracs = st.fractions(min_value=-3, max_value=3, max_denominator=12)
vectors = st.lists(fracs, min_size=1, max_size=6)


def laws(max_size=5):
    @st.composite
    def build(draw):
        vals = draw(st.lists(fracs, min_size=1, max_size=max_size, unique=True))
        weights = draw(st.lists(st.integers(1, 9), min_size=len(vals), max_size=len(vals)))
        total = sum(weights)
        return DiscreteDist.from_pairs((v, F(w, total)) for v, w in zip(vals, weights))

    return build()


def groupings(n):
    @st.composite
    def build(draw):
        labels = draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n))
        groups = {}
        for i, g in enumerate(labels):
            groups.setdefault(g, []).append(i)
        return list(groups.values())

    return build()


@given(x=vectors)
def test_majorization_is_reflexive(x):
    assert majorizes(x, x)
    assert majorizes(x, list(reversed(x)))


@given(data=st.data(), x=vectors)
def test_block_averages_are_majorized_and_transitive(data, x):
    y = block_average(x, data.draw(groupings(len(x))))
    z = block_average(y, data.draw(groupings(len(x))))
    assert majorizes(x, y) and majorizes(y, z) and majorizes(x, z)


@given(seed=st.integers(0, 10**6))
def test_doubly_stochastic_images_are_majorized(seed):
    p, q = random_majorization_pair(random.Random(seed))
    assert majorizes(q, p)
    assert karlin_novikoff_check(p, q)


@given(x=laws(), y=laws())
def test_cx_implies_equal_means_and_ordered_variances(x, y):
    if dominates_cx(x, y):
        assert x.mean == y.mean and x.variance <= y.variance
    if dominates_st(x, y):
        assert x.mean <= y.mean and dominates_icx(x, y)


@given(x=laws(), z=laws(3))
def test_adding_independent_mean_zero_noise_is_cx_larger(x, z):
    noise = z.map(lambda v: v - z.mean)
    assert dominates_cx(x, x.convolve(noise))


@given(x=laws(), y=laws())
def test_st_is_antisymmetric(x, y):
    if dominates_st(x, y) and dominates_st(y, x):
        assert x == y


@given(x=laws())
def test_orders_are_reflexive(x):
    assert dominates_st(x, x) and dominates_cx(x, x) and dominates_icx(x, x)


@given(x=laws(), z=laws(3))
def test_cx_witness_is_a_real_violation(x, z):
    assume(len(z.support) > 1)
    spread = x.convolve(z.map(lambda v: v - z.mean))
    v = dominates_cx(spread, x)
    assert not v and v.reason == "stop-loss"
    assert spread.stop_loss(v.witness) > x.stop_loss(v.witness)


@st.composite
def mtp2_grids(draw):
    shape = draw(st.sampled_from([(2, 2), (2, 3), (3, 2), (3, 3), (2, 2, 2), (4,), (2, 5)]))
    # log-supermodular weights a_i * b_j * c^(i*j) with c >= 1 are MTP2
    axes = [draw(st.lists(st.integers(1, 5), min_size=s, max_size=s)) for s in shape]
    c = draw(st.integers(1, 3))
    vals = np.empty(shape, dtype=object)
    for idx in np.ndindex(*shape):
        w = F(1)
        for ax, i in zip(axes, idx):
            w *= ax[i]
        inter = sum(idx[a] * idx[b] for a in range(len(idx)) for b in range(a + 1, len(idx)))
        vals[idx] = w * c**inter
    return GridDensity(vals)


@given(g=mtp2_grids(), data=st.data())
def test_mtp2_grids_split_in_stochastic_order(g, data):
    assert is_mtp2(g)
    axis = data.draw(st.integers(0, len(g.shape) - 1))
    a = data.draw(st.integers(1, g.shape[axis] - 1))
    G = np.zeros(g.shape, dtype=bool)
    index = [slice(None)] * len(g.shape)
    index[axis] = slice(a, None)
    G[tuple(index)] = True
    assert conditional_split_st(g, G)


@given(data=st.data())
def test_mixture_max_on_random_block_systems(data):
    m = data.draw(st.integers(1, 5))
    blocks = [(data.draw(laws(4)), data.draw(st.integers(1, 3))) for _ in range(m)]
    assert mixture_max_check(blocks, data.draw(groupings(m)))
