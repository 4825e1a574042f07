import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from theons.space import (CoordinateAccessError, Injection, LevelPoint, Mask, MaskedPoint, SpaceDescriptor,
                          all_orders, colex_rank, colex_subsets, grid_cell, interleave_weights, lex_permutations,
                          perm_index, pullback_order, pullback_point, r_sets, sample_point, sample_points,
                          split_weight)

D1 = SpaceDescriptor(1, 1)


def test_descriptor_validation():
    with pytest.raises(ValueError):
        SpaceDescriptor(0, 0)
    with pytest.raises(ValueError):
        SpaceDescriptor(1, -1)


def test_r_sets_examples():
    assert r_sets([1]) == [(1,)]
    assert r_sets([1, 2]) == [(1,), (2,), (1, 2)]
    assert r_sets([1, 2, 3], 1) == [(1,), (2,), (3,)]


@given(st.integers(1, 7), st.integers(1, 7))
def test_r_sets_sizes(n, ell):
    vs = range(n)
    assert len(r_sets(vs)) == 2**n - 1
    assert len(r_sets(vs, ell)) == sum(math.comb(n, k) for k in range(1, min(ell, n) + 1))


def test_colex_rank_inverts_enumeration():
    for n in range(1, 7):
        for s in range(1, n + 1):
            subs = colex_subsets(n, s)
            assert list(colex_rank(subs)) == list(range(len(subs)))


def test_all_orders_counts_and_enumeration():
    assert all_orders([5]) == [(5,)]
    assert all_orders([1, 2]) == [(1, 2), (2, 1)]
    four = all_orders("abcd")
    assert len(four) == len(set(four)) == 24
    with pytest.raises(ValueError):
        all_orders(range(9))
    perms = lex_permutations(4)
    assert list(perm_index(perms)) == list(range(24))


def test_pullback_order_examples():
    ident = Injection.identity([1, 2, 3])
    assert pullback_order(ident, (3, 1, 2)) == (3, 1, 2)
    alpha = Injection({"a": 2, "b": 1}, [1, 2])
    assert pullback_order(alpha, (1, 2)) == ("b", "a")
    with pytest.raises(ValueError):
        pullback_order(Injection({1: 1}, [1, 2]), (1, 2))


def test_pullback_order_is_contravariant_exhaustive():
    vs = (1, 2, 3)
    bijections = [Injection(dict(zip(vs, p)), vs) for p in itertools.permutations(vs)]
    for order in all_orders(vs):
        for a in bijections:
            for b in bijections:
                assert pullback_order(b.compose(a), order) == pullback_order(a, pullback_order(b, order))


def test_sample_point_shape():
    x = sample_point([1, 2], D1, seed=3)
    assert x.subsets() == [(1,), (2,), (1, 2)]
    assert x.order(1, 2).shape == (1, 2)
    assert sorted(x.order(1, 2)[0]) == [0, 1]
    capped = sample_point([1, 2, 3], D1, seed=3, ell=1)
    assert capped.subsets() == [(1,), (2,), (3,)]
    with pytest.raises(ValueError):
        capped.w(1, 2)


def test_sampling_is_reproducible_and_prefix_stable():
    a = sample_points([1, 2, 3], D1, seed=11, size=50)
    b = sample_points([1, 2, 3], D1, seed=11, size=20)
    assert np.array_equal(a.w(1, 3)[:20], b.w(1, 3))
    assert np.array_equal(a.order(1, 2, 3)[:20], b.order(1, 2, 3))
    c = sample_points([1, 2, 3], D1, seed=12, size=20)
    assert not np.array_equal(c.w(1, 3), b.w(1, 3))


def test_weight_marginals_uniform():
    x = sample_points([1, 2, 3], SpaceDescriptor(2, 1), seed=0, size=10**5)
    for a in x.subsets():
        for c in range(2):
            assert stats.kstest(x.w(*a, c=c), "uniform").pvalue > 0.01
    assert abs(x.w(1, 2).mean() - 0.5) < 0.005


def test_order_marginals_uniform():
    x = sample_points([1, 2, 3], D1, seed=1, size=10**4)
    pair = x.order_index(1, 2)
    assert abs(pair.mean() - 0.5) < 0.01 * 2
    counts = np.bincount(x.order_index(1, 2, 3), minlength=6)
    assert stats.chisquare(counts).pvalue > 0.01


def test_coordinates_pairwise_independent():
    x = sample_points([1, 2, 3], D1, seed=2, size=10**5)
    coords = {a: x.w(*a) < 0.5 for a in x.subsets()}
    coords["order"] = x.is_increasing(1, 2, 3)
    keys = list(coords)
    for a, b in itertools.combinations(keys, 2):
        table = np.histogram2d(coords[a], coords[b], bins=2)[0]
        assert stats.chi2_contingency(table).pvalue > 0.01 / len(keys) ** 2


def test_pullback_point_examples():
    x = sample_points([1, 2, 3], D1, seed=5, size=4)
    same = pullback_point(Injection.identity(x.vertices), x)
    for a in x.subsets():
        assert np.array_equal(same.w(*a), x.w(*a))
        assert np.array_equal(same.order(*a), x.order(*a))
    alpha = Injection({1: 3, 2: 1}, x.vertices)
    y = pullback_point(alpha, x)
    assert y.subsets() == [(1,), (2,), (1, 2)]
    assert np.array_equal(y.w(1, 2), x.w(1, 3))
    assert np.array_equal(y.w(1), x.w(3))
    # 1 -> 3 and 2 -> 1, so 1 precedes 2 in the pullback iff 3 precedes 1 in x
    assert np.array_equal(y.is_increasing(1, 2), ~x.is_increasing(1, 3))


def test_pullback_point_functoriality_pointwise():
    rng = np.random.default_rng(0)
    for seed in range(100):
        x = sample_points([1, 2, 3, 4], SpaceDescriptor(1, 2), seed=seed, size=1)
        beta = Injection(dict(zip([1, 2, 3], rng.permutation([1, 2, 3, 4])[:3])), [1, 2, 3, 4])
        alpha = Injection(dict(zip([1, 2], rng.permutation([1, 2, 3])[:2])), [1, 2, 3])
        lhs = pullback_point(beta.compose(alpha), x)
        rhs = pullback_point(alpha, pullback_point(beta, x))
        assert lhs.dumps() == rhs.dumps()


def test_point_json_round_trip():
    x = sample_points([1, 2, 3], SpaceDescriptor(2, 2), seed=9, size=1)
    text = x.dumps()
    assert LevelPoint.from_json(__import__("json").loads(text)).dumps() == text


def test_masked_point_refuses_outside_reads():
    x = sample_points([1, 2], D1, seed=0, size=3)
    m = MaskedPoint(x, Mask.of([(1, 2)], [(1, 2)]))
    m.w(1, 2)
    m.order(1, 2)
    with pytest.raises(CoordinateAccessError):
        m.w(1)


def test_replace_validates_range():
    x = sample_points([1, 2], D1, seed=0, size=2)
    y = x.replace((1,), weight=[0.25])
    assert np.all(y.w(1) == 0.25) and not np.all(x.w(1) == 0.25)
    with pytest.raises(ValueError):
        x.replace((1,), weight=[1.0])


def test_grid_cell_exact_at_boundaries():
    # the double nearest 1/3 is below 1/3, so it lands in cell 1 of 6
    assert list(grid_cell([0.0, 0.5, 0.4999999999999999, 1 / 3, 0.9999999999999999], 6)) == [0, 3, 2, 1, 5]
    # likewise the double 0.3 is just below 3/10
    assert grid_cell(0.3, 10) == 2
    assert grid_cell(0.75, 4) == 3


def test_interleave_examples():
    assert interleave_weights(0.0, 0.0) == 0.0
    rng = np.random.default_rng(0)
    a, b = rng.random(10**4), rng.random(10**4)
    ga, gb = np.floor(a * 2**26) / 2**26, np.floor(b * 2**26) / 2**26
    sa, sb = split_weight(interleave_weights(ga, gb))
    assert np.array_equal(sa, ga) and np.array_equal(sb, gb)


def test_interleave_pushes_uniform_to_uniform():
    rng = np.random.default_rng(1)
    z = interleave_weights(rng.random(10**5), rng.random(10**5))
    assert stats.kstest(z, "uniform").pvalue > 0.01
    with pytest.raises(ValueError):
        interleave_weights(1.0, 0.2)


def test_coordinate_cap():
    with pytest.raises(ValueError):
        sample_points(range(12), D1, size=10**4)
