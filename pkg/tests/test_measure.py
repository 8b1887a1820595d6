import itertools
import math
from fractions import Fraction

import pytest

from boundary_reps.measure import (
    ahlfors_partition_check, annulus_profile, cylinder_measure, pair_count_brute,
    pair_count_sphere, rn_derivative, visual_distance,
)
from boundary_reps.words import GroupContext, Ray, busemann_on_cylinder

R2 = GroupContext(2)


def test_cylinder_measure_values():
    assert cylinder_measure(R2, (0,)) == Fraction(1, 4)
    assert cylinder_measure(R2, R2.parse("ab")) == Fraction(1, 12)
    assert cylinder_measure(R2, ()) == 1
    assert 3 * cylinder_measure(R2, R2.parse("ab")) == cylinder_measure(R2, (0,))


def test_annulus_profile_ray():
    eta = Ray((0,), (0,))
    assert annulus_profile(R2, eta, 0) == Fraction(3, 4)
    assert annulus_profile(R2, eta, 2) == Fraction(1, 18)


def test_annulus_profile_partitions(ctx):
    for y in ctx.enumerate_ball(4):
        assert sum(annulus_profile(ctx, y, m) for m in range(len(y) + 1)) == 1


def test_ahlfors_ratios():
    eta = Ray((0, 1), (1,))
    lo, hi = ahlfors_partition_check(R2, eta, 12)
    assert (lo, hi) == (Fraction(1, 2), Fraction(3, 4))
    ratios = {annulus_profile(R2, eta, k) * 3**k for k in range(1, 12)}
    assert ratios == {Fraction(1, 2)}


def test_rn_derivative():
    for u in R2.enumerate_sphere(3):
        assert rn_derivative(R2, (), u) == 1
    assert rn_derivative(R2, (0,), R2.parse("aa")) == 3


def test_rn_derivative_is_probability(ctx):
    for gamma in ctx.enumerate_ball(2):
        for k in range(len(gamma), len(gamma) + 2):
            total = sum(cylinder_measure(ctx, u) * Fraction(ctx.q) ** busemann_on_cylinder(u, gamma)
                        for u in ctx.enumerate_sphere(k))
            assert total == 1


def test_visual_distance():
    assert visual_distance(R2, (0,), (1,)) == 1.0
    assert visual_distance(R2, R2.parse("ab"), R2.parse("aa")) == math.exp(-1)


def test_visual_distance_is_ultrametric():
    words = R2.level_words(3)
    for u, v, w in itertools.permutations(words, 3):
        assert visual_distance(R2, u, w) <= max(visual_distance(R2, u, v),
                                                visual_distance(R2, v, w)) + 1e-15


@pytest.mark.parametrize("n,m,count", [(2, 0, 108), (2, 1, 24)])
def test_pair_count_values(n, m, count):
    assert pair_count_sphere(R2, n, m) == count == pair_count_brute(R2, n, m)


def test_pair_counts_closed_vs_brute(ctx):
    top = 6 if ctx.rank == 2 else 4
    for n in range(1, top + 1):
        counts = [pair_count_sphere(ctx, n, m) for m in range(n + 1)]
        assert counts == [pair_count_brute(ctx, n, m) for m in range(n + 1)]
        assert sum(counts) == ctx.sphere_size(n) ** 2
