import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundary_reps.errors import BudgetError, PreconditionError
from boundary_reps.words import (
    GroupContext, Ray, busemann_on_cylinder, check_extension, common_prefix_length,
    critical_exponent_estimate, gromov_product_group, hat_extension,
)

R2 = GroupContext(2)


def reduced_words(ctx, max_len=6):
    letters = st.integers(0, ctx.n_letters - 1)
    return st.lists(letters, max_size=max_len).map(ctx.reduce)


def test_multiply_cancels():
    assert R2.multiply(R2.parse("ab"), R2.parse("Ba")) == R2.parse("aa")


def test_multiply_inverse_is_identity():
    w = R2.parse("abAB")
    assert R2.multiply(w, R2.inverse(w)) == ()


def test_multiply_no_cancellation():
    assert R2.multiply(R2.parse("ab"), R2.parse("ba")) == R2.parse("abba")


def test_parse_and_format_roundtrip():
    for text in ["e", "a", "abAB", "bbA"]:
        w = R2.parse("" if text == "e" else text)
        assert R2.format(w) == text


def test_parse_rejects_unreduced():
    with pytest.raises(PreconditionError):
        R2.parse("aA")


def test_rank_one_rejected():
    with pytest.raises(PreconditionError):
        GroupContext(1)


def test_gromov_product_cases():
    g = R2.parse("ab")
    assert gromov_product_group(R2, g, g) == 2
    assert gromov_product_group(R2, g, ()) == 0
    assert gromov_product_group(R2, g, R2.parse("aa")) == 1


@pytest.mark.parametrize("n,count", [(0, 1), (1, 4), (3, 36)])
def test_sphere_counts(n, count):
    words = list(R2.enumerate_sphere(n))
    assert len(words) == count == R2.sphere_size(n)
    assert len(set(words)) == count
    assert all(R2.is_reduced(w) for w in words)


def test_sphere_ratio_is_branching():
    for n in range(1, 10):
        assert R2.sphere_size(n + 1) == 3 * R2.sphere_size(n)


def test_budget_guard():
    small = GroupContext(2, budget=100)
    with pytest.raises(BudgetError):
        list(small.enumerate_sphere(6))


def test_word_index_is_lexicographic(ctx):
    for k in range(4):
        words = ctx.level_words(k)
        assert [ctx.word_index(w) for w in words] == list(range(len(words)))
        assert [ctx.word_from_index(k, i) for i in range(len(words))] == words
        assert [tuple(row) for row in ctx.level_array(k).tolist()] == words


def test_busemann_cases():
    gamma = R2.parse("ab")
    assert busemann_on_cylinder(R2.parse("abba"), gamma) == 2
    assert busemann_on_cylinder(R2.parse("bbb"), gamma) == -2
    assert busemann_on_cylinder(R2.parse("aaB"), gamma) == 0


def test_busemann_needs_long_cylinder():
    with pytest.raises(PreconditionError):
        busemann_on_cylinder((0,), (0, 1))


def test_hat_and_check_extensions():
    gamma = R2.parse("ab")
    ray = hat_extension(R2, gamma)
    assert ray.ray_prefix(5) == R2.parse("abbbb")
    for k in range(2, 8):
        assert common_prefix_length(ray.ray_prefix(k), gamma) == 2
    chk = check_extension(R2, gamma)
    assert common_prefix_length(chk.ray_prefix(6), R2.inverse(gamma)) == 2
    assert chk.is_valid(R2)


def test_ray_needs_block():
    with pytest.raises(PreconditionError):
        Ray((0,), ())


@pytest.mark.parametrize("r,expected", [(2, math.log(3)), (3, math.log(5))])
def test_critical_exponent(r, expected):
    assert abs(critical_exponent_estimate(GroupContext(r), 14) - expected) < 1e-3


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_multiply_is_associative(data):
    a, b, c = (data.draw(reduced_words(R2)) for _ in range(3))
    assert R2.multiply(R2.multiply(a, b), c) == R2.multiply(a, R2.multiply(b, c))


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_gromov_product_is_prefix_length(data):
    g, h = data.draw(reduced_words(R2)), data.draw(reduced_words(R2))
    assert gromov_product_group(R2, g, h) == common_prefix_length(g, h)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_strong_hyperbolicity(data):
    # e^{-eps (x,y)} <= e^{-eps (x,z)} + e^{-eps (z,y)} on sampled triples
    eps = data.draw(st.floats(0.1, 3.0))
    x, y, z = (data.draw(reduced_words(R2, 8)) for _ in range(3))
    d = lambda u, v: math.exp(-eps * common_prefix_length(u, v))  # noqa: E731
    assert d(x, y) <= d(x, z) + d(z, y) + 1e-15
