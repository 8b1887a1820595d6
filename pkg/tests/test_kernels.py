import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundary_reps.cylinders import CylinderFunction, apply_pi, l2_inner
from boundary_reps.errors import DivergenceError, PreconditionError
from boundary_reps.kernels import (
    besov_seminorm, dirichlet_form, gram_matrix, ht_inner, intertwiner_eigenvalue,
    kernel_form, kt_inner, min_normalized_eigenvalue, positivity_scan, range_projector,
    riesz_boundary_avg, self_energy, self_energy_monte_carlo, self_energy_series, sigma,
    sigma_interior, sigma_series, sigma_truncated_above, sigma_truncated_below,
    spectral_decomposition, spectral_pseudo_inverse, truncated_gram,
)
from boundary_reps.words import GroupContext

R2 = GroupContext(2)
SIGMA_QUARTER = 1.4330127018922192  # 3/4 + (1/2) 3^-1/2 / (1 - 3^-1/2)


def test_sigma_half_is_one(ctx):
    assert sigma(ctx, 0.5) == pytest.approx(1.0, rel=1e-15)


def test_sigma_quarter():
    closed = 0.75 + 0.5 * 3**-0.5 / (1 - 3**-0.5)
    assert sigma(R2, 0.25) == pytest.approx(closed, rel=1e-15)
    assert sigma_series(R2, 0.25) == pytest.approx(SIGMA_QUARTER, rel=1e-10)
    assert sigma(R2, 0.25) == pytest.approx(SIGMA_QUARTER, rel=1e-15)


def test_sigma_diverges_for_nonpositive_t():
    with pytest.raises(DivergenceError):
        sigma(R2, 0.0)
    with pytest.raises(DivergenceError):
        kernel_form(-0.25, CylinderFunction.constant(R2), CylinderFunction.constant(R2))


def test_sigma_truncations_split(ctx):
    for t in (0.1, 0.25, 0.5):
        for A in (1, 3, 7):
            total = sigma_truncated_below(ctx, t, A) + sigma_truncated_above(ctx, t, A)
            assert total == pytest.approx(sigma(ctx, t), rel=1e-13)


def test_sigma_tail_bounds():
    t = 0.25
    x = math.exp(-2 * t * R2.Q)
    for A in range(1, 21):
        scaled = sigma_truncated_above(R2, t, A) * (1 - x) / x**A
        # exactly (q - 1) / 2r = 1/2, inside the [1/2, 1] band
        assert scaled == pytest.approx(0.5, rel=1e-14)


def test_sigma_interior():
    assert sigma_interior(R2, 0.25, ()) == 1.0
    assert sigma_interior(R2, 0.5, R2.parse("abab")) == pytest.approx(1.0, rel=1e-15)
    vals = [sigma_interior(R2, 0.25, (0,) * n) for n in range(1, 21)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert 0 < SIGMA_QUARTER - vals[-1] < 1e-3


def test_self_energy_closed_vs_series(ctx):
    for t in (0.1, 0.25, 0.5):
        for k in (1, 2, 3):
            assert self_energy(ctx, t, k) == pytest.approx(self_energy_series(ctx, t, k), rel=1e-12)


def test_self_energy_quarter():
    e = self_energy(R2, 0.25, 1)
    assert e == pytest.approx(0.1707532, abs=1e-7)
    assert e == pytest.approx(3**-0.5 / (1 - 3**-0.5) / 8, rel=1e-14)
    assert 4 * e + 12 / 16 == pytest.approx(SIGMA_QUARTER, rel=1e-14)


def test_self_energy_monte_carlo_small():
    mean, se = self_energy_monte_carlo(R2, 0.25, 1, samples=20000, seed=3)
    assert abs(mean - self_energy(R2, 0.25, 1)) < 4 * se


def test_gram_entries_and_sums(ctx):
    for t in (0.1, 0.25, 0.5):
        for k in (1, 2, 3):
            G = gram_matrix(ctx, t, k).entries
            assert math.fsum(G.ravel().tolist()) == pytest.approx(sigma(ctx, t), rel=1e-12)
            assert np.allclose(G.sum(axis=1), sigma(ctx, t) / ctx.level_size(k), rtol=1e-12, atol=0)
    G = gram_matrix(R2, 0.25, 1).entries
    assert G[0, 1] == pytest.approx(0.0625, rel=1e-15)


def test_gram_half_is_rank_one():
    G = gram_matrix(R2, 0.5, 2).entries
    assert np.allclose(G, np.full_like(G, 1 / 144), rtol=1e-13, atol=0)
    w = np.linalg.eigvalsh(G)
    assert w[-1] > 0 and np.all(np.abs(w[:-1]) < 1e-14)


def test_gram_matches_dense_form(rng):
    a = CylinderFunction.random(R2, 2, rng)
    b = CylinderFunction.random(R2, 2, rng)
    G = gram_matrix(R2, 0.3, 2).entries
    dense = a.values @ G @ np.conj(b.values)
    assert kernel_form(0.3, a, b) == pytest.approx(dense, rel=1e-13)


def test_kernel_form_values():
    one = CylinderFunction.constant(R2)
    assert kernel_form(0.25, one, one) == pytest.approx(SIGMA_QUARTER, rel=1e-14)
    ia = CylinderFunction.indicator(R2, (0,))
    assert kernel_form(0.5, ia, one) == pytest.approx(0.25, rel=1e-14)


def test_dirichlet_indicator():
    ia = CylinderFunction.indicator(R2, (0,))
    assert dirichlet_form(0.25, ia, ia) == pytest.approx(0.1875, rel=1e-14)
    assert dirichlet_form(0.25, CylinderFunction.constant(R2, level=2),
                          CylinderFunction.constant(R2, level=2)) == 0


@pytest.mark.parametrize("t", [0.1, 0.2, 0.3, 0.4, 0.5])
def test_intertwiner_split(ctx, rng, t):
    for k in (1, 2, 3):
        a = CylinderFunction.random(ctx, k, rng)
        b = CylinderFunction.random(ctx, k, rng)
        lhs = kernel_form(t, a, b)
        rhs = sigma(ctx, t) * l2_inner(a, b) - dirichlet_form(t, a, b)
        assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


def test_intertwining_relation(ctx, rng):
    t = 0.25
    a = CylinderFunction.random(ctx, 1, rng)
    b = CylinderFunction.random(ctx, 2, rng)
    for gamma in ctx.enumerate_ball(2):
        lhs = kernel_form(t, apply_pi(t, gamma, a), b)
        rhs = kernel_form(t, a, apply_pi(t, ctx.inverse(gamma), b))
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)


def test_besov_constant_is_zero():
    assert besov_seminorm(-0.5, CylinderFunction.constant(R2, 3.0, level=2)) == 0


def test_besov_unitary_parameter(ctx, rng):
    for k in (1, 2):
        v = CylinderFunction.random(ctx, k, rng)
        b0 = besov_seminorm(-0.5, v)
        for gamma in ctx.enumerate_ball(3 if ctx.rank == 2 else 2):
            assert besov_seminorm(-0.5, apply_pi(-0.5, gamma, v)) == pytest.approx(b0, rel=1e-12)


def test_besov_continuous_in_t(rng):
    v = CylinderFunction.random(R2, 2, rng)
    ts = np.linspace(-0.6, 0.6, 25)
    vals = np.array([besov_seminorm(t, v) for t in ts])
    assert np.all(np.isfinite(vals)) and np.all(vals > 0)
    assert np.max(np.abs(np.diff(vals))) < 0.5 * vals.max()


def test_riesz_averages(rng):
    one = CylinderFunction.constant(R2)
    assert np.allclose(riesz_boundary_avg(0.25, one, 3).values, 1.0, rtol=1e-14)
    a = CylinderFunction.random(R2, 2, rng)
    half = riesz_boundary_avg(0.5, a, 3)
    assert np.allclose(half.values, a.integral(), rtol=1e-13)
    for K in (2, 3, 4):
        assert riesz_boundary_avg(0.3, a, K).integral() == pytest.approx(a.integral(), rel=1e-13)


def test_intertwiner_eigenvalues_match_dense():
    t = 0.3
    T = gram_matrix(R2, t, 3).l2_operator()
    w = np.sort(np.linalg.eigvalsh(T))
    expected = sorted([intertwiner_eigenvalue(R2, t, 0)]
                      + [intertwiner_eigenvalue(R2, t, 1)] * 3
                      + [intertwiner_eigenvalue(R2, t, 2)] * 8
                      + [intertwiner_eigenvalue(R2, t, 3)] * 24)
    assert np.allclose(w, expected, rtol=1e-12, atol=1e-14)


def test_kt_inner_values(rng):
    one = CylinderFunction.constant(R2)
    assert kt_inner(0.25, one, one) == pytest.approx(SIGMA_QUARTER**2, rel=1e-13)
    a = CylinderFunction.random(R2, 2, rng)
    b = CylinderFunction.random(R2, 1, rng)
    assert kt_inner(0.5, a, b) == pytest.approx(a.integral() * np.conj(b.integral()), rel=1e-12)
    lhs = abs(kt_inner(0.3, a, b)) ** 2
    assert lhs <= kt_inner(0.3, a, a).real * kt_inner(0.3, b, b).real * (1 + 1e-12)


def test_ht_inner(rng):
    one = CylinderFunction.constant(R2)
    assert ht_inner(0.25, one, one) == pytest.approx(SIGMA_QUARTER, rel=1e-14)
    a = CylinderFunction.random(R2, 2, rng)
    b = CylinderFunction.random(R2, 2, rng)
    assert ht_inner(0.5, a, a) == pytest.approx(abs(a.integral()) ** 2, rel=1e-12)
    for gamma in R2.enumerate_ball(3):
        lhs = ht_inner(0.25, apply_pi(0.25, gamma, a), apply_pi(0.25, gamma, b))
        assert abs(lhs - ht_inner(0.25, a, b)) <= 1e-12 * max(abs(lhs), 1.0)
    with pytest.raises(PreconditionError):
        ht_inner(0.75, a, b)


def test_pseudo_inverse_identity_and_rank_one():
    dec, S = spectral_pseudo_inverse(np.eye(5))
    assert np.allclose(S, np.eye(5), atol=1e-15)
    G = gram_matrix(R2, 0.5, 2).entries
    dec, S = spectral_pseudo_inverse(G)
    assert int(dec.nonzero.sum()) == 1
    nz = np.linalg.eigvalsh(S)
    assert np.sum(np.abs(nz) > 1e-9 * np.abs(nz).max()) == 1


def test_pseudo_inverse_items():
    G = gram_matrix(R2, 0.25, 2).entries
    dec, S = spectral_pseudo_inverse(G)
    P = range_projector(dec)
    scale = np.abs(G).max()
    assert np.abs(S @ G - P).max() < 1e-9
    assert np.abs(G @ S @ G - G).max() < 1e-9 * scale
    V = dec.eigenvectors
    assert np.abs(V.T @ V - np.eye(len(V))).max() < 1e-12
    recon = (V * dec.eigenvalues) @ V.T
    assert np.abs(recon - G).max() <= 1e-10 * np.linalg.norm(G, 2)
    mags = np.abs(dec.eigenvalues)
    assert np.all(mags[:-1] >= mags[1:])


def test_spectral_rejects_nonsymmetric():
    with pytest.raises(PreconditionError):
        spectral_decomposition(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_positivity_scan():
    rows = positivity_scan(R2, [0.05 * i for i in range(1, 11)], range(1, 5))
    assert min(r["min_eig"] for r in rows) >= -1e-10
    bad = positivity_scan(R2, [0.75], range(1, 5))
    witness = [r["k"] for r in bad if r["min_eig_normalized"] < -1e-6]
    assert witness and witness[0] == 1


def test_half_spectrum_is_rank_one():
    w = np.linalg.eigvalsh(gram_matrix(R2, 0.5, 3).l2_operator())
    assert w[-1] == pytest.approx(1.0, rel=1e-12)
    assert np.all(np.abs(w[:-1]) < 1e-12)


def test_min_normalized_eigenvalue_negative_beyond_half():
    assert min_normalized_eigenvalue(gram_matrix(R2, 0.75, 2).l2_operator()) < -0.1


def test_truncated_gram_sums():
    t = 0.25
    for A in (0, 1, 2, 5):
        G = truncated_gram(R2, t, 2, A)
        assert math.fsum(G.ravel().tolist()) == pytest.approx(sigma_truncated_above(R2, t, A),
                                                              rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.02, 0.5), st.integers(0, 2**32 - 1))
def test_kernel_form_is_positive_up_to_half(t, seed):
    rng = np.random.default_rng(seed)
    a = CylinderFunction.random(R2, 2, rng)
    val = kernel_form(t, a, a)
    assert abs(val.imag) <= 1e-12 * abs(val)
    assert val.real >= -1e-12 * a.norm() ** 2


@settings(max_examples=40, deadline=None)
@given(st.floats(0.02, 0.9), st.integers(0, 2**32 - 1))
def test_kernel_form_is_hermitian(t, seed):
    rng = np.random.default_rng(seed)
    a = CylinderFunction.random(R2, 2, rng)
    b = CylinderFunction.random(R2, 1, rng)
    assert kernel_form(t, a, b) == pytest.approx(np.conj(kernel_form(t, b, a)), rel=1e-12)
