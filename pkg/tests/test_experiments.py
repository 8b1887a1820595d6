import numpy as np
import pytest

from boundary_reps.cylinders import CylinderFunction, TreeTestFunction, l2_inner
from boundary_reps.errors import PreconditionError
from boundary_reps.experiments import (
    ERROR_FLOOR, bml_experiment, convergence_verdict, equi_boundary_experiment, equi_experiment,
    make_row, pair_kernel_experiment, probe_function, rd_calibrate, rd_consistency, riesz_interior,
    schur_experiment, schur_rhs, sphere_operator, weak_mixing_probe,
)
from boundary_reps.kernels import kernel_form, kt_inner, sigma
from boundary_reps.spherical import phi
from boundary_reps.words import GroupContext

R2 = GroupContext(2)
ONE = CylinderFunction.constant(R2)
ONE_T = TreeTestFunction.constant(R2)


def _rows(errs):
    return [{"n": n + 1, "rel_err": e} for n, e in enumerate(errs)]


def test_verdict_rule():
    assert convergence_verdict(_rows([0.3, 0.1, 0.05, 0.02, 0.01]), 0.05, 5)["passed"]
    assert not convergence_verdict(_rows([0.3, 0.1, 0.01, 0.02, 0.01]), 0.05, 5)["passed"]
    assert not convergence_verdict(_rows([0.3, 0.2, 0.1, 0.09, 0.08]), 0.05, 5)["passed"]
    # round-off noise below the floor counts as converged
    assert convergence_verdict(_rows([0.1, 1e-16, 3e-16, 0.0]), 0.05, 4)["passed"]
    assert ERROR_FLOOR == 1e-12


def test_make_row():
    row = make_row(3, 1.1 + 0j, 1.0 + 0j, 0.0)
    assert row["rel_err"] == pytest.approx(0.1)
    assert make_row(1, 0j, 0j, 0.0)["rel_err"] == 0


def test_equi_exact_cases():
    rep = equi_experiment(R2, ONE_T, ONE_T, 6)
    assert all(r["rel_err"] == 0 for r in rep.rows)
    ind = TreeTestFunction(CylinderFunction.indicator(R2, (0,)))
    rep = equi_experiment(R2, ind, ONE_T, 8)
    assert all(r["rel_err"] == 0 for r in rep.rows)
    assert rep.rows[-1]["lhs_re"] == 0.25


def test_equi_converges():
    f = TreeTestFunction(probe_function(R2, 2))
    g = TreeTestFunction(probe_function(R2, 1, 1.0))
    rep = equi_experiment(R2, f, g, 10)
    assert rep.verdict["passed"]


def test_equi_boundary_variant():
    f = CylinderFunction.indicator(R2, (0,))
    rep = equi_boundary_experiment(R2, f, ONE, 8)
    assert all(r["rel_err"] == 0 for r in rep.rows)
    rep = equi_boundary_experiment(R2, probe_function(R2, 2), probe_function(R2, 2, 0.7), 8)
    assert rep.verdict["passed"]


def test_pairs_closed_form():
    rep = pair_kernel_experiment(R2, 0.25, 14)
    assert complex(rep.rows[0]["rhs_re"], 0) == pytest.approx(sigma(R2, 0.25), rel=1e-12)
    assert rep.row(14)["rel_err"] < 0.02


def test_pairs_loop_matches_closed_form():
    a = pair_kernel_experiment(R2, 0.25, 5, method="loop")
    b = pair_kernel_experiment(R2, 0.25, 5, method="closed")
    for x, y in zip(a.rows, b.rows):
        assert x["lhs_re"] == pytest.approx(y["lhs_re"], rel=1e-12)


def test_pairs_product_function():
    # F = f (x) conj f with f = 1_{C_a}: the limit is B_t(f, f) >= 0
    f = CylinderFunction.indicator(R2, (0,)).values
    F = np.outer(f, np.conj(f))
    rep = pair_kernel_experiment(R2, 0.25, 7, F=F, method="loop")
    target = kernel_form(0.25, CylinderFunction.indicator(R2, (0,)), CylinderFunction.indicator(R2, (0,)))
    assert rep.rows[0]["rhs_re"] == pytest.approx(target.real, rel=1e-12)
    assert target.real > 0
    errs = rep.errors()
    assert errs[-1] < errs[0]


def test_pairs_rejects_t_at_half():
    with pytest.raises(PreconditionError):
        pair_kernel_experiment(R2, 0.5, 3)


@pytest.mark.parametrize("t", [0.1, 0.2, 0.25, 0.4, 0.5, 0.75])
def test_bml_trivial_rows_exact(ctx, t):
    n_max = 12 if ctx.rank == 2 else 7
    one, one_t = CylinderFunction.constant(ctx), TreeTestFunction.constant(ctx)
    rep = bml_experiment(ctx, t, one, one, one_t, one_t, n_max)
    assert all(r["rel_err"] == 0 for r in rep.rows)


def test_bml_mass_preservation():
    ia = CylinderFunction.indicator(R2, (0,))
    rep = bml_experiment(R2, 0.25, ia, ONE, ONE_T, ONE_T, 6)
    assert rep.rows[0]["rhs_re"] == pytest.approx(0.25, rel=1e-13)
    assert all(r["rel_err"] < 1e-12 for r in rep.rows)


def test_bml_density_row():
    # v = 1, g = 1: the limit is the plain pairing of w with f
    w = probe_function(R2, 2, 0.4)
    f = TreeTestFunction(probe_function(R2, 1, 1.3))
    rep = bml_experiment(R2, 0.25, ONE, w, f, ONE_T, 8)
    target = np.conj(l2_inner(w, f.boundary))
    assert complex(rep.rows[0]["rhs_re"], rep.rows[0]["rhs_im"]) == pytest.approx(target, rel=1e-12)
    assert rep.verdict["passed"]


def test_bml_refuses_ht_beyond_half():
    with pytest.raises(PreconditionError):
        bml_experiment(R2, 0.75, ONE, ONE, ONE_T, ONE_T, 3, i=1)


def test_schur_trivial_rows_exact():
    rep = schur_experiment(R2, 0.25, 0.25, 0, 0, ONE, ONE, ONE, ONE, ONE_T, ONE_T, 6)
    assert all(r["rel_err"] < 1e-13 for r in rep.rows)
    assert not rep.extras["guard_tripped"]


def test_schur_indicator_case():
    ia = CylinderFunction.indicator(R2, (0,))
    x1, x2, _ = schur_rhs(R2, 0.25, 0.25, 0, 0, ia, ONE, ia, ONE, ONE_T, ONE_T)
    assert x1 == pytest.approx(kt_inner(0.25, ia, ia) / sigma(R2, 0.25) ** 2, rel=1e-10)
    assert x2 == pytest.approx(1.0, rel=1e-14)
    rep = schur_experiment(R2, 0.25, 0.25, 0, 0, ia, ONE, ia, ONE, ONE_T, ONE_T, 12)
    assert rep.row(12)["rel_err"] < 0.05
    assert not rep.extras["guard_tripped"]


def test_rd_identity_at_zero():
    for t in (0.0, 0.25):
        d = rd_consistency(R2, t, 0)
        assert d["l2"] == pytest.approx(1.0, rel=1e-12)
        assert d["shape"] == 1


def test_rd_contains_phi_average():
    # the all-ones probe gives <M 1, 1> = phi_0(n), so the norm is at least that
    for n in range(1, 7):
        d = rd_consistency(R2, 0.0, n)
        assert d["l2"] >= phi(R2, 0.0, n) * (1 - 1e-12)
        M = sphere_operator(R2, 0.0, n, 2) / R2.sphere_size(n)
        assert M.sum() == pytest.approx(phi(R2, 0.0, n), rel=1e-12)


def test_rd_calibration_quarter():
    rows = [rd_consistency(R2, 0.25, n) for n in range(11)]
    C, strict, ok, worst = rd_calibrate(rows, "l2")
    assert ok and C <= 4


def test_weak_mixing_trivial_probe():
    res = weak_mixing_probe(R2, 0.25, ONE, ONE, ONE, ONE, 12, 0.05)
    assert res["witness"] is not None
    n = res["witness"]["n"]
    assert phi(R2, 0.25, n) ** 2 < 0.05 <= phi(R2, 0.25, n - 1) ** 2


def test_weak_mixing_large_eps_witness_at_zero():
    res = weak_mixing_probe(R2, 0.25, ONE, ONE, ONE, ONE, 3, 2.0)
    assert res["witness"]["n"] == 0


def test_weak_mixing_orthogonal_pair():
    w = CylinderFunction.indicator(R2, (0,)) - 0.25
    res = weak_mixing_probe(R2, 0.25, ONE, w, ONE, ONE, 2, 1e-12)
    assert res["rows"][0]["min_abs"] < 1e-15
    assert res["witness"]["n"] == 0


def test_riesz_interior_half_is_poisson_mean(rng):
    f = CylinderFunction.random(R2, 2, rng)
    one = CylinderFunction.constant(R2, level=2)
    for x in [(), (0,), R2.parse("abA")]:
        assert riesz_interior(0.3, one, x) == pytest.approx(1.0, rel=1e-14)
    val = riesz_interior(0.5, f, (0, 1))
    assert val == pytest.approx(f.integral(), rel=1e-12)


def test_probe_function_is_deterministic():
    a = probe_function(R2, 2, 0.3)
    b = probe_function(R2, 2, 0.3)
    assert np.array_equal(a.values, b.values)
    assert a.level == 2 and np.ptp(a.values.real) > 0
