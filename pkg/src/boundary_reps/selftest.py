"""Fast invariant suite behind the ``selftest`` subcommand.

Each check returns (passed, detail) where detail is a short number-bearing string.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .cylinders import (
    CylinderFunction, TreeTestFunction, apply_pi, l2_inner, matrix_coefficient,
    matrix_coefficient_naive,
)
from .experiments import bml_experiment, equi_experiment, probe_function
from .kernels import (
    apply_intertwiner, besov_seminorm, dirichlet_form, gram_matrix, kernel_form, self_energy,
    self_energy_series, sigma, sigma_series, spectral_pseudo_inverse,
)
from .measure import pair_count_brute, pair_count_sphere
from .spherical import hca_check, phi, poisson_along_ray
from .words import GroupContext, hat_extension


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def check_cocycle(ctx, rng):
    worst = 0.0
    v = CylinderFunction.random(ctx, 2, rng)
    for t in (0.0, 0.25, -0.5):
        for g1 in ctx.enumerate_ball(1):
            for g2 in ctx.enumerate_ball(2):
                lhs = apply_pi(t, ctx.multiply(g1, g2), v)
                rhs = apply_pi(t, g1, apply_pi(t, g2, v))
                k = max(lhs.level, rhs.level)
                worst = max(worst, float(np.max(np.abs(lhs.refine(k).values - rhs.refine(k).values))))
    return worst < 1e-12, f"max deviation {worst:.2e}"


def check_coefficient_routes(ctx, rng):
    v = CylinderFunction.random(ctx, 2, rng)
    w = CylinderFunction.random(ctx, 1, rng)
    worst = 0.0
    for gamma in ctx.enumerate_ball(3):
        a = matrix_coefficient(0.25, gamma, v, w)
        b = matrix_coefficient_naive(0.25, gamma, v, w)
        worst = max(worst, _rel(a, b))
    return worst < 1e-12, f"max relative deviation {worst:.2e}"


def check_l2_isometry(ctx, rng):
    v = CylinderFunction.random(ctx, 2, rng)
    n0 = l2_inner(v, v).real
    worst = max(_rel(l2_inner(apply_pi(0.0, g, v), apply_pi(0.0, g, v)).real, n0)
                for g in ctx.enumerate_ball(2))
    return worst < 1e-12, f"max relative deviation {worst:.2e}"


def check_besov_isometry(ctx, rng):
    v = CylinderFunction.random(ctx, 2, rng)
    b0 = besov_seminorm(-0.5, v)
    worst = max(_rel(besov_seminorm(-0.5, apply_pi(-0.5, g, v)), b0) for g in ctx.enumerate_ball(2))
    return worst < 1e-12, f"max relative deviation {worst:.2e}"


def check_intertwiner_split(ctx, rng):
    t = 0.25
    a = CylinderFunction.random(ctx, 2, rng)
    b = CylinderFunction.random(ctx, 2, rng)
    lhs = kernel_form(t, a, b)
    rhs = sigma(ctx, t) * l2_inner(a, b) - dirichlet_form(t, a, b)
    err = _rel(lhs, rhs)
    return err < 1e-12, f"relative deviation {err:.2e}"


def check_sigma(ctx, rng):
    errs = [_rel(sigma(ctx, t), sigma_series(ctx, t)) for t in (0.1, 0.25, 0.4)]
    G = gram_matrix(ctx, 0.25, 2).entries
    errs.append(_rel(math.fsum(G.ravel().tolist()), sigma(ctx, 0.25)))
    errs.append(_rel(self_energy(ctx, 0.25, 1), self_energy_series(ctx, 0.25, 1)))
    return max(errs) < 1e-10, f"max relative deviation {max(errs):.2e}"


def check_pair_counts(ctx, rng):
    bad = [(n, m) for n in range(1, 5) for m in range(n + 1)
           if pair_count_sphere(ctx, n, m) != pair_count_brute(ctx, n, m)]
    return not bad, f"mismatches {bad}"


def check_phi(ctx, rng):
    one = CylinderFunction.constant(ctx)
    err = _rel(matrix_coefficient(0.0, (0,), one, one).real, phi(ctx, 0.0, 1))
    lo, hi = hca_check(ctx, 0.25, 30)
    return err < 1e-12 and hi / lo <= 4, f"phi deviation {err:.2e}, envelope band {hi / lo:.3f}"


def check_positivity(ctx, rng):
    pos = min(np.linalg.eigvalsh(gram_matrix(ctx, t, 3).l2_operator()).min() for t in (0.1, 0.25, 0.5))
    w = np.linalg.eigvalsh(gram_matrix(ctx, 0.75, 1).l2_operator())
    neg = w.min() / np.abs(w).max()
    return pos >= -1e-10 and neg < -1e-6, f"min eig t<=1/2 {pos:.2e}, normalised min eig t=0.75 {neg:.3f}"


def check_pseudo_inverse(ctx, rng):
    G = gram_matrix(ctx, 0.25, 2).entries
    dec, S = spectral_pseudo_inverse(G)
    err = float(np.abs(G @ S @ G - G).max() / np.abs(G).max())
    return err < 1e-9, f"relative residual {err:.2e}"


def check_poisson(ctx, rng):
    f = CylinderFunction.random(ctx, 2, rng)
    ray = hat_extension(ctx, (0, 1))
    (_, err), = poisson_along_ray(0.25, f, ray, [40])
    return err < 1e-3, f"error at depth 40 {err:.2e}"


def check_intertwiner_constant(ctx, rng):
    one = CylinderFunction.constant(ctx)
    err = _rel(apply_intertwiner(0.25, one).values[0], sigma(ctx, 0.25))
    return err < 1e-12, f"relative deviation {err:.2e}"


def check_equi(ctx, rng):
    f = TreeTestFunction(probe_function(ctx, 2))
    g = TreeTestFunction(probe_function(ctx, 1, 1.0))
    rep = equi_experiment(ctx, f, g, 8)
    return rep.verdict["passed"], f"relative error {rep.verdict['rel_err']:.2e} at n=8"


def check_bml(ctx, rng):
    P = lambda k, ph: probe_function(ctx, k, ph)  # noqa: E731
    rep = bml_experiment(ctx, 0.25, P(2, 0.3), P(2, 0.9), TreeTestFunction(P(1, 1.7)),
                         TreeTestFunction(P(2, 2.5)), 10)
    return rep.verdict["passed"], f"relative error {rep.verdict['rel_err']:.2e} at n=10"


CHECKS = [
    ("cocycle", check_cocycle),
    ("coefficient-routes", check_coefficient_routes),
    ("l2-isometry", check_l2_isometry),
    ("besov-isometry", check_besov_isometry),
    ("intertwiner-split", check_intertwiner_split),
    ("intertwiner-constant", check_intertwiner_constant),
    ("sigma", check_sigma),
    ("pair-counts", check_pair_counts),
    ("phi", check_phi),
    ("positivity", check_positivity),
    ("pseudo-inverse", check_pseudo_inverse),
    ("poisson", check_poisson),
    ("equi", check_equi),
    ("bml", check_bml),
]


def run_selftest(ctx: GroupContext, seed: int = 0, timings: bool = False):
    """Rows (check, passed, detail[, wall_time]) for every check."""
    rows = []
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        t0 = time.perf_counter()
        try:
            ok, detail = fn(ctx, rng)
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        row = {"check": name, "passed": bool(ok), "detail": detail}
        if timings:
            row["wall_time"] = time.perf_counter() - t0
        rows.append(row)
    return rows
