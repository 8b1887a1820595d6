"""Spherical functions, their envelopes, the Poisson transform and coefficient decay."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cylinders import CylinderFunction, matrix_coefficient
from .errors import PreconditionError
from .kernels import apply_intertwiner, sigma
from .measure import annulus_profile
from .words import GroupContext, Ray, hat_extension

TABLE_COLUMNS = ("n", "phi", "envelope_low", "envelope_high", "ratio")


def phi(ctx: GroupContext, t: float, n: int) -> float:
    """phi_t(n) = sum_m nu{(xi, gamma)_o = m} (2r-1)^((1/2 + t)(2m - n)) for |gamma| = n."""
    if n < 0:
        raise PreconditionError("n must be >= 0")
    gamma = (0,) * n  # any word of length n; the profile only depends on n
    terms = [float(annulus_profile(ctx, gamma, m)) * math.exp((0.5 + t) * (2 * m - n) * ctx.Q)
             for m in range(n + 1)]
    return math.fsum(terms)


def omega(ctx: GroupContext, t: float, x: float) -> float:
    """2 sinh(tQx) / (e^(2tQ) - 1), with the t -> 0 limit x."""
    if t == 0:
        return float(x)
    return 2.0 * math.sinh(t * ctx.Q * x) / math.expm1(2.0 * t * ctx.Q)


def envelope(ctx: GroupContext, t: float, n: float) -> float:
    """e^(-Qn/2) (1 + omega_|t|(n))."""
    return math.exp(-ctx.Q * n / 2.0) * (1.0 + omega(ctx, abs(t), n))


@dataclass
class SphericalTable:
    t: float
    rank: int
    rows: list = field(default_factory=list)

    def ratios(self):
        return [row["ratio"] for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for row in self.rows:
            w.writerow([row["n"]] + [repr(float(row[c])) for c in TABLE_COLUMNS[1:]])
        return buf.getvalue()


def spherical_table(ctx: GroupContext, t: float, n_max: int, c_low: float = 1.0,
                    c_high: float = 1.0) -> SphericalTable:
    """Rows n, phi_t(n), the envelope scaled by c_low / c_high, and phi / envelope."""
    table = SphericalTable(t, ctx.rank)
    for n in range(n_max + 1):
        p = phi(ctx, t, n)
        env = envelope(ctx, t, n)
        table.rows.append({"n": n, "phi": p, "envelope_low": c_low * env,
                           "envelope_high": c_high * env, "ratio": p / env})
    return table


def hca_check(ctx: GroupContext, t: float, n_max: int):
    """Extreme ratios phi_t(n) / envelope(n) over 0 <= n <= n_max."""
    if n_max < 1:
        raise PreconditionError("n_max must be >= 1")
    r = spherical_table(ctx, t, n_max).ratios()
    return min(r), max(r)


def spherical_varphi(t: float, gamma: Sequence[int], ctx: GroupContext) -> float:
    """<pi_t(gamma) 1, I_t 1> / ||sigma_t||_1."""
    one = CylinderFunction.constant(ctx)
    val = matrix_coefficient(t, gamma, one, apply_intertwiner(t, one))
    return val.real / sigma(ctx, t)


def pd_gram_phi(ctx: GroupContext, t: float, radius: int):
    """Min eigenvalue of [phi_t(|h^-1 g|)] over the ball of the given radius."""
    ball = list(ctx.enumerate_ball(radius))
    ctx.check_budget(len(ball) ** 2, "ball Gram matrix")
    table = [phi(ctx, t, n) for n in range(2 * radius + 1)]
    N = len(ball)
    D = np.empty((N, N), dtype=np.int64)
    for i, g in enumerate(ball):
        ginv = ctx.inverse(g)
        for j, h in enumerate(ball):
            D[i, j] = len(ctx.multiply(ginv, h))
    M = np.array(table)[D]
    return float(np.linalg.eigvalsh(M).min())


# -- Poisson transform ------------------------------------------------------------


def cylinder_integral(f: CylinderFunction, w: Sequence[int]) -> complex:
    """Integral of f over the cylinder C_w."""
    ctx = f.ctx
    w = tuple(w)
    k = f.level
    if len(w) >= k:
        return complex(f.values[ctx.word_index(w[:k])]) / ctx.sphere_size(len(w))
    if not w:
        block = f.values
    else:
        size = ctx.q ** (k - len(w))
        start = ctx.word_index(w) * size
        block = f.values[start: start + size]
    return complex(math.fsum(block.real.tolist()), math.fsum(block.imag.tolist())) / ctx.sphere_size(k)


def poisson_transform(t: float, f: CylinderFunction, x: Sequence[int]) -> complex:
    """P_t(f)(x), summed annulus by annulus around the geodesic [o, x]."""
    ctx = f.ctx
    x = tuple(x)
    n = len(x)
    re, im = [], []
    for m in range(n + 1):
        weight = math.exp((0.5 + t) * (2 * m - n) * ctx.Q)
        if m == n:
            parts = [x]
        else:
            forbid = ctx.inv(x[m - 1]) if m > 0 else -1
            parts = [x[:m] + (c,) for c in range(ctx.n_letters) if c != x[m] and c != forbid]
        for w in parts:
            z = cylinder_integral(f, w) * weight
            re.append(z.real)
            im.append(z.imag)
    return complex(math.fsum(re), math.fsum(im)) / phi(ctx, t, n)


def poisson_along_ray(t: float, f: CylinderFunction, ray: Ray, depths: Sequence[int]):
    """Rows (m, |P_t(f)(ray_prefix(m)) - f(ray)|)."""
    target = f.value_at(ray.ray_prefix(max(f.level, 1)))
    return [(m, abs(poisson_transform(t, f, ray.ray_prefix(m)) - target)) for m in depths]


# -- decay of matrix coefficients ---------------------------------------------------


def epsilon_decay(ctx: GroupContext, t: float, x: float) -> float:
    """e^(-tQx) / sinh(tQ) + e^(-x)."""
    return math.exp(-t * ctx.Q * x) / math.sinh(t * ctx.Q) + math.exp(-x)


def decay_shape(ctx: GroupContext, t: float, n: int, A: float, lip: float) -> float:
    """||w||_Lip (eps_t(n) e^(2tQA) + e^(-A)); the bound without its constant."""
    return lip * (epsilon_decay(ctx, t, n) * math.exp(2 * t * ctx.Q * A) + math.exp(-A))


def coefficient_decay_check(t: float, gamma: Sequence[int], w: CylinderFunction, A: float,
                            C: float = 1.0):
    """(lhs, C * shape) with lhs = <pi_t(gamma) 1, |w - w(gamma_hat)|> / phi_t(gamma)."""
    from .cylinders import lipschitz_norm

    if not t > 0:
        raise PreconditionError("decay check needs t > 0")
    ctx = w.ctx
    gamma = tuple(gamma)
    if not gamma:
        raise PreconditionError("decay check needs |gamma| >= 1")
    hat = hat_extension(ctx, gamma)
    w_hat = w.value_at(hat.ray_prefix(max(w.level, 1)))
    dev = CylinderFunction(ctx, w.level, np.abs(w.values - w_hat))
    lhs = matrix_coefficient(t, gamma, CylinderFunction.constant(ctx), dev).real / phi(ctx, t, len(gamma))
    return lhs, C * decay_shape(ctx, t, len(gamma), A, lipschitz_norm(w))


def decay_tail(ctx: GroupContext, t: float, n: int, A: float):
    """(<pi_t(gamma) 1, 1_{(xi, gamma)_o < A}> / phi_t(gamma), e^(-tQn) e^(2tQA) / sinh(tQ))."""
    gamma = (0,) * n
    terms = [float(annulus_profile(ctx, gamma, m)) * math.exp((0.5 + t) * (2 * m - n) * ctx.Q)
             for m in range(n + 1) if m < A]
    lhs = math.fsum(terms) / phi(ctx, t, n)
    shape = math.exp(-t * ctx.Q * n) * math.exp(2 * t * ctx.Q * A) / math.sinh(t * ctx.Q)
    return lhs, shape
