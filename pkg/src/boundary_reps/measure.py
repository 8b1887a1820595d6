"""Patterson-Sullivan measure on the boundary of the Cayley tree of F_r.

Measures and counts are exact (``fractions.Fraction`` / Python ints).  A
boundary point is never materialised: statements about it go through
cylinders (words) or eventually periodic :class:`~boundary_reps.words.Ray`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence, Union

from .errors import PreconditionError
from .words import GroupContext, Ray, busemann_on_cylinder, common_prefix_length

Point = Union[Sequence[int], Ray]


def cylinder_measure(ctx: GroupContext, u: Sequence[int] | int) -> Fraction:
    """nu(C_u) = 1 / (2r (2r-1)^(k-1)) for a level-k cylinder (1 at level 0).

    ``u`` may be a word or directly its level.
    """
    k = u if isinstance(u, int) else len(u)
    return Fraction(1, ctx.sphere_size(k))


def annulus_profile(ctx: GroupContext, y: Point, m: int) -> Fraction:
    """nu{xi : (xi, y)_o = m} for a group element or boundary ray ``y``."""
    if m < 0:
        raise PreconditionError("annulus index must be >= 0")
    if isinstance(y, Ray):
        n = None
    else:
        n = len(y)
        if m > n:
            raise PreconditionError(f"annulus index {m} exceeds |y| = {n}")
    if n is not None and m == n:
        return cylinder_measure(ctx, n)
    q = ctx.q
    if m == 0:
        return Fraction(q, 2 * ctx.rank)
    return Fraction(q - 1, 2 * ctx.rank * q**m)


def ahlfors_partition_check(ctx: GroupContext, y: Point, k_max: int):
    """Extreme ratios nu(A_k(y)) / e^(-Qk) over 0 <= k <= k_max (thickness R = 1).

    Returned as exact fractions: e^(-Qk) = (2r-1)^-k.
    """
    if k_max < 1:
        raise PreconditionError("k_max must be >= 1")
    top = k_max if isinstance(y, Ray) else min(k_max, len(y))
    ratios = [annulus_profile(ctx, y, k) * ctx.q**k for k in range(top + 1)]
    return min(ratios), max(ratios)


def rn_exponent(ctx: GroupContext, gamma: Sequence[int], u: Sequence[int]) -> int:
    """Exponent b with d(gamma_* nu)/d nu = (2r-1)^b on the cylinder C_u."""
    return busemann_on_cylinder(u, gamma)


def rn_derivative(ctx: GroupContext, gamma: Sequence[int], u: Sequence[int]) -> Fraction:
    return Fraction(ctx.q) ** rn_exponent(ctx, gamma, u)


def visual_distance(ctx: GroupContext, u: Sequence[int], v: Sequence[int]) -> float:
    """exp(-eps (xi, eta)_o) for xi in C_u, eta in C_v; u != v at equal level."""
    if len(u) != len(v):
        raise PreconditionError("cylinders must have equal level")
    if tuple(u) == tuple(v):
        raise PreconditionError("distance is not constant on a single cylinder")
    return math.exp(-ctx.epsilon * common_prefix_length(u, v))


def pair_count_sphere(ctx: GroupContext, n: int, m: int) -> int:
    """#{(g, h) in S_n x S_n : (go, ho)_o = m}, closed form."""
    if not 0 <= m <= n:
        raise PreconditionError(f"need 0 <= m <= n, got m={m}, n={n}")
    size = ctx.sphere_size(n)
    q = ctx.q
    if m == n:
        return size
    if m == 0:
        return size * q**n
    return size * (q - 1) * q ** (n - m - 1)


def pair_count_brute(ctx: GroupContext, n: int, m: int) -> int:
    """Double loop over the sphere; reference for :func:`pair_count_sphere`."""
    words = list(ctx.enumerate_sphere(n))
    return sum(
        1 for g in words for h in words if common_prefix_length(g, h) == m
    )
