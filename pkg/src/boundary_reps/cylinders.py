"""Locally constant boundary functions and the representations pi_t.

A :class:`CylinderFunction` of level k is a complex vector indexed by the
level-k cylinders in lexicographic order.  ``pi_t(gamma)`` maps a level-k
function to a level ``k + |gamma|`` one; matrix coefficients never build that
refinement and go through the grouped sphere kernels instead.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .errors import PreconditionError
from .measure import annulus_profile
from .words import GroupContext


def lex_indices(ctx: GroupContext, arr: np.ndarray) -> np.ndarray:
    """Vectorised :meth:`GroupContext.word_index` for the rows of ``arr``."""
    arr = np.asarray(arr, dtype=np.int64)
    if arr.ndim != 2:
        raise PreconditionError("expected a 2-d array of words")
    if arr.shape[1] == 0:
        return np.zeros(arr.shape[0], dtype=np.int64)
    idx = arr[:, 0].copy()
    for j in range(1, arr.shape[1]):
        ip = (arr[:, j - 1] + ctx.rank) % ctx.n_letters
        c = arr[:, j]
        idx = idx * ctx.q + np.where(c < ip, c, c - 1)
    return idx


def block_size(ctx: GroupContext, k: int, m: int) -> int:
    """Number of level-k cylinders inside one level-m cylinder (m <= k)."""
    if m == 0:
        return ctx.level_size(k)
    return ctx.q ** (k - m)


class CylinderFunction:
    """Function on the boundary that is constant on every level-k cylinder."""

    __slots__ = ("ctx", "level", "values")

    def __init__(self, ctx: GroupContext, level: int, values):
        if level < 0:
            raise PreconditionError("level must be >= 0")
        vals = np.array(values, dtype=np.complex128).reshape(-1)
        if vals.shape[0] != ctx.level_size(level):
            raise PreconditionError(
                f"level {level} needs {ctx.level_size(level)} values, got {vals.shape[0]}"
            )
        vals.setflags(write=False)
        self.ctx = ctx
        self.level = level
        self.values = vals

    # -- constructors ----------------------------------------------------

    @classmethod
    def constant(cls, ctx: GroupContext, c: complex = 1.0, level: int = 0):
        return cls(ctx, level, np.full(ctx.level_size(level), c, dtype=np.complex128))

    @classmethod
    def indicator(cls, ctx: GroupContext, u: Sequence[int]):
        u = tuple(u)
        if not ctx.is_reduced(u):
            raise PreconditionError(f"{u!r} is not a reduced word")
        vals = np.zeros(ctx.level_size(len(u)), dtype=np.complex128)
        vals[ctx.word_index(u)] = 1.0
        return cls(ctx, len(u), vals)

    @classmethod
    def from_callable(cls, ctx: GroupContext, level: int, fn: Callable):
        return cls(ctx, level, [fn(w) for w in ctx.enumerate_sphere(level)])

    @classmethod
    def random(cls, ctx: GroupContext, level: int, rng: np.random.Generator, real=False):
        n = ctx.level_size(level)
        vals = rng.standard_normal(n)
        if not real:
            vals = vals + 1j * rng.standard_normal(n)
        return cls(ctx, level, vals)

    # -- basic algebra ---------------------------------------------------

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def __repr__(self):
        return f"CylinderFunction(level={self.level}, dim={self.dim})"

    def refine(self, k: int) -> "CylinderFunction":
        return refine(self, k)

    def conj(self) -> "CylinderFunction":
        return CylinderFunction(self.ctx, self.level, np.conj(self.values))

    def abs(self) -> "CylinderFunction":
        return CylinderFunction(self.ctx, self.level, np.abs(self.values))

    def _align(self, other):
        k = max(self.level, other.level)
        return refine(self, k).values, refine(other, k).values, k

    def __add__(self, other):
        if isinstance(other, CylinderFunction):
            a, b, k = self._align(other)
            return CylinderFunction(self.ctx, k, a + b)
        return CylinderFunction(self.ctx, self.level, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, CylinderFunction):
            a, b, k = self._align(other)
            return CylinderFunction(self.ctx, k, a - b)
        return CylinderFunction(self.ctx, self.level, self.values - other)

    def __mul__(self, other):
        if isinstance(other, CylinderFunction):
            a, b, k = self._align(other)
            return CylinderFunction(self.ctx, k, a * b)
        return CylinderFunction(self.ctx, self.level, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return CylinderFunction(self.ctx, self.level, -self.values)

    def integral(self) -> complex:
        """Integral against the boundary measure."""
        return l2_inner(self, CylinderFunction.constant(self.ctx))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def norm(self) -> float:
        return math.sqrt(max(l2_inner(self, self).real, 0.0))

    def value_at(self, word: Sequence[int]) -> complex:
        """Value on the cylinder containing the ray/word ``word`` (needs |word| >= level)."""
        if len(word) < self.level:
            raise PreconditionError("word shorter than the function level")
        return complex(self.values[self.ctx.word_index(tuple(word[: self.level]))])


def refine(v: CylinderFunction, k: int) -> CylinderFunction:
    """Same function viewed at level ``k >= v.level``."""
    if k < v.level:
        raise PreconditionError(f"cannot refine level {v.level} down to {k}")
    if k == v.level:
        return v
    reps = v.ctx.level_size(k) // v.ctx.level_size(v.level)
    return CylinderFunction(v.ctx, k, np.repeat(v.values, reps))


def _fsum_complex(z: np.ndarray) -> complex:
    return complex(math.fsum(z.real.tolist()), math.fsum(z.imag.tolist()))


def l2_inner(v: CylinderFunction, w: CylinderFunction) -> complex:
    """<v, w> = int v conj(w) d nu (linear in the first slot)."""
    k = max(v.level, w.level)
    a = refine(v, k).values
    b = refine(w, k).values
    return _fsum_complex(a * np.conj(b)) / v.ctx.level_size(k)


# -- pi_t ---------------------------------------------------------------------


def pi_weights(ctx: GroupContext, t: float, n: int) -> np.ndarray:
    """pw[j] = (2r-1)^((1/2 + t)(j - n)), j = 0..2n: the cocycle factor at beta = j - n."""
    j = np.arange(2 * n + 1, dtype=np.float64)
    return np.exp((0.5 + t) * (j - n) * ctx.Q)


def apply_pi(t: float, gamma: Sequence[int], v: CylinderFunction) -> CylinderFunction:
    """pi_t(gamma) v as an explicit function of level ``v.level + |gamma|``."""
    ctx = v.ctx
    gamma = tuple(gamma)
    n = len(gamma)
    if n == 0:
        return v
    k = v.level
    K = k + n
    arr = ctx.level_array(K)
    eq = arr[:, :n] == np.asarray(gamma, dtype=np.int64)[None, :]
    m = np.cumprod(eq, axis=1).sum(axis=1)
    # gamma^-1 u = inv(gamma[n-1]) ... inv(gamma[m]) . u[m:], read its first k letters
    inv_rev = np.array([ctx.inv(c) for c in reversed(gamma)], dtype=np.int64)
    cols = []
    for j in range(k):
        from_gamma = j < (n - m)
        src = np.clip(2 * m + j - n, 0, K - 1)
        cols.append(np.where(from_gamma, inv_rev[min(j, n - 1)], arr[np.arange(len(arr)), src]))
    shifted = np.stack(cols, axis=1) if cols else np.zeros((len(arr), 0), dtype=np.int64)
    idx = lex_indices(ctx, shifted)
    factor = pi_weights(ctx, t, n)[2 * m]
    return CylinderFunction(ctx, K, factor * v.values[idx])


def _coefficient_tables(ctx: GroupContext, t: float, gamma, kmax: int):
    n = len(gamma)
    pw = pi_weights(ctx, t, n)
    nu = np.array([1.0 / ctx.sphere_size(j) for j in range(n + kmax + 2)])
    pm = np.array([float(annulus_profile(ctx, gamma, m)) for m in range(n)] + [0.0])
    return pw, nu, pm


def matrix_coefficient(t: float, gamma: Sequence[int], v: CylinderFunction,
                       w: CylinderFunction, backend: str | None = None) -> complex:
    """<pi_t(gamma) v, w> by the grouped stratum algorithm."""
    ctx = v.ctx
    gamma = tuple(gamma)
    pw, nu, pm = _coefficient_tables(ctx, t, gamma, v.level + w.level)
    kern = _backend.get(backend)
    re, im = kern.coefficient(ctx.rank, np.asarray(gamma, dtype=np.int64), pw, nu, pm,
                              v.values.real, v.values.imag, v.level,
                              w.values.real, w.values.imag, w.level)
    return complex(re, im)


def matrix_coefficient_naive(t: float, gamma: Sequence[int], v: CylinderFunction,
                             w: CylinderFunction) -> complex:
    """Reference route: refine pi_t(gamma) v explicitly and pair in L2."""
    return l2_inner(apply_pi(t, gamma, v), w)


# -- Lipschitz norm -------------------------------------------------------------


def prefix_matrix(ctx: GroupContext, k: int) -> np.ndarray:
    """Common-prefix lengths between all pairs of level-k words."""
    arr = ctx.level_array(k)
    if k == 0:
        return np.zeros((1, 1), dtype=np.int64)
    eq = arr[:, None, :] == arr[None, :, :]
    return np.cumprod(eq, axis=2).sum(axis=2)


def lipschitz_norm(w: CylinderFunction) -> float:
    """sup |w| + max_{u != v} |w(u) - w(v)| e^(eps (u, v))."""
    sup = w.sup_norm()
    if w.level == 0 or w.dim == 1:
        return sup
    vals = w.values
    M = prefix_matrix(w.ctx, w.level)
    diff = np.abs(vals[:, None] - vals[None, :]) * np.exp(w.ctx.epsilon * M)
    np.fill_diagonal(diff, 0.0)
    best = float(diff.max())
    return sup + best


# -- functions on the compactified tree -----------------------------------------


class TreeTestFunction:
    """f on X u boundary: f(x) = boundary(x[:k]) for |x| >= k, interior table below."""

    def __init__(self, boundary: CylinderFunction, interior=None):
        self.ctx = boundary.ctx
        self.level = boundary.level
        self.boundary = boundary
        if interior is None:
            interior = [self._mean_at(j) for j in range(self.level)]
        if len(interior) != self.level:
            raise PreconditionError("interior must hold one table per length < level")
        self.interior = []
        for j, tab in enumerate(interior):
            arr = np.array(tab, dtype=np.complex128).reshape(-1)
            if arr.shape[0] != self.ctx.level_size(j):
                raise PreconditionError(f"interior table {j} has wrong size")
            arr.setflags(write=False)
            self.interior.append(arr)

    def _mean_at(self, j):
        # average of the boundary values below each vertex of length j
        size = block_size(self.ctx, self.level, j)
        return self.boundary.values.reshape(-1, size).mean(axis=1)

    @classmethod
    def constant(cls, ctx: GroupContext, c: complex = 1.0):
        return cls(CylinderFunction.constant(ctx, c))

    def table(self, n: int) -> np.ndarray:
        """Values on words of length n, indexed by their first min(n, level) letters."""
        return self.interior[n] if n < self.level else self.boundary.values

    def __call__(self, x: Sequence[int]) -> complex:
        return eval_tree_function(self, x)


def eval_tree_function(f: TreeTestFunction, x: Sequence[int]) -> complex:
    x = tuple(x)
    if len(x) >= f.level:
        return complex(f.boundary.values[f.ctx.word_index(x[: f.level])])
    return complex(f.interior[len(x)][f.ctx.word_index(x)])


def restrict_boundary(f: TreeTestFunction) -> CylinderFunction:
    return f.boundary

