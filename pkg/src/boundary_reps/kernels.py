"""The kernel k_t = (2r-1)^((1-2t)(xi, eta)_o) and the operators built from it.

Everything is evaluated on cylinder functions.  Off-diagonal Gram entries are
exact (the kernel is constant on a pair of distinct cylinders); the diagonal
self-energy is a closed geometric series.  Because the self-energy does not
depend on which level-k cylinder is chosen, ``I_t`` maps level-k functions to
level-k functions, and all forms below are exact at the level of their inputs.

Forms are applied hierarchically in O(dim * level): lexicographic order makes
every prefix block contiguous, so sums over "same first m letters" are
reshapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .cylinders import CylinderFunction, block_size, prefix_matrix, refine
from .errors import ConvergenceError, DivergenceError, PreconditionError
from .measure import annulus_profile
from .words import GroupContext

DEGENERACY_THRESHOLD = 1e-12


def kernel_values(ctx: GroupContext, t: float, m_max: int) -> np.ndarray:
    """k_t at common-prefix depth m = 0..m_max."""
    m = np.arange(m_max + 1, dtype=np.float64)
    return np.exp((1.0 - 2.0 * t) * m * ctx.Q)


def _ratio(ctx: GroupContext, t: float) -> float:
    return math.exp(-2.0 * t * ctx.Q)


def _require_positive_t(t: float, what: str):
    if not t > 0:
        raise DivergenceError(f"{what} diverges for t <= 0 (got t={t}): the kernel is not integrable")


# -- sigma ----------------------------------------------------------------------


def sigma(ctx: GroupContext, t: float) -> float:
    """Total mass of k_t(xi, .) (constant in xi on the tree)."""
    _require_positive_t(t, "sigma_t")
    x = _ratio(ctx, t)
    p0 = (ctx.q) / ctx.n_letters
    tail = (ctx.q - 1) / ctx.n_letters * x / (1.0 - x)
    return p0 + tail


def sigma_series(ctx: GroupContext, t: float, max_terms: int = 100000) -> float:
    """Truncated series sum_m p_m k_t(m) until the terms stop changing the sum."""
    _require_positive_t(t, "sigma_t")
    total = ctx.q / ctx.n_letters
    terms = [total]
    for m in range(1, max_terms):
        term = (ctx.q - 1) / ctx.n_letters * math.exp(-m * ctx.Q) * math.exp((1 - 2 * t) * m * ctx.Q)
        terms.append(term)
        if term < 1e-18 * total:
            break
    return math.fsum(terms)


def sigma_truncated_below(ctx: GroupContext, t: float, A: int) -> float:
    """sigma^A_t: the part of the mass with (xi, y)_o < A; finite for every t."""
    if A < 0:
        raise PreconditionError("A must be >= 0")
    terms = []
    for m in range(int(A)):
        p = ctx.q / ctx.n_letters if m == 0 else (ctx.q - 1) / (ctx.n_letters * ctx.q**m)
        terms.append(p * math.exp((1 - 2 * t) * m * ctx.Q))
    return math.fsum(terms)


def sigma_truncated_above(ctx: GroupContext, t: float, A: int) -> float:
    """sigma_{t,A}: the part of the mass with (xi, y)_o >= A (needs t > 0)."""
    _require_positive_t(t, "sigma_{t,A}")
    if A < 0:
        raise PreconditionError("A must be >= 0")
    x = _ratio(ctx, t)
    if A == 0:
        return sigma(ctx, t)
    return (ctx.q - 1) / ctx.n_letters * x**A / (1.0 - x)


def sigma_interior(ctx: GroupContext, t: float, x: Sequence[int]) -> float:
    """sum_{m=0}^{|x|} nu{(xi, x)_o = m} k_t(m): finite for all t."""
    x = tuple(x)
    terms = [float(annulus_profile(ctx, x, m)) * math.exp((1 - 2 * t) * m * ctx.Q)
             for m in range(len(x) + 1)]
    return math.fsum(terms)


# -- self-energy ----------------------------------------------------------------


def self_energy(ctx: GroupContext, t: float, k: int) -> float:
    """Double integral of k_t over C_u x C_u for a level-k cylinder (k >= 1)."""
    _require_positive_t(t, "self-energy")
    if k < 1:
        return sigma(ctx, t)
    q = ctx.q
    x = _ratio(ctx, t)
    pref = (1.0 - 1.0 / q) * q ** (2 - k) / (4 * ctx.rank**2)
    return pref * x**k / (1.0 - x)


def self_energy_series(ctx: GroupContext, t: float, k: int, max_terms: int = 100000) -> float:
    """Same quantity from the pair-mass differences F_k(m) - F_k(m+1), summed term by term."""
    _require_positive_t(t, "self-energy")

    def F(m):
        return Fraction(ctx.q ** (m - k)) * Fraction(1, ctx.sphere_size(m)) ** 2

    terms = []
    for j in range(max_terms):
        m = k + j
        term = float(F(m) - F(m + 1)) * math.exp((1 - 2 * t) * m * ctx.Q)
        terms.append(term)
        if j > 5 and term < 1e-18 * terms[0]:
            break
    return math.fsum(terms)


def self_energy_monte_carlo(ctx: GroupContext, t: float, k: int, samples: int = 10**6,
                            seed: int = 0, depth: int = 60, chunk: int = 100000):
    """Monte-Carlo estimate of the self-energy: (mean, standard error).

    Two independent uniform points of C_u are drawn as sequences of child
    choices; their Gromov product is k plus the first disagreement index.
    """
    rng = np.random.default_rng(seed)
    kv = kernel_values(ctx, t, k + depth)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        a = rng.integers(0, ctx.q, size=(n, depth), dtype=np.int8)
        b = rng.integers(0, ctx.q, size=(n, depth), dtype=np.int8)
        same = np.cumprod(a == b, axis=1).sum(axis=1)
        vals = kv[k + same]
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += n
    nu2 = (1.0 / ctx.sphere_size(k)) ** 2
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return nu2 * mean, nu2 * math.sqrt(var / samples)


# -- hierarchical application ----------------------------------------------------


def _prefix_sums(ctx: GroupContext, vals: np.ndarray, K: int, m: int) -> np.ndarray:
    size = block_size(ctx, K, m)
    sums = vals.reshape(-1, size).sum(axis=1)
    return np.repeat(sums, size)


def offdiag_apply(ctx: GroupContext, kv: np.ndarray, vals: np.ndarray, K: int) -> np.ndarray:
    """y(u) = sum_{v != u} kv[(u, v)] a(v) at level K."""
    y = np.zeros_like(vals)
    if K == 0:
        return y
    upper = vals
    for m in range(K - 1, -1, -1):
        lower = _prefix_sums(ctx, vals, K, m)
        y = y + kv[m] * (lower - upper)
        upper = lower
    return y


def offdiag_row_weight(ctx: GroupContext, kv: np.ndarray, K: int) -> float:
    """sum_{v != u} kv[(u, v)] (independent of u)."""
    return math.fsum(
        kv[m] * (block_size(ctx, K, m) - block_size(ctx, K, m + 1)) for m in range(K)
    )


def _fsum_complex(z: np.ndarray) -> complex:
    return complex(math.fsum(z.real.tolist()), math.fsum(z.imag.tolist()))


def _common_level(*fns) -> int:
    return max(1, *(f.level for f in fns))


def apply_gram(t: float, a: CylinderFunction, K: int | None = None) -> np.ndarray:
    """G a at level K (default: level of a, at least 1)."""
    ctx = a.ctx
    K = _common_level(a) if K is None else K
    vals = refine(a, K).values
    nu = 1.0 / ctx.level_size(K)
    kv = kernel_values(ctx, t, K)
    return nu * nu * offdiag_apply(ctx, kv, vals, K) + self_energy(ctx, t, K) * vals


def apply_intertwiner(t: float, a: CylinderFunction) -> CylinderFunction:
    """I_t a, again a function of the same level."""
    _require_positive_t(t, "I_t")
    ctx = a.ctx
    if a.level == 0:
        return CylinderFunction(ctx, 0, sigma(ctx, t) * a.values)
    K = a.level
    return CylinderFunction(ctx, K, apply_gram(t, a, K) * ctx.level_size(K))


def kernel_form(t: float, a: CylinderFunction, b: CylinderFunction) -> complex:
    """B_t(a, b) = <I_t a, b>."""
    _require_positive_t(t, "B_t")
    K = _common_level(a, b)
    y = apply_gram(t, a, K)
    return _fsum_complex(y * np.conj(refine(b, K).values))


def dirichlet_form(t: float, a: CylinderFunction, b: CylinderFunction) -> complex:
    """E_t(a, b) = 1/2 double integral of (a(x)-a(y)) conj(b(x)-b(y)) k_t; any real t."""
    ctx = a.ctx
    K = max(a.level, b.level)
    if K == 0:
        return 0j
    va = refine(a, K).values
    vb = refine(b, K).values
    nu = 1.0 / ctx.level_size(K)
    kv = kernel_values(ctx, t, K)
    y = va * offdiag_row_weight(ctx, kv, K) - offdiag_apply(ctx, kv, va, K)
    return nu * nu * _fsum_complex(y * np.conj(vb))


def besov_seminorm(t: float, v: CylinderFunction) -> float:
    """2 E_t(v, v): the squared difference seminorm, finite for every t."""
    return 2.0 * dirichlet_form(t, v, v).real


def riesz_boundary_avg(t: float, a: CylinderFunction, K: int) -> CylinderFunction:
    """Level-K averages of R_t a = I_t a / sigma_t."""
    _require_positive_t(t, "R_t")
    if K < a.level:
        raise PreconditionError("K must be >= level(a)")
    ctx = a.ctx
    return CylinderFunction(ctx, K, refine(apply_intertwiner(t, a), K).values / sigma(ctx, t))


def kt_inner(t: float, a: CylinderFunction, b: CylinderFunction, tol: float = 1e-8,
             k_budget: int = 12) -> complex:
    """<I_t a, I_t b> via level-K averages of I_t a, I_t b, doubling K until stable."""
    _require_positive_t(t, "K_t pairing")
    K = _common_level(a, b)
    if K > k_budget:
        raise PreconditionError(f"input level {K} exceeds the refinement budget {k_budget}")

    def at(K):
        ia = apply_intertwiner(t, refine(a, K))
        ib = apply_intertwiner(t, refine(b, K))
        return _fsum_complex(ia.values * np.conj(ib.values)) / a.ctx.level_size(K)

    prev = at(K)
    while True:
        nxt_K = min(2 * K, k_budget)
        if nxt_K == K:
            raise ConvergenceError(
                f"K_t pairing not within tol={tol} by level {K}", previous=prev, last=prev
            )
        a.ctx.check_budget(a.ctx.level_size(nxt_K), f"level-{nxt_K} refinement")
        cur = at(nxt_K)
        if abs(cur - prev) < tol:
            return cur
        prev, K = cur, nxt_K


def ht_inner(t: float, a: CylinderFunction, b: CylinderFunction) -> complex:
    """H_t pairing <a, b>_H = B_t(a, b); only defined where I_t is positive."""
    if t > 0.5:
        raise PreconditionError(
            f"H_t needs 0 < t <= 1/2 (got t={t}): I_t is not positive there"
        )
    _require_positive_t(t, "H_t pairing")
    return kernel_form(t, a, b)


# -- Gram matrices ----------------------------------------------------------------


@dataclass(frozen=True)
class GramMatrix:
    rank: int
    epsilon: float
    t: float
    level: int
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def l2_operator(self) -> np.ndarray:
        """Matrix of the compressed operator in the L2-orthonormal cylinder basis."""
        return self.entries * self.entries.shape[0]


def gram_matrix(ctx: GroupContext, t: float, k: int, cache=None) -> GramMatrix:
    """G[u][v] = double integral of k_t over C_u x C_v at level k."""
    _require_positive_t(t, "Gram matrix")
    if k < 1:
        raise PreconditionError("Gram level must be >= 1")
    dim = ctx.level_size(k)
    ctx.check_budget(dim * dim, f"level-{k} Gram matrix")
    if cache is not None:
        hit = cache.load(ctx, t, k)
        if hit is not None:
            return GramMatrix(ctx.rank, ctx.epsilon, t, k, hit)
    nu = 1.0 / dim
    kv = kernel_values(ctx, t, k)
    G = nu * nu * kv[prefix_matrix(ctx, k)]
    np.fill_diagonal(G, self_energy(ctx, t, k))
    if cache is not None:
        cache.store(ctx, t, k, G)
    return GramMatrix(ctx.rank, ctx.epsilon, t, k, G)


def truncated_gram(ctx: GroupContext, t: float, k: int, A: int) -> np.ndarray:
    """Level-k compression of the kernel restricted to (xi, eta)_o >= A."""
    _require_positive_t(t, "truncated Gram matrix")
    dim = ctx.level_size(k)
    nu = 1.0 / dim
    M = prefix_matrix(ctx, k)
    G = np.where(M >= A, nu * nu * kernel_values(ctx, t, k)[M], 0.0)
    x = _ratio(ctx, t)
    start = max(k, A)
    pref = (1.0 - 1.0 / ctx.q) * ctx.q ** (2 - k) / (4 * ctx.rank**2)
    np.fill_diagonal(G, pref * x**start / (1.0 - x))
    return G


@dataclass(frozen=True)
class SpectralDecomp:
    eigenvalues: np.ndarray   # descending by magnitude
    eigenvectors: np.ndarray  # columns, orthonormal
    threshold: float

    @property
    def nonzero(self) -> np.ndarray:
        return np.abs(self.eigenvalues) > self.threshold


def spectral_decomposition(G: np.ndarray) -> SpectralDecomp:
    G = np.asarray(G)
    if not np.allclose(G, G.conj().T, rtol=0, atol=1e-14 * max(1.0, np.abs(G).max())):
        raise PreconditionError("matrix is not symmetric")
    w, V = np.linalg.eigh(G)
    order = np.argsort(-np.abs(w), kind="stable")
    w, V = w[order], V[:, order]
    norm = float(np.abs(w).max()) if w.size else 0.0
    return SpectralDecomp(w, V, DEGENERACY_THRESHOLD * norm)


def spectral_pseudo_inverse(G: np.ndarray):
    """Spectral decomposition of G and the inverse S on the span of non-kernel eigenvectors.

    Eigenvalues below 1e-12 * ||G|| are treated as kernel.
    """
    dec = spectral_decomposition(G)
    keep = dec.nonzero
    V = dec.eigenvectors[:, keep]
    S = (V / dec.eigenvalues[keep]) @ V.conj().T
    return dec, S


def range_projector(dec: SpectralDecomp) -> np.ndarray:
    V = dec.eigenvectors[:, dec.nonzero]
    return V @ V.conj().T


def min_normalized_eigenvalue(T: np.ndarray) -> float:
    w = np.linalg.eigvalsh(T)
    return float(w.min() / np.abs(w).max())


def positivity_scan(ctx: GroupContext, t_grid: Iterable[float], levels: Iterable[int], cache=None):
    """Rows (t, k, min eigenvalue / max |eigenvalue|, min eigenvalue) of the L2 compression."""
    rows = []
    for t in t_grid:
        for k in levels:
            T = gram_matrix(ctx, t, k, cache=cache).l2_operator()
            w = np.linalg.eigvalsh(T)
            rows.append({"t": float(t), "k": int(k),
                         "min_eig_normalized": float(w.min() / np.abs(w).max()),
                         "min_eig": float(w.min())})
    return rows


def intertwiner_eigenvalue(ctx: GroupContext, t: float, j: int) -> float:
    """Eigenvalue of I_t on functions of level j with zero mean on each level-(j-1) cylinder."""
    _require_positive_t(t, "I_t")
    if j == 0:
        return sigma(ctx, t)
    q = ctx.q
    x = _ratio(ctx, t)
    return x**j / ctx.n_letters * ((q - 1) / (1.0 - x) - 1.0 / x)
