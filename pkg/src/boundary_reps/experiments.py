"""Convergence experiments over spheres of the free group.

Every sphere sum is split into fixed chunks (words sharing their first
min(n, 2) letters).  Chunks run on a thread pool and their compensated
partials are folded in chunk order, so a report does not depend on the
number of threads.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .cylinders import (
    CylinderFunction, TreeTestFunction, l2_inner, lex_indices, matrix_coefficient, pi_weights, refine,
)
from .errors import PreconditionError
from .kernels import (
    apply_intertwiner, gram_matrix, kernel_form, kernel_values, kt_inner, sigma,
)
from .measure import annulus_profile, pair_count_sphere
from .spherical import omega
from .summation import CompensatedSum, ComplexCompensatedSum
from .words import GroupContext

DEFAULT_TOL = 0.05
DEFAULT_TARGET_N = 12
TREND_ROWS = 4
# relative errors below this are round-off and count as converged
ERROR_FLOOR = 1e-12


# -- reports --------------------------------------------------------------------------


@dataclass
class ExperimentReport:
    id: str
    params: dict
    rows: list = field(default_factory=list)
    verdict: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def errors(self):
        return [row["rel_err"] for row in self.rows]

    def row(self, n):
        for row in self.rows:
            if row["n"] == n:
                return row
        raise KeyError(n)


def coefficient_phi(ctx: GroupContext, t: float, n: int) -> float:
    """phi_t(n) as <pi_t(gamma) 1, 1> through the same arithmetic as the sphere summands.

    Normalising by this value makes constant inputs cancel to the last bit.
    """
    one = CylinderFunction.constant(ctx)
    return matrix_coefficient(t, ctx.word_from_index(n, 0), one, one).real


def make_row(n: int, lhs: complex, rhs: complex, wall: float) -> dict:
    err = abs(lhs - rhs)
    rel = err / abs(rhs) if rhs != 0 else err
    return {"n": n, "lhs_re": lhs.real, "lhs_im": lhs.imag, "rhs_re": rhs.real,
            "rhs_im": rhs.imag, "abs_err": err, "rel_err": rel, "wall_time": wall}


def convergence_verdict(rows, tol: float = DEFAULT_TOL, target_n: int = DEFAULT_TARGET_N,
                        trend_rows: int = TREND_ROWS) -> dict:
    """Relative error below ``tol`` at ``target_n`` (or the last row) and
    non-increasing over the last ``trend_rows`` rows."""
    if not rows:
        return {"passed": False, "reason": "no rows"}
    at = [r for r in rows if r["n"] == target_n]
    final = at[0] if at else rows[-1]
    tail = [max(r["rel_err"], ERROR_FLOOR) for r in rows[-trend_rows:]]
    monotone = all(b <= a for a, b in zip(tail, tail[1:]))
    ok_err = final["rel_err"] < tol
    return {"passed": bool(ok_err and monotone), "tol": tol, "n": final["n"],
            "rel_err": final["rel_err"], "non_increasing": monotone}


# -- sphere engine ----------------------------------------------------------------------


def n_chunks(ctx: GroupContext, n: int) -> int:
    return ctx.sphere_size(min(n, 2))


def chunk_map(fn: Callable[[int], object], count: int, threads: int = 1) -> list:
    """[fn(0), ..., fn(count - 1)] in order, evaluated on ``threads`` workers."""
    if threads <= 1 or count <= 1:
        return [fn(c) for c in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


@dataclass
class CoefSpec:
    """One matrix coefficient family gamma -> <pi_t(gamma) v, w>."""

    t: float
    v: CylinderFunction
    w: CylinderFunction


_EMPTY = np.zeros(1)


def _coef_args(spec: CoefSpec | None, ctx, n):
    if spec is None:
        return [_EMPTY, _EMPTY, _EMPTY, 0, _EMPTY, _EMPTY, 0]
    v, w = spec.v, spec.w
    return [pi_weights(ctx, spec.t, n), v.values.real.copy(), v.values.imag.copy(), v.level,
            w.values.real.copy(), w.values.imag.copy(), w.level]


def _table_args(f: TreeTestFunction | None, n: int):
    if f is None:
        return [np.ones(1), np.zeros(1), 0]
    tab = f.table(n)
    return [tab.real.copy(), tab.imag.copy(), min(f.level, n)]


@dataclass
class SphereResult:
    total: complex
    count: int
    min_abs: float
    argmin: int
    max_abs: float


def sphere_sum(ctx: GroupContext, n: int, a: CoefSpec | None = None, b: CoefSpec | None = None,
               f: TreeTestFunction | None = None, g: TreeTestFunction | None = None,
               threads: int = 1, backend: str | None = None) -> SphereResult:
    """sum over S_n of f(gamma) g(gamma^-1) [A(gamma)] [conj B(gamma)]."""
    ctx.check_budget(ctx.sphere_size(n), f"sphere S_{n}")
    mode = 0 if a is None else (1 if b is None else 2)
    kern = _backend.get(backend)
    kmax = 0
    for s in (a, b):
        if s is not None:
            kmax = max(kmax, s.v.level + s.w.level)
    nu = np.array([1.0 / ctx.sphere_size(j) for j in range(n + kmax + 2)])
    pm = np.array([float(annulus_profile(ctx, (0,) * n, m)) for m in range(n)] + [0.0])
    args = (_coef_args(a, ctx, n) + _coef_args(b, ctx, n) + [nu, pm]
            + _table_args(f, n) + _table_args(g, n))

    def run(chunk):
        return kern.sphere_reduce(ctx.rank, n, chunk, mode, *args)

    parts = chunk_map(run, n_chunks(ctx, n), threads)
    acc = ComplexCompensatedSum()
    count = 0
    best = math.inf
    where = -1
    top = 0.0
    for p in parts:
        acc.add_parts(p[0], p[1], p[2], p[3])
        if p[4] < best:
            best = float(p[4])
            where = count + int(p[5])
        top = max(top, float(p[7]))
        count += int(p[6])
    return SphereResult(acc.value, count, best, where, top)


def sphere_operator(ctx: GroupContext, t: float, n: int, p: int, threads: int = 1,
                    backend: str | None = None) -> np.ndarray:
    """M[u, u'] = sum over S_n of <pi_t(gamma) 1_{C_u'}, 1_{C_u}>."""
    kern = _backend.get(backend)
    nu = np.array([1.0 / ctx.sphere_size(j) for j in range(n + 2 * p + 2)])
    pm = np.array([float(annulus_profile(ctx, (0,) * n, m)) for m in range(n)] + [0.0])
    pw = pi_weights(ctx, t, n)

    def run(chunk):
        return kern.sphere_operator(ctx.rank, n, chunk, pw, nu, pm, p)

    parts = chunk_map(run, n_chunks(ctx, n), threads)
    S = np.zeros_like(parts[0][0])
    C = np.zeros_like(parts[0][0])
    for ps, pc in parts:
        # entrywise Neumaier fold of (sum, compensation) pairs, in chunk order
        for x in (ps, pc):
            tot = S + x
            big = np.abs(S) >= np.abs(x)
            C = C + np.where(big, (S - tot) + x, (x - tot) + S)
            S = tot
    return S + C


# -- equidistribution ------------------------------------------------------------------


def _params(ctx, **kw):
    out = {"rank": ctx.rank, "epsilon": ctx.epsilon}
    out.update(kw)
    return out


def equi_experiment(ctx: GroupContext, f: TreeTestFunction, g: TreeTestFunction, n_max: int,
                    n_min: int = 1, threads: int = 1, tol: float = DEFAULT_TOL) -> ExperimentReport:
    """|S_n|^-1 sum f(gamma o) g(gamma^-1 o) against the product of boundary integrals."""
    rhs = f.boundary.integral() * g.boundary.integral()
    rep = ExperimentReport("equi", _params(ctx, n_min=n_min, n_max=n_max, level_f=f.level,
                                           level_g=g.level))
    for n in range(n_min, n_max + 1):
        t0 = time.perf_counter()
        res = sphere_sum(ctx, n, f=f, g=g, threads=threads)
        rep.rows.append(make_row(n, res.total / res.count, rhs, time.perf_counter() - t0))
    rep.verdict = convergence_verdict(rep.rows, tol, target_n=n_max)
    return rep


def _hat_prefix(ctx, W: np.ndarray, k: int) -> np.ndarray:
    """First k letters of the ray gamma . last . last ... for each row of W."""
    n = W.shape[1]
    if k <= n:
        return W[:, :k]
    pad = np.repeat(W[:, -1:], k - n, axis=1)
    return np.concatenate([W, pad], axis=1)


def equi_boundary_experiment(ctx: GroupContext, f: CylinderFunction, g: CylinderFunction,
                             n_max: int, n_min: int = 1, tol: float = DEFAULT_TOL) -> ExperimentReport:
    """Boundary variant: f evaluated at gamma_hat, g at gamma_check."""
    rhs = f.integral() * g.integral()
    rep = ExperimentReport("equi-boundary", _params(ctx, n_min=n_min, n_max=n_max))
    for n in range(max(n_min, 1), n_max + 1):
        t0 = time.perf_counter()
        W = ctx.level_array(n)
        Winv = (W[:, ::-1] + ctx.rank) % ctx.n_letters
        fv = f.values[lex_indices(ctx, _hat_prefix(ctx, W, f.level))]
        gv = g.values[lex_indices(ctx, _hat_prefix(ctx, Winv, g.level))]
        prod = fv * gv
        acc = ComplexCompensatedSum()
        for z in prod.tolist():
            acc.add(z)
        rep.rows.append(make_row(n, acc.value / len(W), rhs, time.perf_counter() - t0))
    rep.verdict = convergence_verdict(rep.rows, tol, target_n=n_max)
    return rep


# -- kernel-measure equidistribution -----------------------------------------------------


def pair_kernel_experiment(ctx: GroupContext, t: float, n_max: int, F=None, radial=None,
                           method: str = "closed", n_min: int = 1, threads: int = 1,
                           tol: float = DEFAULT_TOL) -> ExperimentReport:
    """|S_N|^-2 sum_{g,h} F(go, ho) k_t((go, ho)_o) against the double integral of F k_t.

    ``radial`` is a function of the Gromov product (fast path through pair
    counts); ``F`` is a level-k pair matrix F[u, v] read at the first k letters
    of g and h (double loop).  With neither, F = 1.
    """
    if t >= 0.5:
        raise PreconditionError("pair-kernel equidistribution needs t < 1/2")
    if F is not None and radial is not None:
        raise PreconditionError("give either F or radial, not both")
    if F is None and radial is None:
        radial = lambda m: 1.0  # noqa: E731
    rep = ExperimentReport("pairs", _params(ctx, t=t, n_min=n_min, n_max=n_max, method=method))
    if radial is not None:
        rhs_terms = []
        m = 0
        while True:
            p = ctx.q / ctx.n_letters if m == 0 else (ctx.q - 1) / (ctx.n_letters * ctx.q**m)
            term = p * radial(m) * math.exp((1 - 2 * t) * m * ctx.Q)
            rhs_terms.append(term)
            if m > 5 and abs(term) < 1e-18 * abs(rhs_terms[0]):
                break
            m += 1
        rhs = complex(math.fsum(rhs_terms))
    else:
        F = np.asarray(F, dtype=np.complex128)
        k = _level_of(ctx, F.shape[0])
        G = gram_matrix(ctx, t, max(k, 1)).entries
        rhs = complex(np.sum(F * G)) if k >= 1 else complex(F[0, 0] * sigma(ctx, t))
    for N in range(n_min, n_max + 1):
        t0 = time.perf_counter()
        if method == "closed":
            if radial is None:
                raise PreconditionError("the closed form needs a radial F")
            size = ctx.sphere_size(N)
            acc = CompensatedSum()
            for m in range(N + 1):
                acc.add(pair_count_sphere(ctx, N, m) / size / size * radial(m)
                        * math.exp((1 - 2 * t) * m * ctx.Q))
            lhs = complex(acc.value)
        elif method == "loop":
            lhs = _pair_loop(ctx, t, N, F, radial, threads)
        else:
            raise PreconditionError(f"unknown method {method!r}")
        rep.rows.append(make_row(N, lhs, rhs, time.perf_counter() - t0))
    rep.verdict = convergence_verdict(rep.rows, tol, target_n=n_max)
    return rep


def _level_of(ctx, dim):
    k = 0
    while ctx.level_size(k) < dim:
        k += 1
    if ctx.level_size(k) != dim:
        raise PreconditionError(f"{dim} is not the size of a cylinder level")
    return k


def _pair_loop(ctx, t, N, F, radial, threads):
    ctx.check_budget(ctx.sphere_size(N) ** 2, f"pair loop over S_{N}")
    W = ctx.level_array(N)
    kv = kernel_values(ctx, t, N)
    if F is None:
        kv = kv * np.array([radial(m) for m in range(N + 1)])
        Fm = np.ones((1, 1), dtype=np.complex128)
        fidx = np.zeros(len(W), dtype=np.int64)
    else:
        Fm = np.asarray(F, dtype=np.complex128)
        k = _level_of(ctx, Fm.shape[0])
        if k > N:
            raise PreconditionError("pair function level exceeds the sphere radius")
        fidx = lex_indices(ctx, W[:, :k])
    kern = _backend.get()
    nchunk = max(1, min(len(W), 64))
    edges = np.linspace(0, len(W), nchunk + 1).astype(int)
    Fr = np.ascontiguousarray(Fm.real)
    Fi = np.ascontiguousarray(Fm.imag)

    def run(c):
        return kern.pair_kernel_sum(W, int(edges[c]), int(edges[c + 1]), fidx, kv, Fr, Fi)

    parts = chunk_map(run, nchunk, threads)
    acc = ComplexCompensatedSum()
    for p in parts:
        acc.add_parts(*p[:4])
    return acc.value / len(W) / len(W)


# -- mixing limits and asymptotic Schur relations ----------------------------------------


def intertwiner_power(t: float, w: CylinderFunction, i: int) -> CylinderFunction:
    for _ in range(i):
        w = apply_intertwiner(t, w)
    return w


def _check_pairing(t: float, i: int):
    if i not in (0, 1, 2):
        raise PreconditionError("pairing index must be 0, 1 or 2")
    if not t > 0:
        raise PreconditionError("t must be > 0")
    if i == 1 and t > 0.5:
        raise PreconditionError(f"the H_t pairing needs t <= 1/2 (got t={t}): I_t is not positive")


def space_pairing(t: float, a: CylinderFunction, b: CylinderFunction, i: int,
                  tol: float = 1e-8) -> complex:
    """<a, b> in L2 (i=0), H_t (i=1) or K_t (i=2)."""
    if i == 0:
        return l2_inner(a, b)
    if i == 1:
        return kernel_form(t, a, b)
    return kt_inner(t, a, b, tol=tol)


def bml_experiment(ctx: GroupContext, t: float, v: CylinderFunction, w: CylinderFunction,
                   f: TreeTestFunction, g: TreeTestFunction, n_max: int, i: int = 0,
                   n_min: int = 1, threads: int = 1, tol: float = DEFAULT_TOL,
                   rhs_tol: float = 1e-8) -> ExperimentReport:
    """Sphere average of f g <pi_t(gamma) v, w>_i / phi_t against
    <g R_t v, 1> conj <w, f>_i."""
    _check_pairing(t, i)
    wi = intertwiner_power(t, w, i)
    # sigma as the kernel mass of 1 x 1, through the same route as the numerator
    one = CylinderFunction.constant(ctx)
    first = kernel_form(t, v, g.boundary.conj()) / kernel_form(t, one, one).real
    second = space_pairing(t, w, f.boundary, i, tol=rhs_tol)
    rhs = first * second.conjugate()
    rep = ExperimentReport("bml", _params(ctx, t=t, i=i, n_min=n_min, n_max=n_max,
                                          level_v=v.level, level_w=w.level,
                                          level_f=f.level, level_g=g.level))
    spec = CoefSpec(t, v, wi)
    for n in range(n_min, n_max + 1):
        t0 = time.perf_counter()
        res = sphere_sum(ctx, n, a=spec, f=f, g=g, threads=threads)
        lhs = res.total / (res.count * coefficient_phi(ctx, t, n))
        rep.rows.append(make_row(n, lhs, rhs, time.perf_counter() - t0))
    rep.verdict = convergence_verdict(rep.rows, tol)
    return rep


def refined_pairing(compute: Callable[[int], complex], K0: int, tol: float, k_budget: int = 12):
    """Evaluate ``compute(K)`` at K0, 2 K0, ... until two successive values agree within tol."""
    from .errors import ConvergenceError

    K = max(K0, 1)
    prev = compute(K)
    while True:
        nxt = min(2 * K, k_budget)
        if nxt == K:
            raise ConvergenceError(f"refinement not within tol={tol} by level {K}",
                                   previous=prev, last=prev)
        cur = compute(nxt)
        if abs(cur - prev) < tol:
            return cur, nxt
        prev, K = cur, nxt


def schur_rhs(ctx: GroupContext, t: float, t2: float, i: int, j: int, v, w, v2, w2,
              f: TreeTestFunction, g: TreeTestFunction, tol: float = 1e-8):
    """(<g R_t v, R_t2 v2>, conj <I_t^i w, f I_t2^j w2>) and their refinement levels."""
    gb, fb = g.boundary, f.boundary
    s1, s2 = sigma(ctx, t), sigma(ctx, t2)

    def first(K):
        rv = apply_intertwiner(t, refine(v, K)) * (1.0 / s1)
        rv2 = apply_intertwiner(t2, refine(v2, K)) * (1.0 / s2)
        return l2_inner(refine(gb, max(K, gb.level)) * rv, rv2)

    def second(K):
        a = intertwiner_power(t, refine(w, K), i)
        b = intertwiner_power(t2, refine(w2, K), j)
        return l2_inner(a, fb * b)

    K1 = max(v.level, v2.level, gb.level, 1)
    K2 = max(w.level, w2.level, fb.level, 1)
    x1, L1 = refined_pairing(first, K1, tol)
    x2, L2 = refined_pairing(second, K2, tol)
    return x1, x2.conjugate(), (L1, L2)


def _sup_tree(f: TreeTestFunction) -> float:
    vals = [f.boundary.sup_norm()] + [float(np.max(np.abs(tab))) for tab in f.interior]
    return max(vals)


def schur_experiment(ctx: GroupContext, t: float, t2: float, i: int, j: int,
                     v: CylinderFunction, w: CylinderFunction, v2: CylinderFunction,
                     w2: CylinderFunction, f: TreeTestFunction, g: TreeTestFunction,
                     n_max: int, tol: float = DEFAULT_TOL, rhs_tol: float = 1e-8,
                     n_min: int = 1, threads: int = 1) -> ExperimentReport:
    """Sphere average of f g <pi_t v, w>_i conj <pi_t2 v2, w2>_j / (phi_t phi_t2)."""
    _check_pairing(t, i)
    _check_pairing(t2, j)
    wi = intertwiner_power(t, w, i)
    wj = intertwiner_power(t2, w2, j)
    x1, x2, levels = schur_rhs(ctx, t, t2, i, j, v, w, v2, w2, f, g, tol=rhs_tol)
    rhs = x1 * x2
    # |<pi_t(gamma) a, b>| <= |a|_inf |b|_inf phi_t(gamma), so every normalised term
    # is bounded by the product of sup norms
    guard = (_sup_tree(f) * _sup_tree(g) * v.sup_norm() * wi.sup_norm()
             * v2.sup_norm() * wj.sup_norm())
    rep = ExperimentReport("schur", _params(ctx, t=t, t2=t2, i=i, j=j, n_min=n_min, n_max=n_max,
                                            rhs_tol=rhs_tol))
    rep.extras["rhs_factors"] = [[x1.real, x1.imag], [x2.real, x2.imag]]
    rep.extras["rhs_levels"] = list(levels)
    rep.extras["guard_bound"] = guard
    worst = 0.0
    a = CoefSpec(t, v, wi)
    b = CoefSpec(t2, v2, wj)
    for n in range(n_min, n_max + 1):
        t0 = time.perf_counter()
        res = sphere_sum(ctx, n, a=a, b=b, f=f, g=g, threads=threads)
        norm = coefficient_phi(ctx, t, n) * coefficient_phi(ctx, t2, n)
        lhs = res.total / (res.count * norm)
        worst = max(worst, res.max_abs / norm, abs(lhs))
        rep.rows.append(make_row(n, lhs, rhs, time.perf_counter() - t0))
    tripped = worst > guard * (1 + 1e-9)
    rep.extras["guard_max"] = worst
    rep.extras["guard_tripped"] = bool(tripped)
    rep.verdict = convergence_verdict(rep.rows, tol)
    if tripped:
        rep.verdict["passed"] = False
        rep.verdict["reason"] = "uniform-boundedness guard tripped"
    return rep


# -- spectral (RD) consistency -------------------------------------------------------------


def rd_envelope_shape(ctx: GroupContext, t: float, n: int) -> float:
    """(1 + omega_|t|(n)) |S_n|^-1/2: the uniform-weight spectral envelope without its constant."""
    return (1.0 + omega(ctx, abs(t), n)) / math.sqrt(ctx.sphere_size(n))


def _sym_power(J: np.ndarray, p: float, cutoff: float = 1e-12) -> np.ndarray:
    """J^p on the range of the symmetric matrix J (eigenvalues below cutoff * |J| dropped)."""
    w, V = np.linalg.eigh(J)
    keep = np.abs(w) > cutoff * np.abs(w).max()
    if p != int(p) and np.any(w[keep] < 0):
        raise PreconditionError("fractional power of an indefinite operator")
    wp = np.zeros_like(w)
    wp[keep] = np.power(w[keep], p)
    return (V * wp) @ V.T


def rd_consistency(ctx: GroupContext, t: float, n: int, probe_level: int = 2, threads: int = 1):
    """Lower bounds for the norm of pi_t(uniform weights on S_n) on level-p probes.

    Returns a dict with the L2 bound and, when defined, the K_t and H_t bounds,
    plus the envelope shape.
    """
    p = probe_level
    M = sphere_operator(ctx, t, n, p, threads=threads) / ctx.sphere_size(n) * ctx.level_size(p)
    out = {"n": n, "t": t, "probe_level": p, "shape": rd_envelope_shape(ctx, t, n),
           "l2": float(np.linalg.norm(M, 2))}
    if t > 0:
        G = gram_matrix(ctx, t, p).l2_operator()
        Jp = _sym_power(G, -1)
        out["kt"] = float(np.linalg.norm(G @ M @ Jp, 2))
        if t <= 0.5:
            out["ht"] = float(np.linalg.norm(_sym_power(G, 0.5) @ M @ _sym_power(G, -0.5), 2))
    return out


# -- weak mixing ------------------------------------------------------------------------------


def weak_mixing_probe(ctx: GroupContext, t: float, v, w, v2, w2, n_max: int, eps: float,
                      threads: int = 1):
    """Per n, min over S_n of |<pi_t(gamma) v, w> <pi_-t(gamma) v2, w2>|."""
    if not abs(t) < 0.5:
        raise PreconditionError("weak mixing probe needs |t| < 1/2")
    rows = []
    witness = None
    a = CoefSpec(t, v, w)
    b = CoefSpec(-t, v2, w2)
    for n in range(0, n_max + 1):
        res = sphere_sum(ctx, n, a=a, b=b, threads=threads)
        gamma = ctx.word_from_index(n, res.argmin)
        rows.append({"n": n, "min_abs": res.min_abs, "argmin": ctx.format(gamma)})
        if witness is None and res.min_abs < eps:
            witness = {"n": n, "gamma": ctx.format(gamma), "value": res.min_abs}
    return {"rows": rows, "witness": witness, "eps": eps}


# -- exploratory: interior Riesz values ----------------------------------------------------------


def riesz_interior(t: float, f: CylinderFunction, x: Sequence[int]) -> complex:
    """R_t f at an interior point x, with the interior mass sum over annuli around x."""
    from .kernels import sigma_interior
    from .spherical import cylinder_integral

    ctx = f.ctx
    x = tuple(x)
    n = len(x)
    re, im = [], []
    for m in range(n + 1):
        kval = math.exp((1 - 2 * t) * m * ctx.Q)
        if m == n:
            parts = [x]
        else:
            forbid = ctx.inv(x[m - 1]) if m > 0 else -1
            parts = [x[:m] + (c,) for c in range(ctx.n_letters) if c != x[m] and c != forbid]
        for u in parts:
            z = cylinder_integral(f, u) * kval
            re.append(z.real)
            im.append(z.imag)
    return complex(math.fsum(re), math.fsum(im)) / sigma_interior(ctx, t, x)


# -- default probes and RD calibration ------------------------------------------------------


def probe_function(ctx: GroupContext, level: int, phase: float = 0.0) -> CylinderFunction:
    """Deterministic non-constant complex test function of the given level."""
    j = np.arange(ctx.level_size(level), dtype=np.float64)
    vals = 1.0 + 0.5 * np.cos(1.3 * j + phase) + 0.3j * np.sin(0.7 * j + 2.0 * phase)
    return CylinderFunction(ctx, level, vals)


RD_SAFETY = 2.0
RD_CALIBRATION_N = 5


def rd_calibrate(rows, key: str, calib_n: int = RD_CALIBRATION_N, safety: float = RD_SAFETY):
    """Freeze C = safety * max bound/shape over n <= calib_n; validate on the other rows.

    Returns (C, strict, passed, worst) where ``strict`` is the bare maximum and
    ``worst`` the largest validation ratio.
    """
    calib = [r[key] / r["shape"] for r in rows if r["n"] <= calib_n and key in r]
    valid = [r[key] / r["shape"] for r in rows if r["n"] > calib_n and key in r]
    if not calib:
        raise PreconditionError("no calibration rows")
    strict = max(calib)
    C = safety * strict
    worst = max(valid) if valid else strict
    return C, strict, bool(worst <= C), worst
