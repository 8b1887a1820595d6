"""Pure-Python sphere kernels.

Line-for-line mirror of ``_ckernels.pyx``: same cell order, same arithmetic
expression order, same Neumaier steps, so both backends agree bit for bit.
Used when the compiled extension is unavailable, and as its reference in the
test-suite and benchmark.

Cell structure of one matrix coefficient <pi_t(gamma) v, w> (|gamma| = n):
the boundary is split into strata m = (xi, gamma o)_o, m = 0..n.  Inside a
stratum the Radon-Nikodym factor is the constant ``pw[2m]``; ``v`` is read at
the first ``kv`` letters of gamma^-1 xi and ``w`` at the first ``kw`` letters
of xi.  A stratum is refined into sub-cylinders only as deep as those two
reads require, so the cost per coefficient is O(n + (2r-1)^max(kv, kw)).
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def _idx(letters, r):
    # lexicographic index of a reduced word among words of its length
    if not letters:
        return 0
    L = 2 * r
    q = L - 1
    idx = letters[0]
    prev = letters[0]
    for c in letters[1:]:
        ip = (prev + r) % L
        idx = idx * q + (c if c < ip else c - 1)
        prev = c
    return idx


def _add(s, c, x):
    t = s + x
    if abs(s) >= abs(x):
        c += (s - t) + x
    else:
        c += (x - t) + s
    return t, c


def _cells(r, gam, n, kv, kw, nu, pm, pw, emit):
    """Call ``emit(wgt, iv, iw)`` for every cell in canonical order."""
    L = 2 * r
    inv_gam = [(gam[n - 1 - j] + r) % L for j in range(n)]
    xi = [0] * (n + kv + kw + 2)
    for j in range(n):
        xi[j] = gam[j]
    for m in range(n + 1):
        if m < n:
            e = kv - (n - m)
            if e < 0:
                e = 0
            D = m + max(e, kw - m, 0)
        else:
            D = max(kw, n + kv)
        ext = D - m
        f = pw[2 * m]
        if ext == 0:
            mass = pm[m] if m < n else nu[n]
            iv = _idx(inv_gam[:kv], r) if m < n else 0
            iw = _idx(gam[:kw], r)
            emit(mass * f, iv, iw)
            continue
        wgt = nu[D] * f

        def leaf():
            if m < n:
                vl = []
                for j in range(kv):
                    if j < n - m:
                        vl.append(inv_gam[j])
                    else:
                        vl.append(xi[m + (j - (n - m))])
            else:
                vl = xi[n : n + kv]
            emit(wgt, _idx(vl, r), _idx(xi[:kw], r))

        def dfs(pos):
            if pos == D:
                leaf()
                return
            forbid1 = (xi[pos - 1] + r) % L if pos > 0 else -1
            forbid2 = gam[m] if (pos == m and m < n) else -1
            for c in range(L):
                if c != forbid1 and c != forbid2:
                    xi[pos] = c
                    dfs(pos + 1)

        dfs(m)
        # restore the gamma prefix that dfs may have overwritten
        for j in range(m, n):
            xi[j] = gam[j]


def coefficient(r, gam, pw, nu, pm, vr, vi, kv, wr, wi, kw):
    """Compensated sum of the cells of <pi(gamma) v, w>; returns (re, im)."""
    n = len(gam)
    acc = [0.0, 0.0, 0.0, 0.0]

    def emit(wgt, iv, iw):
        re_t = wgt * (vr[iv] * wr[iw] + vi[iv] * wi[iw])
        im_t = wgt * (vi[iv] * wr[iw] - vr[iv] * wi[iw])
        acc[0], acc[1] = _add(acc[0], acc[1], re_t)
        acc[2], acc[3] = _add(acc[2], acc[3], im_t)

    _cells(r, list(gam), n, kv, kw, nu, pm, pw, emit)
    return acc[0] + acc[1], acc[2] + acc[3]


def _chunk_words(r, n, chunk):
    L = 2 * r
    c0 = min(n, 2)
    if c0 == 0:
        yield []
        return
    if c0 == 1:
        prefix = [chunk]
    else:
        a, rk = divmod(chunk, L - 1)
        ip = (a + r) % L
        prefix = [a, rk if rk < ip else rk + 1]
    word = list(prefix) + [0] * (n - c0)

    def fill(pos):
        if pos == n:
            yield word
            return
        forbid = (word[pos - 1] + r) % L
        for c in range(L):
            if c != forbid:
                word[pos] = c
                yield from fill(pos + 1)

    yield from fill(c0)


def sphere_reduce(r, n, chunk, mode, pwa, va_r, va_i, kva, wa_r, wa_i, kwa,
                  pwb, vb_r, vb_i, kvb, wb_r, wb_i, kwb,
                  nu, pm, f_r, f_i, kf, g_r, g_i, kg):
    """Sum over one sphere chunk of f(gamma) g(gamma^-1) [A] [conj B].

    Returns [sum_re, comp_re, sum_im, comp_im, min_abs, argmin, count, max_abs]
    where min_abs is min |A| (mode 1) or |A||B| (mode 2) and argmin its first
    position in the chunk.
    """
    L = 2 * r
    sr = cr = si = ci = 0.0
    min_abs = math.inf
    argmin = -1
    max_abs = 0.0
    count = 0
    for gam in _chunk_words(r, n, chunk):
        i_f = _idx(gam[:kf], r)
        gl = [(gam[n - 1 - j] + r) % L for j in range(kg)]
        i_g = _idx(gl, r)
        fgr = f_r[i_f] * g_r[i_g] - f_i[i_f] * g_i[i_g]
        fgi = f_r[i_f] * g_i[i_g] + f_i[i_f] * g_r[i_g]
        if mode == 0:
            pr = fgr
            p_i = fgi
            a = 0.0
        else:
            ar, ai = coefficient(r, gam, pwa, nu, pm, va_r, va_i, kva, wa_r, wa_i, kwa)
            if mode == 1:
                pr = fgr * ar - fgi * ai
                p_i = fgr * ai + fgi * ar
                a = math.sqrt(ar * ar + ai * ai)
            else:
                br, bi = coefficient(r, gam, pwb, nu, pm, vb_r, vb_i, kvb, wb_r, wb_i, kwb)
                abr = ar * br + ai * bi
                abi = ai * br - ar * bi
                pr = fgr * abr - fgi * abi
                p_i = fgr * abi + fgi * abr
                a = math.sqrt(ar * ar + ai * ai) * math.sqrt(br * br + bi * bi)
        if mode != 0 and a < min_abs:
            min_abs = a
            argmin = count
        mag = math.sqrt(pr * pr + p_i * p_i)
        if mag > max_abs:
            max_abs = mag
        sr, cr = _add(sr, cr, pr)
        si, ci = _add(si, ci, p_i)
        count += 1
    return np.array([sr, cr, si, ci, min_abs, float(argmin), float(count), max_abs])


def sphere_operator(r, n, chunk, pw, nu, pm, p):
    """Entrywise compensated sum over one chunk of the level-p matrices
    M[u, u'] = <pi(gamma) 1_{C_u'}, 1_{C_u}>.  Returns (sums, compensations)."""
    dim = 1 if p == 0 else 2 * r * (2 * r - 1) ** (p - 1)
    S = np.zeros(dim * dim)
    C = np.zeros(dim * dim)
    s_l = S.tolist()
    c_l = C.tolist()

    def emit(wgt, iv, iw):
        k = iw * dim + iv
        s_l[k], c_l[k] = _add(s_l[k], c_l[k], wgt)

    for gam in _chunk_words(r, n, chunk):
        _cells(r, list(gam), n, p, p, nu, pm, pw, emit)
    return np.array(s_l).reshape(dim, dim), np.array(c_l).reshape(dim, dim)


def pair_kernel_sum(words, lo, hi, fidx, kvals, F_r, F_i):
    """Sum over g in rows [lo, hi), h in all rows of F[fidx g, fidx h] * kvals[(g, h)_o]."""
    words = np.asarray(words)
    rows = [tuple(w) for w in words.tolist()]
    fl = list(fidx)
    N = words.shape[1]
    ncols = F_r.shape[1]
    Fr = F_r.ravel().tolist()
    Fi = F_i.ravel().tolist()
    sr = cr = si = ci = 0.0
    for a in range(lo, hi):
        g = rows[a]
        fa = fl[a] * ncols
        for b in range(len(rows)):
            h = rows[b]
            m = 0
            while m < N and g[m] == h[m]:
                m += 1
            k = kvals[m]
            j = fa + fl[b]
            sr, cr = _add(sr, cr, Fr[j] * k)
            si, ci = _add(si, ci, Fi[j] * k)
    return np.array([sr, cr, si, ci])
