# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sphere kernels.

Mirror of ``_pykernels.py`` (see its module docstring for the cell
structure).  Arithmetic is written in the same order and compiled without
FP contraction, so results match the Python backend bit for bit.  All loops
run without the GIL so chunks can be processed from a thread pool.
"""

from libc.math cimport sqrt, INFINITY
from libc.stdlib cimport malloc, free
from libc.string cimport memset

import numpy as np

BACKEND = "cython"

cdef struct CellCtx:
    int r
    int L
    int q
    int n
    int kv
    int kw
    int m
    int D
    const long long* gam
    long long* inv_gam
    long long* xi
    long long* vl
    const double* pw
    const double* vr
    const double* vi
    const double* wr
    const double* wi
    double wgt
    # coefficient accumulators
    double sr
    double cr
    double si
    double ci
    # matrix mode (RD operator); NULL otherwise
    double* S
    double* C
    int dim


cdef inline long long _idx(const long long* letters, int k, int r) noexcept nogil:
    cdef int L = 2 * r
    cdef int q = L - 1
    cdef long long idx, prev, c, ip
    cdef int j
    if k == 0:
        return 0
    idx = letters[0]
    prev = letters[0]
    for j in range(1, k):
        c = letters[j]
        ip = (prev + r) % L
        if c < ip:
            idx = idx * q + c
        else:
            idx = idx * q + (c - 1)
        prev = c
    return idx


cdef inline void _add(double* s, double* c, double x) noexcept nogil:
    cdef double t = s[0] + x
    if (s[0] if s[0] >= 0 else -s[0]) >= (x if x >= 0 else -x):
        c[0] += (s[0] - t) + x
    else:
        c[0] += (x - t) + s[0]
    s[0] = t


cdef inline void _emit(CellCtx* c, double wgt, long long iv, long long iw) noexcept nogil:
    cdef double re_t, im_t
    cdef long long k
    if c.S != NULL:
        k = iw * c.dim + iv
        _add(&c.S[k], &c.C[k], wgt)
        return
    re_t = wgt * (c.vr[iv] * c.wr[iw] + c.vi[iv] * c.wi[iw])
    im_t = wgt * (c.vi[iv] * c.wr[iw] - c.vr[iv] * c.wi[iw])
    _add(&c.sr, &c.cr, re_t)
    _add(&c.si, &c.ci, im_t)


cdef void _leaf(CellCtx* c) noexcept nogil:
    cdef int j
    cdef int n = c.n
    cdef int m = c.m
    cdef long long iv
    if m < n:
        for j in range(c.kv):
            if j < n - m:
                c.vl[j] = c.inv_gam[j]
            else:
                c.vl[j] = c.xi[m + (j - (n - m))]
        iv = _idx(c.vl, c.kv, c.r)
    else:
        iv = _idx(c.xi + n, c.kv, c.r)
    _emit(c, c.wgt, iv, _idx(c.xi, c.kw, c.r))


cdef void _dfs(CellCtx* c, int pos) noexcept nogil:
    cdef long long forbid1, forbid2, letter
    if pos == c.D:
        _leaf(c)
        return
    forbid1 = (c.xi[pos - 1] + c.r) % c.L if pos > 0 else -1
    forbid2 = c.gam[c.m] if (pos == c.m and c.m < c.n) else -1
    for letter in range(c.L):
        if letter != forbid1 and letter != forbid2:
            c.xi[pos] = letter
            _dfs(c, pos + 1)


cdef void _cells(CellCtx* c, const double* nu, const double* pm) noexcept nogil:
    cdef int n = c.n
    cdef int j, m, e, D, ext, t
    cdef double f, mass
    cdef long long iv, iw
    for j in range(n):
        c.inv_gam[j] = (c.gam[n - 1 - j] + c.r) % c.L
        c.xi[j] = c.gam[j]
    for m in range(n + 1):
        if m < n:
            e = c.kv - (n - m)
            if e < 0:
                e = 0
            t = c.kw - m
            if t < e:
                t = e
            if t < 0:
                t = 0
            D = m + t
        else:
            D = c.kw if c.kw > n + c.kv else n + c.kv
        ext = D - m
        f = c.pw[2 * m]
        if ext == 0:
            if m < n:
                mass = pm[m]
                iv = _idx(c.inv_gam, c.kv, c.r)
            else:
                mass = nu[n]
                iv = 0
            iw = _idx(c.gam, c.kw, c.r)
            _emit(c, mass * f, iv, iw)
            continue
        c.m = m
        c.D = D
        c.wgt = nu[D] * f
        _dfs(c, m)
        for j in range(m, n):
            c.xi[j] = c.gam[j]


cdef int _first_chunk_word(long long* word, int r, int n, long long chunk) noexcept nogil:
    cdef int L = 2 * r
    cdef int c0 = n if n < 2 else 2
    cdef long long a, rk, ip
    cdef int pos
    if c0 == 1:
        word[0] = chunk
    elif c0 == 2:
        a = chunk // (L - 1)
        rk = chunk % (L - 1)
        ip = (a + r) % L
        word[0] = a
        word[1] = rk if rk < ip else rk + 1
    for pos in range(c0, n):
        word[pos] = 0 if word[pos - 1] != r else 1   # smallest letter != inv(prev)
    return c0


cdef bint _next_word(long long* word, int r, int n, int c0) noexcept nogil:
    # lexicographic successor keeping the chunk prefix fixed
    cdef int L = 2 * r
    cdef int pos = n - 1
    cdef long long cand, forbid
    while pos >= c0:
        forbid = (word[pos - 1] + r) % L
        cand = word[pos] + 1
        if cand == forbid:
            cand += 1
        if cand < L:
            word[pos] = cand
            pos += 1
            while pos < n:
                word[pos] = 0 if word[pos - 1] != r else 1
                pos += 1
            return True
        pos -= 1
    return False


cdef void _init_ctx(CellCtx* c, int r, int n, int kv, int kw, long long* scratch) noexcept nogil:
    c.r = r
    c.L = 2 * r
    c.q = 2 * r - 1
    c.n = n
    c.kv = kv
    c.kw = kw
    c.inv_gam = scratch
    c.vl = scratch + (n + 1)
    c.xi = scratch + (n + 1) + (kv + 1)
    c.sr = 0.0
    c.cr = 0.0
    c.si = 0.0
    c.ci = 0.0
    c.S = NULL
    c.C = NULL
    c.dim = 0


def coefficient(int r, const long long[::1] gam, const double[::1] pw,
                const double[::1] nu, const double[::1] pm,
                const double[::1] vr, const double[::1] vi, int kv,
                const double[::1] wr, const double[::1] wi, int kw):
    cdef int n = gam.shape[0]
    cdef CellCtx c
    cdef long long* scratch = <long long*> malloc((2 * n + 2 * (kv + kw) + 8) * sizeof(long long))
    cdef long long dummy = 0
    if scratch == NULL:
        raise MemoryError()
    with nogil:
        _init_ctx(&c, r, n, kv, kw, scratch)
        c.gam = &gam[0] if n > 0 else &dummy
        c.pw = &pw[0]
        c.vr = &vr[0]
        c.vi = &vi[0]
        c.wr = &wr[0]
        c.wi = &wi[0]
        _cells(&c, &nu[0], &pm[0])
    free(scratch)
    return c.sr + c.cr, c.si + c.ci


def sphere_reduce(int r, int n, long long chunk, int mode,
                  const double[::1] pwa, const double[::1] va_r, const double[::1] va_i, int kva,
                  const double[::1] wa_r, const double[::1] wa_i, int kwa,
                  const double[::1] pwb, const double[::1] vb_r, const double[::1] vb_i, int kvb,
                  const double[::1] wb_r, const double[::1] wb_i, int kwb,
                  const double[::1] nu, const double[::1] pm,
                  const double[::1] f_r, const double[::1] f_i, int kf,
                  const double[::1] g_r, const double[::1] g_i, int kg):
    cdef int L = 2 * r
    cdef int kmax = kva + kwa + kvb + kwb + kf + kg
    cdef long long* word = <long long*> malloc((n + 1) * sizeof(long long))
    cdef long long* gl = <long long*> malloc((kg + 1) * sizeof(long long))
    cdef long long* sa = <long long*> malloc((2 * n + 2 * kmax + 8) * sizeof(long long))
    cdef long long* sb = <long long*> malloc((2 * n + 2 * kmax + 8) * sizeof(long long))
    cdef double sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0
    cdef double min_abs = INFINITY, max_abs = 0.0, a, mag
    cdef long long argmin = -1, count = 0, i_f, i_g
    cdef double fgr, fgi, pr, p_i, ar, ai, br, bi, abr, abi
    cdef int c0, j
    cdef bint more = True
    cdef CellCtx ca, cb
    if word == NULL or gl == NULL or sa == NULL or sb == NULL:
        free(word); free(gl); free(sa); free(sb)
        raise MemoryError()
    with nogil:
        c0 = _first_chunk_word(word, r, n, chunk)
        while more:
            i_f = _idx(word, kf, r)
            for j in range(kg):
                gl[j] = (word[n - 1 - j] + r) % L
            i_g = _idx(gl, kg, r)
            fgr = f_r[i_f] * g_r[i_g] - f_i[i_f] * g_i[i_g]
            fgi = f_r[i_f] * g_i[i_g] + f_i[i_f] * g_r[i_g]
            if mode == 0:
                pr = fgr
                p_i = fgi
                a = 0.0
            else:
                _init_ctx(&ca, r, n, kva, kwa, sa)
                ca.gam = word
                ca.pw = &pwa[0]
                ca.vr = &va_r[0]
                ca.vi = &va_i[0]
                ca.wr = &wa_r[0]
                ca.wi = &wa_i[0]
                _cells(&ca, &nu[0], &pm[0])
                ar = ca.sr + ca.cr
                ai = ca.si + ca.ci
                if mode == 1:
                    pr = fgr * ar - fgi * ai
                    p_i = fgr * ai + fgi * ar
                    a = sqrt(ar * ar + ai * ai)
                else:
                    _init_ctx(&cb, r, n, kvb, kwb, sb)
                    cb.gam = word
                    cb.pw = &pwb[0]
                    cb.vr = &vb_r[0]
                    cb.vi = &vb_i[0]
                    cb.wr = &wb_r[0]
                    cb.wi = &wb_i[0]
                    _cells(&cb, &nu[0], &pm[0])
                    br = cb.sr + cb.cr
                    bi = cb.si + cb.ci
                    abr = ar * br + ai * bi
                    abi = ai * br - ar * bi
                    pr = fgr * abr - fgi * abi
                    p_i = fgr * abi + fgi * abr
                    a = sqrt(ar * ar + ai * ai) * sqrt(br * br + bi * bi)
            if mode != 0 and a < min_abs:
                min_abs = a
                argmin = count
            mag = sqrt(pr * pr + p_i * p_i)
            if mag > max_abs:
                max_abs = mag
            _add(&sr, &cr, pr)
            _add(&si, &ci, p_i)
            count += 1
            more = _next_word(word, r, n, c0)
    free(word); free(gl); free(sa); free(sb)
    return np.array([sr, cr, si, ci, min_abs, <double> argmin, <double> count, max_abs])


def sphere_operator(int r, int n, long long chunk, const double[::1] pw,
                    const double[::1] nu, const double[::1] pm, int p):
    cdef int dim = 1
    cdef int j
    if p > 0:
        dim = 2 * r
        for j in range(p - 1):
            dim *= 2 * r - 1
    S_arr = np.zeros(dim * dim)
    C_arr = np.zeros(dim * dim)
    cdef double[::1] S = S_arr
    cdef double[::1] C = C_arr
    cdef long long* word = <long long*> malloc((n + 1) * sizeof(long long))
    cdef long long* scratch = <long long*> malloc((2 * n + 4 * p + 8) * sizeof(long long))
    cdef CellCtx c
    cdef int c0
    cdef bint more = True
    if word == NULL or scratch == NULL:
        free(word); free(scratch)
        raise MemoryError()
    with nogil:
        c0 = _first_chunk_word(word, r, n, chunk)
        while more:
            _init_ctx(&c, r, n, p, p, scratch)
            c.gam = word
            c.pw = &pw[0]
            c.S = &S[0]
            c.C = &C[0]
            c.dim = dim
            _cells(&c, &nu[0], &pm[0])
            more = _next_word(word, r, n, c0)
    free(word); free(scratch)
    return S_arr.reshape(dim, dim), C_arr.reshape(dim, dim)


def pair_kernel_sum(const long long[:, ::1] words, long long lo, long long hi,
                    const long long[::1] fidx, const double[::1] kvals,
                    const double[:, ::1] F_r, const double[:, ::1] F_i):
    cdef long long a, b, nrows = words.shape[0]
    cdef int N = words.shape[1]
    cdef int m
    cdef double k, sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0
    with nogil:
        for a in range(lo, hi):
            for b in range(nrows):
                m = 0
                while m < N and words[a, m] == words[b, m]:
                    m += 1
                k = kvals[m]
                _add(&sr, &cr, F_r[fidx[a], fidx[b]] * k)
                _add(&si, &ci, F_i[fidx[a], fidx[b]] * k)
    return np.array([sr, cr, si, ci])
