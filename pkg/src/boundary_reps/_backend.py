"""Select the compiled kernels when available, else the pure-Python ones.

Set ``BOUNDARY_REPS_BACKEND=python`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

_forced = os.environ.get("BOUNDARY_REPS_BACKEND", "").strip().lower()

_ck = None
if _forced != "python":
    try:
        from . import _ckernels as _ck  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        if _forced == "cython":
            raise
        _ck = None

BACKEND = "cython" if _ck is not None else "python"


def available_backends() -> list:
    return ["cython", "python"] if _ck is not None else ["python"]


def _f(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _i(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def get(name: str | None = None):
    """Kernel namespace for ``name`` ('cython' / 'python'; default: active)."""
    name = name or BACKEND
    if name == "cython":
        if _ck is None:
            raise ImportError("compiled kernels are not built")
        return _Compiled
    if name == "python":
        return _Python
    raise ValueError(f"unknown backend {name!r}")


class _Compiled:
    name = "cython"

    @staticmethod
    def coefficient(r, gam, pw, nu, pm, vr, vi, kv, wr, wi, kw):
        return _ck.coefficient(r, _i(gam), _f(pw), _f(nu), _f(pm), _f(vr), _f(vi), kv,
                               _f(wr), _f(wi), kw)

    @staticmethod
    def sphere_reduce(r, n, chunk, mode, *arrays):
        a = list(arrays)
        # positions of float arrays among the trailing arguments
        for j in (0, 1, 2, 4, 5, 7, 8, 9, 11, 12, 14, 15, 16, 17, 19, 20):
            a[j] = _f(a[j])
        return _ck.sphere_reduce(r, n, chunk, mode, *a)

    @staticmethod
    def sphere_operator(r, n, chunk, pw, nu, pm, p):
        return _ck.sphere_operator(r, n, chunk, _f(pw), _f(nu), _f(pm), p)

    @staticmethod
    def pair_kernel_sum(words, lo, hi, fidx, kvals, F_r, F_i):
        return _ck.pair_kernel_sum(_i(words), lo, hi, _i(fidx), _f(kvals), _f(F_r), _f(F_i))


def _l(a):
    return np.asarray(a, dtype=np.float64).tolist()


class _Python:
    name = "python"

    @staticmethod
    def coefficient(r, gam, pw, nu, pm, vr, vi, kv, wr, wi, kw):
        return _pykernels.coefficient(r, [int(c) for c in gam], _l(pw), _l(nu), _l(pm),
                                      _l(vr), _l(vi), kv, _l(wr), _l(wi), kw)

    @staticmethod
    def sphere_reduce(r, n, chunk, mode, *arrays):
        a = list(arrays)
        for j in (0, 1, 2, 4, 5, 7, 8, 9, 11, 12, 14, 15, 16, 17, 19, 20):
            a[j] = _l(a[j])
        return _pykernels.sphere_reduce(r, n, chunk, mode, *a)

    @staticmethod
    def sphere_operator(r, n, chunk, pw, nu, pm, p):
        return _pykernels.sphere_operator(r, n, chunk, _l(pw), _l(nu), _l(pm), p)

    @staticmethod
    def pair_kernel_sum(words, lo, hi, fidx, kvals, F_r, F_i):
        return _pykernels.pair_kernel_sum(np.asarray(words), lo, hi, np.asarray(fidx).tolist(),
                                          _l(kvals), _f(F_r), _f(F_i))
