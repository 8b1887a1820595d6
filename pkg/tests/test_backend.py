import numpy as np
import pytest

from boundary_reps import _backend
from boundary_reps.cylinders import CylinderFunction, TreeTestFunction, matrix_coefficient
from boundary_reps.experiments import CoefSpec, sphere_operator, sphere_sum
from boundary_reps.words import GroupContext

needs_cython = pytest.mark.skipif("cython" not in _backend.available_backends(),
                                  reason="compiled kernels not built")


def test_python_backend_always_available():
    assert "python" in _backend.available_backends()
    assert _backend.get("python").name == "python"


@needs_cython
def test_coefficient_bit_identical(ctx, rng):
    v = CylinderFunction.random(ctx, 2, rng)
    w = CylinderFunction.random(ctx, 2, rng)
    for gamma in ctx.enumerate_ball(3 if ctx.rank == 2 else 2):
        a = matrix_coefficient(0.25, gamma, v, w, backend="cython")
        b = matrix_coefficient(0.25, gamma, v, w, backend="python")
        assert a == b


@needs_cython
def test_sphere_sum_bit_identical(rng):
    ctx = GroupContext(2)
    v = CylinderFunction.random(ctx, 2, rng)
    w = CylinderFunction.random(ctx, 1, rng)
    f = TreeTestFunction(CylinderFunction.random(ctx, 1, rng))
    g = TreeTestFunction(CylinderFunction.random(ctx, 2, rng))
    a = CoefSpec(0.25, v, w)
    b = CoefSpec(0.4, w, v)
    for n in (1, 2, 5):
        x = sphere_sum(ctx, n, a=a, b=b, f=f, g=g, backend="cython")
        y = sphere_sum(ctx, n, a=a, b=b, f=f, g=g, backend="python")
        assert (x.total, x.min_abs, x.argmin, x.max_abs) == (y.total, y.min_abs, y.argmin, y.max_abs)


@needs_cython
def test_sphere_operator_bit_identical():
    ctx = GroupContext(2)
    for n in (0, 1, 4):
        A = sphere_operator(ctx, 0.25, n, 2, backend="cython")
        B = sphere_operator(ctx, 0.25, n, 2, backend="python")
        assert np.array_equal(A, B)


@pytest.mark.parametrize("threads", [2, 4, 8])
def test_thread_count_does_not_change_sums(rng, threads):
    ctx = GroupContext(2)
    v = CylinderFunction.random(ctx, 2, rng)
    w = CylinderFunction.random(ctx, 2, rng)
    f = TreeTestFunction(CylinderFunction.random(ctx, 1, rng))
    a = CoefSpec(0.25, v, w)
    x = sphere_sum(ctx, 6, a=a, f=f, threads=1)
    y = sphere_sum(ctx, 6, a=a, f=f, threads=threads)
    assert x == y


@needs_cython
def test_pair_kernel_sum_bit_identical():
    from boundary_reps.kernels import kernel_values

    ctx = GroupContext(2)
    W = ctx.level_array(4)
    fidx = np.zeros(len(W), dtype=np.int64)
    kv = kernel_values(ctx, 0.25, 4)
    F = np.ones((1, 1))
    a = _backend.get("cython").pair_kernel_sum(W, 0, len(W), fidx, kv, F, F * 0)
    b = _backend.get("python").pair_kernel_sum(W, 0, len(W), fidx, kv, F, F * 0)
    assert tuple(a) == tuple(b)


def test_forced_python_backend_in_subprocess():
    import os
    import subprocess
    import sys

    env = dict(os.environ, BOUNDARY_REPS_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "import boundary_reps; print(boundary_reps.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
