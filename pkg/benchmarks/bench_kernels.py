"""Compare the compiled and pure-Python kernels on the sphere reductions.

    python3 benchmarks/bench_kernels.py [--n 4 6 8] [--repeats 3]

Prints best-of-repeats wall time per backend, the speedup, and whether the two
backends returned bit-identical totals.
"""

import argparse
import time

from boundary_reps import available_backends
from boundary_reps.cylinders import TreeTestFunction
from boundary_reps.experiments import CoefSpec, probe_function, sphere_operator, sphere_sum
from boundary_reps.words import GroupContext


def best_of(fn, repeats):
    best, out = float("inf"), None
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def cases(ctx, n):
    P = lambda level, phase: probe_function(ctx, level, phase)  # noqa: E731
    f, g = TreeTestFunction(P(1, 1.7)), TreeTestFunction(P(2, 2.5))
    a = CoefSpec(0.25, P(2, 0.3), P(2, 0.9))
    b = CoefSpec(0.25, P(2, 1.1), P(2, 0.2))
    return {
        "bml": lambda backend: sphere_sum(ctx, n, a=a, f=f, g=g, backend=backend).total,
        "schur": lambda backend: sphere_sum(ctx, n, a=a, b=b, f=f, g=g, backend=backend).total,
        "rd": lambda backend: sphere_operator(ctx, 0.25, n, 2, backend=backend).tobytes(),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[4, 6, 8])
    ap.add_argument("--rank", type=int, default=2)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)
    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only the Python kernels are available")
    ctx = GroupContext(args.rank)
    print(f"{'kernel':<6} {'n':>3} " + " ".join(f"{b:>10}" for b in backends) + "   speedup  identical")
    for n in args.n:
        for name, fn in cases(ctx, n).items():
            times, outs = [], []
            for backend in backends:
                sec, out = best_of(lambda: fn(backend), args.repeats)
                times.append(sec)
                outs.append(out)
            speed = times[-1] / times[0] if len(times) > 1 else 1.0
            same = all(o == outs[0] for o in outs)
            print(f"{name:<6} {n:>3} " + " ".join(f"{s:>9.4f}s" for s in times)
                  + f"   {speed:>7.1f}x  {same}")


if __name__ == "__main__":
    main()
