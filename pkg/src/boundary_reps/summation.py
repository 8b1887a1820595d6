"""Compensated (Neumaier) summation with a fixed, documented order.

Every sphere sum in the package is reduced the same way: each chunk of the
sphere (words sharing their first two letters, lexicographic inside the
chunk) is summed with a running Neumaier compensation, and chunk results are
then folded in chunk order with the same transform.  Because chunks never
depend on the worker count, results are bit-identical for any thread count.
"""

from __future__ import annotations

from typing import Iterable


def two_sum(s: float, c: float, x: float):
    """One Neumaier step: returns the updated (sum, compensation)."""
    t = s + x
    if abs(s) >= abs(x):
        c += (s - t) + x
    else:
        c += (x - t) + s
    return t, c


class CompensatedSum:
    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, x: float):
        self.s, self.c = two_sum(self.s, self.c, x)

    def add_pair(self, s: float, c: float):
        """Fold in another partial (sum, compensation)."""
        self.add(s)
        self.add(c)

    @property
    def value(self) -> float:
        return self.s + self.c


def neumaier_sum(values: Iterable[float]) -> float:
    acc = CompensatedSum()
    for x in values:
        acc.add(float(x))
    return acc.value


class ComplexCompensatedSum:
    __slots__ = ("re", "im")

    def __init__(self):
        self.re = CompensatedSum()
        self.im = CompensatedSum()

    def add(self, z: complex):
        self.re.add(z.real)
        self.im.add(z.imag)

    def add_parts(self, sr, cr, si, ci):
        self.re.add_pair(sr, cr)
        self.im.add_pair(si, ci)

    @property
    def value(self) -> complex:
        return complex(self.re.value, self.im.value)
