"""Free group F_r and its Cayley tree: reduced words, spheres, Gromov products.

Words are plain tuples of letter indices ``0 .. 2r-1``.  Letter ``i`` and
``(i + r) % 2r`` are mutually inverse, so for r = 2 the letters are
``a, b, A, B`` with ``A = a^-1``.  Lexicographic order is the order of the
indices.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetError, PreconditionError

Word = tuple

DEFAULT_BUDGET = 10**8


@dataclass(frozen=True)
class GroupContext:
    """Rank and visual parameter of the free group acting on its Cayley tree."""

    rank: int = 2
    epsilon: float = 1.0
    budget: int = field(default=DEFAULT_BUDGET, compare=False)

    def __post_init__(self):
        if int(self.rank) != self.rank or self.rank < 2:
            raise PreconditionError(f"rank must be an integer >= 2, got {self.rank!r}")
        if not self.epsilon > 0:
            raise PreconditionError(f"epsilon must be positive, got {self.epsilon!r}")

    # the tree is 0-hyperbolic
    delta = 0

    @property
    def n_letters(self) -> int:
        return 2 * self.rank

    @property
    def q(self) -> int:
        """Branching number 2r - 1."""
        return 2 * self.rank - 1

    @property
    def Q(self) -> float:
        """Critical exponent ln(2r - 1)."""
        return math.log(self.q)

    @property
    def D(self) -> float:
        """Hausdorff dimension of the boundary for the visual metric, Q / epsilon."""
        return self.Q / self.epsilon

    def inv(self, letter: int) -> int:
        return (letter + self.rank) % self.n_letters

    # -- words ---------------------------------------------------------

    def is_reduced(self, w: Sequence[int]) -> bool:
        L = self.n_letters
        for j, c in enumerate(w):
            if not 0 <= c < L:
                return False
            if j and c == self.inv(w[j - 1]):
                return False
        return True

    def reduce(self, letters: Sequence[int]) -> Word:
        out: list[int] = []
        for c in letters:
            if out and out[-1] == self.inv(c):
                out.pop()
            else:
                out.append(c)
        return tuple(out)

    def inverse(self, w: Sequence[int]) -> Word:
        return tuple(self.inv(c) for c in reversed(w))

    def multiply(self, a: Sequence[int], b: Sequence[int]) -> Word:
        """Reduced form of the concatenation ``a . b`` (both assumed reduced)."""
        i = 0
        n = min(len(a), len(b))
        while i < n and a[len(a) - 1 - i] == self.inv(b[i]):
            i += 1
        return tuple(a[: len(a) - i]) + tuple(b[i:])

    def parse(self, text: str) -> Word:
        """Parse ``"abA"``-style words (lowercase generators, uppercase inverses)."""
        if self.rank > 26:
            raise PreconditionError("letter syntax only supports rank <= 26")
        gens = string.ascii_lowercase[: self.rank]
        out = []
        for ch in text:
            if ch in gens:
                out.append(gens.index(ch))
            elif ch.lower() in gens:
                out.append(gens.index(ch.lower()) + self.rank)
            else:
                raise PreconditionError(f"unknown letter {ch!r} for rank {self.rank}")
        w = tuple(out)
        if not self.is_reduced(w):
            raise PreconditionError(f"{text!r} is not freely reduced")
        return w

    def format(self, w: Sequence[int]) -> str:
        if not w:
            return "e"
        if self.rank > 26:
            return ".".join(str(c) for c in w)
        gens = string.ascii_lowercase
        return "".join(gens[c] if c < self.rank else gens[c - self.rank].upper() for c in w)

    # -- spheres and cylinder indexing ---------------------------------

    def sphere_size(self, n: int) -> int:
        if n < 0:
            raise PreconditionError("sphere radius must be >= 0")
        return 1 if n == 0 else self.n_letters * self.q ** (n - 1)

    def ball_size(self, n: int) -> int:
        """Number of group elements with |g| <= n."""
        return sum(self.sphere_size(j) for j in range(n + 1))

    def check_budget(self, count: int, what: str = "enumeration"):
        if count > self.budget:
            raise BudgetError(f"{what} of {count} items exceeds budget {self.budget}")

    def enumerate_sphere(self, n: int, prefix: Sequence[int] = ()) -> Iterator[Word]:
        """Reduced words of length ``n`` (extending ``prefix``) in lexicographic order."""
        self.check_budget(self.sphere_size(n), f"sphere S_{n}")
        prefix = tuple(prefix)
        if len(prefix) > n or not self.is_reduced(prefix):
            return
        L = self.n_letters
        word = list(prefix)

        def extend(depth):
            if depth == n:
                yield tuple(word)
                return
            forbidden = self.inv(word[-1]) if word else -1
            for c in range(L):
                if c != forbidden:
                    word.append(c)
                    yield from extend(depth + 1)
                    word.pop()

        yield from extend(len(prefix))

    def enumerate_ball(self, n: int) -> Iterator[Word]:
        for j in range(n + 1):
            yield from self.enumerate_sphere(j)

    def level_size(self, k: int) -> int:
        """Number of level-k boundary cylinders (1 at level 0)."""
        return self.sphere_size(k)

    def word_index(self, w: Sequence[int]) -> int:
        """Position of ``w`` in the lexicographic order of words of length ``len(w)``."""
        if not w:
            return 0
        q = self.q
        idx = w[0]
        prev = w[0]
        for c in w[1:]:
            ip = self.inv(prev)
            idx = idx * q + (c if c < ip else c - 1)
            prev = c
        return idx

    def word_from_index(self, k: int, idx: int) -> Word:
        if k == 0:
            return ()
        q = self.q
        ranks = []
        for _ in range(k - 1):
            idx, rk = divmod(idx, q)
            ranks.append(rk)
        out = [idx]
        for rk in reversed(ranks):
            ip = self.inv(out[-1])
            out.append(rk if rk < ip else rk + 1)
        return tuple(out)

    def level_words(self, k: int) -> list:
        return list(self.enumerate_sphere(k))

    def level_array(self, k: int) -> np.ndarray:
        """All level-k words as an int array of shape (count, k), lexicographic."""
        count = self.level_size(k)
        self.check_budget(count * max(k, 1), f"level-{k} table")
        if k == 0:
            return np.zeros((1, 0), dtype=np.int64)
        arr = np.arange(self.n_letters, dtype=np.int64)[:, None]
        for _ in range(k - 1):
            last = arr[:, -1]
            # children in order: all letters except inv(last)
            cand = np.arange(self.n_letters, dtype=np.int64)[None, :].repeat(len(arr), 0)
            mask = cand != ((last + self.rank) % self.n_letters)[:, None]
            kids = cand[mask].reshape(len(arr), self.q)
            arr = np.concatenate(
                [np.repeat(arr, self.q, axis=0), kids.reshape(-1, 1)], axis=1
            )
        return arr


def common_prefix_length(u: Sequence[int], v: Sequence[int]) -> int:
    m = 0
    for a, b in zip(u, v):
        if a != b:
            break
        m += 1
    return m


def gromov_product_group(ctx: GroupContext, g: Sequence[int], h: Sequence[int]) -> int:
    """(go, ho)_o = (|g| + |h| - |g^-1 h|) / 2; on the tree the common prefix length."""
    d = len(ctx.multiply(ctx.inverse(g), h))
    twice = len(g) + len(h) - d
    return twice // 2


def busemann_on_cylinder(u: Sequence[int], gamma: Sequence[int]) -> int:
    """beta_xi(o, gamma o) for any xi in the cylinder of ``u`` (requires |u| >= |gamma|)."""
    if len(u) < len(gamma):
        raise PreconditionError(
            f"cylinder level {len(u)} is below |gamma| = {len(gamma)}; Busemann value not constant"
        )
    return 2 * common_prefix_length(u, gamma) - len(gamma)


@dataclass(frozen=True)
class Ray:
    """Eventually periodic boundary point ``prefix . block . block . ...``."""

    prefix: Word
    block: Word

    def __post_init__(self):
        if not self.block:
            raise PreconditionError("ray block must be nonempty")

    def ray_prefix(self, k: int) -> Word:
        if k <= len(self.prefix):
            return self.prefix[:k]
        out = list(self.prefix)
        while len(out) < k:
            out.extend(self.block)
        return tuple(out[:k])

    def is_valid(self, ctx: GroupContext) -> bool:
        return ctx.is_reduced(self.prefix + self.block + self.block)


def hat_extension(ctx: GroupContext, gamma: Sequence[int]) -> Ray:
    """Boundary point gamma_hat: gamma followed by its last letter repeated forever."""
    gamma = tuple(gamma)
    if not gamma:
        raise PreconditionError("hat extension of the identity is undefined")
    return Ray(gamma, (gamma[-1],))


def check_extension(ctx: GroupContext, gamma: Sequence[int]) -> Ray:
    """gamma_check := hat extension of gamma^-1."""
    return hat_extension(ctx, ctx.inverse(gamma))


def critical_exponent_estimate(ctx: GroupContext, n_max: int) -> float:
    """Least-squares slope of log |B(o, n)| against n for n = 1 .. n_max."""
    if n_max < 2:
        raise PreconditionError("n_max must be >= 2")
    ns = np.arange(1, n_max + 1, dtype=float)
    logs = np.array([math.log(ctx.ball_size(int(n))) for n in ns])
    # drop the transient first half so the slope reflects the growth rate
    half = len(ns) // 2
    slope = np.polyfit(ns[half:], logs[half:], 1)[0]
    return float(slope)
