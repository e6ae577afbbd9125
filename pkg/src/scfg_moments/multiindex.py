"""Multi-index arithmetic, combinatorics, and enumeration.

A multi-index is a fixed-length tuple of non-negative integer exponents.
Everything here is exact integer or plain float arithmetic: the componentwise
partial order, binomial/multinomial coefficients, powers of real vectors, and
enumeration of downsets and of ordered compositions.
"""

from __future__ import annotations

import math
import operator
from functools import lru_cache
from itertools import product as _cartesian
from typing import Iterable, Sequence


class MultiIndex(tuple):
    """Immutable tuple of non-negative integer exponents.

    Inherits tuple equality/hashing, so plain tuples of ints interoperate as
    dictionary keys. ``+`` and ``-`` are componentwise (not concatenation).
    """

    def __new__(cls, exponents: Iterable[int]) -> "MultiIndex":
        entries = tuple(operator.index(e) for e in exponents)
        if not entries:
            raise ValueError("a multi-index needs at least one dimension")
        if any(e < 0 for e in entries):
            raise ValueError(f"negative exponent in multi-index {entries}")
        return super().__new__(cls, entries)

    @property
    def dim(self) -> int:
        return len(self)

    @property
    def degree(self) -> int:
        """Sum of all exponents."""
        return sum(self)

    def _coerced(self, other) -> "MultiIndex":
        other = other if isinstance(other, MultiIndex) else MultiIndex(other)
        if len(other) != len(self):
            raise ValueError(
                f"dimension mismatch: {len(self)} vs {len(other)}"
            )
        return other

    def leq(self, other) -> bool:
        """Componentwise <=."""
        other = self._coerced(other)
        return all(a <= b for a, b in zip(self, other))

    def lt(self, other) -> bool:
        """Componentwise <, strict in every coordinate."""
        other = self._coerced(other)
        return all(a < b for a, b in zip(self, other))

    def __add__(self, other):
        other = self._coerced(other)
        return MultiIndex(a + b for a, b in zip(self, other))

    def __sub__(self, other):
        other = self._coerced(other)
        return MultiIndex(a - b for a, b in zip(self, other))

    def __repr__(self) -> str:
        return f"MultiIndex{tuple(self)!r}"


def binom(a, b) -> int:
    """Product of componentwise binomial coefficients C(a_i, b_i).

    Requires b <= a componentwise.
    """
    a = MultiIndex(a)
    b = a._coerced(b)
    if not b.leq(a):
        raise ValueError(f"{tuple(b)} is not componentwise <= {tuple(a)}")
    return _binom_cached(a, b)


@lru_cache(maxsize=None)
def _binom_cached(a: MultiIndex, b: MultiIndex) -> int:
    return math.prod(math.comb(x, y) for x, y in zip(a, b))


def multinom(a, parts: Sequence) -> int:
    """Multinomial coefficient a! / (parts[0]! ... parts[-1]!).

    The parts must sum to ``a`` componentwise.
    """
    a = MultiIndex(a)
    parts = tuple(a._coerced(p) for p in parts)
    if not parts:
        raise ValueError("need at least one part")
    sums = [sum(p[i] for p in parts) for i in range(len(a))]
    if tuple(sums) != tuple(a):
        raise ValueError(f"parts sum to {tuple(sums)}, expected {tuple(a)}")
    return _multinom_cached(a, parts)


@lru_cache(maxsize=None)
def _multinom_cached(a: MultiIndex, parts: tuple) -> int:
    value = 1
    for i, total in enumerate(a):
        num = math.factorial(total)
        den = math.prod(math.factorial(p[i]) for p in parts)
        value *= num // den
    return value


def power(z: Sequence[float], g) -> float:
    """Multi-index power z_1^g_1 * ... * z_d^g_d, with 0**0 == 1."""
    g = MultiIndex(g)
    if len(z) != len(g):
        raise ValueError(f"dimension mismatch: {len(z)} vs {len(g)}")
    out = 1.0
    for base, exp in zip(z, g):
        out *= float(base) ** exp
    return out


def enumerate_downset(v) -> tuple:
    """All multi-indices a <= v componentwise, in graded order.

    Graded order: ascending degree, ties broken lexicographically. The first
    element is the zero index, the last is ``v``; the count is
    prod(v_i + 1).
    """
    return _downset_cached(MultiIndex(v))


@lru_cache(maxsize=None)
def _downset_cached(v: MultiIndex) -> tuple:
    grid = _cartesian(*(range(e + 1) for e in v))
    return tuple(
        sorted((MultiIndex(g) for g in grid), key=lambda a: (a.degree, a))
    )


def enumerate_compositions(a, n: int) -> tuple:
    """All ordered n-tuples of multi-indices summing to ``a``, each once.

    ``n`` must be at least 1.
    """
    if n < 1:
        raise ValueError("need at least one part")
    return _compositions_cached(MultiIndex(a), n)


@lru_cache(maxsize=None)
def _compositions_cached(a: MultiIndex, n: int) -> tuple:
    per_dim = [_scalar_compositions(e, n) for e in a]
    out = []
    for combo in _cartesian(*per_dim):
        out.append(tuple(MultiIndex(c[j] for c in combo) for j in range(n)))
    return tuple(out)


@lru_cache(maxsize=None)
def _scalar_compositions(total: int, n: int) -> tuple:
    if n == 1:
        return ((total,),)
    out = []
    for first in range(total + 1):
        for rest in _scalar_compositions(total - first, n - 1):
            out.append((first,) + rest)
    return tuple(out)
