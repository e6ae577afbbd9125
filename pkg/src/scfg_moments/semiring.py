"""Binomial semiring: truncated derivative tuples under Leibniz convolution.

An element of order ``nu`` stores one real per multi-index ``a <= nu``: the
value of the a-th partial derivative at zero of some represented function.
Addition is componentwise; multiplication convolves with binomial weights,
exactly as differentiating a product does. Running sum-product algorithms in
this algebra therefore carries all cross-moments up to order ``nu`` alongside
the plain probability (the component at index zero).
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, Sequence

from .multiindex import MultiIndex, binom, enumerate_downset, power


@lru_cache(maxsize=None)
def _index_map(order: MultiIndex) -> dict:
    return {a: i for i, a in enumerate(enumerate_downset(order))}


@lru_cache(maxsize=None)
def _mul_plan(order: MultiIndex) -> tuple:
    """Precomputed (out, left, right, weight) quadruples for one product.

    The sum for component a runs over b <= a only; terms with b outside the
    downset of a vanish identically.
    """
    index = _index_map(order)
    plan = []
    for a, ia in index.items():
        for b in enumerate_downset(a):
            plan.append((ia, index[b], index[a - b], float(binom(a, b))))
    return tuple(plan)


class BinomialTuple:
    """One semiring element: order ``nu`` plus its dense coefficient tuple.

    Coefficients are stored in graded downset order of ``nu`` (the order
    returned by :func:`enumerate_downset`), as derivative values, not Taylor
    coefficients; no factorial rescaling is applied anywhere.
    """

    __slots__ = ("order", "coeffs")

    def __init__(self, order, coeffs: Iterable[float]):
        order = MultiIndex(order)
        coeffs = tuple(float(c) for c in coeffs)
        n = len(enumerate_downset(order))
        if len(coeffs) != n:
            raise ValueError(
                f"order {tuple(order)} needs {n} coefficients, got {len(coeffs)}"
            )
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("non-finite coefficient")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("BinomialTuple is immutable")

    @classmethod
    def zero(cls, order) -> "BinomialTuple":
        """Additive identity: all components zero."""
        order = MultiIndex(order)
        return cls(order, (0.0,) * len(enumerate_downset(order)))

    @classmethod
    def one(cls, order) -> "BinomialTuple":
        """Multiplicative identity: 1 at the zero index, 0 elsewhere."""
        order = MultiIndex(order)
        n = len(enumerate_downset(order))
        return cls(order, (1.0,) + (0.0,) * (n - 1))

    @classmethod
    def lift(cls, p: float, y: Sequence[float], order) -> "BinomialTuple":
        """Embed a rule weight: component a is p * y**a.

        This is the tuple of all derivatives at zero of p * exp(t . y), the
        weight a probability-p rule with feature vector y contributes.
        """
        order = MultiIndex(order)
        if not 0.0 <= p <= 1.0 + 1e-9:
            raise ValueError(f"probability out of range: {p}")
        if len(y) != len(order):
            raise ValueError(
                f"feature dimension {len(y)} does not match order {tuple(order)}"
            )
        return cls(order, (p * power(y, a) for a in enumerate_downset(order)))

    def __getitem__(self, alpha) -> float:
        alpha = MultiIndex(alpha) if not isinstance(alpha, MultiIndex) else alpha
        try:
            return self.coeffs[_index_map(self.order)[alpha]]
        except KeyError:
            raise KeyError(
                f"{tuple(alpha)} is not <= the order {tuple(self.order)}"
            ) from None

    def components(self) -> dict:
        """Coefficients keyed by multi-index, in graded order."""
        return dict(zip(enumerate_downset(self.order), self.coeffs))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def _check_order(self, other: "BinomialTuple"):
        if self.order != other.order:
            raise ValueError(
                f"order mismatch: {tuple(self.order)} vs {tuple(other.order)}"
            )

    def __add__(self, other):
        if not isinstance(other, BinomialTuple):
            return NotImplemented
        self._check_order(other)
        return BinomialTuple(
            self.order, (a + b for a, b in zip(self.coeffs, other.coeffs))
        )

    def __mul__(self, other):
        if not isinstance(other, BinomialTuple):
            return NotImplemented
        self._check_order(other)
        f, g = self.coeffs, other.coeffs
        out = [0.0] * len(f)
        for ia, ib, ic, w in _mul_plan(self.order):
            out[ia] += w * f[ib] * g[ic]
        return BinomialTuple(self.order, out)

    def __pow__(self, r):
        r = int(r)
        if r < 0:
            raise ValueError("negative power")
        out = BinomialTuple.one(self.order)
        for _ in range(r):
            out = out * self
        return out

    def __eq__(self, other):
        return (
            isinstance(other, BinomialTuple)
            and self.order == other.order
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.order, self.coeffs))

    def allclose(self, other: "BinomialTuple", atol=1e-12, rtol=0.0) -> bool:
        self._check_order(other)
        return all(
            abs(a - b) <= atol + rtol * max(abs(a), abs(b))
            for a, b in zip(self.coeffs, other.coeffs)
        )

    def to_json_dict(self) -> dict:
        return {
            "order": list(self.order),
            "coeffs": {
                ",".join(map(str, a)): c
                for a, c in zip(enumerate_downset(self.order), self.coeffs)
            },
        }

    def __repr__(self):
        return f"BinomialTuple(order={tuple(self.order)}, coeffs={self.coeffs})"
