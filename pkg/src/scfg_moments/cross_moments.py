"""Unconditional cross-moments over all derivations of each nonterminal.

For every order ``a`` up to a requested bound, the moment vector solves the
linear system (I - M) m = c, where M is the expectation matrix and the
right-hand side c combines moments of strictly lower order. Orders are
processed in graded sequence so every dependency is available, reusing one LU
factorization for all of them.

Two independent assemblies of c are provided: the primary one runs the rule
weights through the binomial semiring with the current order's slot zeroed
out (which removes exactly the linear-in-m terms, i.e. the M-row), and a
literal one that expands the composition sums term by term. They must agree
to float accuracy and cross-validate each other in the tests.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

from .errors import IllConditionedError, SolverError
from .grammar import Grammar, ensure_consistent, ensure_valid, expectation_matrix
from .multiindex import (
    MultiIndex,
    binom,
    enumerate_compositions,
    enumerate_downset,
    multinom,
    power,
)
from .semiring import BinomialTuple

RCOND_FLOOR = 1e-12
RESIDUAL_TOL = 1e-10


class LinearSolver:
    """LU factorization of (I - M) with partial pivoting, shared by all
    moment orders."""

    def __init__(self, m: np.ndarray):
        a = np.eye(m.shape[0]) - np.asarray(m, dtype=float)
        self.matrix = a
        self.lu, self.piv = lu_factor(a)
        anorm = np.linalg.norm(a, 1)
        rcond, info = lapack.dgecon(self.lu, anorm, norm="1")
        if info != 0:
            raise SolverError(f"condition estimate failed (info={info})")
        self.rcond = float(rcond)
        if self.rcond < RCOND_FLOOR:
            raise IllConditionedError(
                f"I - M has reciprocal condition {self.rcond:.3e} < {RCOND_FLOOR:.0e}"
            )

    def solve(self, c: np.ndarray) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        x = lu_solve((self.lu, self.piv), c)
        tol = RESIDUAL_TOL * (1.0 + float(np.max(np.abs(c), initial=0.0)))
        residual = c - self.matrix @ x
        if float(np.max(np.abs(residual), initial=0.0)) > tol:
            x = x + lu_solve((self.lu, self.piv), residual)
            residual = c - self.matrix @ x
            if float(np.max(np.abs(residual), initial=0.0)) > tol:
                raise SolverError("residual above tolerance after refinement")
        return x


class MomentTable:
    """Moment vectors keyed by multi-index order, one entry per nonterminal.

    The zero-order vector is all ones by construction, never solved for.
    """

    def __init__(self, order, nonterminals, values):
        self.order = MultiIndex(order)
        self.nonterminals = tuple(nonterminals)
        self.values = dict(values)

    def __getitem__(self, alpha) -> np.ndarray:
        return self.values[MultiIndex(alpha)]

    def __contains__(self, alpha) -> bool:
        return MultiIndex(alpha) in self.values

    def to_json_dict(self) -> dict:
        return {
            "nu": list(self.order),
            "nonterminals": list(self.nonterminals),
            "moments": {
                ",".join(map(str, a)): [float(v) for v in self.values[a]]
                for a in enumerate_downset(self.order)
            },
        }


def _premise_probability_sums(g: Grammar) -> np.ndarray:
    return np.array(
        [
            sum(g.rules[ri].probability for ri in group)
            for group in g.rules_by_premise
        ]
    )


def compute_c(g: Grammar, partial: Mapping, a) -> np.ndarray:
    """Right-hand side of the order-``a`` moment system, via the semiring.

    Each nonterminal's known moments over the downset of ``a`` form a tuple
    whose a-slot is set to zero; pushing every rule through
    lift(p, Y) * prod(Z_k**r_k) then yields exactly the part of the
    derivative that does not contain order-``a`` moments, because the
    only dropped products are those placing the full order on a single
    factor (the M-row contribution).

    At order zero this degenerates to the per-premise probability sums (all
    ones for a proper grammar); that grade is never solved for, only exposed
    for testing.
    """
    a = MultiIndex(a)
    n = len(g.nonterminals)
    if a.degree == 0:
        return _premise_probability_sums(g)
    down = enumerate_downset(a)
    ztuples = []
    for k in range(n):
        ztuples.append(
            BinomialTuple(
                a, (0.0 if b == a else float(partial[b][k]) for b in down)
            )
        )
    c = np.zeros(n)
    pow_cache = {}
    for i, group in enumerate(g.rules_by_premise):
        total = BinomialTuple.zero(a)
        for ri in group:
            rule = g.rules[ri]
            term = BinomialTuple.lift(rule.probability, rule.features, a)
            for k, r in enumerate(rule.nonterminal_counts):
                if r:
                    key = (k, r)
                    zp = pow_cache.get(key)
                    if zp is None:
                        zp = pow_cache[key] = ztuples[k] ** r
                    term = term * zp
            total = total + term
        c[i] = total[a]
    return c


def compute_c_literal(g: Grammar, partial: Mapping, a) -> np.ndarray:
    """Right-hand side of the order-``a`` system by explicit expansion.

    Sums the three groups of terms directly: repeated-occurrence terms of a
    single nonterminal, interaction terms spreading the order across several
    nonterminals, and all strictly lower-order rule-weight terms. Composition
    parts are constrained to differ from ``a`` itself (the parts equal to
    ``a`` are the linear terms belonging to the M-row).
    """
    a = MultiIndex(a)
    n = len(g.nonterminals)
    if a.degree == 0:
        return _premise_probability_sums(g)

    inner_cache = {}

    def inner(k: int, gamma: MultiIndex, r: int) -> float:
        # Derivative of the r-th power of nonterminal k's moment function,
        # order gamma, from known moments only (gamma != a throughout).
        if r == 0:
            return 1.0 if gamma.degree == 0 else 0.0
        key = (k, gamma, r)
        val = inner_cache.get(key)
        if val is None:
            val = 0.0
            for parts in enumerate_compositions(gamma, r):
                term = float(multinom(gamma, parts))
                for d in parts:
                    term *= float(partial[d][k])
                val += term
            inner_cache[key] = val
        return val

    sub_orders = [b for b in enumerate_downset(a) if b != a]
    c = np.zeros(n)
    for i, group in enumerate(g.rules_by_premise):
        acc = 0.0
        for ri in group:
            rule = g.rules[ri]
            p = rule.probability
            rcounts = rule.nonterminal_counts

            # Repeated occurrences of one nonterminal carrying all of `a`.
            for k, r in enumerate(rcounts):
                if r < 2:
                    continue
                s = 0.0
                for parts in enumerate_compositions(a, r):
                    if any(d == a for d in parts):
                        continue
                    term = float(multinom(a, parts))
                    for d in parts:
                        term *= float(partial[d][k])
                    s += term
                acc += p * s

            # Order split across nonterminals, no single part equal to `a`.
            for gammas in enumerate_compositions(a, n):
                if any(gk == a for gk in gammas):
                    continue
                h = float(multinom(a, gammas))
                for k, gk in enumerate(gammas):
                    if h == 0.0:
                        break
                    h *= inner(k, gk, rcounts[k])
                acc += p * h

            # Rule weight absorbing part of the order.
            for b in sub_orders:
                w = float(binom(a, b)) * p * power(rule.features, a - b)
                if w == 0.0:
                    continue
                s = 0.0
                for gammas in enumerate_compositions(b, n):
                    t = float(multinom(b, gammas))
                    for k, gk in enumerate(gammas):
                        if t == 0.0:
                            break
                        t *= inner(k, gk, rcounts[k])
                    s += t
                acc += w * s
        c[i] = acc
    return c


def second_order_interaction(g: Grammar, first: np.ndarray) -> np.ndarray:
    """Cross terms of the scalar second-order right-hand side: expected
    products of first moments over pairs of distinct rhs occurrences."""
    first = np.asarray(first, dtype=float)
    out = np.zeros(len(g.nonterminals))
    for i, group in enumerate(g.rules_by_premise):
        acc = 0.0
        for ri in group:
            rule = g.rules[ri]
            s = 0.0
            sq = 0.0
            for k, r in enumerate(rule.nonterminal_counts):
                if r:
                    s += r * first[k]
                    sq += r * first[k] * first[k]
            acc += rule.probability * (s * s - sq)
        out[i] = acc
    return out


def second_order_c_scalar(g: Grammar, first: np.ndarray) -> np.ndarray:
    """Scalar (D = 1) second-order right-hand side via the specialized
    closed formulas; ``first`` must be the first-moment vector.

    When every feature equals 1 (derivation length) the result is also
    checked against interaction + 2*first - 1, which must hold identically.
    """
    if g.feature_dim != 1:
        raise ValueError("second-order specialization needs scalar features")
    first = np.asarray(first, dtype=float)
    cr = second_order_interaction(g, first)
    c = cr.copy()
    for i, group in enumerate(g.rules_by_premise):
        for ri in group:
            rule = g.rules[ri]
            p = rule.probability
            y = rule.features[0]
            s = sum(
                r * first[k] for k, r in enumerate(rule.nonterminal_counts) if r
            )
            c[i] += p * y * y
            c[i] += 2.0 * p * y * s
    if all(rule.features[0] == 1.0 for rule in g.rules):
        closed = cr + 2.0 * first - 1.0
        if float(np.max(np.abs(c - closed), initial=0.0)) > 1e-9:
            raise SolverError(
                "derivation-length closed form disagrees; "
                "is `first` the actual first-moment vector?"
            )
    return c


def compute_moments(g: Grammar, nu) -> MomentTable:
    """All cross-moment vectors of order up to ``nu`` componentwise.

    The grammar must validate and be consistent; the zero-order vector is
    set to ones analytically and every higher grade reuses one factorization
    of (I - M).
    """
    nu = MultiIndex(nu)
    if nu.dim != g.feature_dim:
        raise ValueError(
            f"order has dimension {nu.dim}, grammar features have {g.feature_dim}"
        )
    ensure_valid(g)
    em = expectation_matrix(g)
    ensure_consistent(g, em)
    solver = LinearSolver(em.entries)
    n = len(g.nonterminals)
    values = {}
    for a in enumerate_downset(nu):
        if a.degree == 0:
            values[a] = np.ones(n)
        else:
            values[a] = solver.solve(compute_c(g, values, a))
    return MomentTable(nu, g.nonterminals, values)
