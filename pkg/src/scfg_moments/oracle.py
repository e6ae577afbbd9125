"""Brute-force reference computations, straight from the definitions.

Derivations are enumerated as explicit leftmost rewrite sequences, so every
moment here is a literal sum of probability times feature-power over an
explicit sample space. Deliberately naive: this module is the ground truth
the recursive algorithms are tested against, and shares none of their
machinery.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CyclicGrammarError, EnumerationLimitError
from .grammar import Grammar, nullable_nonterminals
from .inside import check_cycle_free, terminal_indices
from .multiindex import MultiIndex, enumerate_downset, power

STATE_LIMIT = 10_000_000


@dataclass(frozen=True)
class Derivation:
    """A complete leftmost derivation: its rule sequence, probability,
    accumulated feature sum, and terminal yield (as terminal indices)."""

    rules: tuple
    probability: float
    features: tuple
    sentence: tuple


def enumerate_derivations(
    g: Grammar, i: int, max_steps: int, state_limit: int = STATE_LIMIT
):
    """All complete leftmost derivations from nonterminal ``i`` using at
    most ``max_steps`` rule applications, plus the total probability of the
    truncated frontier.

    The frontier mass is an upper bound on everything omitted, since any
    incomplete sentential form finishes with probability at most 1. Raises
    EnumerationLimitError beyond ``state_limit`` explored states.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    zero_feat = (0.0,) * g.feature_dim
    complete = []
    tail = 0.0
    states = 0
    # state: (pending (is_terminal, index) pairs, probability, features,
    # rule indices, emitted yield)
    stack = [(((False, i),), 1.0, zero_feat, (), ())]
    while stack:
        pending, prob, feats, rules, emitted = stack.pop()
        k = 0
        while k < len(pending) and pending[k][0]:
            emitted = emitted + (pending[k][1],)
            k += 1
        pending = pending[k:]
        if not pending:
            complete.append(Derivation(rules, prob, feats, emitted))
            continue
        if len(rules) == max_steps:
            tail += prob
            continue
        head = pending[0][1]
        rest = pending[1:]
        for ri in g.rules_by_premise[head]:
            states += 1
            if states > state_limit:
                raise EnumerationLimitError(
                    f"more than {state_limit} states at max_steps={max_steps}"
                )
            rule = g.rules[ri]
            rhs = tuple((s.is_terminal, s.index) for s in rule.rhs)
            stack.append(
                (
                    rhs + rest,
                    prob * rule.probability,
                    tuple(a + b for a, b in zip(feats, rule.features)),
                    rules + (ri,),
                    emitted,
                )
            )
    return tuple(complete), tail


@dataclass(frozen=True)
class OracleMoments:
    order: MultiIndex
    values: dict
    error_bounds: dict
    tail_mass_bound: float
    derivation_count: int

    def to_json_dict(self) -> dict:
        return {
            "nu": list(self.order),
            "moments": {
                ",".join(map(str, a)): self.values[a]
                for a in enumerate_downset(self.order)
            },
            "error_bounds": {
                ",".join(map(str, a)): self.error_bounds[a]
                for a in enumerate_downset(self.order)
            },
            "tail_mass_bound": self.tail_mass_bound,
            "derivation_count": self.derivation_count,
        }


def oracle_moments(
    g: Grammar,
    i: int,
    nu,
    max_steps: int,
    x_bound: float | None = None,
    state_limit: int = STATE_LIMIT,
) -> OracleMoments:
    """Partial moment sums over enumerated derivations, with error bounds.

    The bound for order zero is the frontier mass itself. For higher orders
    it is frontier mass times ``x_bound`` to the order's degree, where
    ``x_bound`` is a caller-supplied cap on the feature-sum magnitude of
    omitted derivations; without one the bound is reported as infinity (a
    heuristic report, not a certificate, since features may be unbounded).
    """
    nu = MultiIndex(nu)
    if nu.dim != g.feature_dim:
        raise ValueError(
            f"order has dimension {nu.dim}, grammar features have {g.feature_dim}"
        )
    derivations, tail = enumerate_derivations(g, i, max_steps, state_limit)
    values = {}
    bounds = {}
    for a in enumerate_downset(nu):
        values[a] = sum(d.probability * power(d.features, a) for d in derivations)
        if a.degree == 0:
            bounds[a] = tail
        elif x_bound is not None:
            bounds[a] = tail * float(x_bound) ** a.degree
        else:
            bounds[a] = float("inf")
    return OracleMoments(
        order=nu,
        values=values,
        error_bounds=bounds,
        tail_mass_bound=tail,
        derivation_count=len(derivations),
    )


def enumerate_parses(g: Grammar, i: int, u: Sequence[str]):
    """Exactly the derivations of ``u`` from nonterminal ``i``, by
    exhaustive span-recursive search without memoization."""
    word = terminal_indices(g, u)
    d = g.feature_dim
    zero_feat = (0.0,) * d

    if not word:
        nullable = nullable_nonterminals(g)
        out = []
        for ri in g.rules_by_premise[i]:
            rule = g.rules[ri]
            if not rule.rhs:
                out.append(
                    Derivation((ri,), rule.probability, rule.features, ())
                )
            elif all(
                (not s.is_terminal) and s.index in nullable for s in rule.rhs
            ):
                raise CyclicGrammarError(
                    "empty string derivable through compound derivations"
                )
        return tuple(out)

    check_cycle_free(g)

    def expand(rhs, r, lo, hi):
        # (rules, probability, features) for each way rhs[r:] derives
        # word[lo:hi); children concatenate left to right, giving leftmost
        # rule order.
        if r == len(rhs):
            return [((), 1.0, zero_feat)] if lo == hi else []
        sym = rhs[r]
        if sym.is_terminal:
            if lo < hi and word[lo] == sym.index:
                return expand(rhs, r + 1, lo + 1, hi)
            return []
        rest_min = len(rhs) - r - 1
        out = []
        for mid in range(lo + 1, hi - rest_min + 1):
            lefts = parses(sym.index, lo, mid)
            if not lefts:
                continue
            rights = expand(rhs, r + 1, mid, hi)
            for lr, lp, lf in lefts:
                for rr, rp, rf in rights:
                    out.append(
                        (
                            lr + rr,
                            lp * rp,
                            tuple(a + b for a, b in zip(lf, rf)),
                        )
                    )
        return out

    def parses(n_idx, lo, hi):
        out = []
        for ri in g.rules_by_premise[n_idx]:
            rule = g.rules[ri]
            for rules, prob, feats in expand(rule.rhs, 0, lo, hi):
                out.append(
                    (
                        (ri,) + rules,
                        rule.probability * prob,
                        tuple(a + b for a, b in zip(rule.features, feats)),
                    )
                )
        return out

    return tuple(
        Derivation(rules, prob, feats, word)
        for rules, prob, feats in parses(i, 0, len(word))
    )


def replay_derivation(g: Grammar, i: int, rule_indices: Sequence[int]):
    """Apply a rule sequence as leftmost rewrites from nonterminal ``i``.

    Returns (yield, probability, features); raises ValueError when a rule
    does not apply to the leftmost nonterminal or symbols remain.
    """
    form = [(False, i)]
    prob = 1.0
    feats = (0.0,) * g.feature_dim
    for ri in rule_indices:
        rule = g.rules[ri]
        pos = next(
            (k for k, (is_t, _) in enumerate(form) if not is_t), None
        )
        if pos is None:
            raise ValueError("no nonterminal left to rewrite")
        if form[pos][1] != rule.premise:
            raise ValueError(
                f"rule {g.rule_text(ri)} does not match leftmost nonterminal"
            )
        form[pos:pos + 1] = [(s.is_terminal, s.index) for s in rule.rhs]
        prob *= rule.probability
        feats = tuple(a + b for a, b in zip(feats, rule.features))
    if any(not is_t for is_t, _ in form):
        raise ValueError("derivation incomplete: nonterminals remain")
    return tuple(idx for _, idx in form), prob, feats


def moment_sums(derivations, nu) -> dict:
    """Definitional sums of probability times feature-power over an explicit
    derivation collection, for every order up to ``nu``."""
    nu = MultiIndex(nu)
    return {
        a: sum(d.probability * power(d.features, a) for d in derivations)
        for a in enumerate_downset(nu)
    }
