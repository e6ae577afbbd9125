"""Conditional cross-moments of the derivations of one string.

The inside weight of every (nonterminal, span) cell is accumulated as a
binomial-semiring element: its zero component is the plain inside
probability, and the component at order ``a`` is the unnormalized
conditional cross-moment of order ``a``. Spans are matched against a rule's
right-hand side by pinning its terminal symbols and enumerating the split
points between nonterminal gaps; memoized cells make this the classical
inside algorithm, run in a richer algebra.

A second, semiring-free evaluation of the same recursion (explicit binomial
and composition sums over scalar cell values) is provided for
cross-validation.
"""

from __future__ import annotations

from typing import Sequence

from .errors import (
    CyclicGrammarError,
    UnknownTerminalError,
    ZeroInsideProbabilityError,
)
from .grammar import Grammar, find_unit_cycle, nullable_nonterminals
from .multiindex import (
    MultiIndex,
    binom,
    enumerate_compositions,
    enumerate_downset,
    multinom,
    power,
)
from .semiring import BinomialTuple

_IN_PROGRESS = object()


def check_cycle_free(g: Grammar):
    """Raise unless the inside recursion is well founded on this grammar.

    Two conditions guarantee it: no nonterminal derives the empty string (so
    every nonterminal gap consumes at least one position), and no cycle
    through single-nonterminal rules (so same-span recursion bottoms out).
    """
    nullable = nullable_nonterminals(g)
    if nullable:
        names = ", ".join(sorted(g.nonterminals[i] for i in nullable))
        raise CyclicGrammarError(f"nullable nonterminal(s): {names}")
    cycle = find_unit_cycle(g)
    if cycle is not None:
        names = " -> ".join(g.nonterminals[i] for i in cycle)
        raise CyclicGrammarError(f"unit-rule cycle: {names}")


def terminal_indices(g: Grammar, u: Sequence[str]) -> tuple:
    out = []
    for tok in u:
        idx = g.terminal_index.get(tok)
        if idx is None:
            raise UnknownTerminalError(f"terminal {tok!r} not in alphabet")
        out.append(idx)
    return tuple(out)


def _empty_string_tuple(g: Grammar, i: int, order: MultiIndex) -> BinomialTuple:
    # Only direct eps rules may derive the empty string; a compound empty
    # derivation would need the general recursion, which is not well founded
    # once nonterminals are nullable.
    nullable = nullable_nonterminals(g)
    total = BinomialTuple.zero(order)
    for ri in g.rules_by_premise[i]:
        rule = g.rules[ri]
        if not rule.rhs:
            total = total + BinomialTuple.lift(rule.probability, rule.features, order)
        elif all(
            (not sym.is_terminal) and sym.index in nullable for sym in rule.rhs
        ):
            raise CyclicGrammarError(
                "empty string derivable through compound derivations"
            )
    return total


class InsideTable:
    """Lazily memoized inside weights for one grammar, string, and order."""

    def __init__(self, grammar: Grammar, u: Sequence[str], order):
        self.grammar = grammar
        self.order = MultiIndex(order)
        if self.order.dim != grammar.feature_dim:
            raise ValueError(
                f"order has dimension {self.order.dim}, grammar features "
                f"have {grammar.feature_dim}"
            )
        self.string = terminal_indices(grammar, u)
        self._empty_mode = len(self.string) == 0
        if not self._empty_mode:
            check_cycle_free(grammar)
        self._cells = {}
        self._zero = BinomialTuple.zero(self.order)
        self._one = BinomialTuple.one(self.order)
        self._lift = [
            BinomialTuple.lift(rule.probability, rule.features, self.order)
            for rule in grammar.rules
        ]

    def cell(self, i: int, lo: int, hi: int) -> BinomialTuple:
        if not (0 <= lo <= hi <= len(self.string)):
            raise ValueError(f"span [{lo}, {hi}) out of range")
        key = (i, lo, hi)
        cached = self._cells.get(key)
        if cached is _IN_PROGRESS:
            raise CyclicGrammarError("inside recursion revisited a cell")
        if cached is not None:
            return cached
        if lo == hi:
            value = _empty_string_tuple(self.grammar, i, self.order)
            self._cells[key] = value
            return value
        self._cells[key] = _IN_PROGRESS
        total = self._zero
        for ri in self.grammar.rules_by_premise[i]:
            rhs = self.grammar.rules[ri].rhs
            contrib = self._derive(rhs, 0, lo, hi)
            if not contrib.is_zero():
                total = total + self._lift[ri] * contrib
        self._cells[key] = total
        return total

    def _derive(self, rhs, r, lo, hi) -> BinomialTuple:
        """Sum over all ways rhs[r:] derives the span [lo, hi), as a product
        of child cells; terminal symbols are pinned, nonterminal gaps are
        nonempty because nullable grammars were rejected."""
        if r == len(rhs):
            return self._one if lo == hi else self._zero
        sym = rhs[r]
        if sym.is_terminal:
            if lo < hi and self.string[lo] == sym.index:
                return self._derive(rhs, r + 1, lo + 1, hi)
            return self._zero
        rest_min = len(rhs) - r - 1
        acc = self._zero
        for mid in range(lo + 1, hi - rest_min + 1):
            left = self.cell(sym.index, lo, mid)
            if left.is_zero():
                continue
            rest = self._derive(rhs, r + 1, mid, hi)
            if rest.is_zero():
                continue
            acc = acc + left * rest
        return acc

    def root(self, i: int | None = None) -> BinomialTuple:
        i = self.grammar.start if i is None else i
        return self.cell(i, 0, len(self.string))


def inside_table(g: Grammar, u: Sequence[str], nu) -> InsideTable:
    """Build the table and materialize every cell reachable from the start
    symbol over the full span."""
    table = InsideTable(g, u, nu)
    table.root()
    return table


def conditional_moments(g: Grammar, u: Sequence[str], nu, i: int | None = None) -> BinomialTuple:
    """Unnormalized conditional cross-moments of the derivations of ``u``
    from nonterminal ``i`` (default: start symbol).

    Component ``a`` is the sum over those derivations of probability times
    feature-sum to the ``a``-th power; the zero component is the inside
    probability. All-zero when the string is underivable.
    """
    table = InsideTable(g, u, nu)
    return table.root(i)


def normalized_conditional_moments(g: Grammar, u: Sequence[str], nu, i: int | None = None) -> BinomialTuple:
    """Conditional moments divided by the inside probability, so the zero
    component becomes exactly 1."""
    t = conditional_moments(g, u, nu, i)
    z = t.coeffs[0]
    if z <= 0.0:
        raise ZeroInsideProbabilityError(
            "string has zero inside probability; cannot normalize"
        )
    return BinomialTuple(
        t.order, (1.0,) + tuple(c / z for c in t.coeffs[1:])
    )


def derivation_recursion_check(g: Grammar, u: Sequence[str], nu, i: int | None = None) -> BinomialTuple:
    """Same value as :func:`conditional_moments`, computed without semiring
    products: every cell is a dict of scalars and the rule step expands the
    binomial split of the rule weight and the composition sums across child
    spans explicitly."""
    nu = MultiIndex(nu)
    if nu.dim != g.feature_dim:
        raise ValueError(
            f"order has dimension {nu.dim}, grammar features have {g.feature_dim}"
        )
    word = terminal_indices(g, u)
    if word:
        check_cycle_free(g)
    down = enumerate_downset(nu)
    root = g.start if i is None else i
    memo = {}

    def assignments(rhs, r, lo, hi):
        # Every way rhs[r:] covers [lo, hi), as child (nonterminal, lo, hi)
        # triples for the nonterminal symbols in order.
        if r == len(rhs):
            if lo == hi:
                yield ()
            return
        sym = rhs[r]
        if sym.is_terminal:
            if lo < hi and word[lo] == sym.index:
                yield from assignments(rhs, r + 1, lo + 1, hi)
            return
        rest_min = len(rhs) - r - 1
        for mid in range(lo + 1, hi - rest_min + 1):
            for rest in assignments(rhs, r + 1, mid, hi):
                yield ((sym.index, lo, mid),) + rest

    def cell(n_idx, lo, hi):
        key = (n_idx, lo, hi)
        cached = memo.get(key)
        if cached is _IN_PROGRESS:
            raise CyclicGrammarError("recursion revisited a cell")
        if cached is not None:
            return cached
        if lo == hi:
            tup = _empty_string_tuple(g, n_idx, nu)
            vals = dict(zip(down, tup.coeffs))
            memo[key] = vals
            return vals
        memo[key] = _IN_PROGRESS
        vals = {a: 0.0 for a in down}
        for ri in g.rules_by_premise[n_idx]:
            rule = g.rules[ri]
            p = rule.probability
            for assign in assignments(rule.rhs, 0, lo, hi):
                children = [cell(*child) for child in assign]
                if any(not any(ch.values()) for ch in children):
                    continue
                k = len(children)
                for a in down:
                    acc = 0.0
                    for b in enumerate_downset(a):
                        w = float(binom(a, b)) * p * power(rule.features, a - b)
                        if w == 0.0:
                            continue
                        if k == 0:
                            if b.degree == 0:
                                acc += w
                            continue
                        s = 0.0
                        for parts in enumerate_compositions(b, k):
                            t = float(multinom(b, parts))
                            for child, part in zip(children, parts):
                                if t == 0.0:
                                    break
                                t *= child[part]
                            s += t
                        acc += w * s
                    vals[a] += acc
        memo[key] = vals
        return vals

    vals = cell(root, 0, len(word))
    return BinomialTuple(nu, (vals[a] for a in down))
