"""SCFG representation: file format, validation, expectation matrix,
consistency test, and feature generation.

The text format is line oriented, '#' starts a comment:

    terminals: a b
    nonterminals: S
    start: S
    features: 1
    rule: S -> a S | p=0.4 | Y=[1.0]
    rule: S -> a   | p=0.6 | Y=[1.0]

Tokens are whitespace separated; a token is a terminal iff it is listed under
``terminals:``. An empty right-hand side is written ``eps``. ``Y=[...]`` may
be omitted when feature generators are applied later; omitted vectors default
to zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import GrammarFileError, InvalidGrammarError, InconsistentGrammarError

PROPERNESS_TOL = 1e-9
CONSISTENCY_MARGIN = 1e-9


class Symbol(NamedTuple):
    is_terminal: bool
    index: int


@dataclass(frozen=True)
class Rule:
    """One production: premise nonterminal, symbol sequence, probability,
    feature vector, and cached occurrence counts per symbol table."""

    premise: int
    rhs: tuple
    probability: float
    features: tuple
    nonterminal_counts: tuple
    terminal_counts: tuple


@dataclass(frozen=True)
class Grammar:
    terminals: tuple
    nonterminals: tuple
    start: int
    rules: tuple
    feature_dim: int

    @cached_property
    def rules_by_premise(self) -> tuple:
        """Global rule indices grouped by premise nonterminal."""
        groups = [[] for _ in self.nonterminals]
        for ri, rule in enumerate(self.rules):
            groups[rule.premise].append(ri)
        return tuple(tuple(g) for g in groups)

    @cached_property
    def terminal_index(self) -> dict:
        return {name: i for i, name in enumerate(self.terminals)}

    def rule_text(self, ri: int) -> str:
        rule = self.rules[ri]
        if not rule.rhs:
            body = "eps"
        else:
            body = " ".join(
                self.terminals[s.index] if s.is_terminal else self.nonterminals[s.index]
                for s in rule.rhs
            )
        return f"{self.nonterminals[rule.premise]} -> {body}"


def make_grammar(terminals, nonterminals, start, rules, feature_dim) -> Grammar:
    """Assemble a Grammar from (premise, rhs, probability, features) tuples,
    deriving the per-rule occurrence counts.

    Structural indices are checked here; properness and usefulness are the
    job of :func:`validate`.
    """
    terminals = tuple(terminals)
    nonterminals = tuple(nonterminals)
    if not nonterminals:
        raise ValueError("grammar needs at least one nonterminal")
    if not 0 <= start < len(nonterminals):
        raise ValueError("start symbol index out of range")
    built = []
    for premise, rhs, prob, features in rules:
        rhs = tuple(rhs)
        features = tuple(float(x) for x in features)
        if not 0 <= premise < len(nonterminals):
            raise ValueError(f"premise index {premise} out of range")
        if len(features) != feature_dim:
            raise ValueError(
                f"feature vector has {len(features)} entries, expected {feature_dim}"
            )
        ncounts = [0] * len(nonterminals)
        tcounts = [0] * len(terminals)
        for sym in rhs:
            table = terminals if sym.is_terminal else nonterminals
            if not 0 <= sym.index < len(table):
                raise ValueError(f"symbol index {sym} out of range")
            if sym.is_terminal:
                tcounts[sym.index] += 1
            else:
                ncounts[sym.index] += 1
        built.append(
            Rule(
                premise=premise,
                rhs=rhs,
                probability=float(prob),
                features=features,
                nonterminal_counts=tuple(ncounts),
                terminal_counts=tuple(tcounts),
            )
        )
    return Grammar(terminals, nonterminals, start, tuple(built), feature_dim)


def _parse_rule_body(body, lineno):
    parts = [p.strip() for p in body.split("|")]
    head = parts[0].split("->")
    if len(head) != 2:
        raise GrammarFileError("rule needs exactly one '->'", lineno)
    lhs = head[0].split()
    if len(lhs) != 1:
        raise GrammarFileError("rule premise must be a single nonterminal", lineno)
    rhs_tokens = head[1].split()
    prob = None
    feats = None
    for opt in parts[1:]:
        if not opt:
            raise GrammarFileError("empty rule option", lineno)
        if "=" not in opt:
            raise GrammarFileError(f"malformed rule option {opt!r}", lineno)
        key, value = opt.split("=", 1)
        key = key.strip()
        value = value.strip()
        if key == "p":
            try:
                prob = float(value)
            except ValueError:
                raise GrammarFileError(f"bad probability {value!r}", lineno) from None
        elif key == "Y":
            if not (value.startswith("[") and value.endswith("]")):
                raise GrammarFileError("Y expects a bracketed list", lineno)
            inner = value[1:-1].strip()
            try:
                feats = tuple(float(v) for v in inner.split(",")) if inner else ()
            except ValueError:
                raise GrammarFileError(f"bad feature list {value!r}", lineno) from None
        else:
            raise GrammarFileError(f"unknown rule option {key!r}", lineno)
    if prob is None:
        raise GrammarFileError("rule is missing p=", lineno)
    return lhs[0], rhs_tokens, prob, feats


def parse_grammar(text: str, normalize: bool = False) -> Grammar:
    """Parse the text format into a Grammar.

    Per-premise probabilities must sum to 1 within 1e-9 unless ``normalize``
    is set, in which case they are rescaled. Raises GrammarFileError with the
    offending line number otherwise.
    """
    terminals = None
    nonterminals = None
    start_token = None
    declared_dim = None
    raw_rules = []  # (lineno, lhs, rhs_tokens, prob, feats-or-None)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise GrammarFileError(f"expected 'key: value', got {line!r}", lineno)
        key, _, body = line.partition(":")
        key = key.strip()
        body = body.strip()
        if key == "terminals":
            if terminals is not None:
                raise GrammarFileError("terminals declared twice", lineno)
            terminals = body.split()
            if len(set(terminals)) != len(terminals):
                raise GrammarFileError("duplicate terminal", lineno)
        elif key == "nonterminals":
            if nonterminals is not None:
                raise GrammarFileError("nonterminals declared twice", lineno)
            nonterminals = body.split()
            if len(set(nonterminals)) != len(nonterminals):
                raise GrammarFileError("duplicate nonterminal", lineno)
        elif key == "start":
            start_token = (body, lineno)
        elif key == "features":
            try:
                declared_dim = int(body)
            except ValueError:
                raise GrammarFileError(f"bad feature count {body!r}", lineno) from None
            if declared_dim < 0:
                raise GrammarFileError("feature count must be >= 0", lineno)
        elif key == "rule":
            raw_rules.append((lineno,) + _parse_rule_body(body, lineno))
        else:
            raise GrammarFileError(f"unknown directive {key!r}", lineno)

    if not nonterminals:
        raise GrammarFileError("no nonterminals declared")
    terminals = terminals or []
    overlap = set(terminals) & set(nonterminals)
    if overlap:
        raise GrammarFileError(f"symbols declared twice: {sorted(overlap)}")
    if not raw_rules:
        raise GrammarFileError("no rules declared")

    nt_index = {n: i for i, n in enumerate(nonterminals)}
    t_index = {t: i for i, t in enumerate(terminals)}

    feature_dim = declared_dim
    if feature_dim is None:
        lengths = {len(f) for (_, _, _, _, f) in raw_rules if f is not None}
        if len(lengths) > 1:
            raise GrammarFileError(
                f"feature vectors of mixed dimensions {sorted(lengths)}"
            )
        feature_dim = lengths.pop() if lengths else 0

    specs = []
    seen = set()
    for lineno, lhs, rhs_tokens, prob, feats in raw_rules:
        if lhs not in nt_index:
            raise GrammarFileError(f"unknown premise {lhs!r}", lineno)
        if rhs_tokens == ["eps"]:
            rhs = ()
        else:
            rhs = []
            for tok in rhs_tokens:
                if tok in t_index:
                    rhs.append(Symbol(True, t_index[tok]))
                elif tok in nt_index:
                    rhs.append(Symbol(False, nt_index[tok]))
                else:
                    raise GrammarFileError(f"unknown symbol {tok!r}", lineno)
            rhs = tuple(rhs)
        key = (nt_index[lhs], rhs)
        if key in seen:
            raise GrammarFileError("duplicate rule", lineno)
        seen.add(key)
        if not 0.0 < prob <= 1.0:
            raise GrammarFileError(f"probability {prob} outside (0, 1]", lineno)
        if feats is None:
            feats = (0.0,) * feature_dim
        elif len(feats) != feature_dim:
            raise GrammarFileError(
                f"feature vector has {len(feats)} entries, expected {feature_dim}",
                lineno,
            )
        specs.append([nt_index[lhs], rhs, prob, feats])

    sums = [0.0] * len(nonterminals)
    for premise, _, prob, _ in specs:
        sums[premise] += prob
    for i, total in enumerate(sums):
        if abs(total - 1.0) > PROPERNESS_TOL:
            if normalize and total > 0.0:
                for spec in specs:
                    if spec[0] == i:
                        spec[2] /= total
            else:
                raise GrammarFileError(
                    f"not proper: probabilities for {nonterminals[i]!r} sum to {total!r}"
                )

    start = 0
    if start_token is not None:
        token, lineno = start_token
        if token not in nt_index:
            raise GrammarFileError(f"unknown start symbol {token!r}", lineno)
        start = nt_index[token]

    return make_grammar(terminals, nonterminals, start, specs, feature_dim)


def serialize_grammar(g: Grammar) -> str:
    """Canonical text form; parse_grammar(serialize_grammar(g)) == g."""
    lines = []
    lines.append("terminals: " + " ".join(g.terminals))
    lines.append("nonterminals: " + " ".join(g.nonterminals))
    lines.append(f"start: {g.nonterminals[g.start]}")
    lines.append(f"features: {g.feature_dim}")
    for ri, rule in enumerate(g.rules):
        entry = f"rule: {g.rule_text(ri)} | p={rule.probability!r}"
        if g.feature_dim:
            entry += " | Y=[" + ", ".join(repr(x) for x in rule.features) + "]"
        lines.append(entry)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ValidationReport:
    proper: bool
    all_positive: bool
    productive: frozenset
    accessible: frozenset
    useful: bool
    messages: tuple

    @property
    def ok(self) -> bool:
        return self.proper and self.all_positive and self.useful


def validate(g: Grammar) -> ValidationReport:
    """Check properness, positive probabilities, and usefulness.

    Productivity is a least fixed point (a nonterminal is productive once
    some rule's right-hand nonterminals are all productive); accessibility is
    graph reachability from the start symbol.
    """
    messages = []

    proper = True
    for i, group in enumerate(g.rules_by_premise):
        total = sum(g.rules[ri].probability for ri in group)
        if abs(total - 1.0) > PROPERNESS_TOL:
            proper = False
            messages.append(
                f"probabilities for {g.nonterminals[i]!r} sum to {total!r}"
            )

    all_positive = all(rule.probability > 0.0 for rule in g.rules)
    if not all_positive:
        messages.append("rule with non-positive probability")

    productive = set()
    changed = True
    while changed:
        changed = False
        for rule in g.rules:
            if rule.premise in productive:
                continue
            if all(
                sym.is_terminal or sym.index in productive for sym in rule.rhs
            ):
                productive.add(rule.premise)
                changed = True

    accessible = {g.start}
    frontier = [g.start]
    while frontier:
        i = frontier.pop()
        for ri in g.rules_by_premise[i]:
            for sym in g.rules[ri].rhs:
                if not sym.is_terminal and sym.index not in accessible:
                    accessible.add(sym.index)
                    frontier.append(sym.index)

    useful = all(
        i in productive and i in accessible for i in range(len(g.nonterminals))
    )
    for i in range(len(g.nonterminals)):
        if i not in productive:
            messages.append(f"{g.nonterminals[i]!r} is not productive")
        if i not in accessible:
            messages.append(f"{g.nonterminals[i]!r} is not accessible")

    return ValidationReport(
        proper=proper,
        all_positive=all_positive,
        productive=frozenset(productive),
        accessible=frozenset(accessible),
        useful=useful,
        messages=tuple(messages),
    )


def ensure_valid(g: Grammar) -> ValidationReport:
    report = validate(g)
    if not report.ok:
        raise InvalidGrammarError("; ".join(report.messages))
    return report


@dataclass(frozen=True)
class ExpectationMatrix:
    """Entry (i, n): expected occurrences of nonterminal n produced by one
    rewrite of nonterminal i."""

    entries: np.ndarray
    spectral_radius_estimate: float


def spectral_radius(matrix, tol=1e-12, max_iter=10000, shift=1e-12) -> float:
    """Dominant-eigenvalue estimate of a nonnegative matrix.

    Power iteration with sup-norm normalization on ``matrix + shift*I``; the
    shift keeps the iteration stable on reducible matrices and is subtracted
    from the returned value.
    """
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    shifted = m + shift * np.eye(n)
    x = np.ones(n)
    lam = math.inf
    for _ in range(max_iter):
        y = shifted @ x
        new_lam = float(np.max(np.abs(y)))
        if new_lam == 0.0:
            lam = 0.0
            break
        x = y / new_lam
        if abs(new_lam - lam) <= tol:
            lam = new_lam
            break
        lam = new_lam
    return max(lam - shift, 0.0)


def expectation_matrix(g: Grammar) -> ExpectationMatrix:
    n = len(g.nonterminals)
    m = np.zeros((n, n))
    for rule in g.rules:
        p = rule.probability
        for k, r in enumerate(rule.nonterminal_counts):
            if r:
                m[rule.premise, k] += p * r
    return ExpectationMatrix(entries=m, spectral_radius_estimate=spectral_radius(m))


@dataclass(frozen=True)
class ConsistencyVerdict:
    consistent: bool
    spectral_radius: float
    margin: float
    message: str


def check_consistency(g: Grammar, em: ExpectationMatrix | None = None) -> ConsistencyVerdict:
    """Accept iff the expectation matrix spectral radius is below 1 - margin.

    Critical and supercritical grammars are rejected rather than given any
    semantics; the margin keeps us strictly inside the subcritical regime.
    """
    if em is None:
        em = expectation_matrix(g)
    rho = em.spectral_radius_estimate
    if rho >= 1.0 - CONSISTENCY_MARGIN:
        return ConsistencyVerdict(
            consistent=False,
            spectral_radius=rho,
            margin=CONSISTENCY_MARGIN,
            message=f"inconsistent or marginal: rho(M) = {rho:.6f} >= 1 - margin",
        )
    return ConsistencyVerdict(
        consistent=True,
        spectral_radius=rho,
        margin=CONSISTENCY_MARGIN,
        message=f"consistent: rho(M) = {rho:.6f}",
    )


def ensure_consistent(g: Grammar, em: ExpectationMatrix | None = None) -> ConsistencyVerdict:
    verdict = check_consistency(g, em)
    if not verdict.consistent:
        raise InconsistentGrammarError(verdict.message)
    return verdict


FEATURE_GENERATORS = ("derivation-length", "string-length", "surprisal", "file")


def assign_features(g: Grammar, columns: Sequence[str]) -> Grammar:
    """Replace every rule's feature vector with generated columns.

    Generators: ``derivation-length`` (1 for every rule), ``string-length``
    (number of terminals on the right-hand side), ``surprisal`` (-ln p), and
    ``file`` (splice in the columns the grammar already carries).
    """
    for name in columns:
        if name not in FEATURE_GENERATORS:
            raise ValueError(f"unknown feature generator {name!r}")
    new_rules = []
    for rule in g.rules:
        feats = []
        for name in columns:
            if name == "derivation-length":
                feats.append(1.0)
            elif name == "string-length":
                feats.append(float(sum(rule.terminal_counts)))
            elif name == "surprisal":
                if rule.probability <= 0.0:
                    raise ValueError("surprisal needs positive probabilities")
                feats.append(-math.log(rule.probability))
            else:
                feats.extend(rule.features)
        new_rules.append(replace(rule, features=tuple(feats)))
    dim = len(new_rules[0].features) if new_rules else 0
    return replace(g, rules=tuple(new_rules), feature_dim=dim)


def nullable_nonterminals(g: Grammar) -> frozenset:
    """Nonterminals that derive the empty string."""
    nullable = set()
    changed = True
    while changed:
        changed = False
        for rule in g.rules:
            if rule.premise in nullable:
                continue
            if all(
                (not sym.is_terminal) and sym.index in nullable for sym in rule.rhs
            ):
                nullable.add(rule.premise)
                changed = True
    return frozenset(nullable)


def find_unit_cycle(g: Grammar):
    """Return one cycle through single-nonterminal rules, or None."""
    edges = [[] for _ in g.nonterminals]
    for rule in g.rules:
        if len(rule.rhs) == 1 and not rule.rhs[0].is_terminal:
            edges[rule.premise].append(rule.rhs[0].index)

    WHITE, GRAY, BLACK = 0, 1, 2
    color = [WHITE] * len(g.nonterminals)
    stack_path = []

    def visit(i):
        color[i] = GRAY
        stack_path.append(i)
        for j in edges[i]:
            if color[j] == GRAY:
                return stack_path[stack_path.index(j):] + [j]
            if color[j] == WHITE:
                found = visit(j)
                if found:
                    return found
        stack_path.pop()
        color[i] = BLACK
        return None

    for i in range(len(g.nonterminals)):
        if color[i] == WHITE:
            found = visit(i)
            if found:
                return found
    return None
