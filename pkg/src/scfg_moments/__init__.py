"""Cross-moments of additive features of SCFG derivations.

Moment vectors over all derivations come from a graded linear recursion on
the expectation matrix; moments over the derivations of one string come from
the inside algorithm run in the binomial semiring. A brute-force enumeration
oracle backs every computed number.
"""

__version__ = "0.1.0"

from .errors import (
    CyclicGrammarError,
    EnumerationLimitError,
    GrammarFileError,
    IllConditionedError,
    InconsistentGrammarError,
    InvalidGrammarError,
    ScfgError,
    SolverError,
    UnknownTerminalError,
    ZeroInsideProbabilityError,
)
from .multiindex import (
    MultiIndex,
    binom,
    enumerate_compositions,
    enumerate_downset,
    multinom,
    power,
)
from .semiring import BinomialTuple
from .grammar import (
    ConsistencyVerdict,
    ExpectationMatrix,
    Grammar,
    Rule,
    Symbol,
    ValidationReport,
    assign_features,
    check_consistency,
    expectation_matrix,
    make_grammar,
    parse_grammar,
    serialize_grammar,
    spectral_radius,
    validate,
)
from .cross_moments import (
    LinearSolver,
    MomentTable,
    compute_c,
    compute_c_literal,
    compute_moments,
    second_order_c_scalar,
    second_order_interaction,
)
from .inside import (
    InsideTable,
    check_cycle_free,
    conditional_moments,
    derivation_recursion_check,
    inside_table,
    normalized_conditional_moments,
)
from .oracle import (
    Derivation,
    OracleMoments,
    enumerate_derivations,
    enumerate_parses,
    moment_sums,
    oracle_moments,
    replay_derivation,
)

__all__ = [
    "BinomialTuple",
    "ConsistencyVerdict",
    "CyclicGrammarError",
    "Derivation",
    "EnumerationLimitError",
    "ExpectationMatrix",
    "Grammar",
    "GrammarFileError",
    "IllConditionedError",
    "InconsistentGrammarError",
    "InsideTable",
    "InvalidGrammarError",
    "LinearSolver",
    "MomentTable",
    "MultiIndex",
    "OracleMoments",
    "Rule",
    "ScfgError",
    "SolverError",
    "Symbol",
    "UnknownTerminalError",
    "ValidationReport",
    "ZeroInsideProbabilityError",
    "assign_features",
    "binom",
    "check_consistency",
    "check_cycle_free",
    "compute_c",
    "compute_c_literal",
    "compute_moments",
    "conditional_moments",
    "derivation_recursion_check",
    "enumerate_compositions",
    "enumerate_derivations",
    "enumerate_downset",
    "enumerate_parses",
    "expectation_matrix",
    "inside_table",
    "make_grammar",
    "moment_sums",
    "multinom",
    "normalized_conditional_moments",
    "oracle_moments",
    "parse_grammar",
    "power",
    "replay_derivation",
    "second_order_c_scalar",
    "second_order_interaction",
    "serialize_grammar",
    "spectral_radius",
    "validate",
]
