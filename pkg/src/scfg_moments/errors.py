"""Exception types shared across the package."""


class ScfgError(Exception):
    """Base class for all domain errors raised by this package."""


class GrammarFileError(ScfgError):
    """Malformed grammar text: syntax, unknown symbols, duplicates,
    feature-dimension mismatches, or an improper rule distribution."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvalidGrammarError(ScfgError):
    """The grammar failed structural validation (improper, non-positive
    probabilities, or useless nonterminals)."""


class InconsistentGrammarError(ScfgError):
    """The expectation matrix has spectral radius at or above the
    acceptance margin, so total derivation probability may be below 1."""


class CyclicGrammarError(ScfgError):
    """The inside recursion is not well founded for this grammar
    (nullable nonterminal or unit-rule cycle)."""


class UnknownTerminalError(ScfgError):
    """A query string contains a token outside the grammar's alphabet."""


class IllConditionedError(ScfgError):
    """The moment system matrix is numerically too close to singular."""


class SolverError(ScfgError):
    """The linear solve failed to reach the required residual."""


class ZeroInsideProbabilityError(ScfgError):
    """Normalization was requested for a string the grammar cannot derive."""


class EnumerationLimitError(ScfgError):
    """Brute-force enumeration exceeded its state budget."""
