"""Exception hierarchy shared across the package."""


class KbDebugError(Exception):
    """Base class for all package errors."""


class KbParseError(KbDebugError):
    """Syntax error in a KB file, carrying the offending position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class DuplicateAxiomIdError(KbParseError):
    """Two axiom lines with the same identifier."""


class InconsistentInputError(KbDebugError):
    """Background plus required entailments admit no diagnosis at all."""


class UnknownAxiomError(KbDebugError):
    """An axiom id that is not part of the knowledge base."""


class ReasonerLimitError(KbDebugError):
    """Configured search budget of the consistency checker exceeded."""


class NoDiagnosisError(KbDebugError):
    """The diagnosis problem violates its existence precondition."""


class SearchBudgetError(KbDebugError):
    """Diagnosis enumeration exceeded its node budget."""


class SizeLimitError(KbDebugError):
    """Input too large for an exhaustive operation."""


class PartitionBoundError(KbDebugError):
    """Too many leading diagnoses for exhaustive partition generation."""


class GeneratorBudgetError(KbDebugError):
    """Fault injection could not reach the requested diagnosis shape."""

    def __init__(self, message: str, achieved: int = 0, wanted: int = 0):
        super().__init__(message)
        self.achieved = achieved
        self.wanted = wanted


class OracleContradictionError(KbDebugError):
    """An oracle answer rejected every candidate diagnosis."""
