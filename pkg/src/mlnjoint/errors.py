"""Exception hierarchy shared by every layer of the engine."""

from typing import NamedTuple


class SourceSpan(NamedTuple):
    """1-based position in a source file."""

    line: int
    column: int


class MLNError(Exception):
    """Base class for all engine errors."""


class ValidationError(MLNError, ValueError):
    pass


class UndeclaredDomain(ValidationError):
    pass


class UndeclaredPredicate(ValidationError):
    pass


class ArityMismatch(ValidationError):
    pass


class DomainMismatch(ValidationError):
    pass


class DuplicateName(ValidationError):
    pass


class MlnSyntaxError(MLNError, ValueError):
    """Parse failure carrying a 1-based ``(line, column)`` source span."""

    def __init__(self, message, line, column):
        super().__init__(f"{message} (line {line}, column {column})")
        self.msg = message
        self.line = line
        self.column = column

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.line, self.column)


class NotEvidencePredicate(MLNError, ValueError):
    pass


class NotGround(MLNError, ValueError):
    pass


class InconsistentEvidence(MLNError, ValueError):
    pass


class Unsatisfiable(MLNError):
    """The hard constraints admit no world (partition function is zero)."""


class TooLarge(MLNError):
    def __init__(self, n_variables, cap):
        super().__init__(
            f"exact enumeration over {n_variables:.1f} effective binary variables "
            f"exceeds the cap of {cap}"
        )
        self.n_variables = n_variables
        self.cap = cap


class NumericalFailure(MLNError):
    pass


class ConditionImpossible(MLNError):
    pass


class MissingMarginal(MLNError, KeyError):
    pass


class IdMismatch(MLNError, ValueError):
    pass
