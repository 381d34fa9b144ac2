"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: validation problems with a query exit 3,
resource limits exit 4.
"""


class EfoFitError(Exception):
    """Base class for all package errors."""


class KGFormatError(EfoFitError, ValueError):
    """Malformed triple or label file, or an unknown label under fixed maps."""


class SplitError(EfoFitError, ValueError):
    """The observed graph is not a subgraph of the complete graph."""


class ParseError(EfoFitError, ValueError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class QueryValidationError(EfoFitError, ValueError):
    """A query that cannot be answered as an EFO1 formula."""


class NotEFO1Error(QueryValidationError):
    """Normalisation would need a universal quantifier."""


class TrivialQueryError(QueryValidationError):
    """The query contains a sentence as a subformula."""


class DisconnectedQueryError(TrivialQueryError):
    """A clause graph has a component without the free variable."""


class ConstantSelfLoopError(QueryValidationError):
    """An atom relates a constant entity to itself."""


class EnumerationError(EfoFitError, RuntimeError):
    """No node can be enumerated, or the recursion cap was hit."""


class OracleLimitError(EfoFitError, RuntimeError):
    """Brute-force evaluation would exceed the configured assignment limit."""


class ConfigError(EfoFitError, ValueError):
    pass


class CalibrationError(EfoFitError, ValueError):
    pass


class SamplingError(EfoFitError, RuntimeError):
    pass
