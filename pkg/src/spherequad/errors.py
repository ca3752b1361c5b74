"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ResourceLimitError(MemoryError):
    """A requested table or matrix exceeds a configured size cap."""


class RankDeficientError(ValueError):
    """A point family does not determine polynomials of the requested degree."""


class SingularGramError(ValueError):
    """A kernel Gram matrix is numerically singular (e.g. duplicated nodes)."""


class TailCertificationError(ValueError):
    """The omitted tail of a series cannot be bounded from the available data."""


class ToleranceBudgetError(ArithmeticError):
    """Rounding or truncation produced a value outside the declared budget."""
