"""Exception types shared across the library."""


class PoissonCSError(Exception):
    """Base class for all library errors."""


class LengthMismatchError(PoissonCSError, ValueError):
    """Two vectors that must have equal length do not."""


class DomainError(PoissonCSError, ValueError):
    """An input lies outside the mathematical domain of the operation."""


class InvalidParamError(PoissonCSError, ValueError):
    """A scalar parameter is out of range (negative rate, bad probability, ...)."""


class TooManySupportsError(PoissonCSError, ValueError):
    """Exhaustive RIC enumeration would exceed the configured support cap."""


class MissingSamplesError(PoissonCSError, ValueError):
    """Percentile-based epsilon selection was requested without enough samples."""


class InfeasibleStartError(PoissonCSError, ValueError):
    """The solver's starting point violates the fit term's domain."""


class InfeasibleEpsilonError(PoissonCSError, ValueError):
    """The constraint radius is below what any coefficient vector can achieve."""
