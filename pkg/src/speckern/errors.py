"""Exception hierarchy.

Every numerical failure raised by the library derives from
:class:`SpeckernError`, so callers can catch the whole family at once.
Domain-type errors also derive from :class:`ValueError`.
"""


class SpeckernError(Exception):
    """Base class for all library errors."""


class DomainError(SpeckernError, ValueError):
    """An argument lies outside the region where the operation is defined."""


class PoleError(DomainError):
    """Evaluation exactly at a pole (e.g. Gamma at a non-positive integer)."""


class PoleProximity(DomainError):
    """Evaluation refused because the argument lies inside a pole-exclusion disk."""


class SpectralPole(DomainError):
    """A resolvent denominator s(s - 2 rho0) + lambda_j vanishes."""


class DivergenceError(DomainError):
    """A series is evaluated outside its region of convergence."""


class CoincidenceError(DomainError):
    """The two points coincide where the kernel requires z != w."""


class MethodMismatch(DomainError):
    """The requested evaluation method does not apply to this geometry."""


class BranchError(DomainError):
    """A square root would be evaluated across its branch cut."""


class AdmissibilityError(DomainError):
    """A test function failed its decay spot check."""


class DivisorHit(DomainError):
    """Log-norm evaluated on the divisor of the form."""


class GridTooClose(DomainError):
    """A verification grid point lies too close to the divisor."""


class NonConvergence(SpeckernError, ArithmeticError):
    """A series or quadrature could not reach the requested tolerance."""


class CapacityError(SpeckernError, MemoryError):
    """The requested spectrum would exceed the configured mode budget."""


class FitUnstable(SpeckernError, ArithmeticError):
    """Laurent coefficients disagree across fitting radii."""


class EvaluationError(SpeckernError):
    """A user-supplied callable failed during evaluation."""
