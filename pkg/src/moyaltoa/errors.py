"""Shared exception types."""


class MomentumSingularityError(ValueError):
    """Evaluation at p = 0: a particle at rest never arrives."""


class DomainError(ValueError):
    """Requested evaluation lies outside the region where the method is valid."""


class ConvergenceError(RuntimeError):
    """An iterative scheme failed to reach its tolerance."""


class GradingError(ValueError):
    """A series or kernel violates the required exponent structure."""


class EvaluationError(RuntimeError):
    """An integrand produced a non-finite value at a quadrature node."""


class ConfigError(ValueError):
    """A run configuration is malformed."""
