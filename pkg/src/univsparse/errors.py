"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class HypothesisError(DomainError):
    """A precondition required by a bound or estimate does not hold."""


class ConfigurationError(ValueError):
    """Incompatible experiment configuration (divisibility, coder/dictionary mismatch)."""


class ConvergenceError(RuntimeError):
    """An iterative numerical routine failed to converge."""


class ScanLimitError(RuntimeError):
    """A threshold scan exceeded its overcompleteness cap without success."""
