"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the model is defined."""


class PreconditionError(ValueError):
    """Inputs are valid individually but violate an operation's precondition."""


class ConvergenceError(RuntimeError):
    """A sampler diagnostic failed (for example, a chain that never moves)."""
