"""Exception hierarchy shared by all modules."""


class FinslerCheckError(Exception):
    """Base class for toolkit errors."""


class DomainError(FinslerCheckError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class PolarConvergenceError(FinslerCheckError):
    """The inner maximisation defining a numeric polar did not converge."""


class IdentityFailure(FinslerCheckError):
    """A pointwise norm identity failed beyond tolerance.

    ``identity`` names the failing identity.
    """

    def __init__(self, identity, residual, tolerance):
        self.identity = identity
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            f"identity {identity!r} failed: residual {residual:.3e} > {tolerance:.3e}"
        )


class BudgetExhausted(FinslerCheckError):
    """An integration or sampling budget ran out before the target error."""


class PreconditionError(FinslerCheckError, ValueError):
    """Inputs violate a documented precondition of a check."""


class ConfigError(FinslerCheckError):
    """Invalid campaign configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
