"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class PoleError(DomainError):
    """Evaluation point sits on a pole of the function."""


class ConditionFailed(ArithmeticError):
    """A solvability condition does not hold; ``residual`` records by how much."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class RepresentationBreakdown(ArithmeticError):
    """Recursive construction hit a vanishing pivot at ``index``."""

    def __init__(self, message, index):
        super().__init__(f"{message} at index {index}")
        self.index = index


class AtomicRegimeError(DomainError):
    """Askey-Wilson parameters would produce atoms; only the absolutely continuous part is supported."""


class StieltjesBreakdown(ArithmeticError):
    """Discretized Stieltjes recursion lost positivity (quadrature too coarse)."""


class CouplingViolation(AssertionError):
    """Pathwise order tau <= tau' was broken during a coupled run."""


class QualityWarning(UserWarning):
    """Importance-sampling ensemble has low effective sample size."""
