"""Exception types raised across the package."""


class DegenerateMetricError(ValueError):
    """Metric (or induced surface metric) is singular or not positive definite."""


class InteriorPointError(ValueError):
    """A point was requested inside the interior radius of a data set."""


class NonPositiveConformalFactorError(ValueError):
    """The conformal factor u became non-positive at an evaluation point."""


class MissingMomentumError(ValueError):
    """A momentum-dependent quantity was requested on data without momentum."""


class CenterUndefinedError(ArithmeticError):
    """Center of mass requested while the mass is below the definedness threshold."""

    def __init__(self, mass, threshold):
        super().__init__(
            f"center of mass undefined: |m| = {abs(mass):.3e} < {threshold:.1e}"
        )
        self.mass = mass
        self.threshold = threshold


class KernelObstructionError(ValueError):
    """Right-hand side has a component in the kernel of L = -Lap - 2."""


class UndefinedProblemError(ValueError):
    """CMC construction requested for data with non-positive mass."""


class DivergenceError(RuntimeError):
    """Fixed-point iteration failed to converge; the last iterate is attached."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class PlanError(ValueError):
    """Malformed experiment plan or spec configuration.

    ``path`` is the dotted field path that failed validation.
    """

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
