"""Exception types shared across the package."""


class NumericalError(ArithmeticError):
    """A numerical consistency check failed, e.g. a quantity that must be
    real came back with a large imaginary residue."""


class IntegrationDivergedError(RuntimeError):
    """Time integration produced non-finite amplitudes.

    Carries the simulated time at which the failure was detected and, when
    available, the partial trajectory recorded up to that point.
    """

    def __init__(self, message, time=None, trajectory=None):
        super().__init__(message)
        self.time = time
        self.trajectory = trajectory


class SingularPointError(ValueError):
    """A state-dependent term was evaluated at its singular point."""


class DegenerateGeometryError(ValueError):
    """The requested formula is ill defined for this geometry."""


class ConvergenceError(RuntimeError):
    """An iterative procedure did not reach its stopping criterion."""


class ConfigError(ValueError):
    """A scenario configuration is malformed or violates the schema."""
