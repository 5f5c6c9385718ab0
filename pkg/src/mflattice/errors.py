"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument does not satisfy a documented precondition."""


class DomainError(ValueError):
    """An input lies outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """A configuration is malformed or too large to handle."""


class SingularityError(ValueError):
    """A singular weight was evaluated at coinciding points."""


class UnsupportedConfiguration(ValueError):
    """The requested engine cannot handle this model or kernel."""


class BlowUpError(FloatingPointError):
    """A simulated state became non-finite.

    Attributes
    ----------
    site : int
        Flat index of the first offending site.
    step : int
        Index of the time step that produced the non-finite value.
    replica : int or None
        Replica index when known.
    """

    def __init__(self, site, step, replica=None):
        self.site = int(site)
        self.step = int(step)
        self.replica = replica
        where = f"site {self.site} at step {self.step}"
        if replica is not None:
            where += f" (replica {replica})"
        super().__init__(f"non-finite state at {where}; reduce dt or use the tamed scheme")


class SolverError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)
