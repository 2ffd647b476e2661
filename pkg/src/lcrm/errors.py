"""Exception types raised by the solver."""


class LcrmError(Exception):
    pass


class DomainError(LcrmError, ValueError):
    """A point or argument lies outside its admissible range."""


class StabilityError(LcrmError):
    """A time step violates an explicit stability limit."""


class GeometryError(LcrmError):
    """Degenerate triangle or empty front."""


class SolverError(LcrmError):
    def __init__(self, msg, residuals=None):
        super().__init__(msg)
        self.residuals = list(residuals or [])


class DivergenceError(LcrmError):
    """Non-finite values appeared during a step."""


class SaturationError(LcrmError, ValueError):
    """Surface concentration at or above maximum packing under the Langmuir law."""


class CheckpointError(LcrmError):
    pass


class CheckpointCorrupt(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class ConfigError(LcrmError, ValueError):
    pass
