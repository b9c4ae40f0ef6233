"""Exception hierarchy for the solver."""


class SimulationError(Exception):
    """Base class for every error raised by this package."""


class SingularMatrix(SimulationError):
    """A matrix inverse was requested too close to singularity."""


class InvalidConfig(SimulationError):
    """A configuration file or parameter set violates its contract."""


class DegeneratePlasticState(SimulationError):
    """det P fell below the runtime floor; the step must be rejected."""


class LinearSolveFailure(SimulationError):
    """An inner linear solve did not reach the requested tolerance."""


class NegativeTemperature(SimulationError):
    """The enthalpy field went negative beyond round-off."""


class NonfiniteState(SimulationError):
    """A state vector picked up NaNs or infinities."""


class OutOfDomain(SimulationError):
    """A sampling coordinate lies outside the mesh."""


class BenchFailure(SimulationError):
    """A benchmark could not produce a trustworthy measurement."""


class IoFailure(SimulationError):
    """Reading or writing an output artifact failed."""
