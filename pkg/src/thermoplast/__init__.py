"""2-D finite-strain thermo-elasto-plasticity and creep on structured meshes.

A numpy/scipy library built around four pieces: small-matrix tensor algebra,
constitutive laws with a regularised rate-dependent flow rule, a C1-conforming
structured-mesh discretization, and a staggered semi-implicit time stepper
with thermodynamic diagnostics (energy balances, entropy monotonicity,
positivity guards).  See README.md for the configuration format and the
benchmark drivers.
"""

from .config import RunConfig, parse_config
from .diagnostics import DiagnosticsRecord, entropy_check, momentum_weak_residual
from .errors import (BenchFailure, DegeneratePlasticState, InvalidConfig,
                     IoFailure, LinearSolveFailure, NegativeTemperature,
                     NonfiniteState, OutOfDomain, SimulationError, SingularMatrix)
from .materials import MaterialParams
from .mesh import Mesh, build_mesh
from .operators import DET_FLOOR, Discretization
from .state import BoundaryData, InitialConditions, SimState, init_state, sample_line
from .stepper import RunResult, StepConfig, Stepper, run

__version__ = "0.1.0"

__all__ = [
    "BenchFailure", "BoundaryData", "DET_FLOOR", "DegeneratePlasticState",
    "DiagnosticsRecord", "Discretization", "InitialConditions", "InvalidConfig",
    "IoFailure", "LinearSolveFailure", "MaterialParams", "Mesh",
    "NegativeTemperature", "NonfiniteState", "OutOfDomain", "RunConfig",
    "RunResult", "SimState", "SimulationError", "SingularMatrix", "StepConfig",
    "Stepper", "build_mesh", "entropy_check", "init_state",
    "momentum_weak_residual", "parse_config", "run", "sample_line",
]
