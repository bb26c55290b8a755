"""Battery modeling and estimation workbench.

Physics-based single-particle simulation with degradation and a core-shell
positive particle, parameter identification, state-of-health estimation
with bagged Gaussian processes, and a hybrid physics plus tree-ensemble
voltage model.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BatwbError, ConfigError, DataError, DomainError, SimulationError, SolverError,
)
from .espm import CellState, SimOptions, SimulationResult, Simulator, simulate  # noqa: E402
from .kernels import BACKEND  # noqa: E402
from .ocp import OCPSet, OCPTable, default_ocp  # noqa: E402
from .params import CellParameters, SpatialGrid, preset  # noqa: E402
from .timeseries import TimeSeries  # noqa: E402

__all__ = [
    "BACKEND", "BatwbError", "CellParameters", "CellState", "ConfigError", "DataError",
    "DomainError", "OCPSet", "OCPTable", "SimOptions", "SimulationError", "SimulationResult",
    "Simulator", "SolverError", "SpatialGrid", "TimeSeries", "default_ocp", "preset",
    "simulate", "__version__",
]
