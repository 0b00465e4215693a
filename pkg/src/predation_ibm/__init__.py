"""Age-structured prey-predator individual-based model with density-dependent
interaction times, its functional responses and its limit ODE."""

from .errors import ConfigurationError, ContractError, DomainError, SimulationAbort
from .hazards import (
    DensityMap,
    Exponential,
    LogNormal,
    Pareto,
    Status,
    TableHazard,
    Uniform,
    ZeroLaw,
    cumulative_hazard,
    hazard,
    mean_time,
    sample_interaction_time,
    survival,
)
from .presets import PRESETS, build_preset
from .responses import ResponseModel, check_assumptions, phi, psi, response_table

__all__ = [
    "ConfigurationError", "ContractError", "DomainError", "SimulationAbort",
    "DensityMap", "Exponential", "LogNormal", "Pareto", "Status", "TableHazard", "Uniform", "ZeroLaw",
    "cumulative_hazard", "hazard", "mean_time", "sample_interaction_time", "survival",
    "PRESETS", "build_preset", "ResponseModel", "check_assumptions", "phi", "psi", "response_table",
]
