"""Acquisition-time analysis for lidar-assisted free-space optical links to UAVs."""

__version__ = "0.1.0"

from .acqstats import (
    AcqProbabilities,
    AcqTimeModel,
    acq_time_cdf,
    expected_time,
    pulse_success_prob,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    FsoAcqError,
    GeometricInfeasibilityError,
    NoFeasiblePointError,
    NonTerminationError,
    ParameterError,
)
from .model import (
    EnergyModel,
    HoytConvention,
    NormalizationMode,
    SphereShape,
    SystemParams,
    load_config,
    default_params,
    validate,
)
from .optimizer import optimize_alpha_cdf, optimize_alpha_mean_time, optimize_n0, sweep_alpha
from .simulator import SimFidelity, run_trials, simulate_acquisition

__all__ = [
    "AcqProbabilities",
    "AcqTimeModel",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "EnergyModel",
    "FsoAcqError",
    "GeometricInfeasibilityError",
    "HoytConvention",
    "NoFeasiblePointError",
    "NonTerminationError",
    "NormalizationMode",
    "ParameterError",
    "SimFidelity",
    "SphereShape",
    "SystemParams",
    "acq_time_cdf",
    "expected_time",
    "load_config",
    "optimize_alpha_cdf",
    "optimize_alpha_mean_time",
    "optimize_n0",
    "pulse_success_prob",
    "run_trials",
    "simulate_acquisition",
    "sweep_alpha",
    "default_params",
    "validate",
]
