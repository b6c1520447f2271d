"""2D slip-wall Rayleigh-Benard convection in the vorticity-streamfunction
formulation (Fourier in x1, finite differences in x2), with built-in
diagnostics and an empirical Nusselt-bound certification engine."""

from .boundcert import (
    BoundParams,
    calibrate_constants,
    certify,
    certify_infinite_pr,
    choose_parameters,
    choose_parameters_infinite_pr,
    exponent,
    make_profile,
)
from .config import ConfigError, GridSpec, PhysicalParams, RunConfig, load_config
from .diagnostics import DiagnosticsRecord, RunningAverages, nusselt_all
from .dynamics import SimState, advance_state, evaluate_flow, init_state
from .elliptic import solve_pressure, solve_streamfunction
from .field import Grid, ScalarField
from .harness import SweepPlan, fit_power_law, load_plan, run_single, run_sweep
from .runner import RunResult, run

__version__ = "0.1.0"

__all__ = [
    "BoundParams",
    "ConfigError",
    "DiagnosticsRecord",
    "Grid",
    "GridSpec",
    "PhysicalParams",
    "RunConfig",
    "RunResult",
    "RunningAverages",
    "ScalarField",
    "SimState",
    "SweepPlan",
    "advance_state",
    "calibrate_constants",
    "certify",
    "certify_infinite_pr",
    "choose_parameters",
    "choose_parameters_infinite_pr",
    "evaluate_flow",
    "exponent",
    "fit_power_law",
    "init_state",
    "load_config",
    "load_plan",
    "make_profile",
    "nusselt_all",
    "run",
    "run_single",
    "run_sweep",
    "solve_pressure",
    "solve_streamfunction",
]
