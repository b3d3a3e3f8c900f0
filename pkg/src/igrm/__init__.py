"""Direction-split B-spline solver for non-stationary Stokes and Navier-Stokes
flow with residual-minimization stabilization and Kronecker banded solves."""

from .analysis import fit_order, measure, pressure_error, velocity_error
from .kron_solver import BandedLU, make_saddle, solve_kron, solve_saddle
from .problems import cavity, get_problem, ns_mms, project_initial, stokes_mms
from .runner import ExitStatus, RunConfig, run, sweep
from .spline_basis import SplineSpace1D, eval_basis, make_space
from .splitting import Discretization, FlowState, GMStepper, SpaceChoice, StepperConfig

__all__ = [
    "BandedLU", "Discretization", "ExitStatus", "FlowState", "GMStepper", "RunConfig",
    "SpaceChoice", "SplineSpace1D", "StepperConfig", "cavity", "eval_basis", "fit_order",
    "get_problem", "make_saddle", "make_space", "measure", "ns_mms", "pressure_error",
    "project_initial", "run", "solve_kron", "solve_saddle", "stokes_mms", "sweep",
    "velocity_error",
]
