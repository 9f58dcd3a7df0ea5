"""Peak-ramp minimization for prosumer fleets.

Three routes to the same optimum: a centralized epigraph linear program,
synchronous consensus ADMM, and asynchronous ADMM over a simulated
heterogeneous-delay timeline, plus scenario generation and experiment
metrics.
"""

from .async_admm import DelayModel, run_async
from .centralized import build_epigraph_program, solve_centralized
from .metrics import ComparisonReport, compare
from .model import (HyperParams, ProsumerParams, Scenario, Schedule,
                    ScenarioError, SolverError, SystemSolution,
                    check_feasible, net_demand, net_load, peak_ramp,
                    ramp_vector, storage_trajectory)
from .qp import QpProblem, QpSolution, QpStatus, kkt_residuals, solve_qp
from .scenario import GenConfig, baseline_schedule, generate
from .sync_admm import ConvergenceTrace, run_sync

__all__ = [
    "ComparisonReport", "ConvergenceTrace", "DelayModel", "GenConfig",
    "HyperParams", "ProsumerParams", "QpProblem", "QpSolution", "QpStatus",
    "Scenario", "ScenarioError", "Schedule", "SolverError", "SystemSolution",
    "baseline_schedule", "build_epigraph_program", "check_feasible",
    "compare", "generate", "kkt_residuals", "net_demand", "net_load",
    "peak_ramp", "ramp_vector", "run_async", "run_sync", "solve_centralized",
    "solve_qp", "storage_trajectory",
]

__version__ = "0.1.0"
