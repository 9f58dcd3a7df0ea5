"""Experiment-level comparisons between baseline and optimized dispatch."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SystemSolution
from .sync_admm import ConvergenceTrace

# Relative gap to the centralized optimum that counts as "converged"
# when reading iteration counts off a trace.
CONVERGENCE_GAP = 0.01
# Absolute fallback (kWh) when the centralized optimum is ~zero.
ABS_GAP_FALLBACK = 1e-4


@dataclass
class ComparisonReport:
    baseline_peak_ramp: float
    optimized_peak_ramp: float
    reduction_fraction: float            # 1 - optimized / baseline
    baseline_net_load: np.ndarray
    optimized_net_load: np.ndarray
    iterations_to_tolerance: dict[str, int | None]  # per trace kind
    objective_gap: float                 # |optimized - centralized| relative


def iterations_to_tolerance(trace: ConvergenceTrace, central_obj: float,
                            rel_tol: float = CONVERGENCE_GAP) -> int | None:
    """First iteration/event whose objective is within rel_tol of the
    centralized optimum (absolute threshold when the optimum is ~zero).
    None if the trace never gets there."""
    for rec in trace.records:
        if central_obj > ABS_GAP_FALLBACK:
            hit = abs(rec.objective - central_obj) / central_obj < rel_tol
        else:
            hit = abs(rec.objective - central_obj) < ABS_GAP_FALLBACK
        if hit:
            return rec.iter if trace.kind == "sync" else rec.event
    return None


def compare(baseline: SystemSolution, optimized: SystemSolution,
            central_obj: float,
            traces: list[ConvergenceTrace] | None = None) -> ComparisonReport:
    """Summarize peak-ramp reduction and convergence behaviour."""
    if baseline.net_load.shape != optimized.net_load.shape:
        raise ValueError("baseline and optimized horizons differ")
    reduction = 1.0 - optimized.peak_ramp / baseline.peak_ramp
    if central_obj > ABS_GAP_FALLBACK:
        gap = abs(optimized.peak_ramp - central_obj) / central_obj
    else:
        gap = abs(optimized.peak_ramp - central_obj)
    iters = {t.kind: iterations_to_tolerance(t, central_obj)
             for t in (traces or [])}
    return ComparisonReport(
        baseline_peak_ramp=baseline.peak_ramp,
        optimized_peak_ramp=optimized.peak_ramp,
        reduction_fraction=reduction,
        baseline_net_load=baseline.net_load.copy(),
        optimized_net_load=optimized.net_load.copy(),
        iterations_to_tolerance=iters,
        objective_gap=gap,
    )


def consumed_energy_per_prosumer(sol: SystemSolution) -> np.ndarray:
    """Inelastic plus elastic energy actually consumed by each prosumer.

    Identical across baseline and optimized dispatch by construction; grid
    totals differ only through storage round-trip losses.
    """
    return np.array([float(np.sum(s.elastic)) for s in sol.schedules])


def storage_loss_bound(sol: SystemSolution, eff_charge: float,
                       eff_discharge: float) -> float:
    """Upper bound on grid-side energy lost to storage round trips."""
    total_charge = sum(float(np.sum(s.charge)) for s in sol.schedules)
    return total_charge * (1.0 - eff_charge * eff_discharge)
