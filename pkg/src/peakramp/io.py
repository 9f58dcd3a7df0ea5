"""File formats: scenario documents, trace CSVs, comparison reports.

All writers use fixed float formatting (<= 9 significant digits for
scenario energies, 10 for traces) so identical runs produce byte-identical
files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .metrics import ComparisonReport
from .model import HyperParams, ProsumerParams, Scenario, ScenarioError
from .sync_admm import ConvergenceTrace

SYNC_TRACE_HEADER = "iter,sim_time,objective,primal_residual,dual_residual"
ASYNC_TRACE_HEADER = "event,sim_time,prosumer,objective,fp_residual"


def _f(x) -> float:
    """Round to 9 significant digits (stable shortest-repr in JSON)."""
    return float(f"{float(x):.9g}")


def _fv(vec) -> list[float]:
    return [_f(v) for v in np.asarray(vec).ravel()]


def scenario_to_dict(sc: Scenario) -> dict:
    hp = sc.hyper
    return {
        "horizon": sc.horizon,
        "prev_net_load": _f(sc.prev_net_load),
        "hyper": {
            "rho": _f(hp.rho), "gamma": _f(hp.gamma), "eta": _f(hp.eta),
            "eps_abs": _f(hp.eps_abs), "eps_rel": _f(hp.eps_rel),
            "max_iter": hp.max_iter, "max_events": hp.max_events,
        },
        "prosumers": [
            {
                "inelastic": _fv(p.inelastic),
                "renewable": _fv(p.renewable),
                "elastic_total": _f(p.elastic_total),
                "elastic_min": _f(p.elastic_min),
                "elastic_max": _f(p.elastic_max),
                "charge_max": _f(p.charge_max),
                "discharge_max": _f(p.discharge_max),
                "storage_cap": _f(p.storage_cap),
                "storage_init": _f(p.storage_init),
                "eff_charge": _f(p.eff_charge),
                "eff_discharge": _f(p.eff_discharge),
            }
            for p in sc.prosumers
        ],
    }


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        hyper = HyperParams(**doc.get("hyper", {}))
        prosumers = []
        for i, p in enumerate(doc["prosumers"]):
            try:
                prosumers.append(ProsumerParams(**p))
            except ScenarioError as exc:
                raise ScenarioError(f"prosumer {i}: {exc}") from exc
        return Scenario(prosumers=prosumers, horizon=int(doc["horizon"]),
                        prev_net_load=float(doc["prev_net_load"]), hyper=hyper)
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"malformed scenario document: {exc}") from exc


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n")


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    if not p.exists():
        raise ScenarioError(f"scenario file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file is not valid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def _t(x) -> str:
    return f"{float(x):.10g}"


def write_trace_csv(trace: ConvergenceTrace, path: str | Path) -> None:
    lines = []
    if trace.kind == "sync":
        lines.append(SYNC_TRACE_HEADER)
        for r in trace.records:
            lines.append(",".join([str(r.iter), _t(r.sim_time), _t(r.objective),
                                   _t(r.primal_residual), _t(r.dual_residual)]))
    else:
        lines.append(ASYNC_TRACE_HEADER)
        for r in trace.records:
            lines.append(",".join([str(r.event), _t(r.sim_time), str(r.prosumer),
                                   _t(r.objective), _t(r.fp_residual)]))
    Path(path).write_text("\n".join(lines) + "\n")


def report_to_dict(report: ComparisonReport) -> dict:
    return {
        "baseline_peak_ramp": _f(report.baseline_peak_ramp),
        "optimized_peak_ramp": _f(report.optimized_peak_ramp),
        "reduction_fraction": _f(report.reduction_fraction),
        "baseline_net_load": _fv(report.baseline_net_load),
        "optimized_net_load": _fv(report.optimized_net_load),
        "iterations_to_tolerance": report.iterations_to_tolerance,
        "objective_gap": _f(report.objective_gap),
    }


def save_report(report: ComparisonReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report), indent=2) + "\n")
