"""Asynchronous ADMM via parallel coordinate updates on a simulated timeline.

The aggregator re-solves its local problem whenever any one prosumer
delivers a dual block, sends the fresh copy back to that prosumer only,
and bumps the global counter. Prosumer finish times come from a seeded
per-prosumer delay model, so the whole event sequence is deterministic;
ties process in ascending prosumer index.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .model import (HyperParams, ProsumerParams, Scenario, Schedule,
                    SolverError, SystemSolution, assemble_solution)
from .qp import QpStatus, solve_qp
from .sync_admm import (AsyncRecord, ConvergenceTrace, prosumer_schedule_qp,
                        ramp_envelope_qp)

# Stopping rule: moving averages over the last N events must both drop
# below these thresholds (the normalized fixed-point residual and the
# relative envelope change).
STOP_RESIDUAL = 1e-4
STOP_REL_OBJECTIVE = 1e-4


@dataclass
class DelayModel:
    """Per-prosumer lognormal compute-time model, resampled per computation."""

    median: float = 1.0
    sigma: float = 0.5
    seed: int = 0
    per_prosumer_median: np.ndarray | None = None  # overrides `median` if set

    def sampler(self, n_prosumers: int):
        rng = np.random.default_rng(self.seed)
        medians = (np.full(n_prosumers, self.median)
                   if self.per_prosumer_median is None
                   else np.asarray(self.per_prosumer_median, dtype=float))
        if medians.shape[0] != n_prosumers or np.any(medians <= 0):
            raise ValueError("need one positive median per prosumer")

        def sample(n: int) -> float:
            return float(medians[n] * rng.lognormal(mean=0.0, sigma=self.sigma))

        return sample


@dataclass
class AsyncState:
    z: np.ndarray        # (N, T) dual blocks, the aggregator's global memory
    d_hat: np.ndarray    # (N, T) copies, row n as last sent to prosumer n
    k: int               # global counter: processed prosumer arrivals
    event_queue: list = field(default_factory=list)


def aggregator_update_async(z: np.ndarray, gamma: float, prev_net_load: float,
                            tol: float = 1e-8):
    """Aggregator local problem: envelope + <z, d_hat> + gamma/2 ||d_hat||^2
    under the ramp envelope. Reduced over column sums: the inner minimizer is
    d_hat[n, t] = -z[n, t]/gamma + (L[t] + Z[t]/gamma)/N, leaving a QP of
    size T+1. Returns (envelope value, ramp vector, copies)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    N, T = z.shape
    zcol = z.sum(axis=0)
    # reduced objective: envelope + gamma/(2N) * sum_t (L[t] + Z[t]/gamma)^2
    problem = ramp_envelope_qp(quad_diag=gamma / N, lin_load=zcol / N,
                               prev_net_load=prev_net_load)
    qs = solve_qp(problem, tol=tol)
    if qs.status is not QpStatus.OPTIMAL:
        raise SolverError(f"async aggregator solve failed: {qs.status.value}")
    load = qs.primal[:T]
    gamma_val = float(qs.primal[T])
    r = np.empty(T)
    r[0] = load[0] - prev_net_load
    r[1:] = np.diff(load)
    d_hat = -z / gamma + ((load + zcol / gamma) / N)[None, :]
    return gamma_val, r, d_hat


def prosumer_step_async(params: ProsumerParams, d_hat_n: np.ndarray,
                        z_n: np.ndarray, gamma: float,
                        eta: float) -> tuple[np.ndarray, Schedule]:
    """One local coordinate update with possibly stale copies:
    w_g = z + gamma*d_hat; minimize -<2 w_g - z, d> + gamma/2 ||d||^2 over
    the feasible set; w_f = 2 w_g - z - gamma*d; z <- z + eta (w_f - w_g)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if not (0 < eta < 1):
        raise ValueError("eta must lie in (0, 1)")
    w_g = z_n + gamma * d_hat_n
    problem = prosumer_schedule_qp(params, gamma, -(2.0 * w_g - z_n))
    qs = solve_qp(problem)
    if qs.status is not QpStatus.OPTIMAL:
        raise SolverError(f"async prosumer solve failed: {qs.status.value}")
    T = params.horizon
    from .model import build_schedule
    e = np.clip(qs.primal[:T], params.elastic_min, params.elastic_max)
    x = np.clip(qs.primal[T:2 * T], 0.0, params.charge_max)
    y = np.clip(qs.primal[2 * T:], 0.0, params.discharge_max)
    sched = build_schedule(params, e, x, y)
    w_f = 2.0 * w_g - z_n - gamma * sched.net_demand
    z_new = z_n + eta * (w_f - w_g)
    return z_new, sched


def async_residual(z_prev: np.ndarray, z_new: np.ndarray, eta: float,
                   gamma: float) -> float:
    """Per-update fixed-point gap ||dz|| / (eta * gamma)."""
    return float(np.linalg.norm(z_new - z_prev)) / (eta * gamma)


def run_async(sc: Scenario, delays: DelayModel | None = None
              ) -> tuple[SystemSolution, ConvergenceTrace]:
    """Deterministic discrete-event loop over prosumer completions.

    All prosumers start computing at time zero against zeroed duals and
    copies. Each arrival writes the prosumer's dual block to global
    memory, triggers one aggregator re-solve, returns the fresh copy to
    that prosumer alone, and schedules its next completion.
    """
    if delays is None:
        delays = DelayModel()
    hp: HyperParams = sc.hyper
    N, T = sc.n_prosumers, sc.horizon
    gamma, eta = hp.gamma, hp.eta
    sample = delays.sampler(N)

    z = np.zeros((N, T))
    d_hat = np.zeros((N, T))
    schedules: list[Schedule | None] = [None] * N
    d = np.zeros((N, T))
    trace = ConvergenceTrace(kind="async")

    queue: list[tuple[float, int]] = []
    for n in range(N):
        heapq.heappush(queue, (sample(n), n))

    res_window: deque[float] = deque(maxlen=N)
    obj_window: deque[float] = deque(maxlen=N)
    k = 0
    while queue and k < hp.max_events:
        now, n = heapq.heappop(queue)
        z_new, sched = prosumer_step_async(
            sc.prosumers[n], d_hat[n], z[n], gamma, eta)
        res_window.append(async_residual(z[n], z_new, eta, gamma))
        z[n] = z_new
        schedules[n] = sched
        d[n] = sched.net_demand

        gamma_val, _r, d_hat_full = aggregator_update_async(
            z, gamma, sc.prev_net_load)
        d_hat[n] = d_hat_full[n]
        k += 1

        # implementable objective from the latest prosumer-side schedules
        load = d.sum(axis=0)
        ramps = np.empty(T)
        ramps[0] = load[0] - sc.prev_net_load
        ramps[1:] = np.diff(load)
        objective = float(np.max(np.abs(ramps)))
        obj_window.append(objective)
        fp_res = float(np.mean(res_window))
        trace.records.append(AsyncRecord(
            event=k, sim_time=now, prosumer=n, objective=objective,
            fp_residual=fp_res))

        if k >= N and len(obj_window) == obj_window.maxlen:
            span = max(obj_window) - min(obj_window)
            rel = span / max(max(obj_window), 1e-12)
            if fp_res < STOP_RESIDUAL and rel < STOP_REL_OBJECTIVE:
                trace.converged = True
                break

        heapq.heappush(queue, (now + sample(n), n))

    if any(s is None for s in schedules):
        raise SolverError(
            "async run ended before every prosumer completed once; "
            "raise max_events to at least the fleet size")
    return assemble_solution(sc, schedules), trace
