"""Domain types and net-load arithmetic for prosumer fleet scheduling.

Holds the per-prosumer parameters, decision schedules, and the pure
functions that map schedules to net demand, system net load, ramps, and
the peak ramp. Feasibility checking reports violations as data instead
of raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ScenarioError(ValueError):
    """Invalid scenario or parameter data."""


class SolverError(RuntimeError):
    """An optimization subproblem failed to solve to optimality."""


def _vector(v, name: str, length: int | None = None) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.ndim != 1:
        raise ScenarioError(f"{name} must be a 1-D vector, got shape {a.shape}")
    if length is not None and a.shape[0] != length:
        raise ScenarioError(f"{name} must have length {length}, got {a.shape[0]}")
    return a


@dataclass
class ProsumerParams:
    """Per-prosumer constants over a horizon of T slots (all energies in kWh)."""

    inelastic: np.ndarray      # fixed consumption per slot
    renewable: np.ndarray      # forecast generation per slot
    elastic_total: float       # daily shiftable energy budget
    elastic_min: float         # per-slot lower bound on elastic use
    elastic_max: float         # per-slot upper bound on elastic use
    charge_max: float          # per-slot charging bound
    discharge_max: float       # per-slot discharging bound
    storage_cap: float         # storage capacity
    storage_init: float        # initial storage level
    eff_charge: float          # charging efficiency in (0, 1]
    eff_discharge: float       # discharging efficiency in (0, 1]

    def __post_init__(self):
        self.inelastic = _vector(self.inelastic, "inelastic")
        T = self.inelastic.shape[0]
        self.renewable = _vector(self.renewable, "renewable", T)
        if np.any(self.inelastic < 0) or np.any(self.renewable < 0):
            raise ScenarioError("inelastic and renewable profiles must be nonnegative")
        if not (0 <= self.elastic_min <= self.elastic_max):
            raise ScenarioError("need 0 <= elastic_min <= elastic_max")
        if not (T * self.elastic_min <= self.elastic_total <= T * self.elastic_max + 1e-12):
            raise ScenarioError(
                "elastic budget infeasible: need T*elastic_min <= elastic_total "
                f"<= T*elastic_max ({T * self.elastic_min} <= {self.elastic_total} "
                f"<= {T * self.elastic_max})"
            )
        if self.charge_max < 0 or self.discharge_max < 0:
            raise ScenarioError("charge_max and discharge_max must be nonnegative")
        if not (0 <= self.storage_init <= self.storage_cap):
            raise ScenarioError("need 0 <= storage_init <= storage_cap")
        if not (0 < self.eff_charge <= 1) or not (0 < self.eff_discharge <= 1):
            raise ScenarioError("efficiencies must lie in (0, 1]")

    @property
    def horizon(self) -> int:
        return self.inelastic.shape[0]


@dataclass
class Schedule:
    """One prosumer's decision vectors over the horizon."""

    elastic: np.ndarray     # length T
    charge: np.ndarray      # length T
    discharge: np.ndarray   # length T
    storage: np.ndarray     # length T+1, storage[0] is the initial level
    net_demand: np.ndarray  # length T, may be negative (net export)


@dataclass
class HyperParams:
    """Algorithm hyperparameters shared by the ADMM variants."""

    rho: float = 0.5        # sync penalty parameter
    gamma: float = 0.5      # async penalty parameter
    eta: float = 0.5        # async relaxation step, in (0, 1)
    eps_abs: float = 1e-5
    eps_rel: float = 1e-4
    max_iter: int = 200
    max_events: int = 5000

    def __post_init__(self):
        if self.rho <= 0 or self.gamma <= 0:
            raise ScenarioError("rho and gamma must be positive")
        if not (0 < self.eta < 1):
            raise ScenarioError("eta must lie in (0, 1)")


@dataclass
class Scenario:
    """A fleet of prosumers plus the shared horizon and hyperparameters."""

    prosumers: list[ProsumerParams]
    horizon: int
    prev_net_load: float    # system net load at the last slot of the previous day
    hyper: HyperParams = field(default_factory=HyperParams)

    def __post_init__(self):
        if len(self.prosumers) < 1:
            raise ScenarioError("scenario needs at least one prosumer")
        if self.horizon < 2:
            raise ScenarioError("horizon must be at least 2")
        for i, p in enumerate(self.prosumers):
            if p.horizon != self.horizon:
                raise ScenarioError(
                    f"prosumer {i} has horizon {p.horizon}, scenario has {self.horizon}"
                )

    @property
    def n_prosumers(self) -> int:
        return len(self.prosumers)


@dataclass
class SystemSolution:
    """Fleet-level outcome: schedules plus the induced load and ramp profile."""

    schedules: list[Schedule]
    net_load: np.ndarray   # length T
    ramps: np.ndarray      # length T
    peak_ramp: float


def net_demand(params: ProsumerParams, elastic, charge, discharge) -> np.ndarray:
    """Grid energy drawn per slot: inelastic + elastic + charging
    - efficiency-scaled discharging - renewable. Negative means export."""
    T = params.horizon
    e = _vector(elastic, "elastic", T)
    x = _vector(charge, "charge", T)
    y = _vector(discharge, "discharge", T)
    return params.inelastic + e + x - params.eff_discharge * y - params.renewable


def storage_trajectory(params: ProsumerParams, charge, discharge) -> np.ndarray:
    """Storage level over slots 0..T: s[t+1] = s[t] + eff_charge*x[t] - y[t].

    Bound violations are not raised here; ``check_feasible`` reports them.
    """
    T = params.horizon
    x = _vector(charge, "charge", T)
    y = _vector(discharge, "discharge", T)
    s = np.empty(T + 1)
    s[0] = params.storage_init
    s[1:] = params.storage_init + np.cumsum(params.eff_charge * x - y)
    return s


def net_load(demands: list[np.ndarray]) -> np.ndarray:
    """Elementwise sum of per-prosumer net demands."""
    if len(demands) == 0:
        raise ScenarioError("net_load of an empty fleet is undefined")
    stacked = np.atleast_2d(np.asarray(demands, dtype=float))
    if stacked.ndim != 2:
        raise ScenarioError("net demand vectors must all share one length")
    return stacked.sum(axis=0)


def ramp_vector(load: np.ndarray, prev_net_load: float) -> np.ndarray:
    """Slot-to-slot net load differences; the first slot differences against
    the previous day's terminal net load."""
    l = _vector(load, "net_load")
    r = np.empty_like(l)
    r[0] = l[0] - prev_net_load
    r[1:] = np.diff(l)
    return r


def peak_ramp(r: np.ndarray) -> float:
    """Largest absolute ramp (infinity norm of the ramp vector)."""
    return float(np.max(np.abs(_vector(r, "ramps"))))


def build_schedule(params: ProsumerParams, elastic, charge, discharge) -> Schedule:
    """Assemble a Schedule from the free decision vectors, deriving storage
    trajectory and net demand."""
    T = params.horizon
    e = _vector(elastic, "elastic", T)
    x = _vector(charge, "charge", T)
    y = _vector(discharge, "discharge", T)
    return Schedule(
        elastic=e,
        charge=x,
        discharge=y,
        storage=storage_trajectory(params, x, y),
        net_demand=net_demand(params, e, x, y),
    )


def assemble_solution(sc: Scenario, schedules: list[Schedule]) -> SystemSolution:
    """Aggregate per-prosumer schedules into the system-level solution."""
    l = net_load([s.net_demand for s in schedules])
    r = ramp_vector(l, sc.prev_net_load)
    return SystemSolution(schedules=schedules, net_load=l, ramps=r, peak_ramp=peak_ramp(r))


@dataclass
class Violation:
    constraint: str
    index: int      # slot index, or -1 for scalar constraints
    magnitude: float


@dataclass
class FeasibilityReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def worst(self) -> float:
        return max((v.magnitude for v in self.violations), default=0.0)


DEFAULT_FEAS_TOL = 1e-6


def check_feasible(params: ProsumerParams, sched: Schedule,
                   tol: float = DEFAULT_FEAS_TOL) -> FeasibilityReport:
    """List every constraint the schedule violates by more than ``tol`` kWh.

    Covers elastic bounds, the daily elastic balance, charge/discharge
    bounds, storage bounds and recursion, and the net-demand identity.
    An empty report means feasible within tolerance.
    """
    out: list[Violation] = []

    def bound(name, values, lo, hi):
        for t, v in enumerate(np.atleast_1d(values)):
            if v < lo - tol:
                out.append(Violation(name + "_lower", t, float(lo - v)))
            if v > hi + tol:
                out.append(Violation(name + "_upper", t, float(v - hi)))

    bound("elastic", sched.elastic, params.elastic_min, params.elastic_max)
    bound("charge", sched.charge, 0.0, params.charge_max)
    bound("discharge", sched.discharge, 0.0, params.discharge_max)
    bound("storage", sched.storage, 0.0, params.storage_cap)

    gap = abs(float(np.sum(sched.elastic)) - params.elastic_total)
    if gap > tol:
        out.append(Violation("elastic_balance", -1, gap))

    ref_s = storage_trajectory(params, sched.charge, sched.discharge)
    if sched.storage.shape != ref_s.shape:
        out.append(Violation("storage_shape", -1, float("inf")))
    else:
        err = np.abs(sched.storage - ref_s)
        for t in np.flatnonzero(err > tol):
            out.append(Violation("storage_recursion", int(t), float(err[t])))

    ref_d = net_demand(params, sched.elastic, sched.charge, sched.discharge)
    err = np.abs(sched.net_demand - ref_d)
    for t in np.flatnonzero(err > tol):
        out.append(Violation("net_demand_identity", int(t), float(err[t])))

    return FeasibilityReport(out)
