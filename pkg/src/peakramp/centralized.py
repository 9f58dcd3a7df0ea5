"""Epigraph-form peak-ramp program: build it once, solve it exactly.

The fleet-wide min of the largest absolute ramp becomes a linear program
by introducing an envelope variable bounding every ramp from above and
below. Storage levels are eliminated by substituting the charge/discharge
cumulative sums into the storage bounds, so the flat variable vector is
{elastic, charge, discharge, net_demand} per prosumer plus the ramp
vector and the envelope scalar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import (Scenario, ScenarioError, SolverError, SystemSolution,
                    assemble_solution, build_schedule)
from .qp import QpProblem, QpSolution, QpStatus, solve_qp

QUANTITIES = ("elastic", "charge", "discharge", "net_demand")


@dataclass
class VarIndex:
    """Bijection between (prosumer, quantity, slot) and flat variable index.

    Layout: per prosumer a contiguous block [e | x | y | d] of 4T entries,
    then the T ramp variables, then the envelope scalar.
    """

    n_prosumers: int
    horizon: int

    def block(self, n: int) -> int:
        return n * 4 * self.horizon

    def var(self, n: int, quantity: str, t: int) -> int:
        k = QUANTITIES.index(quantity)
        return self.block(n) + k * self.horizon + t

    def ramp(self, t: int) -> int:
        return self.n_prosumers * 4 * self.horizon + t

    @property
    def envelope(self) -> int:
        return self.n_prosumers * 4 * self.horizon + self.horizon

    @property
    def n_vars(self) -> int:
        return self.envelope + 1

    def decode(self, i: int):
        """Inverse of the flat index: ('ramp', None, t), ('envelope', None, None)
        or (quantity, prosumer, slot)."""
        T = self.horizon
        if i == self.envelope:
            return ("envelope", None, None)
        if i >= self.n_prosumers * 4 * T:
            return ("ramp", None, i - self.n_prosumers * 4 * T)
        n, rest = divmod(i, 4 * T)
        k, t = divmod(rest, T)
        return (QUANTITIES[k], n, t)


@dataclass
class EpigraphProgram:
    problem: QpProblem
    index: VarIndex
    scenario: Scenario


def validate_scenario(sc: Scenario) -> None:
    """Raise ScenarioError naming the first prosumer whose elastic budget
    cannot be met within its per-slot bounds."""
    T = sc.horizon
    for n, p in enumerate(sc.prosumers):
        if not (T * p.elastic_min - 1e-12 <= p.elastic_total
                <= T * p.elastic_max + 1e-12):
            raise ScenarioError(
                f"prosumer {n}: elastic budget {p.elastic_total} outside "
                f"[{T * p.elastic_min}, {T * p.elastic_max}]"
            )


def count_rows(sc: Scenario) -> tuple[int, int]:
    """Closed-form (equality, inequality) row counts of the epigraph program."""
    N, T = sc.n_prosumers, sc.horizon
    return N * T + N + T, 8 * N * T + 2 * T


def build_epigraph_program(sc: Scenario) -> EpigraphProgram:
    """Assemble the sparse LP whose optimum is the minimal peak ramp."""
    validate_scenario(sc)
    N, T = sc.n_prosumers, sc.horizon
    idx = VarIndex(N, T)
    nv = idx.n_vars

    n_eq, n_ineq = count_rows(sc)
    eq_rows, eq_cols, eq_vals = [], [], []
    eq_rhs = np.zeros(n_eq)
    iq_rows, iq_cols, iq_vals = [], [], []
    iq_rhs = np.zeros(n_ineq)

    def eq_entry(row, col, val):
        eq_rows.append(row)
        eq_cols.append(col)
        eq_vals.append(val)

    def iq_entry(row, col, val):
        iq_rows.append(row)
        iq_cols.append(col)
        iq_vals.append(val)

    row = 0
    # net-demand identity: d - e - x + beta_d*y = P - W
    for n, p in enumerate(sc.prosumers):
        for t in range(T):
            eq_entry(row, idx.var(n, "net_demand", t), 1.0)
            eq_entry(row, idx.var(n, "elastic", t), -1.0)
            eq_entry(row, idx.var(n, "charge", t), -1.0)
            eq_entry(row, idx.var(n, "discharge", t), p.eff_discharge)
            eq_rhs[row] = p.inelastic[t] - p.renewable[t]
            row += 1
    # daily elastic balance
    for n, p in enumerate(sc.prosumers):
        for t in range(T):
            eq_entry(row, idx.var(n, "elastic", t), 1.0)
        eq_rhs[row] = p.elastic_total
        row += 1
    # ramp definition: r[t] - sum_n d_n[t] + sum_n d_n[t-1] = 0 (t=0 vs prev day)
    for t in range(T):
        eq_entry(row, idx.ramp(t), 1.0)
        for n in range(N):
            eq_entry(row, idx.var(n, "net_demand", t), -1.0)
            if t > 0:
                eq_entry(row, idx.var(n, "net_demand", t - 1), 1.0)
        eq_rhs[row] = -sc.prev_net_load if t == 0 else 0.0
        row += 1
    assert row == n_eq

    row = 0
    for n, p in enumerate(sc.prosumers):
        for t in range(T):  # elastic bounds
            iq_entry(row, idx.var(n, "elastic", t), 1.0)
            iq_rhs[row] = p.elastic_max
            row += 1
            iq_entry(row, idx.var(n, "elastic", t), -1.0)
            iq_rhs[row] = -p.elastic_min
            row += 1
        for t in range(T):  # charge bounds
            iq_entry(row, idx.var(n, "charge", t), 1.0)
            iq_rhs[row] = p.charge_max
            row += 1
            iq_entry(row, idx.var(n, "charge", t), -1.0)
            iq_rhs[row] = 0.0
            row += 1
        for t in range(T):  # discharge bounds
            iq_entry(row, idx.var(n, "discharge", t), 1.0)
            iq_rhs[row] = p.discharge_max
            row += 1
            iq_entry(row, idx.var(n, "discharge", t), -1.0)
            iq_rhs[row] = 0.0
            row += 1
        # storage bounds on the substituted trajectory
        # s0 + beta_c * cumsum(x) - cumsum(y) in [0, cap]
        for t in range(T):
            for tau in range(t + 1):
                iq_entry(row, idx.var(n, "charge", tau), p.eff_charge)
                iq_entry(row, idx.var(n, "discharge", tau), -1.0)
            iq_rhs[row] = p.storage_cap - p.storage_init
            row += 1
            for tau in range(t + 1):
                iq_entry(row, idx.var(n, "charge", tau), -p.eff_charge)
                iq_entry(row, idx.var(n, "discharge", tau), 1.0)
            iq_rhs[row] = p.storage_init
            row += 1
    for t in range(T):  # ramp envelope
        iq_entry(row, idx.ramp(t), 1.0)
        iq_entry(row, idx.envelope, -1.0)
        iq_rhs[row] = 0.0
        row += 1
        iq_entry(row, idx.ramp(t), -1.0)
        iq_entry(row, idx.envelope, -1.0)
        iq_rhs[row] = 0.0
        row += 1
    assert row == n_ineq

    lin = np.zeros(nv)
    lin[idx.envelope] = 1.0
    problem = QpProblem(
        quad=sp.csr_matrix((nv, nv)),
        lin=lin,
        eq_mat=sp.csr_matrix((eq_vals, (eq_rows, eq_cols)), shape=(n_eq, nv)),
        eq_rhs=eq_rhs,
        ineq_mat=sp.csr_matrix((iq_vals, (iq_rows, iq_cols)), shape=(n_ineq, nv)),
        ineq_rhs=iq_rhs,
    )
    return EpigraphProgram(problem=problem, index=idx, scenario=sc)


def extract_solution(prog: EpigraphProgram, qs: QpSolution) -> SystemSolution:
    sc, idx, T = prog.scenario, prog.index, prog.scenario.horizon
    schedules = []
    for n, p in enumerate(sc.prosumers):
        base = idx.block(n)
        e = qs.primal[base: base + T]
        x = qs.primal[base + T: base + 2 * T]
        y = qs.primal[base + 2 * T: base + 3 * T]
        # clip solver-tolerance noise off the simple bounds
        e = np.clip(e, p.elastic_min, p.elastic_max)
        x = np.clip(x, 0.0, p.charge_max)
        y = np.clip(y, 0.0, p.discharge_max)
        schedules.append(build_schedule(p, e, x, y))
    return assemble_solution(sc, schedules)


def solve_centralized(sc: Scenario, tol: float = 1e-8,
                      max_iter: int = 200) -> tuple[SystemSolution, float]:
    """Global optimum of the peak-ramp program; the oracle for both
    distributed algorithms. Returns the solution and the optimal envelope."""
    prog = build_epigraph_program(sc)
    qs = solve_qp(prog.problem, tol=tol, max_iter=max_iter)
    if qs.status is not QpStatus.OPTIMAL:
        raise SolverError(
            f"centralized solve failed: status={qs.status.value}, "
            f"iterations={qs.iterations}, objective={qs.objective:.6g}"
        )
    return extract_solution(prog, qs), float(qs.objective)
