"""Seeded synthetic fleet generation plus the no-optimization baseline.

Defaults follow the desk-scale experiment design: 100 prosumers, 24
hourly slots, around 30 kWh daily demand with 30% elastic, a two-level
inelastic profile concentrated in the 8:00-22:00 window, midday half-sine
renewable output, and a 4 kWh storage unit at 90% efficiency. The
baseline leaves storage idle and piles elastic use into the peak hours,
which produces the familiar duck-curve net load.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (HyperParams, ProsumerParams, Scenario, ScenarioError,
                    SystemSolution, assemble_solution, build_schedule)


@dataclass
class GenConfig:
    n_prosumers: int = 100
    horizon: int = 24
    daily_demand_mean: float = 30.0       # kWh
    daily_demand_spread: float = 0.10     # uniform +- fraction
    elastic_fraction: float = 0.30
    peak_hours: tuple[int, int] = (8, 22)       # [start, end) slots
    renewable_hours: tuple[int, int] = (10, 20)  # [start, end) slots
    renewable_fraction: float = 0.40      # of daily demand
    storage_cap: float = 4.0              # kWh
    storage_init_fraction: float = 0.25
    eff: float = 0.9                      # charge and discharge efficiency
    charge_max: float = 1.0               # kWh per slot
    discharge_max: float = 1.0
    rng_seed: int = 0
    hyper: HyperParams = field(default_factory=HyperParams)

    def __post_init__(self):
        T = self.horizon
        for name in ("daily_demand_spread", "elastic_fraction",
                     "renewable_fraction", "storage_init_fraction"):
            v = getattr(self, name)
            if not (0 <= v <= 1):
                raise ScenarioError(f"{name} must lie in [0, 1], got {v}")
        for name in ("peak_hours", "renewable_hours"):
            lo, hi = getattr(self, name)
            if not (0 <= lo < hi <= T):
                raise ScenarioError(f"{name} must be within the horizon")
        if min(self.n_prosumers, self.daily_demand_mean, self.storage_cap,
               self.eff, self.charge_max, self.discharge_max) <= 0:
            raise ScenarioError("fleet size, demand, storage and efficiency "
                                "parameters must be positive")


def _inelastic_profile(cfg: GenConfig, total_inelastic: float) -> np.ndarray:
    """Two-level day shape (peak level 3x off-peak) with the steps spread
    over two transition slots so boundary ramps stay below the solar
    drop-off, normalized to the requested total."""
    T = cfg.horizon
    lo, hi = cfg.peak_hours
    w = np.ones(T)
    w[lo:hi] = 3.0
    padded = np.concatenate([w[:1], w, w[-1:]])
    w = (padded[:-2] + padded[1:-1] + padded[2:]) / 3.0
    return w * (total_inelastic / w.sum())


def _renewable_profile(cfg: GenConfig, total_renewable: float) -> np.ndarray:
    """Half-sine supported on the renewable hours, scaled to the total."""
    T = cfg.horizon
    lo, hi = cfg.renewable_hours
    width = hi - lo
    prof = np.zeros(T)
    prof[lo:hi] = np.sin(np.pi * (np.arange(width) + 0.5) / width)
    return prof * (total_renewable / prof.sum())


def generate(cfg: GenConfig) -> Scenario:
    """Draw a fleet deterministically from the config seed. The previous
    day's terminal net load is taken from the baseline profile so the
    first-slot ramp is meaningful day over day."""
    rng = np.random.default_rng(cfg.rng_seed)
    T = cfg.horizon
    prosumers = []
    for _ in range(cfg.n_prosumers):
        total = float(rng.uniform(
            cfg.daily_demand_mean * (1 - cfg.daily_demand_spread),
            cfg.daily_demand_mean * (1 + cfg.daily_demand_spread)))
        elastic_total = cfg.elastic_fraction * total
        prosumers.append(ProsumerParams(
            inelastic=_inelastic_profile(cfg, total - elastic_total),
            renewable=_renewable_profile(cfg, cfg.renewable_fraction * total),
            elastic_total=elastic_total,
            elastic_min=0.0,
            elastic_max=2.0 * elastic_total / T,
            charge_max=cfg.charge_max,
            discharge_max=cfg.discharge_max,
            storage_cap=cfg.storage_cap,
            storage_init=cfg.storage_init_fraction * cfg.storage_cap,
            eff_charge=cfg.eff,
            eff_discharge=cfg.eff,
        ))
    draft = Scenario(prosumers=prosumers, horizon=T, prev_net_load=0.0,
                     hyper=cfg.hyper)
    base = baseline_schedule(draft)
    return Scenario(prosumers=prosumers, horizon=T,
                    prev_net_load=float(base.net_load[-1]), hyper=cfg.hyper)


def _proportional_elastic(p: ProsumerParams) -> np.ndarray:
    """Split the elastic budget proportionally to the inelastic profile,
    clipping at the per-slot bounds and redistributing any excess."""
    T = p.horizon
    weights = p.inelastic.copy()
    if weights.sum() <= 0:
        weights = np.ones(T)
    e = np.full(T, p.elastic_min)
    remaining = p.elastic_total - e.sum()
    headroom = np.full(T, p.elastic_max) - e
    for _ in range(T):
        if remaining <= 1e-12:
            break
        open_slots = headroom > 1e-12
        share = weights * open_slots
        if share.sum() <= 0:
            share = open_slots.astype(float)
        add = np.minimum(remaining * share / share.sum(), headroom)
        e += add
        headroom -= add
        remaining -= add.sum()
    return e


def baseline_schedule(sc: Scenario) -> SystemSolution:
    """The no-optimization counterfactual: storage idle, elastic demand
    follows the inelastic shape, renewable consumed as it arrives."""
    zeros = np.zeros(sc.horizon)
    schedules = [build_schedule(p, _proportional_elastic(p), zeros, zeros)
                 for p in sc.prosumers]
    return assemble_solution(sc, schedules)
