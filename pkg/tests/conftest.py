import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from peakramp.model import HyperParams, ProsumerParams, Scenario


def random_prosumer(rng, T, flexible=True) -> ProsumerParams:
    P = rng.uniform(0.5, 2.0, T)
    W = rng.uniform(0.0, 1.0, T)
    if flexible:
        return ProsumerParams(
            inelastic=P, renewable=W, elastic_total=0.2 * T,
            elastic_min=0.0, elastic_max=0.5, charge_max=0.5,
            discharge_max=0.5, storage_cap=1.0, storage_init=0.25,
            eff_charge=0.9, eff_discharge=0.9)
    return ProsumerParams(
        inelastic=P, renewable=W, elastic_total=0.1 * T,
        elastic_min=0.1, elastic_max=0.1, charge_max=0.0,
        discharge_max=0.0, storage_cap=0.0, storage_init=0.0,
        eff_charge=0.9, eff_discharge=0.9)


def small_scenario(seed=0, N=3, T=6, **hyper) -> Scenario:
    rng = np.random.default_rng(seed)
    pros = [random_prosumer(rng, T) for _ in range(N)]
    return Scenario(prosumers=pros, horizon=T, prev_net_load=3.0,
                    hyper=HyperParams(**hyper))


def grid_fixture_prosumers() -> list[ProsumerParams]:
    """The committed two-prosumer, three-slot instance whose optimum is
    checked against the 0.05 kWh grid-search oracle."""
    pa = ProsumerParams(
        inelastic=[0.4, 1.0, 0.2], renewable=[0.0, 0.5, 0.0],
        elastic_total=0.3, elastic_min=0.0, elastic_max=0.2,
        charge_max=0.1, discharge_max=0.1, storage_cap=0.2,
        storage_init=0.1, eff_charge=0.9, eff_discharge=0.9)
    pb = ProsumerParams(
        inelastic=[0.6, 0.3, 0.9], renewable=[0.2, 0.4, 0.0],
        elastic_total=0.2, elastic_min=0.0, elastic_max=0.1,
        charge_max=0.1, discharge_max=0.05, storage_cap=0.15,
        storage_init=0.05, eff_charge=0.9, eff_discharge=0.9)
    return [pa, pb]


GRID_FIXTURE_PREV = 1.0
# frozen output of tests/oracles.py grid_min_peak_ramp on the fixture above
GRID_FIXTURE_OPTIMUM = 0.065


@pytest.fixture
def grid_scenario() -> Scenario:
    return Scenario(prosumers=grid_fixture_prosumers(), horizon=3,
                    prev_net_load=GRID_FIXTURE_PREV)
