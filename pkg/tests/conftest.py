import numpy as np
import pytest

from ptobs.model import example1_system
from ptobs.observers import ExtendedPtObserver, HgObserver, PtObserver
from ptobs.sim import SimConfig, simulate, simulate_many
from ptobs.timescale import TimeScale

T1 = 0.5
PROBES1 = (T1 - 1e-2, T1 - 1e-3 * T1, T1 - 1e-4)


@pytest.fixture(scope="session")
def ex1_system():
    return example1_system()


@pytest.fixture(scope="session")
def ex1_observers():
    pt = PtObserver((3, 2), TimeScale(T1, 0.1, 1e10))
    hg = HgObserver((3, 2), 0.01, "standard")
    return pt, hg


@pytest.fixture(scope="session")
def ex1_run(ex1_system, ex1_observers):
    """Example 1 with both observers in lockstep on [0, 2]."""
    cfg = SimConfig(t_end=2.0, dt_base=1e-4, dt_min=1e-9, sample_times=PROBES1)
    pt_tr, hg_tr = simulate_many(ex1_system, ex1_observers, [1, -1], [[0, 0], [0, 0]], cfg,
                                 names=["pt", "hg"])
    return pt_tr, hg_tr


@pytest.fixture(scope="session")
def ex2_run(ex1_system):
    obs = ExtendedPtObserver((6, 11, 6), TimeScale(1.0, 0.1, 1e10))
    cfg = SimConfig(t_end=10.0, dt_base=1e-4, dt_min=1e-9)
    return simulate(ex1_system, obs, [1, -1], [0, 0, 0], cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
