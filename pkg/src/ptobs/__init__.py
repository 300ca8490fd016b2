"""Simulation and certification of prescribed-time observers for triangular systems."""

from .certify import Certificate, certify, check_trajectory_bounds, companion
from .expr import eval_expr, parse_expr
from .metrics import compare, compute_metrics
from .model import TriangularSystem, example1_system, system_rhs
from .observers import ExtendedPtObserver, HgObserver, PtObserver, joint_rhs
from .scenario import load_scenario
from .sim import SimConfig, Trajectory, rk4_step, simulate, simulate_many
from .timescale import TimeScale

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "ExtendedPtObserver",
    "HgObserver",
    "PtObserver",
    "SimConfig",
    "TimeScale",
    "Trajectory",
    "TriangularSystem",
    "certify",
    "check_trajectory_bounds",
    "companion",
    "compare",
    "compute_metrics",
    "eval_expr",
    "example1_system",
    "joint_rhs",
    "load_scenario",
    "parse_expr",
    "rk4_step",
    "simulate",
    "simulate_many",
    "system_rhs",
]
