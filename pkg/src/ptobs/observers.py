"""
Observer right-hand sides.

Every observer here has the shape

    xhat' = shift(xhat) + model_terms(xhat, u) + G(t) * (y - xhat_1)

where ``shift`` moves xhat_{i+1} into stage i, ``model_terms`` holds the
known nonlinearities and ``G(t)`` is the output-injection gain vector.
The variants differ only in ``model_terms`` and ``G``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import DimensionError, TriangularSystem, check_state, plant_rhs_u
from .timescale import TimeScale

PRESCRIBED_TIME = "prescribed-time"
HIGH_GAIN = "high-gain"
EXTENDED_PT = "extended-pt"


def _gain_vector(values, name) -> tuple:
    vals = tuple(float(v) for v in values)
    if not vals:
        raise ValueError(f"{name} must be non-empty")
    if not all(np.isfinite(vals)):
        raise ValueError(f"{name} must be finite")
    return vals


class _Observer:
    variant: str
    ts: TimeScale | None = None

    def dim(self, n: int) -> int:
        return n

    def check(self, sys: TriangularSystem) -> None:
        k = len(self.gain_coeffs)
        if k != self.dim(sys.n):
            raise DimensionError(
                f"{self.variant} observer needs {self.dim(sys.n)} gains for n={sys.n}, got {k}"
            )

    def gains(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def model_terms(self, sys: TriangularSystem, xhat: Sequence[float], u: float) -> list[float]:
        n = sys.n
        slots = list(xhat[:n])
        slots.append(u)
        progs = sys.f_programs
        terms = [progs[i](slots) for i in range(n - 1)]
        terms.append(sys.f0_program(slots))
        return terms

    def stiff_form(self, t: float):
        """``(L, kappa)`` if the gains equal ``L_i * kappa**i`` from ``t`` on, else None.

        Constant gains of this form allow an exact treatment of the injection
        term by the integrator.
        """
        return None

    def rhs_u(self, sys, xhat, y, t, u) -> list[float]:
        return self.rhs_innov(sys, xhat, y - xhat[0], t, u)

    def rhs_innov(self, sys, xhat, innov, t, u) -> list[float]:
        """Right-hand side with the output error ``y - xhat_1`` supplied directly."""
        g = self.gains(t)
        terms = self.model_terms(sys, xhat, u)
        k = len(xhat)
        return [
            (xhat[i + 1] if i + 1 < k else 0.0) + terms[i] + g[i] * innov for i in range(k)
        ]

    def rhs(self, sys: TriangularSystem, xhat, y: float, t: float) -> np.ndarray:
        self.check(sys)
        xhat = check_state(sys, xhat, self.dim(sys.n))
        return np.array(self.rhs_u(sys, xhat.tolist(), float(y), t, sys.u(t)))


@dataclass(frozen=True)
class PtObserver(_Observer):
    """Prescribed-time observer with gains ``L_i * mu(t)^(i(1+m))``."""

    L: tuple
    ts: TimeScale
    variant = PRESCRIBED_TIME

    def __post_init__(self):
        object.__setattr__(self, "L", _gain_vector(self.L, "L"))

    @property
    def gain_coeffs(self):
        return self.L

    def gains(self, t):
        return np.asarray(self.L) * self.ts.gain_scale(t, len(self.L))

    def stiff_form(self, t):
        if self.ts.saturated(t):
            return np.asarray(self.L), self.ts.mu_cap ** (1.0 + self.ts.m)
        return None


@dataclass(frozen=True)
class ExtendedPtObserver(PtObserver):
    """Prescribed-time observer on the plant augmented with a constant-disturbance state.

    The last component of the estimate is the disturbance estimate; the
    stage-n model uses the full ``f_n`` rather than the nominal ``f0``.
    """

    variant = EXTENDED_PT

    def dim(self, n):
        return n + 1

    def model_terms(self, sys, xhat, u):
        n = sys.n
        slots = list(xhat[:n])
        slots.append(u)
        terms = [p(slots) for p in sys.f_programs]
        terms.append(0.0)
        return terms


@dataclass(frozen=True)
class HgObserver(_Observer):
    """Constant-gain high-gain observer.

    ``gain_power="standard"`` uses ``alpha_i / epsilon**i``;
    ``"linear"`` uses ``alpha_i / epsilon`` for every stage.
    """

    alpha: tuple
    epsilon: float
    gain_power: str = "standard"
    variant = HIGH_GAIN

    def __post_init__(self):
        object.__setattr__(self, "alpha", _gain_vector(self.alpha, "alpha"))
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.gain_power not in ("standard", "linear"):
            raise ValueError(f"gain_power must be 'standard' or 'linear', got {self.gain_power!r}")

    @property
    def gain_coeffs(self):
        return self.alpha

    def gains(self, t=0.0):
        a = np.asarray(self.alpha)
        if self.gain_power == "linear":
            return a / self.epsilon
        return a / self.epsilon ** np.arange(1, len(a) + 1)

    def stiff_form(self, t):
        if self.gain_power == "standard":
            return np.asarray(self.alpha), 1.0 / self.epsilon
        return None


def pt_observer_rhs(sys: TriangularSystem, spec: PtObserver, xhat, y: float, t: float) -> np.ndarray:
    return spec.rhs(sys, xhat, y, t)


def hg_observer_rhs(sys: TriangularSystem, spec: HgObserver, xhat, y: float, t: float) -> np.ndarray:
    return spec.rhs(sys, xhat, y, t)


def extended_pt_observer_rhs(
    sys: TriangularSystem, spec: ExtendedPtObserver, xhat_aug, y: float, t: float
) -> np.ndarray:
    return spec.rhs(sys, xhat_aug, y, t)


def joint_rhs(sys: TriangularSystem, obs, s, t: float) -> np.ndarray:
    """Derivative of the stacked state ``[x, xhat]``; the output is ``y = x_1``."""
    obs.check(sys)
    n = sys.n
    s = np.asarray(s, dtype=float)
    k = obs.dim(n)
    if s.shape != (n + k,):
        raise DimensionError(
            f"joint state for n={n} and a {obs.variant} observer has length {n + k}, "
            f"got shape {s.shape}"
        )
    vals = s.tolist()
    x, xhat = vals[:n], vals[n:]
    u = sys.u(t)
    dx = plant_rhs_u(sys, x, u, sys.d(t))
    dxhat = obs.rhs_u(sys, xhat, x[0], t, u)
    return np.array(dx + dxhat)


def error_dynamics(sys: TriangularSystem, obs: PtObserver, x, xhat, t: float) -> np.ndarray:
    """Explicit derivative of e = x - xhat for the prescribed-time observer.

    Written stage by stage from the error equations (f_i - fhat_i, the lumped
    term sigma = f_n - f0 + d in the last stage) and independent of
    :func:`joint_rhs`, which it is used to cross-check.
    """
    n = sys.n
    x = [float(v) for v in x]
    xhat = [float(v) for v in xhat]
    e = [a - b for a, b in zip(x, xhat)]
    u = sys.u(t)
    env = x + [u]
    envh = xhat + [u]
    mu = obs.ts.mu(t)
    p = 1.0 + obs.ts.m
    out = []
    for i in range(n - 1):
        fi = sys.f_programs[i]
        out.append(e[i + 1] + fi(env) - fi(envh) - obs.L[i] * mu ** ((i + 1) * p) * e[0])
    sigma = sys.f_programs[n - 1](env) - sys.f0_program(env) + sys.d(t)
    f0 = sys.f0_program
    out.append(f0(env) - f0(envh) + sigma - obs.L[n - 1] * mu ** (n * p) * e[0])
    return np.array(out)
