"""Time-scaling function mu(t) = T/(T - t), saturated at ``mu_cap``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_MU_CAP = 1e10


@dataclass(frozen=True)
class TimeScale:
    T: float
    m: float
    mu_cap: float = DEFAULT_MU_CAP

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"prescribed time T must be positive, got {self.T}")
        if not self.m > 0:
            raise ValueError(f"exponent m must be positive, got {self.m}")
        if not self.mu_cap >= 1:
            raise ValueError(f"mu_cap must be >= 1, got {self.mu_cap}")

    @property
    def cap_time(self) -> float:
        """Earliest float time at which the saturation binds."""
        t = self.T - self.T / self.mu_cap
        while t > 0 and self.saturated(math.nextafter(t, -math.inf)):
            t = math.nextafter(t, -math.inf)
        while not self.saturated(t):
            t = math.nextafter(t, math.inf)
        return t

    def _raw(self, t):
        # unsaturated mu, or None once the cap binds
        if t >= self.T:
            return None
        mu = self.T / (self.T - t)
        return mu if mu < self.mu_cap else None

    def mu(self, t: float) -> float:
        if t < 0:
            raise ValueError("mu is defined for t >= 0")
        raw = self._raw(t)
        return self.mu_cap if raw is None else raw

    def saturated(self, t: float) -> bool:
        return self._raw(t) is None

    def mu_dot_over_mu(self, t: float) -> float:
        """d(mu)/dt / mu = mu/T below the cap, 0 once the gain is frozen."""
        raw = self._raw(t)
        return 0.0 if raw is None else raw / self.T

    def gamma_diag(self, t: float, n: int) -> np.ndarray:
        """Diagonal of the error scaling, entries mu^(-i(1+m)) for i = 1..n."""
        if n < 1:
            raise ValueError("n must be >= 1")
        mu = self.mu(t)
        return mu ** (-(1.0 + self.m) * np.arange(1, n + 1))

    def gain_scale(self, t: float, n: int) -> np.ndarray:
        """mu^(i(1+m)) for i = 1..n, the factors multiplying the observer gains."""
        mu = self.mu(t)
        return mu ** ((1.0 + self.m) * np.arange(1, n + 1))
