"""
Fixed-step simulation of a plant together with one or more observers.

The plant and all observers advance in lockstep on a shared step grid so
every observer sees exactly the same measured output. The grid is
``dt_base`` everywhere except just before each prescribed time T, where
the step shrinks like ``dt_base * (T - t) / T`` down to ``dt_min``. Grid
points are forced at ``T - dt_min``, at the time the saturation of mu
binds, at ``T`` and at ``t_end``.

Two safeguards keep the explicit scheme stable while the gains blow up:

* a step whose injection gains would put RK4 outside its stability region
  is split into equal-length halvings (substeps are not recorded);
* once an observer's gains are constant and of the form ``L_i kappa^i``
  (saturated prescribed-time gains, or standard high-gain gains) and too
  stiff for RK4, its injection term is integrated exactly with a fourth
  order exponential Runge-Kutta step (Cox-Matthews ETDRK4) in the scaled
  coordinates ``w_i = kappa^-i xhat_i``. Blocks without a linear part
  reduce to classical RK4 within the same step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .expr import DomainError
from .linalg import eigenvalues
from .model import TriangularSystem, check_state, plant_rhs_u
from .observers import ExtendedPtObserver, HgObserver, PtObserver
from .certify import companion

# RK4 is stable for h*|lambda| up to ~2.78 on the negative real axis
RK4_STABILITY = 2.0
SHRINK_WINDOW = 10  # steps of dt_base before T in which the step shrinks
MAX_ROWS = 90_000
MAX_SUBSTEPS = 2 ** 16  # per accepted step


class IntegrationError(ArithmeticError):
    """Non-finite state during integration."""

    def __init__(self, message: str, t_last: float, state):
        self.t_last = t_last
        self.state = np.array(state)
        super().__init__(f"{message} (last finite state at t={t_last!r})")


# ---------------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------------


def rk4_step(f: Callable, s, t: float, h: float) -> np.ndarray:
    """One classical Runge-Kutta step of ``s' = f(t, s)``."""
    if not h > 0:
        raise ValueError("step must be positive")
    s = np.asarray(s, dtype=float)
    k1 = np.asarray(f(t, s), dtype=float)
    k2 = np.asarray(f(t + 0.5 * h, s + 0.5 * h * k1), dtype=float)
    k3 = np.asarray(f(t + 0.5 * h, s + 0.5 * h * k2), dtype=float)
    k4 = np.asarray(f(t + h, s + h * k3), dtype=float)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise IntegrationError("non-finite derivative in RK4 stage", t, s)
    return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def phi_functions(Z) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """``(exp(Z), phi1(Z), phi2(Z), phi3(Z))`` with phi_k(z) = sum z^j/(j+k)!.

    Large, well-conditioned ``Z`` uses the recurrence
    phi_{k+1} = Z^-1 (phi_k - I/k!), which is cancellation free there;
    otherwise the functions are read off the exponential of an augmented
    block matrix.
    """
    Z = np.asarray(Z, dtype=float)
    k = Z.shape[0]
    eye = np.eye(k)
    try:
        Zinv = np.linalg.inv(Z)
        small_inverse = np.linalg.norm(Zinv, 2) <= 0.25
    except np.linalg.LinAlgError:
        small_inverse = False
    if small_inverse:
        E = expm(Z)
        p1 = Zinv @ (E - eye)
        p2 = Zinv @ (p1 - eye)
        p3 = Zinv @ (p2 - 0.5 * eye)
        return E, p1, p2, p3
    W = np.zeros((4 * k, 4 * k))
    W[:k, :k] = Z
    for j in range(3):
        W[j * k:(j + 1) * k, (j + 1) * k:(j + 2) * k] = eye
    X = expm(W)
    return X[:k, :k], X[:k, k:2 * k], X[:k, 2 * k:3 * k], X[:k, 3 * k:]


def etd_coefficients(Z):
    """Matrices of one ETDRK4 step for linear part ``Z = h M``."""
    E, p1, p2, p3 = phi_functions(Z)
    E2, q1, _, _ = phi_functions(0.5 * Z)
    return {
        "E": E,
        "E2": E2,
        "Q": 0.5 * q1,
        "b1": p1 - 3.0 * p2 + 4.0 * p3,
        "b2": 2.0 * p2 - 4.0 * p3,
        "b4": 4.0 * p3 - p2,
    }


# scalar values of the coefficients above for a zero linear part
_RK4_COEF = {"E": 1.0, "E2": 1.0, "Q": 0.5, "b1": 1.0 / 6.0, "b2": 1.0 / 3.0, "b4": 1.0 / 6.0}


def etdrk4_step(N: Callable, u, t: float, h: float, blocks) -> np.ndarray:
    """One Cox-Matthews ETDRK4 step of ``u' = M u + N(t, u)``.

    ``M`` is block diagonal: ``blocks`` is a list of ``(slice, coefficients)``
    from :func:`etd_coefficients`; all other components have no linear part
    and are advanced exactly as by RK4.
    """

    def apply(key, v):
        out = _RK4_COEF[key] * v
        for sl, coef in blocks:
            out[sl] = coef[key] @ v[sl]
        return out

    Nu = N(t, u)
    E2u = apply("E2", u)
    a = E2u + h * apply("Q", Nu)
    Na = N(t + 0.5 * h, a)
    b = E2u + h * apply("Q", Na)
    Nb = N(t + 0.5 * h, b)
    c = apply("E2", a) + h * apply("Q", 2.0 * Nb - Nu)
    Nc = N(t + h, c)
    for k in (Nu, Na, Nb, Nc):
        if not np.all(np.isfinite(k)):
            raise IntegrationError("non-finite derivative in exponential stage", t, u)
    return apply("E", u) + h * (apply("b1", Nu) + apply("b2", Na + Nb) + apply("b4", Nc))


# ---------------------------------------------------------------------------
# configuration and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    dt_base: float = 1e-4
    dt_min: float | None = None  # default 1e-9 * T
    singularity_shrink: bool = True
    record_stride: int | None = None  # default keeps output below ~1e5 rows
    noise_std: float = 0.0
    seed: int = 0
    sample_times: tuple = ()  # extra grid points that are always recorded

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.dt_base > 0:
            raise ValueError("dt_base must be positive")
        if self.dt_min is not None and not 0 < self.dt_min <= self.dt_base:
            raise ValueError("need 0 < dt_min <= dt_base")
        if self.record_stride is not None and self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")

    def resolved_dt_min(self, Ts: Sequence[float]) -> float:
        if self.dt_min is not None:
            return self.dt_min
        if Ts:
            return min(1e-9 * min(Ts), self.dt_base)
        return self.dt_base


@dataclass(frozen=True)
class Trajectory:
    """Recorded samples of one plant/observer pair.

    ``xhat`` is n or n+1 wide; for the extended observer its last column is
    the disturbance estimate, also exposed as ``dhat``. ``d`` is the true
    disturbance at each sample. ``mu_val`` is NaN for observers without a
    time scale.
    """

    times: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    err_norm: np.ndarray
    mu_val: np.ndarray
    d: np.ndarray
    dhat: np.ndarray | None = None
    observer: str = ""
    variant: str = ""
    system_id: str = ""

    def __post_init__(self):
        for name in ("times", "x", "xhat", "err_norm", "mu_val", "d", "dhat"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=float)
                arr.flags.writeable = False
                object.__setattr__(self, name, arr)
        lengths = {len(self.times), len(self.x), len(self.xhat), len(self.err_norm),
                   len(self.mu_val), len(self.d)}
        if self.dhat is not None:
            lengths.add(len(self.dhat))
        if len(lengths) != 1:
            raise ValueError("trajectory fields must have equal length")

    def __len__(self):
        return len(self.times)

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def error_vectors(self, k: int | None = None) -> np.ndarray:
        """x - xhat per sample; with k = n+1 the disturbance error d - dhat is appended."""
        n = self.n
        k = n if k is None else k
        e = self.x - self.xhat[:, :n]
        if k == n:
            return e
        if k == n + 1 and self.dhat is not None:
            return np.column_stack([e, self.d - self.dhat])
        raise ValueError(f"cannot form a {k}-dimensional error for this trajectory")

    def at(self, t: float) -> int:
        """Index of the sample closest to ``t``."""
        return int(np.argmin(np.abs(self.times - t)))


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def _timescale(obs):
    return getattr(obs, "ts", None)


def _kappa(obs, t):
    """Gain scale kappa with gains L_i kappa^i at time t, or None."""
    if isinstance(obs, PtObserver):
        return obs.ts.mu(t) ** (1.0 + obs.ts.m)
    if isinstance(obs, HgObserver) and obs.gain_power == "standard":
        return 1.0 / obs.epsilon
    return None


class _Block:
    """Per-observer bookkeeping inside the joint state."""

    def __init__(self, obs, sys, offset):
        self.obs = obs
        self.k = obs.dim(sys.n)
        self.sl = slice(offset, offset + self.k)
        self.coeffs = np.asarray(obs.gain_coeffs)
        kmat = companion(self.coeffs)
        self.rho = float(np.max(np.abs(eigenvalues(kmat))))
        self.kmat = kmat
        self.powers = np.arange(1, self.k + 1, dtype=float)
        self._etd_cache = {}

    def spectral_radius(self, t):
        kap = _kappa(self.obs, t)
        if kap is not None:
            return kap * self.rho
        g = np.abs(self.obs.gains(t))
        # Fujiwara bound on the roots of s^k + g1 s^(k-1) + ... + gk
        return 2.0 * max(g[i] ** (1.0 / (i + 1)) for i in range(self.k))

    def frozen_on(self, t0, t1):
        """True if the gains are constant on [t0, t1]."""
        ts = _timescale(self.obs)
        if ts is None:
            return True
        return ts.saturated(t0)

    def etd(self, h, kappa):
        key = (h, kappa)
        coef = self._etd_cache.get(key)
        if coef is None:
            coef = etd_coefficients(h * kappa * self.kmat)
            if len(self._etd_cache) > 8:
                self._etd_cache.clear()
            self._etd_cache[key] = coef
        return coef


def _breakpoints(observers, cfg, dt_min):
    pts = {cfg.t_end}
    for obs in observers:
        ts = _timescale(obs)
        if ts is None:
            continue
        for p in (ts.T - dt_min, ts.cap_time, ts.T):
            if 0 < p < cfg.t_end:
                pts.add(p)
    for p in cfg.sample_times:
        if 0 < p < cfg.t_end:
            pts.add(float(p))
    return sorted(pts)


def _base_step(t, cfg, Ts, dt_min):
    h = cfg.dt_base
    if cfg.singularity_shrink:
        for T in Ts:
            if T - SHRINK_WINDOW * cfg.dt_base < t < T:
                h = min(h, max(dt_min, cfg.dt_base * (T - t) / T))
    return h


def estimate_steps(cfg: SimConfig, Ts: Sequence[float]) -> int:
    """Rough number of accepted steps for the default record stride."""
    dt_min = cfg.resolved_dt_min(Ts)
    steps = cfg.t_end / cfg.dt_base
    if cfg.singularity_shrink:
        for T in Ts:
            if T >= cfg.t_end:
                continue
            floor_gap = dt_min * T / cfg.dt_base
            window = SHRINK_WINDOW * cfg.dt_base
            if window > floor_gap:
                steps += (T / cfg.dt_base) * math.log(window / floor_gap)
            steps += min(floor_gap, window) / dt_min
    return int(steps) + 1


def simulate_many(sys: TriangularSystem, observers: Sequence, x0, xhat0s: Sequence,
                  cfg: SimConfig, names: Sequence[str] | None = None) -> list[Trajectory]:
    """Simulate one plant and several observers fed by the same output."""
    n = sys.n
    observers = list(observers)
    if len(xhat0s) != len(observers):
        raise ValueError("one initial estimate per observer is required")
    for obs in observers:
        obs.check(sys)
    x0 = check_state(sys, x0)
    blocks = []
    offset = n
    init = [x0]
    for obs, xh0 in zip(observers, xhat0s):
        b = _Block(obs, sys, offset)
        init.append(check_state(sys, xh0, b.k))
        blocks.append(b)
        offset += b.k
    s = np.concatenate(init)
    names = list(names) if names is not None else [o.variant for o in observers]

    Ts = sorted({_timescale(o).T for o in observers if _timescale(o) is not None})
    dt_min = cfg.resolved_dt_min(Ts)
    stride = cfg.record_stride or max(1, math.ceil(estimate_steps(cfg, Ts) / MAX_ROWS))
    forced = _breakpoints(observers, cfg, dt_min)
    rng = np.random.default_rng(cfg.seed)
    noise = [0.0]

    # Observer blocks are carried as xi = xhat - y e1 (y the measured output).
    # This is an affine change of variables, so RK4 results are unchanged in
    # exact arithmetic, but the output error -xi_1 is then never formed as a
    # difference of O(1) numbers; near T it gets multiplied by gains ~1e30.
    def f(t, z):
        vals = z.tolist()
        x = vals[:n]
        u = sys.u(t)
        out = plant_rhs_u(sys, x, u, sys.d(t))
        y = x[0] + noise[0]
        ydot = out[0]
        for b in blocks:
            xi = vals[b.sl]
            xhat = [xi[0] + y] + xi[1:]
            dxi = b.obs.rhs_innov(sys, xhat, -xi[0], t, u)
            dxi[0] -= ydot
            out += dxi
        return np.array(out)

    def to_xi(z, y):
        z = z.copy()
        for b in blocks:
            z[b.sl.start] -= y
        return z

    rec_t, rec_s, rec_d, rec_v = [], [], [], []

    def record(t, z):
        # z holds xi for the observer blocks
        rec_t.append(t)
        rec_s.append(z.copy())
        rec_d.append(sys.d(t))
        rec_v.append(noise[0])

    def advance(t, z, h):
        """Advance by h, as 2^k equal substeps if the gains require it."""
        hs = h
        for b in blocks:
            if b.frozen_on(t, t + h):
                continue
            # gains grow with t, so the end of the step is the stiffest point
            while hs * b.spectral_radius(t + h) > RK4_STABILITY:
                hs *= 0.5
                if h / hs > MAX_SUBSTEPS:
                    raise IntegrationError(
                        f"step {h!r} needs more than {MAX_SUBSTEPS} stability substeps "
                        "(enable singularity_shrink or reduce dt_base)", t, z)
        n_sub = int(round(h / hs))
        for j in range(n_sub):
            tt = t + j * hs
            exp_blocks = [
                b for b in blocks
                if b.frozen_on(tt, tt + hs) and hs * b.spectral_radius(tt) > RK4_STABILITY
            ]
            try:
                if exp_blocks:
                    z_new = _exp_step(tt, z, hs, exp_blocks)
                else:
                    z_new = rk4_step(f, z, tt, hs)
            except DomainError as exc:
                raise IntegrationError(f"model evaluation failed: {exc}", tt, z) from None
            if not np.all(np.isfinite(z_new)):
                raise IntegrationError("state became non-finite", tt, z)
            z = z_new
        return z

    def _exp_step(t, z, h, exp_blocks):
        # stiff blocks: w = Gamma xi, linear part kappa (A - LC) w
        gams = {}
        coefs = []
        u = z.copy()
        for b in exp_blocks:
            kap = _kappa(b.obs, t)
            gam = kap ** -b.powers
            gams[id(b)] = gam
            u[b.sl] = gam * z[b.sl]
            coefs.append((b.sl, b.etd(h, kap)))

        def N(tt, uu):
            z_xi = uu.copy()
            for b in exp_blocks:
                z_xi[b.sl] = uu[b.sl] / gams[id(b)]
            vals = z_xi.tolist()
            x = vals[:n]
            y = x[0] + noise[0]
            u_sig = sys.u(tt)
            dx = plant_rhs_u(sys, x, u_sig, sys.d(tt))
            out = np.empty(len(vals))
            out[:n] = dx
            for b in blocks:
                xi = vals[b.sl]
                xhat = [xi[0] + y] + xi[1:]
                if id(b) in gams:
                    terms = np.asarray(b.obs.model_terms(sys, xhat, u_sig))
                    terms[0] -= dx[0]
                    out[b.sl] = gams[id(b)] * terms
                else:
                    dxi = b.obs.rhs_innov(sys, xhat, -xi[0], tt, u_sig)
                    dxi[0] -= dx[0]
                    out[b.sl] = dxi
            return out

        u_new = etdrk4_step(N, u, t, h, coefs)
        for b in exp_blocks:
            u_new[b.sl] = u_new[b.sl] / gams[id(b)]
        return u_new

    t = 0.0
    s = to_xi(s, s[0] + noise[0])
    record(t, s)
    step = 0
    fi = 0
    while t < cfg.t_end:
        while fi < len(forced) and forced[fi] <= t:
            fi += 1
        h = _base_step(t, cfg, Ts, dt_min)
        t_next = t + h
        hit = False
        if fi < len(forced) and t_next >= forced[fi] - 1e-3 * h:
            t_next = forced[fi]
            h = t_next - t
            hit = True
        if cfg.noise_std > 0:
            new_noise = float(rng.normal(0.0, cfg.noise_std))
            # keep xhat continuous when the output sample changes
            s = to_xi(s, new_noise - noise[0])
            noise[0] = new_noise
        s = advance(t, s, h)
        t = t_next
        step += 1
        if hit or step % stride == 0 or t >= cfg.t_end:
            record(t, s)

    times = np.array(rec_t)
    S = np.array(rec_s)
    dvals = np.array(rec_d)
    X = S[:, :n]
    v = np.array(rec_v)
    out = []
    sys_id = sys.fingerprint()
    for b, name in zip(blocks, names):
        xi = S[:, b.sl]
        xh = xi.copy()
        xh[:, 0] += X[:, 0] + v
        e = X - xh[:, :n]
        e[:, 0] = -xi[:, 0] - v
        err = np.linalg.norm(e, axis=1)
        ts = _timescale(b.obs)
        mu = np.array([ts.mu(tt) for tt in times]) if ts is not None else np.full(len(times), np.nan)
        dhat = xh[:, n].copy() if isinstance(b.obs, ExtendedPtObserver) else None
        out.append(Trajectory(times, X, xh, err, mu, dvals, dhat, name, b.obs.variant, sys_id))
    return out


def simulate(sys: TriangularSystem, obs, x0, xhat0, cfg: SimConfig) -> Trajectory:
    """Simulate the plant with a single observer."""
    return simulate_many(sys, [obs], x0, [xhat0], cfg)[0]
