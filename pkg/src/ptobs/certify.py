"""
Static certificates for prescribed-time observer designs, and checks of the
convergence bounds against simulated trajectories.

The certificate for a gain vector L collects:

* the eigenvalues of A - LC and whether it is Hurwitz,
* the Lyapunov matrix P solving (A-LC)^T P + P(A-LC) = -Q,
* lambda1 = lambda_min(Q) and lambda2 = lambda_min(PD + DP),
* the growth constant a = 2 gamma_f lambda_max(P) and the disturbance
  constant b = 2 sigma lambda_max(P), from user-supplied bounds gamma_f
  and sigma,
* t1*, the first time at which lambda1/4 mu^(1+m) >= a,
* the radius 2b / (lambda1 mu^((n+1)(1+m))) of the shrinking ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    LinAlgError,
    eigenvalues,
    is_hurwitz,
    jacobi_eigh,
    lyapunov_residual,
    poly_roots,
    solve_lyapunov,
)
from .timescale import TimeScale

HURWITZ_MARGIN = 1e-12


class CertificateError(ValueError):
    pass


@dataclass(frozen=True)
class CanonicalMatrices:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray


def canonical_matrices(n: int) -> CanonicalMatrices:
    """Chain-of-integrators matrices A (shift), B (last unit), C (first unit), D = diag(1..n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    C = np.zeros((1, n))
    C[0, 0] = 1.0
    return CanonicalMatrices(np.eye(n, k=1), B, C, np.diag(np.arange(1.0, n + 1)))


def companion(L, n: int | None = None) -> np.ndarray:
    """A - LC: first column -L, ones on the superdiagonal."""
    L = np.asarray(L, dtype=float).ravel()
    n = len(L) if n is None else n
    if len(L) != n:
        raise ValueError(f"gain vector has length {len(L)}, expected {n}")
    M = np.eye(n, k=1)
    M[:, 0] -= L
    return M


def gains_from_poles(poles) -> np.ndarray:
    """Gain vector L placing the eigenvalues of A - LC at ``poles``.

    The characteristic polynomial of A - LC is s^n + L1 s^(n-1) + ... + Ln,
    so L is the coefficient list of prod(s - p_i).
    """
    coeffs = np.poly(np.asarray(poles))
    if np.max(np.abs(coeffs.imag)) > 1e-9 * np.max(np.abs(coeffs)):
        raise ValueError("complex poles must come in conjugate pairs")
    return coeffs.real[1:]


def lemma1_lambda(P, n: int | None = None) -> float:
    """Smallest eigenvalue of PD + DP with D = diag(1..n); positive for SPD P."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0] if n is None else n
    if P.shape != (n, n):
        raise CertificateError(f"P must be {n}x{n}")
    try:
        w = jacobi_eigh(P)[0]
    except LinAlgError as exc:
        raise CertificateError(f"P is not symmetric: {exc}") from None
    if w[0] <= 0:
        raise CertificateError("P is not positive definite")
    D = np.diag(np.arange(1.0, n + 1))
    return float(jacobi_eigh(P @ D + D @ P)[0][0])


def first_time_gain_exceeds(lambda1: float, a: float, ts: TimeScale) -> float:
    """Smallest t >= 0 with (lambda1/4) mu(t)^(1+m) >= a."""
    if a <= 0 or lambda1 / 4.0 >= a:
        return 0.0
    ratio = lambda1 / (4.0 * a)
    return ts.T * (1.0 - ratio ** (1.0 / (1.0 + ts.m)))


def proof_constants(P, lambda1: float, gamma_bar_f: float, sigma_bar: float, ts: TimeScale):
    """Return ``(a, b, t1_star)`` for the given bounds."""
    if not lambda1 > 0:
        raise CertificateError("lambda1 must be positive")
    if gamma_bar_f < 0 or sigma_bar < 0:
        raise CertificateError("gamma_bar_f and sigma_bar must be non-negative")
    lmax = float(jacobi_eigh(P)[0][-1])
    a = 2.0 * gamma_bar_f * lmax
    b = 2.0 * sigma_bar * lmax
    return a, b, first_time_gain_exceeds(lambda1, a, ts)


@dataclass(frozen=True)
class Certificate:
    L: np.ndarray
    ts: TimeScale
    eigvals: np.ndarray
    hurwitz: bool
    P: np.ndarray | None = None
    Q: np.ndarray | None = None
    lambda1: float = math.nan
    lambda2: float = math.nan
    lambda_min_P: float = math.nan
    lambda_max_P: float = math.nan
    gamma_bar_f: float = math.nan
    sigma_bar: float = math.nan
    a: float = math.nan
    b: float = math.nan
    t1_star: float = math.nan
    residual: float = math.nan
    notes: tuple = field(default=())

    @property
    def n(self) -> int:
        return len(self.L)

    @property
    def valid(self) -> bool:
        return bool(self.hurwitz and self.lambda_min_P > 0 and self.lambda2 > 0)

    def ball_radius(self, t):
        """2b / (lambda1 mu^((n+1)(1+m))), vectorised over ``t``."""
        t = np.asarray(t, dtype=float)
        mu = np.vectorize(self.ts.mu, otypes=[float])(t)
        r = 2.0 * self.b / (self.lambda1 * mu ** ((self.n + 1) * (1.0 + self.ts.m)))
        return r if r.ndim else float(r)

    def as_items(self) -> list[tuple[str, object]]:
        """Flat key/value view used in run reports."""
        items = [
            ("L", list(map(float, self.L))),
            ("T", self.ts.T),
            ("m", self.ts.m),
            ("mu_cap", self.ts.mu_cap),
            ("eigvals", [complex(v) for v in self.eigvals]),
            ("hurwitz", self.hurwitz),
            ("valid", self.valid),
        ]
        if self.P is not None:
            items += [
                ("P", self.P.tolist()),
                ("lyapunov_residual", self.residual),
                ("lambda1", self.lambda1),
                ("lambda2", self.lambda2),
                ("lambda_min_P", self.lambda_min_P),
                ("lambda_max_P", self.lambda_max_P),
                ("gamma_bar_f", self.gamma_bar_f),
                ("sigma_bar", self.sigma_bar),
                ("a", self.a),
                ("b", self.b),
                ("t1_star", self.t1_star),
                ("ball_radius_at_0", self.ball_radius(0.0)),
            ]
        items += [("note", note) for note in self.notes]
        return items


def certify(L, ts: TimeScale, gamma_bar_f: float = 0.0, sigma_bar: float = 0.0, Q=None) -> Certificate:
    """Build the certificate for gains ``L``.

    A non-Hurwitz design yields a certificate with ``hurwitz=False`` and no
    Lyapunov data rather than an exception, so it can still be reported.
    """
    L = np.asarray(L, dtype=float).ravel()
    n = len(L)
    M = companion(L)
    ev = eigenvalues(M)
    hurwitz = bool(np.max(ev.real) < -HURWITZ_MARGIN)
    if not hurwitz:
        return Certificate(
            L=L, ts=ts, eigvals=ev, hurwitz=False,
            notes=("A-LC is not Hurwitz; no Lyapunov certificate exists",),
        )
    Q = np.eye(n) if Q is None else np.asarray(Q, dtype=float)
    P = solve_lyapunov(M, Q)
    wP = jacobi_eigh(P)[0]
    lambda1 = float(jacobi_eigh(Q)[0][0])
    lambda2 = lemma1_lambda(P, n)
    a, b, t1 = proof_constants(P, lambda1, gamma_bar_f, sigma_bar, ts)
    notes = []
    if t1 >= ts.cap_time:
        notes.append("t1_star lies beyond the saturation of mu")
    return Certificate(
        L=L, ts=ts, eigvals=ev, hurwitz=True, P=P, Q=Q,
        lambda1=lambda1, lambda2=lambda2,
        lambda_min_P=float(wP[0]), lambda_max_P=float(wP[-1]),
        gamma_bar_f=float(gamma_bar_f), sigma_bar=float(sigma_bar),
        a=a, b=b, t1_star=t1,
        residual=lyapunov_residual(M, P, Q),
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# trajectory-level checks
# ---------------------------------------------------------------------------


@dataclass
class BoundReport:
    passed: bool
    n_checked: int
    t1_star: float
    first_violation: tuple | None  # (time, which bound, value, bound)
    min_margin_z: float
    min_margin_e: float
    t2_star: float | None  # first sample at/after t1* inside the ball
    inside_ball_at_start: bool
    stays_in_ball: bool | None

    def as_items(self):
        return [
            ("bounds", "PASS" if self.passed else "FAIL"),
            ("samples_checked", self.n_checked),
            ("t1_star", self.t1_star),
            ("first_violation", self.first_violation),
            ("min_margin_z_bound", self.min_margin_z),
            ("min_margin_e_bound", self.min_margin_e),
            ("t2_star", self.t2_star),
            ("inside_ball_at_start", self.inside_ball_at_start),
            ("stays_in_ball_after_t2", self.stays_in_ball),
        ]


def scaled_error(traj, ts: TimeScale, k: int):
    """Per-sample error e (length k) and its scaled form z = Gamma e."""
    e = traj.error_vectors(k)
    gam = np.array([ts.gamma_diag(t, k) for t in traj.times])
    return e, gam * e


def check_trajectory_bounds(traj, cert: Certificate, ts: TimeScale | None = None,
                            rtol: float = 1e-9) -> BoundReport:
    """Check the growth bounds on ``[0, t1*]`` and locate ball entry.

    On ``[0, t1*]`` every sample must satisfy

        |z(t)| <= sqrt(V(0)/lambda_min(P)) exp(a t / 2)
        |e(t)| <= sqrt(V(0)/lambda_min(P)) mu^(n(1+m)) exp(a t / 2)

    with z = Gamma e and V = z^T P z. ``t2_star`` is the first sample time
    in ``[t1*, T)`` (below the saturation of mu) at which |z| is smaller
    than the ball radius.
    """
    ts = cert.ts if ts is None else ts
    if (ts.T, ts.m) != (cert.ts.T, cert.ts.m):
        raise CertificateError("trajectory time scale does not match the certificate")
    if cert.P is None:
        raise CertificateError("certificate has no Lyapunov matrix (design is not Hurwitz)")
    k = cert.n
    times = traj.times
    window = times <= cert.t1_star
    if not np.any(window):
        raise CertificateError("trajectory has no samples in [0, t1_star]")
    e, z = scaled_error(traj, ts, k)
    znorm = np.linalg.norm(z, axis=1)
    enorm = np.linalg.norm(e, axis=1)

    V0 = float(z[0] @ cert.P @ z[0])
    c0 = math.sqrt(V0 / cert.lambda_min_P)
    tw = times[window]
    growth = c0 * np.exp(0.5 * cert.a * tw)
    mu_pow = np.array([ts.mu(t) ** (k * (1.0 + ts.m)) for t in tw])
    z_bound = growth
    e_bound = growth * mu_pow
    z_margin = z_bound - znorm[window]
    e_margin = e_bound - enorm[window]
    slack_z = rtol * np.maximum(z_bound, 1e-300)
    slack_e = rtol * np.maximum(e_bound, 1e-300)
    bad_z = z_margin < -slack_z
    bad_e = e_margin < -slack_e
    violation = None
    if np.any(bad_z) or np.any(bad_e):
        iz = int(np.argmax(bad_z)) if np.any(bad_z) else len(tw)
        ie = int(np.argmax(bad_e)) if np.any(bad_e) else len(tw)
        if iz <= ie:
            violation = (float(tw[iz]), "z", float(znorm[window][iz]), float(z_bound[iz]))
        else:
            violation = (float(tw[ie]), "e", float(enorm[window][ie]), float(e_bound[ie]))

    radius = cert.ball_radius(times)
    inside = znorm < radius
    below_cap = times < ts.cap_time
    candidates = np.flatnonzero((times >= cert.t1_star) & below_cap & inside)
    t2 = float(times[candidates[0]]) if candidates.size else None
    stays = None
    if candidates.size:
        after = (times >= times[candidates[0]]) & below_cap
        stays = bool(np.all(inside[after]))

    return BoundReport(
        passed=violation is None,
        n_checked=int(window.sum()),
        t1_star=cert.t1_star,
        first_violation=violation,
        min_margin_z=float(z_margin.min()),
        min_margin_e=float(e_margin.min()),
        t2_star=t2,
        inside_ball_at_start=bool(inside[0]),
        stays_in_ball=stays,
    )


__all__ = [
    "CanonicalMatrices",
    "Certificate",
    "BoundReport",
    "CertificateError",
    "canonical_matrices",
    "companion",
    "eigenvalues",
    "is_hurwitz",
    "poly_roots",
    "solve_lyapunov",
    "lemma1_lambda",
    "proof_constants",
    "first_time_gain_exceeds",
    "gains_from_poles",
    "certify",
    "check_trajectory_bounds",
    "scaled_error",
]
