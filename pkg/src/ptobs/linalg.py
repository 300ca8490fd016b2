"""
Small dense linear algebra for the certificates (matrices up to about 8x8).

numpy is used for storage and for the one dense linear solve in the
Lyapunov routine; the eigenvalue iterations are written out here.
"""

from __future__ import annotations

import cmath
import math

import numpy as np


class LinAlgError(ArithmeticError):
    pass


class ConvergenceError(LinAlgError):
    pass


# ---------------------------------------------------------------------------
# polynomial roots
# ---------------------------------------------------------------------------


def _horner(coeffs, z):
    # value and derivative of a monic-or-not polynomial, highest degree first
    p = 0j
    dp = 0j
    for c in coeffs:
        dp = dp * z + p
        p = p * z + c
    return p, dp


def poly_roots(coeffs, tol: float = 1e-14, max_iter: int = 500) -> np.ndarray:
    """Roots of ``coeffs[0] s^k + ... + coeffs[k]`` by Aberth iteration.

    Each root is finished with a few Newton steps on the original polynomial.
    """
    c = np.asarray(coeffs, dtype=complex)
    nz = np.flatnonzero(c)
    if nz.size == 0:
        raise LinAlgError("zero polynomial has no isolated roots")
    c = c[nz[0]:]
    # trailing zeros are roots at the origin
    n_zero = 0
    while len(c) > 1 and c[-1] == 0:
        c = c[:-1]
        n_zero += 1
    c = c / c[0]
    deg = len(c) - 1
    if deg == 0:
        return np.zeros(n_zero, dtype=complex)
    coeffs = list(c)

    # start on a circle of radius given by the Fujiwara bound, off the real axis
    radius = 2.0 * max(abs(coeffs[k]) ** (1.0 / k) for k in range(1, deg + 1))
    radius = max(radius, 1e-3)
    z = [radius * cmath.exp(1j * (2 * math.pi * k / deg + 0.4)) for k in range(deg)]

    abs_coeffs = [abs(v) for v in coeffs]
    eps = np.finfo(float).eps

    def settled(zi, p):
        # |p(z)| within the rounding error of evaluating p at z
        bound = 0.0
        for a in abs_coeffs:
            bound = bound * abs(zi) + a
        return abs(p) <= 8.0 * eps * bound

    done = [False] * deg
    for _ in range(max_iter):
        biggest = 0.0
        for i in range(deg):
            if done[i]:
                continue
            p, dp = _horner(coeffs, z[i])
            if p == 0 or settled(z[i], p):
                done[i] = True
                continue
            ratio = p / dp if dp != 0 else p
            s = sum(1.0 / (z[i] - z[j]) for j in range(deg) if j != i and z[i] != z[j])
            step = ratio / (1.0 - ratio * s)
            z[i] -= step
            biggest = max(biggest, abs(step) / max(1.0, abs(z[i])))
        if all(done) or biggest < tol:
            break
    else:
        raise ConvergenceError("polynomial root iteration did not converge")

    for i in range(deg):
        # Newton polish, kept only while it reduces the residual
        p, dp = _horner(coeffs, z[i])
        for _ in range(3):
            if dp == 0 or p == 0:
                break
            cand = z[i] - p / dp
            pc, dpc = _horner(coeffs, cand)
            if abs(pc) >= abs(p):
                break
            z[i], p, dp = cand, pc, dpc

    roots = np.array(z + [0j] * n_zero)
    # snap numerically real roots onto the axis
    small = np.abs(roots.imag) <= 1e-12 * np.maximum(1.0, np.abs(roots))
    roots[small] = roots[small].real
    return roots[np.lexsort((roots.imag, roots.real))]


# ---------------------------------------------------------------------------
# general eigenvalues
# ---------------------------------------------------------------------------


def companion_coefficients(M) -> np.ndarray | None:
    """If ``M`` has the observer-error form (free first column, ones on the
    superdiagonal, zeros elsewhere) return its characteristic polynomial."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    pattern = np.eye(n, k=1)
    rest = M.copy()
    rest[:, 0] = 0.0
    if n > 1:
        pattern[:, 0] = 0.0
    if not np.array_equal(rest, pattern):
        return None
    # det(sI - M) = s^n - M[0,0] s^(n-1) - ... - M[n-1,0]
    return np.concatenate(([1.0], -M[:, 0]))


def _hessenberg(H):
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] != 0:
            alpha *= x[0] / abs(x[0])
        v = x
        v[0] += alpha
        v /= np.linalg.norm(v)
        H[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, k:])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
    return H


def qr_eigenvalues(M, max_iter: int = 10000) -> np.ndarray:
    """Eigenvalues by Hessenberg reduction and Wilkinson-shifted complex QR sweeps."""
    H = _hessenberg(np.array(M, dtype=complex))
    n = H.shape[0]
    eig = np.zeros(n, dtype=complex)
    hi = n - 1
    it = 0
    since_deflation = 0
    scale = max(np.abs(H).max(), 1e-300)
    while hi >= 0:
        if hi == 0:
            eig[0] = H[0, 0]
            break
        # deflate on negligible subdiagonal entries
        lo = hi
        while lo > 0:
            off = abs(H[lo, lo - 1])
            if off <= 1e-15 * (abs(H[lo, lo]) + abs(H[lo - 1, lo - 1])) or off < 1e-300 * scale:
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eig[hi] = H[hi, hi]
            hi -= 1
            since_deflation = 0
            continue
        it += 1
        since_deflation += 1
        if it > max_iter:
            raise ConvergenceError("QR iteration did not converge")

        a, b = H[hi - 1, hi - 1], H[hi - 1, hi]
        c, d = H[hi, hi - 1], H[hi, hi]
        tr = a + d
        disc = cmath.sqrt((a - d) ** 2 / 4 + b * c)
        m1, m2 = tr / 2 + disc, tr / 2 - disc
        shift = m1 if abs(m1 - d) < abs(m2 - d) else m2
        if since_deflation % 11 == 10:
            # exceptional shift to break cycles
            shift = d + 0.75 * abs(H[hi, hi - 1]) * (1 + 1j)

        # one QR step on the active block via Givens rotations
        blk = slice(lo, hi + 1)
        A = H[blk, blk]
        k = A.shape[0]
        A -= shift * np.eye(k)
        rots = []
        for j in range(k - 1):
            x, y = A[j, j], A[j + 1, j]
            r = math.hypot(abs(x), abs(y))
            if r == 0.0:
                cs, sn = 1.0, 0j
            else:
                cs, sn = x / r, y / r
            G = np.array([[cs.conjugate(), sn.conjugate()], [-sn, cs]])
            A[j:j + 2, j:] = G @ A[j:j + 2, j:]
            rots.append(G)
        for j, G in enumerate(rots):
            A[:j + 2, j:j + 2] = A[:j + 2, j:j + 2] @ G.conj().T
        A += shift * np.eye(k)
        H[blk, blk] = A
    return eig


def eigenvalues(M) -> np.ndarray:
    """Eigenvalues of a small dense matrix, sorted by real then imaginary part.

    Observer-error (companion-form) matrices go through their characteristic
    polynomial; anything else through QR iteration.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise LinAlgError(f"square matrix required, got shape {M.shape}")
    coeffs = companion_coefficients(M)
    if coeffs is not None:
        return poly_roots(coeffs)
    ev = qr_eigenvalues(M)
    small = np.abs(ev.imag) <= 1e-12 * np.maximum(1.0, np.abs(ev))
    ev[small] = ev[small].real
    return ev[np.lexsort((ev.imag, ev.real))]


def is_hurwitz(M, margin: float = 1e-12) -> bool:
    return bool(np.max(eigenvalues(M).real) < -margin)


# ---------------------------------------------------------------------------
# symmetric eigenvalues
# ---------------------------------------------------------------------------


def jacobi_eigh(S, tol: float = 1e-14, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, V)`` with ascending eigenvalues ``w`` and orthonormal
    columns ``V``.
    """
    A = np.array(S, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise LinAlgError("square matrix required")
    if not np.allclose(A, A.T, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(A).max(initial=0.0))):
        raise LinAlgError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    norm = np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * norm or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-18 * norm:
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise ConvergenceError("Jacobi iteration did not converge")
    w = np.diag(A).copy()
    order = np.argsort(w)
    return w[order], V[:, order]


def symmetric_eigenvalues(S) -> np.ndarray:
    return jacobi_eigh(S)[0]


# ---------------------------------------------------------------------------
# Lyapunov equation
# ---------------------------------------------------------------------------


def solve_lyapunov(M, Q=None) -> np.ndarray:
    """Solve ``M^T P + P M = -Q`` for symmetric ``P`` (``Q`` defaults to I).

    Uses the Kronecker form ``(I (x) M^T + M^T (x) I) vec(P) = -vec(Q)``.
    ``M`` must be Hurwitz, which makes the system nonsingular and ``P``
    positive definite.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    Q = np.eye(n) if Q is None else np.asarray(Q, dtype=float)
    if Q.shape != (n, n):
        raise LinAlgError("Q must match the shape of M")
    if not is_hurwitz(M):
        raise LinAlgError("M is not Hurwitz; the Lyapunov equation has no positive definite solution")
    if symmetric_eigenvalues(Q)[0] <= 0:
        raise LinAlgError("Q must be symmetric positive definite")
    eye = np.eye(n)
    K = np.kron(eye, M.T) + np.kron(M.T, eye)
    try:
        vec = np.linalg.solve(K, -Q.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise LinAlgError(f"singular Lyapunov system: {exc}") from None
    P = vec.reshape((n, n), order="F")
    return 0.5 * (P + P.T)


def lyapunov_residual(M, P, Q) -> float:
    M, P, Q = (np.asarray(a, dtype=float) for a in (M, P, Q))
    return float(np.linalg.norm(M.T @ P + P @ M + Q))
