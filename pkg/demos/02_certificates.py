"""Gain certificates: what the design numbers promise before anything runs."""

import numpy as np

from ptobs import TimeScale, certify
from ptobs.certify import companion, gains_from_poles, lemma1_lambda
from ptobs.linalg import eigenvalues

# Gains are the coefficients of the characteristic polynomial of A - LC, so
# picking poles and expanding is the whole design step.
L = gains_from_poles([-1, -2])
print("gains for poles -1, -2:", L, "eigenvalues", eigenvalues(companion(L)))

cert = certify(L, TimeScale(0.5, 0.1), gamma_bar_f=5, sigma_bar=20)
for key, value in cert.as_items():
    print(f"  {key} = {value}")

# The certificate's lambda2 is the smallest eigenvalue of PD + DP with
# D = diag(1..n).  For P = I it is 2, and for diagonal P it is 2 min_i i p_i.
print("\nP = I:", lemma1_lambda(np.eye(2)))
print("P = diag(3, 0.5):", lemma1_lambda(np.diag([3.0, 0.5])))

# Positive definiteness of P alone is not enough.  A strongly correlated P
# makes PD + DP indefinite:
a, delta = 1.0, 0.05
P = np.array([[1.0, a], [a, a * a + delta]])
print(f"P = [[1, {a}], [{a}, {a * a + delta}]]: eig(P) = {np.linalg.eigvalsh(P)}, lambda2 = {lemma1_lambda(P):.4f}")

# So each design is checked individually.  Some stable designs pass, some fail.
rng = np.random.default_rng(0)
passed = 0
for _ in range(200):
    poles = -rng.uniform(0.1, 5, rng.integers(2, 5))
    passed += certify(gains_from_poles(poles), TimeScale(1.0, 0.1)).valid
print(f"\n{passed}/200 random stable designs have lambda2 > 0")
