"""
Spectral gap of a small chain
=============================

Compute the stationary law and the L2(pi) norm of P - Pi for a lazy random
walk on a cycle, and check it against the Doeblin chain with the same gap.
"""

import numpy as np

from markov_hoeffding import spectral

# lazy walk on a 6-cycle: stay with prob 1/2, step left or right otherwise
N = 6
P = 0.5 * np.eye(N)
for i in range(N):
    P[i, (i + 1) % N] += 0.25
    P[i, (i - 1) % N] += 0.25
f = np.arange(N) / (N - 1)
kernel = spectral.FiniteKernel(P, f, "lazy 6-cycle")

pi = spectral.stationary(kernel)
lam = spectral.spectral_norm_gap(kernel, pi)
print("pi      =", np.round(pi, 6))
print("lambda  =", lam)

# reversible, so the variance-bounding route gives the same number here
rho = spectral.reversible_rho(kernel, pi)
print("rho     =", rho.rho, " lambda_vb =", rho.lambda_vb)

# the tilted operator of P never beats the tilted Doeblin operator
Q = spectral.doeblin_kernel(pi, lam, f)
for t in (0.5, 1.0, 2.0):
    p_norm = spectral.op_norm(spectral.tilted_operator(kernel, t), pi)
    q_norm = spectral.op_norm(spectral.tilted_operator(Q, t, "Q"), pi)
    print(f"t={t}: ||P_t|| = {p_norm:.6f} <= ||Q_t|| = {q_norm:.6f}")

# on a grid the Doeblin norm is the root of a scalar equation
profile = spectral.level_profile(kernel, pi, 5)
print("root r  =", spectral.solve_r(profile, lam, 1.0))
