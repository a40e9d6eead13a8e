"""
Exact tails against the bounds
==============================

For a chain with grid-valued f the law of the partial sum is computable
exactly.  Here it is compared with both bounds as n grows.
"""

import math

import numpy as np

from markov_hoeffding import bounds, oracle, spectral

P = np.array([[0.6, 0.3, 0.1],
              [0.2, 0.6, 0.2],
              [0.1, 0.3, 0.6]])
kernel = spectral.FiniteKernel(P, [0.0, 0.5, 1.0])
pi = spectral.stationary(kernel)
mu = float(pi @ kernel.f)
lam = spectral.spectral_norm_gap(kernel, pi)
params = bounds.ChainParams(mu, lam)
eps = 0.15
print(f"mu = {mu:.4f}, lambda = {lam:.4f}")

print(f"{'n':>5} {'exact':>11} {'sharp':>11} {'loose':>11}")
for n in (10, 50, 100, 200, 400):
    s = oracle.threshold_index(n, mu + eps, 2)
    tail = oracle.exact_tail(kernel, pi, n, s, 2)
    sharp = math.exp(bounds.sharp_log_bound(params, eps, n))
    loose = math.exp(bounds.loose_log_bound(params, eps, n))
    print(f"{n:5d} {tail:11.3e} {sharp:11.3e} {loose:11.3e}")

# the randomized suites run the same comparison over many kernels
records = oracle.verify_theorem2(kernel, eps, 100, 2, pi, lam)
for rec in records:
    print(rec.check, "pass" if rec.passed else "FAIL", f"margin {rec.margin:.3e}")
