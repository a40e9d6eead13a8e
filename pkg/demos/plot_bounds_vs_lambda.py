"""
How much a spectral gap costs
=============================

Compare the sharp and the loose tail bound for a fixed deviation as the
chain gets stickier, and see how many steps each needs to reach 1%.
"""

import math

from markov_hoeffding import bounds

# deviation of 0.1 above a mean of 0.5, after 200 steps
mu, eps, n = 0.5, 0.1, 200

print(f"{'lambda':>7} {'sharp':>11} {'loose':>11} {'n@1% sharp':>11} {'n@1% loose':>11}")
for lam in (0.0, 0.25, 0.5, 0.75, 0.9):
    params = bounds.ChainParams(mu, lam)
    sharp = math.exp(bounds.sharp_log_bound(params, eps, n))
    loose = math.exp(bounds.loose_log_bound(params, eps, n))
    n_sharp = bounds.sample_size(params, eps, 0.01)
    n_loose = bounds.sample_size(params, eps, 0.01, form="loose")
    print(f"{lam:7.2f} {sharp:11.3e} {loose:11.3e} {n_sharp:11d} {n_loose:11d}")

# the sharp form is the optimized Chernoff bound of the two-state chain,
# so a direct minimization over the tilt lands on the same number
params = bounds.ChainParams(mu, 0.5)
closed = bounds.sharp_log_bound(params, eps, n)
optimized, t_star = bounds.chernoff_log_bound(params, eps, n)
print(f"\nclosed form {closed:.12f}, minimized {optimized:.12f}, t* = {t_star:.6f}")

# a start from a point mass x with 1/pi(x) = 4 pays a factor 4 up front,
# so it needs a longer run before the bound says anything
bias = bounds.InitialBias(math.inf, 4.0)
for steps in (200, 1000):
    log_b = bounds.biased_bound(params, eps, steps, bias, "sharp")
    print(f"point-mass start, n={steps}: {math.exp(log_b):.4e}")

# half-width of a 95% one-sided interval after 1000 steps
print("half-width:", bounds.half_width(params, 1000, 0.05).epsilon)
