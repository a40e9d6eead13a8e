"""
Monte Carlo check on a continuous-state chain
=============================================

A Doeblin chain on [0, 1] holds its value with probability lambda and
otherwise redraws it uniformly.  Simulated tail frequencies, with exact
binomial intervals, sit below the bound.
"""

from markov_hoeffding import simulate

for lam in (0.0, 0.5, 0.8):
    exp = simulate.TailExperiment(
        chain=simulate.ChainConfig("doeblin", lam=lam),
        f_spec=simulate.FSpec("affine_clamp", 0.0, 1.0),
        n=100, epsilon=0.05, replicates=20_000, seed=1,
    )
    res = simulate.run_tail_experiment(exp, workers=4)
    print(f"lambda={lam}: p_hat={res.p_hat:.4f} "
          f"CI=[{res.ci_low:.4f}, {res.ci_high:.4f}] bound={res.bound_sharp:.4f}")

# the AR(1) chain with indicator f uses lambda = |rho|
exp = simulate.TailExperiment(simulate.ChainConfig("ar1", rho=0.5),
                              simulate.FSpec("indicator_positive"), 200, 0.05, 20_000, 2)
res = simulate.run_tail_experiment(exp)
print(f"ar1(0.5): p_hat={res.p_hat:.4f} bound={res.bound_sharp:.4f}")
