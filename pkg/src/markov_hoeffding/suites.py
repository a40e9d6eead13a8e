"""Randomized verification suites over the oracle checks.

Instance ``i`` of suite ``name`` under seed ``S`` draws all of its randomness
from ``SeedSequence([S, suite_id, i])``, so the records do not depend on how
many worker threads run the instances.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import oracle, spectral
from .errors import NumericalFailure

T_VALUES = (0.25, 0.5, 1.0, 2.0)
SUITES = ("l1", "glowny", "mp1", "corollary", "theorem2")


def random_kernel(rng, n_states, f=None):
    """Dense random kernel mixed with a random amount of laziness.

    All entries are positive, so the kernel is irreducible and its gap is
    strictly below 1.
    """
    rows = rng.dirichlet(np.full(n_states, rng.uniform(0.2, 2.0)), size=n_states)
    rows = np.maximum(rows, 1e-6)
    rows /= rows.sum(axis=1, keepdims=True)
    laziness = rng.uniform(0.0, 0.8)
    P = laziness * np.eye(n_states) + (1.0 - laziness) * rows
    P /= P.sum(axis=1, keepdims=True)
    if f is None:
        f = rng.uniform(0.0, 1.0, size=n_states)
    return spectral.FiniteKernel(P, f)


def random_grid_f(rng, n_states, k):
    """f on ``{0, 1/k, ..., 1}`` that is neither identically 0 nor identically 1."""
    while True:
        f = rng.integers(0, k + 1, size=n_states) / k
        if f.max() > 0 and f.min() < 1:
            return f


def instance_rng(seed, suite, index):
    return np.random.default_rng(np.random.SeedSequence([seed, SUITES.index(suite), index]))


def _l1(rng, index):
    N = int(rng.integers(2, 21))
    kernel = random_kernel(rng, N)
    pi = spectral.stationary(kernel)
    out = []
    for t in T_VALUES:
        for n in (1, 5, 20):
            out += oracle.verify_lemma_l1(kernel, t, n, pi)
    return out


def _glowny(rng, index):
    N = int(rng.integers(2, 51))
    k = int(rng.integers(1, 9))
    kernel = random_kernel(rng, N)
    t = T_VALUES[index % len(T_VALUES)]
    return oracle.verify_lemma_glowny(kernel, t, k)


def _mp1(rng, index):
    N = int(rng.integers(2, 9))
    k = 4
    kernel = random_kernel(rng, N, random_grid_f(rng, N, k))
    pi = spectral.stationary(kernel)
    lam = float(rng.uniform(0.0, 0.95))
    mu = float(pi @ kernel.f)
    out = []
    for n in (5, 20):
        tests = [oracle.ConvexTestFunction("exp_tilt", 0.5),
                 oracle.ConvexTestFunction("exp_tilt", 1.0),
                 oracle.ConvexTestFunction("hinge", n * mu)]
        out += oracle.convex_domination_check(kernel, pi, lam, n, tests, k)
    return out


def _corollary(rng, index):
    N = int(rng.integers(2, 11))
    k = 4
    kernel = random_kernel(rng, N, random_grid_f(rng, N, k))
    pi = spectral.stationary(kernel)
    if index % 3 == 2:
        nu = np.zeros(N)
        nu[int(rng.integers(N))] = 1.0
    else:
        nu = rng.dirichlet(np.ones(N))
    p = 2.0 if index % 2 == 0 else np.inf
    mu = float(pi @ kernel.f)
    eps = float(rng.uniform(0.05, 0.6)) * (1.0 - mu)
    return oracle.verify_corollary(kernel, nu, p, eps, 50, k, pi)


def _theorem2(rng, index):
    N = int(rng.integers(2, 11))
    k = int(rng.integers(1, 5))
    kernel = random_kernel(rng, N, random_grid_f(rng, N, k))
    pi = spectral.stationary(kernel)
    mu = float(pi @ kernel.f)
    out = []
    for n in (5, 50, 200):
        for frac in (0.15, 0.4, 0.75):
            out += oracle.verify_theorem2(kernel, frac * (1.0 - mu), n, k, pi)
    return out


_RUNNERS = {"l1": _l1, "glowny": _glowny, "mp1": _mp1,
            "corollary": _corollary, "theorem2": _theorem2}


def run_instance(suite, seed, index):
    rng = instance_rng(seed, suite, index)
    try:
        return _RUNNERS[suite](rng, index)
    except NumericalFailure as exc:
        digest = oracle.instance_digest(suite, seed, index)
        return [oracle.CheckRecord(f"{suite}.numerical_failure", digest, float("nan"),
                                   float("nan"), float("nan"), False, str(exc))]


def run_suite(suite, seed, instances, workers=1):
    """All records of ``instances`` random instances, in instance order."""
    names = SUITES if suite == "all" else (suite,)
    jobs = [(name, i) for name in names for i in range(instances)]

    def work(job):
        return run_instance(job[0], seed, job[1])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(work, jobs))
    else:
        chunks = [work(job) for job in jobs]
    return [rec for chunk in chunks for rec in chunk]
