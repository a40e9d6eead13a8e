"""Seeded Monte Carlo estimation of tail probabilities, compared with the bounds.

Random streams
--------------
Replicate ``i`` of an experiment with seed ``S`` draws everything from
``numpy.random.SeedSequence(S, spawn_key=(i,))``.  Streams are therefore
independent of how replicates are grouped or scheduled, and the reduction is
an integer count, so serial and threaded runs agree bit for bit.

Three chains are available:

* ``finite``: a ``FiniteKernel`` started from its stationary law;
* ``doeblin``: hold with probability ``lam``, otherwise redraw from a base
  sampler (``uniform`` on [0, 1] or ``standard_normal``);
* ``ar1``: ``X_{j+1} = rho X_j + sqrt(1 - rho^2) xi_j`` started from N(0, 1).
  Its L2 norm on mean-zero functions is ``|rho|``, a standard fact about
  Gaussian AR(1) chains (Hermite eigenfunctions) that is used as lambda.
"""

import csv
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from . import bounds, spectral
from .errors import ValidationError

BLOCK = 2048
CI_LEVEL = 0.99
CSV_COLUMNS = ("chain", "f_spec", "n", "eps", "mu", "lambda", "R", "seed", "p_hat",
               "ci_low", "ci_high", "bound_sharp", "bound_loose", "violation")


@dataclass(frozen=True)
class BaseSampler:
    """Stationary law for the Doeblin chain; ``density``/``support`` enable exact means."""

    draw: object
    density: object = None
    support: tuple = (-math.inf, math.inf)


SAMPLERS = {
    "uniform": BaseSampler(lambda rng, size: rng.random(size), lambda x: 1.0, (0.0, 1.0)),
    "standard_normal": BaseSampler(lambda rng, size: rng.standard_normal(size),
                                   stats.norm.pdf),
}


def register_sampler(name, draw, density=None, support=(-math.inf, math.inf)):
    """Add a base sampler.  Without a density its mean must be estimated."""
    SAMPLERS[name] = BaseSampler(draw, density, tuple(support))


@dataclass(frozen=True)
class FSpec:
    """``vector`` (finite chains), ``indicator_positive`` or ``affine_clamp(a, b)``."""

    kind: str = "vector"
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if self.kind not in ("vector", "indicator_positive", "affine_clamp"):
            raise ValidationError(f"unknown f_spec {self.kind!r}")

    def __call__(self, x):
        if self.kind == "indicator_positive":
            return (np.asarray(x) > 0).astype(float)
        if self.kind == "affine_clamp":
            return np.clip(self.a + self.b * np.asarray(x), 0.0, 1.0)
        raise ValidationError("f_spec 'vector' only applies to finite chains")

    def breakpoints(self):
        if self.kind == "indicator_positive":
            return [0.0]
        if self.b == 0:
            return []
        return sorted([-self.a / self.b, (1.0 - self.a) / self.b])

    @property
    def label(self):
        if self.kind == "affine_clamp":
            return f"affine_clamp({self.a!r},{self.b!r})"
        return self.kind


@dataclass(frozen=True, eq=False)
class ChainConfig:
    kind: str
    lam: float = 0.0
    rho: float = 0.0
    sampler: str = "uniform"
    kernel: spectral.FiniteKernel = None

    def __post_init__(self):
        if self.kind == "finite":
            if self.kernel is None:
                raise ValidationError("finite chain needs a kernel")
        elif self.kind == "doeblin":
            if not 0.0 <= self.lam < 1.0:
                raise ValidationError(f"doeblin lambda must lie in [0, 1), got {self.lam}")
            if self.sampler not in SAMPLERS:
                raise ValidationError(f"unknown sampler id {self.sampler!r}")
        elif self.kind == "ar1":
            if not -1.0 < self.rho < 1.0:
                raise ValidationError(f"ar1 rho must lie in (-1, 1), got {self.rho}")
        else:
            raise ValidationError(f"unknown chain kind {self.kind!r}")

    @property
    def label(self):
        if self.kind == "finite":
            return f"finite({self.kernel.name or self.kernel.n_states})"
        if self.kind == "doeblin":
            return f"doeblin({self.lam!r},{self.sampler})"
        return f"ar1({self.rho!r})"


@dataclass(frozen=True, eq=False)
class TailExperiment:
    chain: ChainConfig
    f_spec: FSpec
    n: int
    epsilon: float
    replicates: int
    seed: int
    estimate_mu: bool = False

    def __post_init__(self):
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        bounds._check_n(self.n)
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be > 0")
        if (self.chain.kind == "finite") != (self.f_spec.kind == "vector"):
            raise ValidationError("f_spec 'vector' goes with finite chains and only those")


@dataclass(frozen=True)
class TailResult:
    chain: str
    f_spec: str
    n: int
    eps: float
    mu: float
    lam: float
    R: int
    seed: int
    hits: int
    p_hat: float
    ci_low: float
    ci_high: float
    bound_sharp: float
    bound_loose: float
    violation: bool
    notes: tuple = field(default_factory=tuple)

    def csv_row(self):
        return {"chain": self.chain, "f_spec": self.f_spec, "n": self.n,
                "eps": repr(self.eps), "mu": repr(self.mu), "lambda": repr(self.lam),
                "R": self.R, "seed": self.seed, "p_hat": repr(self.p_hat),
                "ci_low": repr(self.ci_low), "ci_high": repr(self.ci_high),
                "bound_sharp": repr(self.bound_sharp),
                "bound_loose": repr(self.bound_loose), "violation": str(self.violation)}


def replicate_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def _categorical(cum, u):
    # number of cumulative weights <= u, i.e. the sampled category
    return (cum <= u[:, None]).sum(axis=1)


def _cumulative(rows):
    cum = np.cumsum(rows, axis=-1)
    cum[..., -1] = 1.0
    return cum


def _finite_paths(kernel, pi, U):
    cum_pi = _cumulative(pi)
    cum_P = _cumulative(kernel.P)
    X = np.empty(U.shape, dtype=int)
    X[:, 0] = _categorical(cum_pi[None, :], U[:, 0])
    for j in range(1, U.shape[1]):
        X[:, j] = (cum_P[X[:, j - 1]] <= U[:, j, None]).sum(axis=1)
    return X


def _doeblin_paths(lam, U, fresh):
    n = U.shape[1]
    pos = np.where(U < 1.0 - lam, np.arange(n)[None, :], 0)
    pos[:, 0] = 0
    last = np.maximum.accumulate(pos, axis=1)
    return np.take_along_axis(fresh, last, axis=1)


def _ar1_paths(rho, Z):
    X = np.empty_like(Z)
    X[:, 0] = Z[:, 0]
    scale = math.sqrt(1.0 - rho * rho)
    for j in range(1, Z.shape[1]):
        X[:, j] = rho * X[:, j - 1] + scale * Z[:, j]
    return X


def _block_paths(chain, n, seed, indices, pi=None):
    rngs = [replicate_rng(seed, i) for i in indices]
    if chain.kind == "finite":
        pi = spectral.stationary(chain.kernel) if pi is None else pi
        U = np.array([rng.random(n) for rng in rngs]).reshape(len(rngs), n)
        return _finite_paths(chain.kernel, pi, U)
    if chain.kind == "doeblin":
        draw = SAMPLERS[chain.sampler].draw
        U = np.empty((len(rngs), n))
        fresh = np.empty((len(rngs), n))
        for r, rng in enumerate(rngs):
            U[r] = rng.random(n)
            fresh[r] = draw(rng, n)
        return _doeblin_paths(chain.lam, U, fresh)
    Z = np.array([rng.standard_normal(n) for rng in rngs]).reshape(len(rngs), n)
    return _ar1_paths(chain.rho, Z)


def sample_path(chain, n, seed, replicate_index):
    """Path of length n for one replicate; identical inputs give identical paths."""
    n = bounds._check_n(n)
    return _block_paths(chain, n, seed, [replicate_index])[0]


def _law_mean(sampler, f_spec):
    lo, hi = sampler.support
    cuts = [lo] + [x for x in f_spec.breakpoints() if lo < x < hi] + [hi]
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        val, _ = integrate.quad(lambda x: float(f_spec(x)) * sampler.density(x), a, b,
                                epsabs=1e-14, epsrel=1e-13, limit=200)
        total += val
    return total


def exact_mean(chain, f_spec):
    """Stationary mean of f, or ``None`` when it has no closed form here."""
    if chain.kind == "finite":
        return float(spectral.stationary(chain.kernel) @ chain.kernel.f)
    if chain.kind == "ar1":
        sampler = SAMPLERS["standard_normal"]
    else:
        sampler = SAMPLERS[chain.sampler]
    if f_spec.kind == "indicator_positive" and sampler is SAMPLERS["standard_normal"]:
        return 0.5
    if sampler.density is None:
        return None
    return _law_mean(sampler, f_spec)


def chain_lambda(chain):
    if chain.kind == "finite":
        kernel = chain.kernel
        return spectral.spectral_norm_gap(kernel, spectral.stationary(kernel))
    if chain.kind == "doeblin":
        return float(chain.lam)
    return abs(float(chain.rho))


def _estimate_mean(exp):
    # separate stream: spawn key beyond every replicate index
    rng = np.random.default_rng(np.random.SeedSequence(int(exp.seed),
                                                       spawn_key=(exp.replicates, 1)))
    x = exp.f_spec(SAMPLERS[exp.chain.sampler].draw(rng, exp.replicates))
    mean = float(x.mean())
    half = stats.norm.ppf(0.5 + CI_LEVEL / 2) * float(x.std(ddof=1)) / math.sqrt(x.size)
    return mean, (mean - half, mean + half)


def _count_hits(exp, mu, indices, pi):
    paths = _block_paths(exp.chain, exp.n, exp.seed, indices, pi)
    values = exp.chain.kernel.f[paths] if exp.chain.kind == "finite" else exp.f_spec(paths)
    sums = values.sum(axis=1)
    # ties with the threshold count as hits (closed inequality) despite float rounding
    threshold = exp.n * (mu + exp.epsilon) - 1e-9 * exp.n
    return int(np.count_nonzero(sums >= threshold))


def clopper_pearson(hits, trials, level=CI_LEVEL):
    ci = stats.binomtest(int(hits), int(trials)).proportion_ci(level, method="exact")
    return float(ci.low), float(ci.high)


def run_tail_experiment(exp, workers=1):
    """Estimate ``P(S_n >= n (mu + eps))`` and compare it with both bounds.

    ``violation`` is set when the lower end of the 99% Clopper-Pearson
    interval lies above the sharp bound.
    """
    notes = []
    mu = exact_mean(exp.chain, exp.f_spec)
    if mu is None:
        if not exp.estimate_mu:
            raise ValidationError(
                f"stationary mean of {exp.f_spec.label} under sampler "
                f"{exp.chain.sampler!r} is not computable; set estimate_mu"
            )
        mu, mu_ci = _estimate_mean(exp)
        notes.append(f"mu estimated, {CI_LEVEL:.0%} CI {mu_ci}")
        warnings.warn("stationary mean estimated by simulation", stacklevel=2)
    if exp.chain.kind == "ar1":
        notes.append("lambda=|rho| is the AR(1) L2 norm on mean-zero functions (external fact)")
    lam = chain_lambda(exp.chain)
    params = bounds.ChainParams(mu, lam)
    if exp.epsilon > params.mu_bar:
        raise ValidationError(f"epsilon = {exp.epsilon} exceeds 1 - mu = {params.mu_bar}")
    log_sharp = bounds.sharp_log_bound(params, exp.epsilon, exp.n, fallback=True)
    log_loose = bounds.loose_log_bound(params, exp.epsilon, exp.n)

    pi = spectral.stationary(exp.chain.kernel) if exp.chain.kind == "finite" else None
    blocks = [range(s, min(s + BLOCK, exp.replicates))
              for s in range(0, exp.replicates, BLOCK)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(lambda b: _count_hits(exp, mu, b, pi), blocks))
    else:
        hits = sum(_count_hits(exp, mu, b, pi) for b in blocks)

    low, high = clopper_pearson(hits, exp.replicates)
    sharp = math.exp(log_sharp)
    return TailResult(exp.chain.label, exp.f_spec.label, exp.n, float(exp.epsilon), mu, lam,
                      exp.replicates, int(exp.seed), hits, hits / exp.replicates, low, high,
                      sharp, math.exp(log_loose), low > sharp, tuple(notes))


def append_csv(result, path):
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        if new:
            writer.writeheader()
        writer.writerow(result.csv_row())


def experiment_from_dict(data):
    """Build a ``TailExperiment`` from the JSON experiment-config layout."""
    c = data["chain"]
    kind = c.get("kind")
    if kind == "finite":
        if "file" in c:
            kernel = spectral.load_chain(c["file"])
        else:
            kernel = spectral.chain_from_dict(c)
        chain = ChainConfig("finite", kernel=kernel)
    elif kind == "doeblin":
        chain = ChainConfig("doeblin", lam=float(c["lambda"]), sampler=c.get("sampler", "uniform"))
    elif kind == "ar1":
        chain = ChainConfig("ar1", rho=float(c["rho"]))
    else:
        raise ValidationError(f"unknown chain kind {kind!r}")
    fs = data.get("f_spec", "vector")
    f_spec = FSpec(fs) if isinstance(fs, str) else FSpec(fs["kind"], float(fs.get("a", 0.0)),
                                                         float(fs.get("b", 1.0)))
    return TailExperiment(chain, f_spec, int(data["n"]), float(data["epsilon"]),
                          int(data["replicates"]), int(data["seed"]),
                          bool(data.get("estimate_mu", False)))


def load_experiment(path):
    with open(path, encoding="utf-8") as fh:
        return experiment_from_dict(json.load(fh))


DEVIATIONS = ((0.1, 100), (0.05, 200), (0.2, 25))


def shipped_experiments(replicates=100_000, seed=20240607):
    """Finite M(0.5, 0.5), Doeblin lambda in {0, 0.5}, AR(1) rho = 0.5, three (eps, n) each."""
    two_state = spectral.FiniteKernel(bounds.two_state_matrix(bounds.ChainParams(0.5, 0.5)),
                                      [0.0, 1.0], "M(0.5,0.5)")
    rows = [
        (ChainConfig("finite", kernel=two_state), FSpec("vector")),
        (ChainConfig("doeblin", lam=0.0), FSpec("affine_clamp", 0.0, 1.0)),
        (ChainConfig("doeblin", lam=0.5), FSpec("affine_clamp", 0.0, 1.0)),
        (ChainConfig("ar1", rho=0.5), FSpec("indicator_positive")),
    ]
    return [TailExperiment(chain, f_spec, n, eps, replicates, seed)
            for chain, f_spec in rows for eps, n in DEVIATIONS]
