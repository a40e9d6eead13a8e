"""Exact small-instance oracles and the inequality verifiers built on them.

The sum ``S_n`` of a grid-valued ``f`` lives on the lattice ``{0, 1/k, ...}``,
so its law can be propagated exactly by a dynamic program over
``(state, sum index)``.  Moment generating functions are computed by the
transfer-matrix product with running rescaling.

Every verifier returns a list of ``CheckRecord``; one record per inequality.
"""

import hashlib
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import bounds, spectral
from .errors import AssumptionViolation, GridMismatchError, ValidationError

MAX_DP_CELLS = 10_000_000
REL_SLACK = 1e-10


@dataclass(frozen=True, eq=False)
class SumDistribution:
    """Law of ``S_n`` on ``{s / k : s = 0, ..., n k}``; ``masses[s] = P(S_n = s/k)``."""

    k: int
    masses: np.ndarray
    n: int

    @property
    def grid_step(self):
        return 1.0 / self.k

    @property
    def support(self):
        return np.arange(self.masses.size) / self.k

    def tail(self, s):
        """``P(S_n >= s / k)`` by compensated summation."""
        s = max(int(s), 0)
        return math.fsum(self.masses[s:])

    def expect(self, G):
        return math.fsum(self.masses * G(self.support))


@dataclass(frozen=True)
class ConvexTestFunction:
    """``exp_tilt``: ``x -> e^{t x}``; ``hinge``: ``x -> max(0, x - a)``."""

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in ("exp_tilt", "hinge"):
            raise ValidationError(f"unknown convex test function {self.kind!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "exp_tilt":
            return np.exp(self.param * x)
        return np.maximum(0.0, x - self.param)

    @property
    def label(self):
        return f"{self.kind}({self.param:g})"


@dataclass
class CheckRecord:
    """One verified inequality ``lhs <= rhs``; ``margin = rhs - lhs``."""

    check: str
    instance_digest: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    detail: str = ""

    def to_json(self):
        out = asdict(self)
        out["pass"] = bool(out.pop("passed"))
        if not out["detail"]:
            del out["detail"]
        return out


def instance_digest(*parts):
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, np.ndarray):
            h.update(np.ascontiguousarray(part, dtype=float).tobytes())
        else:
            h.update(repr(part).encode())
        h.update(b"|")
    return h.hexdigest()[:16]


def _kernel_digest(kernel, *extra):
    return instance_digest(kernel.P, kernel.f, *extra)


def _record(check, digest, lhs, rhs, passed=None, detail=""):
    lhs, rhs = float(lhs), float(rhs)
    if passed is None:
        passed = lhs <= rhs * (1.0 + REL_SLACK)
    return CheckRecord(check, digest, lhs, rhs, rhs - lhs, bool(passed), detail)


def grid_indices(f, k):
    """Integer indices ``k f`` for f on the grid ``{0, 1/k, ..., 1}``."""
    kf = k * np.asarray(f, dtype=float)
    idx = np.round(kf)
    if np.any(np.abs(kf - idx) > spectral.GRID_TOL):
        i = int(np.argmax(np.abs(kf - idx)))
        raise GridMismatchError(
            f"f[{i}] = {f[i]} is not on the grid 1/{k}; discretize f first"
        )
    return idx.astype(int)


def threshold_index(n, level, k):
    """Smallest index ``s`` with ``s / k >= n * level`` (snapped when on the grid)."""
    x = k * n * level
    near = round(x)
    if abs(x - near) <= spectral.GRID_TOL * max(1.0, abs(x)):
        return int(near)
    return int(math.ceil(x))


def sum_distribution(kernel, start, n, k):
    """Exact law of ``S_n`` for the chain started from ``start``.

    Raises
    ------
    GridMismatchError
        If f is not on the grid ``{i / k}``.
    """
    n = bounds._check_n(n)
    idx = grid_indices(kernel.f, k)
    N = kernel.n_states
    width = n * k + 1
    if N * width > MAX_DP_CELLS:
        raise ValidationError(f"DP needs {N * width} cells, cap is {MAX_DP_CELLS}")
    start = np.asarray(start, dtype=float)
    groups = [(c, np.flatnonzero(idx == c)) for c in np.unique(idx)]
    dist = np.zeros((N, width))
    dist[np.arange(N), idx] = start
    hi = int(idx.max()) + 1  # columns in use
    PT = np.ascontiguousarray(kernel.P.T)
    for _ in range(n - 1):
        mixed = PT @ dist[:, :hi]
        new = np.zeros_like(dist)
        for c, rows in groups:
            new[rows, c:c + hi] = mixed[rows]
        dist = new
        hi = min(hi + int(idx.max()), width)
    return SumDistribution(int(k), dist.sum(axis=0), n)


def exact_tail(kernel, pi, n, s, k):
    """``P_pi(S_n >= s / k)`` from the exact dynamic program."""
    return sum_distribution(kernel, pi, n, k).tail(s)


def log_mgf(kernel, start, t, n):
    """``log E exp(t S_n)`` with ``X_1 ~ start``, by rescaled transfer products."""
    n = bounds._check_n(n)
    e = np.exp(t * kernel.f)
    v = np.ones(kernel.n_states)
    log_scale = 0.0
    for _ in range(n):
        v = e * (kernel.P @ v)
        m = v.max()
        v /= m
        log_scale += math.log(m)
    return log_scale + math.log(float(np.asarray(start) @ v))


def exact_mgf(kernel, pi, t, n):
    """``E_pi exp(t S_n) = <1, (e^{t f} P)^n 1>`` in the pi inner product."""
    return math.exp(log_mgf(kernel, pi, t, n))


def two_state_kernel(params):
    return spectral.FiniteKernel(bounds.two_state_matrix(params), [0.0, 1.0], "two-state")


def two_state_log_mgf(params, t, n):
    """``log mu' D_t^2 (M D_t^2)^{n-1} 1`` by 2x2 powering."""
    n = bounds._check_n(n)
    M = bounds.two_state_matrix(params)
    d2 = np.array([1.0, math.exp(t)])
    v = np.ones(2)
    log_scale = 0.0
    for _ in range(n - 1):
        v = M @ (d2 * v)
        m = v.max()
        v /= m
        log_scale += math.log(m)
    stat = np.array([params.mu_bar, params.mu])
    return log_scale + math.log(float(stat @ (d2 * v)))


def two_state_mgf(params, t, n):
    return math.exp(two_state_log_mgf(params, t, n))


def two_state_sum_distribution(params, n):
    kernel = two_state_kernel(params)
    return sum_distribution(kernel, [params.mu_bar, params.mu], n, 1)


def two_state_tail(params, n, s):
    """Exact ``P_mu(Y_1 + ... + Y_n >= s)`` for the reference two-state chain."""
    return two_state_sum_distribution(params, n).tail(s)


def _gap_or_raise(kernel, pi):
    lam = spectral.spectral_norm_gap(kernel, pi)
    if lam >= 1.0 - 1e-12:
        raise AssumptionViolation(f"lambda = {lam} >= 1: kernel has no spectral gap")
    return lam


def verify_lemma_l1(kernel, t, n, pi=None):
    """``E_pi e^{t S_n} <= ||Q_t||^n`` and ``||P_t|| <= ||Q_t||`` with ``lam`` the gap of P."""
    pi = spectral.stationary(kernel) if pi is None else pi
    lam = _gap_or_raise(kernel, pi)
    Q = spectral.doeblin_kernel(pi, lam, kernel.f)
    q_norm = spectral.op_norm(spectral.tilted_operator(Q, t, "Q"), pi)
    p_norm = spectral.op_norm(spectral.tilted_operator(kernel, t, "P"), pi)
    lm = log_mgf(kernel, pi, t, n)
    digest = _kernel_digest(kernel, t, n)
    info = f"lambda={lam!r} n={n} t={t!r}"
    return [
        _record("l1.mgf", digest, math.exp(lm), q_norm**n,
                passed=lm <= n * math.log(q_norm) + math.log1p(REL_SLACK), detail=info),
        _record("l1.norm", digest, p_norm, q_norm, detail=info),
    ]


def verify_lemma_glowny(kernel, t, k, n_grid=(1, 2, 4, 8, 16, 32, 64), pi=None, lam=None):
    """Top eigenvalue of the discretized tilted Doeblin operator, two ways.

    Part (i): the root of the eigenvalue equation equals the L2(pi) norm.
    Part (ii): ``a_n = (1/n) log E_pi exp(t sum f_k(X'_i))`` approaches
    ``log r`` with non-increasing error along the doubling ladder ``n_grid``.
    """
    pi = spectral.stationary(kernel) if pi is None else pi
    lam = _gap_or_raise(kernel, pi) if lam is None else float(lam)
    profile = spectral.level_profile(kernel, pi, k)
    f_k = spectral.discretize(kernel.f, k)
    Qk = spectral.doeblin_kernel(pi, lam, f_k)
    r = spectral.solve_r(profile, lam, t)
    tilted = spectral.tilted_operator(Qk, t, "Q")
    norm = spectral.op_norm(tilted, pi)
    digest = _kernel_digest(kernel, t, k, lam)
    info = f"r={r!r} norm={norm!r}"
    out = [_record("glowny.i", digest, abs(r - norm), 1e-9, passed=abs(r - norm) <= 1e-9,
                   detail=info)]

    g = spectral.expand_to_states(profile, spectral.eigenfunction_g(profile, lam, t, r), f_k)
    resid = float(np.max(np.abs(tilted.matrix @ g - r * g)) / np.max(np.abs(g)))
    out.append(_record("glowny.eigenfunction", digest, resid, 1e-10, passed=resid <= 1e-10))

    log_r = math.log(r)
    errs = [abs(log_mgf(Qk, pi, t, m) / m - log_r) for m in n_grid]
    for m, e_prev, e_next in zip(n_grid, errs, errs[1:]):
        out.append(_record("glowny.ii", digest, e_next, e_prev,
                           passed=e_next <= e_prev + 1e-13, detail=f"n={m}"))

    mu_k = profile.mean
    if 0.0 < mu_k < 1.0:
        two = spectral.LevelProfile([1.0 - mu_k, mu_k], [0.0, 1.0], 1)
        r2 = spectral.solve_r(two, lam, t)
        th = bounds.theta(bounds.ChainParams(mu_k, lam), t)
        err = abs(r2 - th) / th
        out.append(_record("glowny.two_level", digest, err, 1e-12, passed=err <= 1e-12,
                           detail=f"r={r2!r} theta={th!r}"))
    return out


def convex_domination_check(kernel, pi, lam, n, tests, k):
    """``E_pi G(sum f(X'_i)) <= E_mu G(sum Y_i)`` for the Doeblin chain with parameter lam.

    The left side uses ``Q = doeblin_kernel(pi, lam)`` with the kernel's f on
    grid ``k``; the right side is the two-state chain at ``(pi f, lam)``.
    Only exp-tilts and hinges are tested; hinges generate the convex order
    on bounded sums, which is why they are the natural probes.
    """
    Q = spectral.doeblin_kernel(pi, lam, kernel.f)
    mu = float(np.asarray(pi) @ kernel.f)
    params = bounds.ChainParams(min(max(mu, 0.0), 1.0), lam)
    left = sum_distribution(Q, pi, n, k)
    right = two_state_sum_distribution(params, n)
    digest = _kernel_digest(kernel, lam, n, k)
    return [
        _record("mp1", digest, left.expect(G), right.expect(G), detail=f"G={G.label} n={n}")
        for G in tests
    ]


def dnu_dpi_norm(nu, pi, p):
    ratio = np.asarray(nu, dtype=float) / np.asarray(pi, dtype=float)
    if math.isinf(p):
        return float(ratio.max())
    return float(np.sum(pi * ratio**p) ** (1.0 / p))


def verify_corollary(kernel, nu, p, epsilon, n, k, pi=None):
    """Hoelder transfer ``P_nu <= ||d nu/d pi||_p P_pi^{1/q}`` and the biased bounds."""
    pi = spectral.stationary(kernel) if pi is None else pi
    lam = _gap_or_raise(kernel, pi)
    mu = float(pi @ kernel.f)
    nu = np.asarray(nu, dtype=float)
    s = threshold_index(n, mu + epsilon, k)
    p_nu = sum_distribution(kernel, nu, n, k).tail(s)
    p_pi = sum_distribution(kernel, pi, n, k).tail(s)
    norm = dnu_dpi_norm(nu, pi, p)
    bias = bounds.InitialBias(p, max(norm, 1.0))
    params = bounds.ChainParams(mu, lam)
    digest = _kernel_digest(kernel, nu, p, epsilon, n, k)
    out = [
        _record("corollary.holder", digest, p_nu, norm * p_pi ** (1.0 / bias.q)),
        _record("corollary.loose", digest, p_nu,
                math.exp(bounds.biased_bound(params, epsilon, n, bias, "loose"))),
    ]
    if 0.0 < mu < 1.0:
        out.append(_record("corollary.sharp", digest, p_nu,
                           math.exp(bounds.biased_bound(params, epsilon, n, bias, "sharp"))))
    return out


def verify_theorem2(kernel, epsilon, n, k, pi=None, lam=None):
    """Exact tail <= exp(sharp bound) <= exp(loose bound) for ``S_n >= n (mu + eps)``."""
    pi = spectral.stationary(kernel) if pi is None else pi
    lam = _gap_or_raise(kernel, pi) if lam is None else float(lam)
    mu = float(pi @ kernel.f)
    params = bounds.ChainParams(mu, lam)
    tail = exact_tail(kernel, pi, n, threshold_index(n, mu + epsilon, k), k)
    sharp = bounds.sharp_log_bound(params, epsilon, n)
    loose = bounds.loose_log_bound(params, epsilon, n)
    digest = _kernel_digest(kernel, epsilon, n, k, lam)
    log_tail = math.log(tail) if tail > 0 else -math.inf
    slack = math.log1p(REL_SLACK)
    info = f"mu={mu!r} lambda={lam!r} eps={epsilon!r} n={n}"
    return [
        _record("theorem2.tail_vs_sharp", digest, tail, math.exp(sharp),
                passed=log_tail <= sharp + slack, detail=info),
        _record("theorem2.sharp_vs_loose", digest, sharp, loose,
                passed=sharp <= loose + 1e-12 * abs(loose), detail=info),
    ]
