"""Hoeffding-type tail bounds for additive functionals of Markov chains.

All bounds concern ``P(S_n >= n (mu + eps))`` for ``S_n = f(X_1) + ... + f(X_n)``
with ``f`` taking values in ``[0, 1]``.  The only chain information used is the
pair ``(mu, lam)``: the stationary mean of ``f`` and the L2(pi) norm of
``P - Pi``.  Every bound is returned as a natural logarithm; exponentiate only
for display.

The reference chain behind the sharp bound is the two-state chain with
transition matrix ``lam * I + (1 - lam) * 1 (1 - mu, mu)``, whose tilted
Perron-Frobenius eigenvalue is ``theta``.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .errors import AssumptionViolation, DomainError, NumericalFailure, ValidationError

TAILS = ("upper", "lower", "two_sided")
FORMS = ("sharp", "loose")


def _check_real(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


def _check_n(n):
    if isinstance(n, (bool, np.bool_)) or int(n) != n or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")
    return int(n)


@dataclass(frozen=True)
class ChainParams:
    """Stationary mean ``mu`` of f and spectral-gap complement ``lam``."""

    mu: float
    lam: float

    def __post_init__(self):
        mu = _check_real("mu", self.mu)
        lam = _check_real("lambda", self.lam)
        if not 0.0 <= mu <= 1.0:
            raise ValidationError(f"mu must lie in [0, 1], got {mu}")
        if lam < 0.0:
            raise ValidationError(f"lambda must be >= 0, got {lam}")
        if lam >= 1.0:
            raise AssumptionViolation(
                f"lambda = {lam} >= 1: no spectral gap, the bounds do not apply"
            )
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "lam", lam)

    @property
    def mu_bar(self):
        return 1.0 - self.mu

    def flipped(self):
        """Parameters for ``1 - f``; the lower tail of f is the upper tail of 1 - f."""
        return ChainParams(self.mu_bar, self.lam)


@dataclass(frozen=True)
class InitialBias:
    """Start distribution nu, summarised by ``||d nu / d pi||_p``.

    ``p = inf`` is allowed.  ``q`` is the Hoelder conjugate.
    """

    p: float
    nu_norm: float = 1.0

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p) or p <= 1.0:
            raise ValidationError(f"p must be > 1 (or inf), got {self.p!r}")
        nu_norm = _check_real("nu_norm", self.nu_norm)
        if nu_norm < 1.0:
            raise ValidationError(
                f"nu_norm must be >= 1 (the density integrates to 1), got {nu_norm}"
            )
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "nu_norm", nu_norm)

    @property
    def q(self):
        if math.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)


@dataclass(frozen=True)
class BoundReport:
    log_sharp: float
    log_loose: float
    t_star: float
    theta_star: float
    delta: float
    flags: tuple = field(default_factory=tuple)


class HalfWidth(NamedTuple):
    epsilon: float
    saturated: bool


def two_state_matrix(params):
    """Transition matrix ``lam * I + (1 - lam) * 1 (mu_bar, mu)`` of the reference chain."""
    stat = np.array([params.mu_bar, params.mu])
    return params.lam * np.eye(2) + (1.0 - params.lam) * np.outer(np.ones(2), stat)


def _check_upper_eps(params, epsilon, allow_boundary=True):
    eps = _check_real("epsilon", epsilon)
    if eps <= 0.0:
        raise ValidationError(f"epsilon must be > 0, got {eps}")
    if eps > params.mu_bar or (not allow_boundary and eps == params.mu_bar):
        raise ValidationError(
            f"epsilon = {eps} exceeds 1 - mu = {params.mu_bar}: mu + epsilon must stay <= 1"
        )
    return eps


def _delta_minus_one(params, eps):
    mu, mb, lam = params.mu, params.mu_bar, params.lam
    return 4.0 * lam * (mu + eps) * (mb - eps) / (mu * mb * (1.0 - lam) ** 2)


def delta(params, epsilon):
    """The discriminant ``Delta`` entering the sharp bound.

    Raises
    ------
    DomainError
        If ``mu`` is 0 or 1, where ``Delta`` is undefined (use the loose bound).
    """
    if params.mu in (0.0, 1.0):
        raise DomainError("Delta undefined at mu in {0, 1}, use loose bound")
    eps = _check_upper_eps(params, epsilon)
    return 1.0 + _delta_minus_one(params, eps)


def log_theta(params, t):
    """Log of the Perron-Frobenius eigenvalue of ``diag(1, e^t) M``.

    ``theta`` is the larger root of ``x^2 - tr x + lam e^t``; the discriminant
    is rewritten as ``(a - e^t b)^2 + 4 e^t (1 - lam)^2 mu mu_bar`` so it never
    cancels, and for ``t > 0`` the factor ``e^t`` is pulled out before taking
    the square root.
    """
    t = _check_real("t", t)
    mu, mb, lam = params.mu, params.mu_bar, params.lam
    a = lam + (1.0 - lam) * mb
    b = lam + (1.0 - lam) * mu
    c = (1.0 - lam) ** 2 * mu * mb
    if t > 0.0:
        w = math.exp(-t)
        tr = a * w + b
        disc = (a * w - b) ** 2 + 4.0 * w * c
        return t + math.log(0.5 * (tr + math.sqrt(disc)))
    w = math.exp(t)
    tr = a + w * b
    disc = (a - w * b) ** 2 + 4.0 * w * c
    return math.log(0.5 * (tr + math.sqrt(disc)))


def theta(params, t):
    return math.exp(log_theta(params, t))


def _dlog_theta(params, t):
    # theta' / theta from implicit differentiation of the characteristic polynomial
    mu, mb, lam = params.mu, params.mu_bar, params.lam
    a = lam + (1.0 - lam) * mb
    b = lam + (1.0 - lam) * mu
    c = (1.0 - lam) ** 2 * mu * mb
    w = math.exp(-t)
    sq = math.sqrt((a * w - b) ** 2 + 4.0 * w * c)
    th = 0.5 * (a * w + b + sq)  # theta * e^{-t}
    return (b - lam * w / th) / sq


def sharp_log_bound(params, epsilon, n, fallback=False):
    """Log of the product-form bound on ``P_pi(S_n >= n (mu + eps))``.

    At ``eps = 1 - mu`` the continuous limit ``n log(mu + mu_bar lam)`` is
    returned.  For ``mu`` in ``{0, 1}`` the product form is undefined; with
    ``fallback=True`` the loose bound is returned instead of raising.
    """
    n = _check_n(n)
    if params.mu in (0.0, 1.0):
        if fallback:
            return loose_log_bound(params, epsilon, n)
        raise DomainError("sharp bound undefined at mu in {0, 1}, use loose bound")
    eps = _check_upper_eps(params, epsilon)
    mu, mb, lam = params.mu, params.mu_bar, params.lam
    if eps == mb:
        return n * math.log(mu + mb * lam)
    dm1 = _delta_minus_one(params, eps)
    root = math.sqrt(1.0 + dm1)
    s = dm1 / (root + 1.0)  # sqrt(Delta) - 1 without cancellation
    up = (mu + mb * lam) * (1.0 + root) / (s + 2.0 * (mu + eps))
    down = (mb + mu * lam) * (1.0 + root) / (s + 2.0 * (mb - eps))
    return n * ((mu + eps) * math.log(up) + (mb - eps) * math.log(down))


def loose_log_bound(params, epsilon, n):
    """``-2 (1 - lam) / (1 + lam) * eps^2 * n``; valid for every mu."""
    n = _check_n(n)
    eps = _check_real("epsilon", epsilon)
    if eps <= 0.0:
        raise ValidationError(f"epsilon must be > 0, got {eps}")
    ratio = (1.0 - params.lam) / (1.0 + params.lam)
    return -2.0 * ratio * eps**2 * n


def chernoff_log_bound(params, epsilon, n, xtol=1e-12, t_max=700.0):
    """Numerically optimised Chernoff bound ``inf_t n (log theta_t - t (mu + eps))``.

    Independent of the closed form: the tilt is found by growing a bracket
    ``[0, T]`` geometrically until the derivative changes sign, then running
    Brent's method on the derivative.

    Returns
    -------
    (log_bound, t_star)
    """
    n = _check_n(n)
    if params.mu in (0.0, 1.0):
        raise DomainError("Chernoff optimum undefined at mu in {0, 1}")
    eps = _check_upper_eps(params, epsilon, allow_boundary=False)
    target = params.mu + eps

    def slope(t):
        return _dlog_theta(params, t) - target

    lo, hi = 0.0, 1.0
    while slope(hi) <= 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > t_max:
            raise NumericalFailure("Chernoff bracket did not close", bracket=(lo, hi))
    try:
        t_star, info = optimize.brentq(
            slope, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps,
            full_output=True, disp=False,
        )
    except ValueError as exc:
        raise NumericalFailure(str(exc), bracket=(lo, hi)) from exc
    if not info.converged:
        raise NumericalFailure(f"Brent did not converge: {info.flag}", bracket=(lo, hi))
    return n * (log_theta(params, t_star) - t_star * target), t_star


def biased_bound(params, epsilon, n, bias, form="sharp"):
    """Upper-tail log bound when the chain starts from nu instead of pi.

    Hoelder gives ``P_nu <= ||d nu/d pi||_p * P_pi^(1/q)``, so the stationary
    log bound is divided by ``q`` and ``log ||d nu/d pi||_p`` is added.
    """
    if form == "loose":
        base = loose_log_bound(params, epsilon, n)
    elif form == "sharp":
        base = sharp_log_bound(params, epsilon, n)
    else:
        raise ValidationError(f"form must be one of {FORMS}, got {form!r}")
    return math.log(bias.nu_norm) + base / bias.q


def upper_tail_bound(params, epsilon, n, form="sharp", bias=None):
    if bias is not None:
        return biased_bound(params, epsilon, n, bias, form)
    if form == "sharp":
        return sharp_log_bound(params, epsilon, n)
    if form == "loose":
        return loose_log_bound(params, epsilon, n)
    raise ValidationError(f"form must be one of {FORMS}, got {form!r}")


def lower_tail_bound(params, epsilon, n, form="sharp", bias=None):
    """Log bound on ``P(S_n <= n (mu - eps))`` via ``f -> 1 - f``."""
    eps = _check_real("epsilon", epsilon)
    if eps > params.mu:
        raise ValidationError(f"lower tail needs epsilon <= mu = {params.mu}, got {eps}")
    return upper_tail_bound(params.flipped(), eps, n, form, bias)


def two_sided_bound(params, epsilon, n, form="sharp", bias=None):
    """Union bound over both tails.  A tail beyond the range of f contributes 0."""
    eps = _check_real("epsilon", epsilon)
    if eps <= 0.0:
        raise ValidationError(f"epsilon must be > 0, got {eps}")
    if eps > max(params.mu, params.mu_bar):
        raise ValidationError(f"epsilon = {eps} exceeds both tails of [0, 1]")
    parts = []
    if eps <= params.mu_bar:
        parts.append(upper_tail_bound(params, eps, n, form, bias))
    if eps <= params.mu:
        parts.append(lower_tail_bound(params, eps, n, form, bias))
    return float(np.logaddexp.reduce(parts))


def tail_log_bound(params, epsilon, n, tail="upper", form="sharp", bias=None):
    if tail == "upper":
        return upper_tail_bound(params, epsilon, n, form, bias)
    if tail == "lower":
        return lower_tail_bound(params, epsilon, n, form, bias)
    if tail == "two_sided":
        return two_sided_bound(params, epsilon, n, form, bias)
    raise ValidationError(f"tail must be one of {TAILS}, got {tail!r}")


def bound_report(params, epsilon, n, bias=None, fallback=False):
    """Sharp and loose upper-tail bounds with the optimizing tilt and Delta."""
    flags = []
    log_loose = loose_log_bound(params, epsilon, n)
    if bias is not None:
        log_loose = math.log(bias.nu_norm) + log_loose / bias.q
    if params.mu in (0.0, 1.0):
        if not fallback:
            raise DomainError("sharp bound undefined at mu in {0, 1}, use loose bound")
        return BoundReport(log_loose, log_loose, math.nan, math.nan, math.nan,
                           ("degenerate-mean",))
    eps = _check_upper_eps(params, epsilon)
    log_sharp = upper_tail_bound(params, eps, n, "sharp", bias)
    if eps == params.mu_bar:
        flags.append("boundary-limit")
        t_star, theta_star = math.inf, math.inf
    else:
        _, t_star = chernoff_log_bound(params, eps, 1)
        theta_star = theta(params, t_star)
    return BoundReport(log_sharp, log_loose, t_star, theta_star, delta(params, eps),
                       tuple(flags))


def sample_size(params, epsilon, delta, bias=None, form="sharp", tail="upper"):
    """Smallest n whose tail bound is at most ``delta``.

    The loose bound is solved analytically for a starting point, then an
    integer search over the chosen bound pins the exact minimum.
    """
    delta_ = _check_real("delta", delta)
    if not 0.0 < delta_ < 1.0:
        raise ValidationError(f"delta must lie in (0, 1), got {delta_}")
    target = math.log(delta_)

    def logb(n):
        return tail_log_bound(params, epsilon, n, tail, form, bias)

    if logb(2) >= logb(1):
        raise ValidationError("unreachable confidence: the bound does not decay with n")
    q = 1.0 if bias is None else bias.q
    log_norm = 0.0 if bias is None else math.log(bias.nu_norm)
    extra = math.log(2.0) if tail == "two_sided" else 0.0
    rate = 2.0 * (1.0 - params.lam) * float(epsilon) ** 2 / (q * (1.0 + params.lam))
    seed = max(1, math.ceil((log_norm + extra - target) / rate))

    if logb(seed) <= target:
        lo, hi = 0, seed
    else:
        lo, hi = seed, 2 * seed
        while logb(hi) > target:
            lo, hi = hi, 2 * hi
    # invariant: logb(hi) <= target, and lo == 0 or logb(lo) > target
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if logb(mid) <= target:
            hi = mid
        else:
            lo = mid
    assert logb(hi) <= target and (hi == 1 or logb(hi - 1) > target)
    return hi


def half_width(params, n, delta, form="sharp", bias=None, tail="upper", tol=1e-12):
    """Deviation ``eps`` at which the tail bound equals ``delta``, by bisection.

    Returns ``HalfWidth(eps, saturated)``; ``saturated`` is set when even the
    largest admissible deviation leaves the bound above ``delta``.
    """
    n = _check_n(n)
    delta_ = _check_real("delta", delta)
    if not 0.0 < delta_ < 1.0:
        raise ValidationError(f"delta must lie in (0, 1), got {delta_}")
    target = math.log(delta_)
    if tail == "upper":
        top = params.mu_bar
    elif tail == "lower":
        top = params.mu
    else:
        top = max(params.mu, params.mu_bar)
    if top == 0.0:
        raise ValidationError("no admissible deviation for this tail at this mu")

    def excess(eps):
        return tail_log_bound(params, eps, n, tail, form, bias) - target

    if excess(top) > 0.0:
        return HalfWidth(top, True)
    lo, hi = 0.0, top
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return HalfWidth(0.5 * (lo + hi), False)
