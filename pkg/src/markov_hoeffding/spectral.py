"""Linear algebra on finite transition kernels.

Functions on the state space are column vectors and ``P`` acts on them from
the left, ``(P g)_i = sum_j P_ij g_j``.  All L2(pi) operator norms go through
the similarity ``D^{1/2} M D^{-1/2}`` with ``D = diag(pi)``, which turns the
pi-weighted norm into the Euclidean one.
"""

import json
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize
from scipy.sparse.csgraph import connected_components

from .errors import (
    AssumptionWarning,
    NotIrreducibleError,
    NotReversibleError,
    NumericalFailure,
    ValidationError,
)

ROW_TOL = 1e-12
GRID_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class FiniteKernel:
    """Row-stochastic matrix ``P`` together with a function ``f`` into [0, 1]."""

    P: np.ndarray
    f: np.ndarray
    name: str = ""

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
            raise ValidationError(f"P must be a non-empty square matrix, got shape {P.shape}")
        f = np.zeros(P.shape[0]) if self.f is None else np.array(self.f, dtype=float)
        if f.shape != (P.shape[0],):
            raise ValidationError(f"f must have length {P.shape[0]}, got shape {f.shape}")
        if not np.all(np.isfinite(P)):
            i, j = np.argwhere(~np.isfinite(P))[0]
            raise ValidationError(f"P[{i}][{j}] is not finite")
        if np.any(P < 0):
            i, j = np.argwhere(P < 0)[0]
            raise ValidationError(f"P[{i}][{j}] = {P[i, j]} is negative")
        rows = np.abs(P.sum(axis=1) - 1.0)
        if np.any(rows > ROW_TOL):
            i = int(np.argmax(rows))
            raise ValidationError(f"row {i} of P sums to {P[i].sum()!r}, not 1")
        bad = ~np.isfinite(f) | (f < 0) | (f > 1)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ValidationError(f"f[{i}] = {f[i]} is outside [0, 1]")
        P.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "f", f)

    @property
    def n_states(self):
        return self.P.shape[0]

    def with_f(self, f):
        return FiniteKernel(self.P, f, self.name)


@dataclass(frozen=True, eq=False)
class LevelProfile:
    """Law of f under pi on a finite set of levels.

    ``resolution`` is the grid size ``k`` or ``None`` for exact grouping.
    """

    weights: np.ndarray
    levels: np.ndarray
    resolution: int = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        v = np.array(self.levels, dtype=float)
        if w.ndim != 1 or w.shape != v.shape or w.size == 0:
            raise ValidationError("weights and levels must be equal-length non-empty vectors")
        if np.any(w < 0):
            raise ValidationError(f"weights[{int(np.argmax(w < 0))}] is negative")
        if abs(w.sum() - 1.0) > ROW_TOL:
            raise ValidationError(f"weights sum to {w.sum()!r}, not 1")
        if np.any((v < 0) | (v > 1)):
            raise ValidationError(f"levels[{int(np.argmax((v < 0) | (v > 1)))}] outside [0, 1]")
        if np.any(np.diff(v) <= 0):
            raise ValidationError(f"levels[{int(np.argmax(np.diff(v) <= 0)) + 1}] not increasing")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "levels", v)

    @property
    def mean(self):
        return float(self.weights @ self.levels)


@dataclass(frozen=True, eq=False)
class TiltedOperator:
    """``diag(e^{t f/2}) T diag(e^{t f/2})`` for a base kernel ``T`` ("P" or "Q")."""

    base: str
    t: float
    matrix: np.ndarray


class ReversibleSpectrum(NamedTuple):
    rho: float
    lambda_vb: float


def _check_pi(pi, n=None):
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or (n is not None and pi.shape[0] != n):
        raise ValidationError(f"pi must be a vector of length {n}, got shape {pi.shape}")
    if np.any(pi <= 0):
        i = int(np.argmax(pi <= 0))
        raise ValidationError(f"pi[{i}] = {pi[i]} is not positive")
    return pi


def _as_matrix(op):
    if isinstance(op, TiltedOperator):
        return op.matrix
    if isinstance(op, FiniteKernel):
        return op.P
    return np.asarray(op, dtype=float)


def stationary(kernel):
    """Stationary distribution of an irreducible kernel.

    Solves ``pi (P - I) = 0`` together with ``sum(pi) = 1`` as one
    overdetermined least-squares system.

    Raises
    ------
    NotIrreducibleError
        Listing the strongly connected components when there is more than one.
    """
    P = kernel.P
    n = P.shape[0]
    ncomp, labels = connected_components(P > 0, directed=True, connection="strong")
    if ncomp > 1:
        raise NotIrreducibleError([np.flatnonzero(labels == c) for c in range(ncomp)])
    A = np.vstack([P.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    resid = np.max(np.abs(pi @ P - pi))
    if resid > 1e-10 or np.any(pi <= 0):
        raise NumericalFailure(f"stationary solve residual {resid:.3e} exceeds 1e-10")
    return pi


def _symmetrize(M, pi):
    s = np.sqrt(pi)
    return s[:, None] * M / s[None, :]


def spectral_norm_gap(kernel, pi):
    """``lam = ||P - Pi||`` on L2(pi); the spectral gap is ``1 - lam``.

    Values ``>= 1`` are returned as is, with an ``AssumptionWarning``.
    """
    P = kernel.P
    pi = _check_pi(pi, P.shape[0])
    centered = P - np.outer(np.ones(P.shape[0]), pi)
    lam = float(np.linalg.norm(_symmetrize(centered, pi), ord=2))
    if lam >= 1.0 - 1e-12:
        warnings.warn(f"assumption-violated: lambda = {lam} >= 1", AssumptionWarning,
                      stacklevel=2)
    return lam


def reversibility_violation(kernel, pi):
    """Largest ``|pi_i P_ij - pi_j P_ji|`` and the pair attaining it."""
    flow = np.asarray(pi)[:, None] * kernel.P
    diff = np.abs(flow - flow.T)
    i, j = np.unravel_index(np.argmax(diff), diff.shape)
    return float(diff[i, j]), (int(i), int(j))


def reversible_rho(kernel, pi, tol=1e-10):
    """Top of the spectrum of ``P - Pi`` on mean-zero functions, and ``max(0, rho)``."""
    pi = _check_pi(pi, kernel.n_states)
    worst, pair = reversibility_violation(kernel, pi)
    if worst > tol:
        raise NotReversibleError(pair, worst)
    S = _symmetrize(kernel.P, pi)
    eig = np.linalg.eigvalsh(0.5 * (S + S.T))
    rho = float(eig[-2]) if eig.size > 1 else 0.0
    return ReversibleSpectrum(rho, max(0.0, rho))


def doeblin_kernel(pi, lam, f=None):
    """``Q = (1 - lam) 1 pi' + lam I``: refresh from pi with probability ``1 - lam``."""
    pi = _check_pi(pi)
    lam = float(lam)
    if not 0.0 <= lam < 1.0:
        raise ValidationError(f"lambda must lie in [0, 1), got {lam}")
    pi = pi / pi.sum()
    n = pi.shape[0]
    Q = (1.0 - lam) * np.outer(np.ones(n), pi) + lam * np.eye(n)
    return FiniteKernel(Q, f, "doeblin")


def tilted_operator(kernel, t, base="P"):
    t = float(t)
    if t == 0.0:
        return TiltedOperator(base, t, kernel.P.copy())
    d = np.exp(0.5 * t * kernel.f)
    return TiltedOperator(base, t, d[:, None] * kernel.P * d[None, :])


def op_norm(op, pi, self_adjoint_tol=1e-12):
    """Operator norm on L2(pi) of a kernel, tilted operator or plain matrix.

    When the matrix is self-adjoint in L2(pi) the largest-magnitude eigenvalue
    is computed too and required to agree with the top singular value.
    """
    M = _as_matrix(op)
    pi = _check_pi(pi, M.shape[0])
    S = _symmetrize(M, pi)
    norm = float(np.linalg.norm(S, ord=2))
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S - S.T)) <= self_adjoint_tol * scale:
        eig = float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (S + S.T)))))
        if abs(eig - norm) > 1e-10 * max(1.0, norm):
            raise NumericalFailure(
                f"self-adjoint operator: eigenvalue {eig!r} disagrees with norm {norm!r}"
            )
    return norm


def discretize(f, k):
    """``ceil(k f) / k`` with a tolerance so values already on the grid stay put."""
    f = np.asarray(f, dtype=float)
    kf = k * f
    near = np.abs(kf - np.round(kf)) <= GRID_TOL
    idx = np.where(near, np.round(kf), np.ceil(kf))
    return idx / k


def level_profile(kernel, pi, k=None):
    """Discretized law of f under pi.

    With integer ``k`` each state is moved up to the grid point ``ceil(k f)/k``,
    so ``f <= f_k`` and ``mu <= mu_k <= mu + 1/k``; ``f = 0`` stays at level 0.
    ``k=None`` groups equal values of f without rounding.
    """
    pi = _check_pi(pi, kernel.n_states)
    if k is None or k == "exact":
        values = kernel.f
        k = None
    else:
        if int(k) != k or k < 1:
            raise ValidationError(f"k must be a positive integer, got {k!r}")
        k = int(k)
        values = discretize(kernel.f, k)
    levels, inverse = np.unique(values, return_inverse=True)
    weights = np.bincount(inverse, weights=pi, minlength=levels.size)
    weights = weights / weights.sum()
    return LevelProfile(weights, levels, k)


def _r_equation(profile, lam, t):
    # F(r) - 1 with r = e^{t v_max} s and u_i = e^{t (v_i - v_max)} in (0, 1]
    u = np.exp(t * (profile.levels - profile.levels[-1]))
    w = profile.weights

    def excess(s):
        return float(np.sum(w * (1.0 - lam) * u / (s - lam * u))) - 1.0

    return excess


def solve_r(profile, lam, t, rtol=1e-13):
    """Root ``r`` of ``sum_i w_i (1 - lam) e^{t v_i} / (r - lam e^{t v_i}) = 1``.

    This is the top eigenvalue of the tilted Doeblin operator.  The left side
    falls from +inf to at most 1 on ``(lam e^{t v_max}, e^{t v_max}]``, so
    the root lies in that bracket.
    """
    lam, t = float(lam), float(t)
    if not 0.0 <= lam < 1.0:
        raise ValidationError(f"lambda must lie in [0, 1), got {lam}")
    if t < 0.0:
        raise ValidationError("t < 0 is not supported; use the f -> 1 - f reflection")
    top = profile.levels[-1]
    if t == 0.0:
        return 1.0
    excess = _r_equation(profile, lam, t)
    hi = 1.0
    f_hi = excess(hi)
    if f_hi > 1e-15:
        raise NumericalFailure(f"F(e^(t v_max)) - 1 = {f_hi} > 0: bracket invalid", (lam, hi))
    if f_hi >= -1e-15:
        return math.exp(t * top)
    # top level carries positive mass, so its term alone reaches 2 at lo
    w_top = profile.weights[-1]
    if w_top <= 0.0:
        raise ValidationError("top level of the profile carries no mass")
    lo = lam + 0.5 * w_top * (1.0 - lam)
    if excess(lo) <= 0.0:
        raise NumericalFailure("F did not exceed 1 near lam e^(t v_max)", (lo, hi))
    try:
        s, info = optimize.brentq(excess, lo, hi, xtol=1e-300, rtol=rtol,
                                  full_output=True, disp=False)
    except ValueError as exc:
        raise NumericalFailure(str(exc), (lo, hi)) from exc
    if not info.converged:
        raise NumericalFailure(f"root finder did not converge: {info.flag}", (lo, hi))
    return math.exp(t * top) * s


def eigenfunction_g(profile, lam, t, r):
    """Positive eigenfunction ``e^{t v/2} / (r - lam e^{t v})`` on the levels."""
    ev = np.exp(t * profile.levels)
    if r <= lam * ev[-1]:
        raise ValidationError(f"r = {r} must exceed lam * e^(t v_max) = {lam * ev[-1]}")
    return np.exp(0.5 * t * profile.levels) / (r - lam * ev)


def expand_to_states(profile, values, f_levels):
    """Map a vector over levels back to states whose (discretized) f is ``f_levels``."""
    idx = np.searchsorted(profile.levels, f_levels)
    idx = np.clip(idx, 0, profile.levels.size - 1)
    if np.any(np.abs(profile.levels[idx] - f_levels) > GRID_TOL):
        raise ValidationError("state values do not match the profile levels")
    return np.asarray(values)[idx]


def load_chain(path):
    """Read a chain file ``{"P": [[...]], "f": [...], "name": optional}``."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return chain_from_dict(data)


def chain_from_dict(data):
    if "P" not in data:
        raise ValidationError("chain file lacks the 'P' matrix")
    P = data["P"]
    width = {len(row) for row in P}
    if len(width) != 1:
        i = next(i for i, row in enumerate(P) if len(row) != len(P[0]))
        raise ValidationError(f"row {i} of P has length {len(P[i])}, expected {len(P[0])}")
    return FiniteKernel(np.array(P, dtype=float), data.get("f"), data.get("name", ""))


def chain_to_dict(kernel):
    out = {"P": kernel.P.tolist(), "f": kernel.f.tolist()}
    if kernel.name:
        out["name"] = kernel.name
    return out


def save_chain(kernel, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(chain_to_dict(kernel), fh)


def load_profile(path):
    """Read ``{"weights": [...], "levels": [...], "lambda": real}``."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    for key in ("weights", "levels", "lambda"):
        if key not in data:
            raise ValidationError(f"profile file lacks '{key}'")
    return LevelProfile(data["weights"], data["levels"]), float(data["lambda"])


def save_profile(profile, lam, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"weights": profile.weights.tolist(),
                   "levels": profile.levels.tolist(),
                   "lambda": float(lam)}, fh)
