import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from markov_hoeffding import bounds
from markov_hoeffding.bounds import ChainParams, InitialBias
from markov_hoeffding.errors import (
    AssumptionViolation,
    DomainError,
    ValidationError,
)


def kl(a, b):
    return a * math.log(a / b) + (1 - a) * math.log((1 - a) / (1 - b))


def dense_theta(mu, lam, t):
    M = bounds.two_state_matrix(ChainParams(mu, lam))
    return max(np.linalg.eigvals(np.diag([1.0, math.exp(t)]) @ M).real)


# ---------------------------------------------------------------- ChainParams


@pytest.mark.parametrize("mu,lam,exc", [
    (0.5, 1.0, AssumptionViolation),
    (0.5, 1.5, AssumptionViolation),
    (0.5, -0.1, ValidationError),
    (1.2, 0.5, ValidationError),
    (-0.1, 0.5, ValidationError),
    (float("nan"), 0.5, ValidationError),
])
def test_chain_params_rejects(mu, lam, exc):
    with pytest.raises(exc):
        ChainParams(mu, lam)


def test_initial_bias_conjugates():
    assert InitialBias(2.0, 1.5).q == 2.0
    assert InitialBias(math.inf).q == 1.0
    assert InitialBias(3.0).q == pytest.approx(1.5)
    with pytest.raises(ValidationError):
        InitialBias(1.0)
    with pytest.raises(ValidationError):
        InitialBias(2.0, 0.9)


def test_two_state_matrix_structure():
    params = ChainParams(0.3, 0.6)
    M = bounds.two_state_matrix(params)
    np.testing.assert_allclose(M.sum(axis=1), 1.0, atol=1e-15)
    assert np.all(M >= 0)
    stat = np.array([0.7, 0.3])
    np.testing.assert_allclose(stat @ M, stat, atol=1e-15)
    np.testing.assert_allclose(sorted(np.linalg.eigvals(M).real), [0.6, 1.0], atol=1e-15)


# ---------------------------------------------------------------------- delta


def test_delta_examples():
    assert bounds.delta(ChainParams(0.5, 0.0), 0.1) == 1.0
    assert bounds.delta(ChainParams(0.5, 0.5), 0.1) == pytest.approx(
        1 + 4 * 0.5 * 0.6 * 0.4 / (0.25 * 0.25), rel=1e-15)
    assert bounds.delta(ChainParams(0.5, 0.5), 0.1) == pytest.approx(8.68, rel=1e-14)
    assert bounds.delta(ChainParams(0.5, 0.5), 0.5) == 1.0


def test_delta_errors():
    with pytest.raises(DomainError, match="use loose bound"):
        bounds.delta(ChainParams(0.0, 0.5), 0.1)
    with pytest.raises(ValidationError):
        bounds.delta(ChainParams(0.5, 0.5), 0.6)
    with pytest.raises(ValidationError):
        bounds.delta(ChainParams(0.5, 0.5), -0.1)


# ---------------------------------------------------------------------- theta


def test_characteristic_polynomial_determinant_symbolically():
    mu, lam, t = sympy.symbols("mu lambda t", positive=True)
    M = sympy.Matrix([[lam + (1 - lam) * (1 - mu), (1 - lam) * mu],
                      [(1 - lam) * (1 - mu), lam + (1 - lam) * mu]])
    D2 = sympy.diag(1, sympy.exp(t))
    assert sympy.simplify((D2 * M).det() - lam * sympy.exp(t)) == 0


@pytest.mark.parametrize("mu,lam", [(0.1, 0.0), (0.5, 0.5), (0.9, 0.95)])
def test_theta_at_zero_is_one(mu, lam):
    assert bounds.theta(ChainParams(mu, lam), 0.0) == pytest.approx(1.0, abs=1e-15)


def test_theta_rank_one():
    assert bounds.theta(ChainParams(0.5, 0.0), 1.0) == pytest.approx(0.5 + 0.5 * math.e, rel=1e-15)


@pytest.mark.parametrize("mu,lam,t", [(0.4, 0.5, 0.7), (0.2, 0.9, 3.0), (0.7, 0.1, -2.0),
                                      (0.5, 0.99, 0.01)])
def test_theta_matches_dense_eigensolver(mu, lam, t):
    assert bounds.theta(ChainParams(mu, lam), t) == pytest.approx(dense_theta(mu, lam, t),
                                                                  rel=1e-12)


def test_theta_solves_characteristic_polynomial():
    for mu in (0.1, 0.5, 0.8):
        for lam in (0.0, 0.3, 0.9):
            p = ChainParams(mu, lam)
            for t in np.linspace(-3, 3, 13):
                th = bounds.theta(p, t)
                a, b = lam + (1 - lam) * (1 - mu), lam + (1 - lam) * mu
                resid = th**2 - (a + math.exp(t) * b) * th + lam * math.exp(t)
                assert abs(resid) <= 1e-12 * max(1.0, th**2)


def test_theta_increasing_and_log_convex():
    ts = np.linspace(-4, 4, 161)
    for mu in (0.2, 0.5, 0.9):
        for lam in (0.0, 0.5, 0.95):
            p = ChainParams(mu, lam)
            lt = np.array([bounds.log_theta(p, t) for t in ts])
            assert np.all(np.diff(lt) > 0)
            assert np.all(np.diff(lt, 2) >= -1e-12)


def test_log_theta_large_tilt_no_overflow():
    p = ChainParams(0.3, 0.5)
    assert bounds.log_theta(p, 800.0) == pytest.approx(800.0 + math.log(0.5 + 0.5 * 0.3),
                                                       rel=1e-14)


# ------------------------------------------------------------- sharp / loose


def test_sharp_iid_equals_kl():
    p = ChainParams(0.5, 0.0)
    expected = -(0.6 * math.log(0.6 / 0.5) + 0.4 * math.log(0.4 / 0.5))
    assert bounds.sharp_log_bound(p, 0.1, 1) == pytest.approx(expected, rel=1e-13)
    assert expected == pytest.approx(-0.0201355, abs=1e-7)
    assert bounds.sharp_log_bound(p, 0.1, 100) == pytest.approx(100 * expected, rel=1e-13)


def test_sharp_matches_chernoff_example():
    p = ChainParams(0.5, 0.5)
    sharp = bounds.sharp_log_bound(p, 0.1, 100)
    chern, _ = bounds.chernoff_log_bound(p, 0.1, 100)
    assert abs(sharp - chern) <= 1e-8 * abs(sharp)


def test_sharp_boundary_limit():
    p = ChainParams(0.3, 0.4)
    limit = 10 * math.log(0.3 + 0.7 * 0.4)
    assert bounds.sharp_log_bound(p, 0.7, 10) == pytest.approx(limit, rel=1e-14)
    # continuity from inside
    assert bounds.sharp_log_bound(p, 0.7 - 1e-9, 10) == pytest.approx(limit, rel=1e-6)
    report = bounds.bound_report(p, 0.7, 10)
    assert "boundary-limit" in report.flags


def test_sharp_degenerate_mean():
    with pytest.raises(DomainError):
        bounds.sharp_log_bound(ChainParams(0.0, 0.3), 0.1, 10)
    assert bounds.sharp_log_bound(ChainParams(0.0, 0.3), 0.1, 10, fallback=True) == \
        bounds.loose_log_bound(ChainParams(0.0, 0.3), 0.1, 10)
    rep = bounds.bound_report(ChainParams(0.0, 0.3), 0.1, 10, fallback=True)
    assert rep.flags == ("degenerate-mean",)


def test_sharp_rejects_overshoot():
    with pytest.raises(ValidationError):
        bounds.sharp_log_bound(ChainParams(0.5, 0.2), 0.51, 10)
    with pytest.raises(ValidationError):
        bounds.sharp_log_bound(ChainParams(0.5, 0.2), 0.1, 0)


def test_loose_examples():
    assert bounds.loose_log_bound(ChainParams(0.5, 0.0), 0.1, 100) == pytest.approx(-2.0,
                                                                                    rel=1e-15)
    assert bounds.loose_log_bound(ChainParams(0.5, 1 / 3), 0.1, 100) == pytest.approx(
        -1.0, rel=1e-14)
    vals = [bounds.loose_log_bound(ChainParams(0.5, 1 - 10.0**-j), 0.1, 100) for j in range(1, 8)]
    assert all(v < 0 for v in vals)
    assert vals[-1] > -1e-6
    # valid for every mu, including the endpoints
    assert bounds.loose_log_bound(ChainParams(1.0, 0.2), 0.1, 10) < 0


GRID = [(mu, lam, frac * (1 - mu))
        for mu in np.round(np.arange(0.1, 0.91, 0.1), 10)
        for lam in (0.0, 0.3, 0.7, 0.95)
        for frac in (1 / 6, 2 / 6, 3 / 6, 4 / 6, 5 / 6)]


@pytest.mark.parametrize("mu,lam,eps", GRID)
def test_sharp_below_loose_and_equal_to_chernoff(mu, lam, eps):
    p = ChainParams(mu, lam)
    sharp = bounds.sharp_log_bound(p, eps, 1)
    loose = bounds.loose_log_bound(p, eps, 1)
    assert sharp <= loose <= 0
    chern, t_star = bounds.chernoff_log_bound(p, eps, 1)
    assert t_star > 0
    assert abs(sharp - chern) <= 1e-8 * abs(sharp)


def test_chernoff_iid_tilt():
    val, t_star = bounds.chernoff_log_bound(ChainParams(0.5, 0.0), 0.1, 1)
    assert t_star == pytest.approx(math.log(1.5), abs=1e-10)
    assert val == pytest.approx(-0.0201355, abs=1e-7)


def test_chernoff_vanishing_deviation():
    val, t_star = bounds.chernoff_log_bound(ChainParams(0.4, 0.6), 1e-7, 10)
    assert -1e-10 < val < 0
    assert 0 < t_star < 1e-5


def test_chernoff_cross_check_example():
    p = ChainParams(0.3, 0.6)
    sharp = bounds.sharp_log_bound(p, 0.2, 50)
    chern, _ = bounds.chernoff_log_bound(p, 0.2, 50)
    assert abs(sharp - chern) <= 1e-8 * abs(sharp)


def test_chernoff_tilt_is_minimum_by_brute_force():
    p = ChainParams(0.35, 0.8)
    _, t_star = bounds.chernoff_log_bound(p, 0.25, 1)
    ts = np.linspace(0, 5 * t_star, 2001)
    vals = [bounds.log_theta(p, t) - t * 0.6 for t in ts]
    assert abs(ts[int(np.argmin(vals))] - t_star) <= ts[1] - ts[0]


@settings(max_examples=200, deadline=None)
@given(mu=st.floats(0.02, 0.98), lam=st.floats(0.0, 0.98), frac=st.floats(0.01, 0.99),
       dlam=st.floats(0.0, 0.5), dfrac=st.floats(0.0, 0.5))
def test_monotonicity(mu, lam, frac, dlam, dfrac):
    eps = frac * (1 - mu)
    lam2 = min(lam + dlam, 0.985)
    eps2 = min(eps + dfrac * (1 - mu), 1 - mu)
    p, p2 = ChainParams(mu, lam), ChainParams(mu, lam2)
    tol = 1e-12
    assert bounds.sharp_log_bound(p, eps, 7) <= bounds.sharp_log_bound(p2, eps, 7) + tol
    assert bounds.loose_log_bound(p, eps, 7) <= bounds.loose_log_bound(p2, eps, 7) + tol
    assert bounds.sharp_log_bound(p, eps2, 7) <= bounds.sharp_log_bound(p, eps, 7) + tol
    assert bounds.loose_log_bound(p, eps2, 7) <= bounds.loose_log_bound(p, eps, 7) + tol
    assert bounds.sharp_log_bound(p, eps, 7) <= bounds.loose_log_bound(p, eps, 7) + tol


# ---------------------------------------------------------------- biased start


def test_biased_stationary_p2_form():
    p = ChainParams(0.4, 0.25)
    norm = 1.3
    got = bounds.biased_bound(p, 0.1, 80, InitialBias(2.0, norm), "loose")
    expected = math.log(norm) - (0.75 / 1.25) * 0.1**2 * 80
    assert got == pytest.approx(expected, rel=1e-14)


def test_biased_infinite_p_reduces_to_loose():
    p = ChainParams(0.4, 0.25)
    assert bounds.biased_bound(p, 0.1, 80, InitialBias(math.inf, 1.0), "loose") == \
        bounds.loose_log_bound(p, 0.1, 80)
    assert bounds.biased_bound(p, 0.1, 80, InitialBias(math.inf, 1.0), "sharp") == \
        bounds.sharp_log_bound(p, 0.1, 80)


def test_biased_plug_in():
    got = bounds.biased_bound(ChainParams(0.5, 1 / 3), 0.1, 100, InitialBias(2.0, 1.5), "loose")
    assert got == pytest.approx(math.log(1.5) - 0.5, rel=1e-13)
    assert got == pytest.approx(-0.094535, abs=1e-6)


def test_biased_sharp_divides_by_q():
    p = ChainParams(0.5, 0.5)
    got = bounds.biased_bound(p, 0.1, 50, InitialBias(3.0, 2.0), "sharp")
    assert got == pytest.approx(math.log(2.0) + bounds.sharp_log_bound(p, 0.1, 50) / 1.5)


# ------------------------------------------------------------------ tails


def test_lower_tail_symmetry():
    p = ChainParams(0.5, 0.4)
    assert bounds.lower_tail_bound(p, 0.1, 30) == bounds.sharp_log_bound(p, 0.1, 30)
    assert bounds.lower_tail_bound(ChainParams(0.3, 0.0), 0.1, 30) == \
        bounds.sharp_log_bound(ChainParams(0.7, 0.0), 0.1, 30)
    with pytest.raises(ValidationError):
        bounds.lower_tail_bound(ChainParams(0.3, 0.0), 0.31, 30)


def test_two_sided_union():
    got = bounds.two_sided_bound(ChainParams(0.5, 0.0), 0.1, 100, "loose")
    assert got == pytest.approx(math.log(2) - 2, rel=1e-14)


def test_two_sided_one_tail_impossible():
    p = ChainParams(0.2, 0.1)
    # eps = 0.5 > mu: the lower tail is empty
    assert bounds.two_sided_bound(p, 0.5, 10) == bounds.sharp_log_bound(p, 0.5, 10)


# ------------------------------------------------------------ inverse queries


def test_sample_size_examples():
    assert bounds.sample_size(ChainParams(0.5, 0.0), 0.1, 0.05, form="loose") == 150
    assert math.ceil(math.log(20) / 0.02) == 150
    assert bounds.sample_size(ChainParams(0.5, 1 / 3), 0.1, 0.05, form="loose") == 300


@settings(max_examples=100, deadline=None)
@given(mu=st.floats(0.05, 0.95), lam=st.floats(0.0, 0.95), frac=st.floats(0.05, 0.95),
       delta=st.floats(1e-6, 0.5), tail=st.sampled_from(bounds.TAILS),
       biased=st.booleans())
def test_sample_size_is_minimal(mu, lam, frac, delta, tail, biased):
    p = ChainParams(mu, lam)
    eps = frac * min(mu, 1 - mu)
    bias = InitialBias(2.0, 1.7) if biased else None
    n_sharp = bounds.sample_size(p, eps, delta, bias, "sharp", tail)
    n_loose = bounds.sample_size(p, eps, delta, bias, "loose", tail)
    assert n_sharp <= n_loose
    for form, n in (("sharp", n_sharp), ("loose", n_loose)):
        assert bounds.tail_log_bound(p, eps, n, tail, form, bias) <= math.log(delta)
        if n > 1:
            assert bounds.tail_log_bound(p, eps, n - 1, tail, form, bias) > math.log(delta)


def test_sample_size_validation():
    with pytest.raises(ValidationError):
        bounds.sample_size(ChainParams(0.5, 0.0), 0.1, 1.0)
    with pytest.raises(ValidationError):
        bounds.sample_size(ChainParams(0.5, 0.0), 0.0, 0.05)


def test_half_width_examples():
    hw = bounds.half_width(ChainParams(0.5, 0.0), 150, 0.05, form="loose")
    assert not hw.saturated
    assert hw.epsilon == pytest.approx(0.09993, abs=1e-5)
    assert hw.epsilon == pytest.approx(math.sqrt(math.log(20) / 300), abs=1e-11)


@pytest.mark.parametrize("lam,n,delta", [(0.0, 10, 0.1), (0.5, 400, 0.01), (0.9, 1000, 0.2)])
def test_half_width_loose_closed_form(lam, n, delta):
    hw = bounds.half_width(ChainParams(0.5, lam), n, delta, form="loose")
    closed = math.sqrt(math.log(1 / delta) * (1 + lam) / (2 * (1 - lam) * n))
    assert not hw.saturated
    assert hw.epsilon == pytest.approx(closed, abs=1e-11)


def test_half_width_sharp_inverts_bound():
    p = ChainParams(0.3, 0.6)
    hw = bounds.half_width(p, 200, 0.05)
    assert bounds.sharp_log_bound(p, hw.epsilon, 200) == pytest.approx(math.log(0.05), abs=1e-9)
    assert hw.epsilon <= bounds.half_width(p, 200, 0.05, form="loose").epsilon


def test_half_width_limits():
    eps = [bounds.half_width(ChainParams(0.5, 0.2), 50, 1 - 10.0**-j).epsilon for j in (1, 3, 6)]
    assert eps[0] > eps[1] > eps[2] > 0
    assert eps[2] < 1e-3
    hw = bounds.half_width(ChainParams(0.5, 0.9), 1, 1e-6)
    assert hw.saturated and hw.epsilon == 0.5
