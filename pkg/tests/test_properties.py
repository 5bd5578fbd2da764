"""Sampled invariants of payoffs, trading sets and forward values."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builtins_cases import away_from_kinks, builtin_cases
from cfmm_replication import closed_forms as cf
from cfmm_replication.conjugate import membership_gap, psi_indicator, reserves_on_boundary, trace_boundary
from cfmm_replication.normal import norm_cdf, norm_quantile
from cfmm_replication.payoff import (ConsistencyGrid, PayoffFunction, ReducedPayoff, check_consistency,
                                     linear_offset, perspective, supergradient_fd)
from cfmm_replication.sets import Membership
from cfmm_replication.verify import forward_values, portfolio_value

CASES = builtin_cases()
NAMES = sorted(CASES)
TRACED = {name: trace_boundary(V, np.geomspace(*rng, 256)) for name, (V, _, rng) in CASES.items()}

pos = st.floats(1e-3, 1e3, allow_nan=False)
eta = st.floats(1e-3, 1e3, allow_nan=False)


@st.composite
def prices(draw, n=2):
    return np.array([draw(pos) for _ in range(n)])


# ---------------------------------------------------------------------- payoff

SQRT_U = ReducedPayoff(1, lambda x: np.sqrt(x[..., 0]), lambda x: 0.5 / np.sqrt(x))


@given(prices(), eta)
def test_perspective_homogeneous(c, e):
    V = perspective(SQRT_U)
    assert abs(V(e * c) - e * V(c)) <= 1e-12 * (1 + abs(e * V(c)))


@given(pos)
def test_perspective_restriction_identity(x):
    V = perspective(SQRT_U)
    assert V([x, 1.0]) == SQRT_U(np.array([x]))


@given(prices(), st.lists(st.floats(0, 10), min_size=2, max_size=2), st.lists(st.floats(0, 10), min_size=2, max_size=2))
def test_offset_additivity(c, a, b):
    V = cf.geometric_mean_payoff(cf.ConstantMeanParams(0.4))
    lhs = linear_offset(linear_offset(V, a), b)(c)
    rhs = linear_offset(V, np.add(a, b))(c)
    assert lhs == pytest.approx(rhs, rel=1e-14, abs=1e-14)


@pytest.mark.parametrize("name", NAMES)
def test_analytic_gradient_matches_fd(name):
    V = CASES[name][0]
    rng = np.random.default_rng(1)
    c = 10 ** rng.uniform(-2, 2, (400, 2))
    c = c[away_from_kinks(name, c[:, 0] / c[:, 1], 1e-2)]
    diff = np.abs(V.supergradient(c) - supergradient_fd(V, c))
    assert diff.max() <= 1e-5


@pytest.mark.parametrize("name", NAMES)
def test_builtins_are_consistent(name):
    assert check_consistency(CASES[name][0], ConsistencyGrid(2000, seed=4)).passed


def test_convex_function_fails_concavity():
    V = PayoffFunction(2, lambda c: np.max(c, axis=-1) ** 2 / np.sum(c, axis=-1), name="convex")
    rep = check_consistency(V)
    assert not rep.concave.passed


# ------------------------------------------------------------------- conjugate


@pytest.mark.parametrize("name", NAMES)
def test_trace_round_trip(name):
    V, _, (lo, hi) = CASES[name]
    p = np.geomspace(lo, hi, 256)
    C = np.column_stack([p, np.ones_like(p)])
    target = V(C)
    err = np.abs(forward_values(TRACED[name], C) - target) / (1 + np.abs(target))
    assert err.max() <= 1e-5


@pytest.mark.parametrize("name", NAMES)
def test_tightness_and_gap(name):
    V, _, (lo, hi) = CASES[name]
    p = np.geomspace(lo, hi, 64)
    C = np.column_stack([p, np.ones_like(p)])
    R = reserves_on_boundary(V, C)
    np.testing.assert_allclose(np.sum(C * R, axis=1), V(C), rtol=1e-9)
    assert np.min(membership_gap(V, R)) >= -1e-7


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 3), st.floats(0, 3))
def test_indicator_is_zero_or_minus_infinity(r1, r2):
    value = psi_indicator(CASES["bs_covered_call"][0])([r1, r2])
    assert value in (0.0, -np.inf)


@pytest.mark.parametrize("name", NAMES)
def test_traced_set_convex_and_upward_closed(name):
    S = TRACED[name]
    rng = np.random.default_rng(7)
    m = 10_000
    x = rng.uniform(S.r1_min, min(S.r1_max, 50.0), (m, 2))
    lift = rng.exponential(0.5, (m, 2))
    A = np.column_stack([x[:, 0], S.boundary(x[:, 0]) + lift[:, 0]])
    B = np.column_stack([x[:, 1], S.boundary(x[:, 1]) + lift[:, 1]])
    t = rng.uniform(size=(m, 1))
    assert np.all(S.contains(t * A + (1 - t) * B, tol=1e-9))
    assert np.all(S.contains(A + rng.exponential(1.0, (m, 2)), tol=1e-9))


@settings(max_examples=15, deadline=None)
@given(st.floats(0, 5), st.floats(0, 5))
def test_offset_commutes_with_trace(a1, a2):
    V = cf.bs_covered_call_payoff(cf.BSCoveredCallParams(1.0, 0.3, 1.0))
    grid = np.geomspace(1e-2, 1e2, 64)
    shifted = trace_boundary(linear_offset(V, [a1, a2]), grid)
    base = trace_boundary(V, grid).translated([a1, a2])
    assert shifted.r1_min == pytest.approx(base.r1_min, abs=1e-12)
    assert shifted.r1_max == pytest.approx(base.r1_max, abs=1e-12)
    r = np.linspace(base.r1_min, base.r1_max, 501)[1:-1]
    np.testing.assert_allclose(shifted.boundary(r), base.boundary(r), rtol=1e-8, atol=1e-9)


# ---------------------------------------------------------------- closed forms


@pytest.mark.parametrize("name", NAMES)
def test_closed_form_matches_trace(name):
    S, T = CASES[name][1], TRACED[name]
    lo, hi = max(S.r1_min, T.r1_min), min(S.r1_max, T.r1_max)
    r = np.concatenate([T.points[:, 0], np.linspace(lo, hi, 2001)])
    r = r[(r >= lo) & (r <= hi) & (r > 0)]
    ref = S.boundary(r)
    assert np.max(np.abs(T.boundary(r) - ref) / (1 + np.abs(ref))) <= 1e-5


@given(st.floats(1e-3, 10), st.floats(1e-3, 2), st.floats(0.0, 1.0))
def test_bs_boundary_degenerates(K, sigma, r1):
    exact = cf.bs_covered_call_boundary(cf.BSCoveredCallParams(K, 0.0, 1.0)).boundary(r1)
    assert abs(exact - K * (1 - r1)) <= 1e-9 * K
    tiny = cf.bs_covered_call_boundary(cf.BSCoveredCallParams(K, sigma, 1e-24)).boundary(r1)
    assert abs(tiny - K * (1 - r1)) <= 1e-9 * K + 1e-9


@given(st.floats(0.1, 5), st.floats(0.05, 1), st.floats(0.01, 0.5))
def test_perpetual_put_endpoints_and_convexity(K, sigma, r):
    S = cf.perpetual_put_boundary(cf.PerpetualPutParams(K, sigma, r))
    assert S.boundary(1.0) == 0.0 and S.boundary(0.0) == K
    x = np.linspace(0, 1, 201)
    y = S.boundary(x)
    assert np.all(np.diff(y) <= 0)
    assert np.all(y[:-2] - 2 * y[1:-1] + y[2:] >= -1e-12 * K)


@given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=5))
def test_constant_mean_n_coins(raw):
    w = np.array(raw) / np.sum(raw)
    p = cf.ConstantMeanParams(tuple(w))
    S = cf.constant_mean_boundary(p)
    assert S.classify(w) == Membership.BOUNDARY
    assert cf.geometric_mean_payoff(p)(np.ones(w.size)) == pytest.approx(1.0, rel=1e-14)


def test_delta_hedge_log_matches_boundary():
    S = cf.delta_hedge_curve(lambda c: 1.0 / c, price_range=(1e-3, 1e3), k=0.0)
    L = cf.log_contract_boundary(cf.LogContractParams(0.0))
    r = np.geomspace(S.r1_min, 1.0, 2000)
    shift = np.mean(S.boundary(r) - L.boundary(r))
    np.testing.assert_allclose(S.boundary(r), L.boundary(r) + shift, atol=1e-7)


@given(st.floats(1e-8, 1 - 1e-8))
def test_quantile_inverse(p):
    assert norm_cdf(norm_quantile(p)) == pytest.approx(p, rel=1e-12, abs=1e-15)


# --------------------------------------------------------------------- forward


@pytest.mark.parametrize("name", NAMES)
@settings(max_examples=40, deadline=None)
@given(c=prices(), e=eta)
def test_forward_homogeneous(name, c, e):
    S = CASES[name][1]
    lo, _ = S.valid_prices
    if c[0] / c[1] < lo:
        c = np.array([lo * c[1] * 1.01, c[1]])
    a, b = portfolio_value(S, c).value, portfolio_value(S, e * c).value
    assert abs(b - e * a) <= 1e-10 * abs(e * a) + 1e-300


@pytest.mark.parametrize("name", NAMES)
def test_forward_lower_bound_and_argmin_on_boundary(name):
    V, S, (lo, hi) = CASES[name]
    p = np.geomspace(lo, hi, 97)
    for c in np.column_stack([p, np.ones_like(p)]):
        sol = portfolio_value(S, c)
        assert sol.value >= V(c) - 1e-9 * (1 + abs(V(c)))
        assert S.classify(sol.argmin_reserves, tol=1e-7) == Membership.BOUNDARY
