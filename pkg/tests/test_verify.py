import math

import numpy as np
import pytest

from cfmm_replication import closed_forms as cf
from cfmm_replication.verify import (UnboundedSetError, forward_values, marginal_price, portfolio_value,
                                     relative_price_grid, round_trip)
from cfmm_replication.sets import CurveSet


def test_portfolio_value_examples():
    S = cf.constant_mean_boundary(cf.ConstantMeanParams(0.5))
    sol = portfolio_value(S, [1.0, 1.0])
    assert sol.value == pytest.approx(1.0, rel=1e-13)
    np.testing.assert_allclose(sol.argmin_reserves, [0.5, 0.5], rtol=1e-6)
    assert sol.gap_estimate >= 0
    S2 = cf.covered_call_expiry_boundary(2.0)
    sol = portfolio_value(S2, [1.0, 1.0])
    assert sol.value == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(sol.argmin_reserves, [1.0, 0.0], atol=1e-9)


def test_portfolio_value_scales_with_prices():
    S = cf.bs_covered_call_boundary(cf.BSCoveredCallParams(1.0, 0.2, 4.0))
    a, b = portfolio_value(S, [0.7, 1.3]), portfolio_value(S, [2.1, 3.9])
    assert b.value == pytest.approx(3 * a.value, rel=1e-12)
    np.testing.assert_allclose(b.argmin_reserves, a.argmin_reserves, rtol=1e-6, atol=1e-12)


def test_portfolio_value_three_coins():
    w = np.array([0.2, 0.3, 0.5])
    S = cf.constant_mean_boundary(cf.ConstantMeanParams(w))
    V = cf.geometric_mean_payoff(cf.ConstantMeanParams(w))
    for c in ([1.0, 1.0, 1.0], [0.5, 2.0, 3.0]):
        sol = portfolio_value(S, c)
        assert sol.value == pytest.approx(V(c), rel=1e-7)


def test_marginal_price_examples():
    S = cf.log_contract_boundary(cf.LogContractParams(1.0))
    assert marginal_price(S, 2.0) == pytest.approx(0.5)
    H = cf.constant_mean_boundary(cf.ConstantMeanParams(0.5))
    assert marginal_price(H, 0.5) == pytest.approx(1.0)
    R1 = 0.3
    p = marginal_price(H, R1)
    sol = portfolio_value(H, [p, 1.0])
    assert sol.argmin_reserves[0] == pytest.approx(R1, rel=1e-6)


def test_round_trip_pass_cases():
    grid = np.geomspace(1e-4, 1e4, 256)
    V = cf.geometric_mean_payoff(cf.ConstantMeanParams(0.5))
    assert round_trip(V, cf.constant_mean_boundary(cf.ConstantMeanParams(0.5)), grid).passed
    p = cf.BSCoveredCallParams(1.0, 0.1, 10.0)
    rep = round_trip(cf.bs_covered_call_payoff(p), cf.bs_covered_call_boundary(p), grid)
    assert rep.passed and rep.failing_rows.size == 0
    assert "PASS" in rep.summary()


def test_round_trip_quadratic_fails_beyond_validity():
    p = cf.QuadraticParams([[1.0]], [1.0], 0.5)
    grid = np.geomspace(0.1, 10, 101)
    rep = round_trip(cf.quadratic_payoff(p), cf.quadratic_boundary(p), grid)
    assert not rep.passed
    bad = rep.prices[rep.failing_rows, 0]
    assert np.all(bad > cf.quadratic_validity_limit(p))
    assert np.all(rep.gap >= -1e-12)
    assert "gap table" in rep.summary()


def test_report_csv_format():
    S = cf.constant_mean_boundary(cf.ConstantMeanParams(0.5))
    rep = round_trip(cf.geometric_mean_payoff(cf.ConstantMeanParams(0.5)), S, [0.5, 2.0])
    lines = rep.to_csv().splitlines()
    assert lines[0] == "c1,c2,target,forward,rel_error"
    assert lines[1].startswith("0.5,1,0.707106781187,0.707106781187,")


def test_relative_price_grid():
    np.testing.assert_array_equal(relative_price_grid([2.0, 3.0]), [[2.0, 1.0], [3.0, 1.0]])


def test_forward_values_batch_matches_single():
    S = cf.perpetual_put_boundary(cf.PerpetualPutParams(1.0, 0.2, 0.05))
    C = relative_price_grid(np.geomspace(0.01, 100, 17))
    batch = forward_values(S, C)
    single = [portfolio_value(S, c).value for c in C]
    np.testing.assert_allclose(batch, single, rtol=1e-14)


def test_unbounded_set_detected():
    S = CurveSet(phi=lambda r: -np.asarray(r, dtype=float), r1_min=0.0, r1_max=math.inf)
    with pytest.raises(UnboundedSetError):
        portfolio_value(S, [0.5, 1.0])


def test_rejects_nonpositive_prices():
    S = cf.constant_mean_boundary(cf.ConstantMeanParams(0.5))
    with pytest.raises(ValueError):
        portfolio_value(S, [0.0, 1.0])
