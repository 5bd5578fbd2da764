import math

import numpy as np
import pytest

from cfmm_replication import closed_forms as cf
from cfmm_replication.sets import CurveSet, DomainError, LevelSet, Membership


def test_curve_membership_and_upward_closure():
    S = cf.constant_mean_boundary(cf.ConstantMeanParams(0.5))
    assert S.classify([0.5, 0.5]) == Membership.BOUNDARY
    assert S.classify([1.0, 1.0]) == Membership.INSIDE
    assert S.classify([0.1, 0.1]) == Membership.OUTSIDE
    out = S.classify(np.array([[0.5, 0.5], [0.1, 0.1]]))
    assert list(out) == [Membership.BOUNDARY, Membership.OUTSIDE]


def test_bounded_domain_right_of_curve():
    S = cf.covered_call_expiry_boundary(1.0)
    # right of the domain, membership follows the last boundary level
    assert S.contains([2.0, 0.0])
    assert not S.contains([2.0, -0.1])
    assert not S.contains([-0.1, 5.0])


def test_open_left_end_raises():
    S = cf.log_contract_boundary(cf.LogContractParams(0.0))
    with pytest.raises(DomainError):
        S.boundary(0.0)
    with pytest.raises(DomainError):
        S.boundary(2.0)


def test_translated_set():
    S = cf.constant_mean_boundary(cf.ConstantMeanParams(0.5)).translated([1.0, 2.0])
    assert S.classify([1.5, 2.5]) == Membership.BOUNDARY
    assert S.r1_min == 1.0
    assert S.meta["offset"] == [1.0, 2.0]


def test_quadratic_not_upward_closed():
    S = cf.quadratic_boundary(cf.QuadraticParams([[1.0]], [1.0], 0.0))
    assert S.contains([1.0, 0.0])
    # far to the right the parabola rises above R2
    assert not S.contains([3.0, 1.0])


def test_marginal_price_domain():
    S = cf.covered_call_expiry_boundary(1.0)
    with pytest.raises(DomainError):
        S.marginal_price(1.0)
    assert S.marginal_price(0.5) == pytest.approx(1.0)


def test_empty_domain_rejected():
    with pytest.raises(ValueError):
        CurveSet(phi=lambda r: r, r1_min=1.0, r1_max=0.0)


def test_level_set_negative_reserves_outside():
    S = LevelSet(3, lambda R: np.sum(R, axis=-1) - 1.0)
    assert S.contains([0.5, 0.5, 0.5])
    assert not S.contains([-0.1, 2.0, 2.0])
    with pytest.raises(ValueError):
        S.gap([1.0, 1.0])
