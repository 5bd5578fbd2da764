import numpy as np
import pytest

from cfmm_replication import closed_forms as cf
from cfmm_replication.sim import (CHUNK, PathSpec, SimulationError, cfmm_pnl, cfmm_replication_pnl,
                                  rebalance_pnl, rebalance_vs_cfmm_gap, simulate_paths)

LOG2 = cf.log_contract_boundary(cf.LogContractParams(2.0))


def test_spec_validation():
    for bad in (dict(steps=0), dict(paths=0), dict(sigma=-0.1), dict(T=0.0), dict(c0=0.0)):
        kw = dict(sigma=0.2, T=1.0, steps=10, paths=10) | bad
        with pytest.raises(ValueError):
            PathSpec(**kw)


def test_zero_vol_paths_are_constant():
    paths = simulate_paths(PathSpec(0.0, 1.0, 5, 7, seed=1, c0=1.7))
    assert paths.shape == (7, 6)
    assert np.all(paths == 1.7)


def test_paths_deterministic_and_schedule_free():
    spec = PathSpec(0.3, 2.0, 4, 2 * CHUNK + 17, seed=11)
    a = simulate_paths(spec)
    b = simulate_paths(spec, workers=3)
    np.testing.assert_array_equal(a, b)
    c = simulate_paths(PathSpec(0.3, 2.0, 4, CHUNK + 1, seed=11))
    np.testing.assert_array_equal(a[: CHUNK + 1], c)


def test_log_mean_identity():
    spec = PathSpec(0.3, 1.5, 3, 100_000, seed=5)
    x = np.log(simulate_paths(spec)[:, -1])
    se = x.std(ddof=1) / np.sqrt(x.size)
    assert abs(x.mean() + 0.5 * 0.3 ** 2 * 1.5) < 4 * se


def test_zero_vol_pnl_is_zero():
    spec = PathSpec(0.0, 1.0, 10, 50, seed=0)
    s = cfmm_replication_pnl(LOG2, spec)
    assert s.mean_pnl == 0.0 and s.std_error == 0.0 and s.z_score == 0.0
    pair = rebalance_vs_cfmm_gap(lambda c: 1.0 / c, LOG2, spec)
    assert pair.cfmm.mean_pnl == 0.0 and pair.rebalance.mean_pnl == 0.0


def test_cfmm_pnl_is_path_independent():
    rng = np.random.default_rng(0)
    S = cf.bs_covered_call_boundary(cf.BSCoveredCallParams(1.0, 0.3, 1.0))
    paths = np.exp(np.cumsum(rng.normal(0, 0.05, (200, 20)), axis=1))
    paths[:, 0] = 1.0
    shuffled = paths.copy()
    inner = shuffled[:, 1:-1]
    shuffled[:, 1:-1] = inner[:, rng.permutation(inner.shape[1])]
    np.testing.assert_array_equal(cfmm_pnl(S, paths), cfmm_pnl(S, shuffled))
    h = lambda c: cf.bs_covered_call_holdings(c, cf.BSCoveredCallParams(1.0, 0.3, 1.0))
    assert not np.allclose(rebalance_pnl(paths, h), rebalance_pnl(shuffled, h))


def test_constant_price_path_zero_pnl():
    S = cf.covered_call_expiry_boundary(2.0)
    paths = np.array([[1.0, 3.0, 0.5, 1.0]])
    assert cfmm_pnl(S, paths)[0] == 0.0


def test_supermartingale_direction_all_builtins():
    spec = PathSpec(0.4, 1.0, 20, 20_000, seed=3)
    sets = [cf.constant_mean_boundary(cf.ConstantMeanParams(0.5)),
            cf.covered_call_expiry_boundary(1.0),
            cf.bs_covered_call_boundary(cf.BSCoveredCallParams(1.0, 0.2, 1.0)),
            cf.perpetual_put_boundary(cf.PerpetualPutParams(1.0, 0.2, 0.05)),
            LOG2]
    for S in sets:
        s = cfmm_replication_pnl(S, spec)
        assert s.mean_pnl <= 3 * s.std_error, S.meta["family"]


def test_log_contract_paired_gap_and_variance_reduction():
    spec = PathSpec(0.2, 1.0, 50, 40_000, seed=9)
    pair = rebalance_vs_cfmm_gap(lambda c: 1.0 / c, LOG2, spec)
    assert pair.cfmm.within(3) and pair.rebalance.within(3) and pair.gap.within(3)
    assert pair.gap.std_error < pair.unpaired_gap_se
    assert pair.gap.theoretical == pytest.approx(0.02)
    header, first = pair.ledger_csv().splitlines()[:2]
    assert header == "path,terminal_price,cfmm_pnl,rebal_pnl"
    assert first.startswith("0,")


def test_excluded_paths_fail_the_run():
    S0 = cf.log_contract_boundary(cf.LogContractParams(0.0))
    with pytest.raises(SimulationError):
        cfmm_replication_pnl(S0, PathSpec(0.2, 1.0, 10, 1000, seed=0))


def test_discretization_consistency():
    # coarse and fine hedges share one Brownian motion: the coarse path subsamples the fine one
    spec = PathSpec(0.2, 1.0, 50, 100_000, seed=2)
    fine = simulate_paths(spec)
    coarse = fine[:, ::2]
    f = rebalance_pnl(fine, lambda c: 1.0 / c)
    c = rebalance_pnl(coarse, lambda c: 1.0 / c)
    se = f.std(ddof=1) / np.sqrt(f.size)
    assert abs(f.mean() - c.mean()) < se
