"""Built-in payoffs paired with their closed-form sets, shared by the test modules."""

import math

import numpy as np

from cfmm_replication import closed_forms as cf


def builtin_cases():
    bs = cf.BSCoveredCallParams(1.0, 0.2, 10.0)
    pp = cf.PerpetualPutParams(1.0, 0.25, 0.1)
    lc = cf.LogContractParams(1.0)
    return {
        "power_0.3": (cf.geometric_mean_payoff(cf.ConstantMeanParams(0.3)),
                      cf.constant_mean_boundary(cf.ConstantMeanParams(0.3)), (1e-4, 1e4)),
        "covered_call_expiry": (cf.covered_call_expiry_payoff(2.0), cf.covered_call_expiry_boundary(2.0),
                                (1e-4, 1e4)),
        "bs_covered_call": (cf.bs_covered_call_payoff(bs), cf.bs_covered_call_boundary(bs), (1e-4, 1e4)),
        "perpetual_put": (cf.perpetual_put_payoff(pp), cf.perpetual_put_boundary(pp), (1e-4, 1e4)),
        "log_contract": (cf.log_contract_payoff(lc), cf.log_contract_boundary(lc), (lc.price_floor, 1e4)),
    }


def kinks(name):
    return {"covered_call_expiry": [2.0], "perpetual_put": [cf.PerpetualPutParams(1.0, 0.25, 0.1).L],
            "log_contract": [math.exp(-1.0)]}.get(name, [])


def away_from_kinks(name, p, margin=1e-3):
    p = np.asarray(p, dtype=float)
    ok = np.ones(p.shape, dtype=bool)
    for k in kinks(name):
        ok &= np.abs(np.log(p / k)) > margin
    return ok
