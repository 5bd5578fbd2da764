"""Payoff families by name: JSON config ``{family, params, n}`` to payoff and set."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import closed_forms as cf
from .payoff import PayoffFunction
from .sets import TradingSet

FAMILIES = ("linear", "quadratic", "power", "covered_call_expiry", "bs_covered_call",
            "perpetual_put", "log_contract", "custom_grid")

DEFAULT_RATIOS = (1e-4, 1e4)


class ConfigError(ValueError):
    """Unknown family, missing parameter or malformed config file."""


@dataclass(frozen=True, eq=False)
class Model:
    family: str
    params: dict
    payoff: PayoffFunction
    closed_set: Optional[TradingSet]
    ratio_range: tuple = DEFAULT_RATIOS

    @property
    def n(self) -> int:
        return self.payoff.n

    def price_grid(self, points: int = 256) -> np.ndarray:
        lo, hi = self.ratio_range
        return np.geomspace(lo, hi, points)


def _require(params: dict, family: str, *names):
    missing = [n for n in names if params.get(n) is None]
    if missing:
        raise ConfigError(f"{family}: missing parameter(s) {', '.join(missing)}")
    return [params[n] for n in names]


def _vector(x) -> np.ndarray:
    if isinstance(x, str):
        x = [float(v) for v in x.split(",") if v.strip()]
    return np.atleast_1d(np.asarray(x, dtype=float))


def build_model(family: str, params: Optional[dict] = None, n: Optional[int] = None) -> Model:
    """Payoff, closed-form set (when one exists) and default price range of a family."""
    params = {k: v for k, v in (params or {}).items() if v is not None}
    try:
        return _build(family, params, n)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{family}: {exc}") from exc


def _build(family, params, n):
    if family == "linear":
        (a,) = _require(params, family, "a")
        a = _vector(a)
        return Model(family, {"a": a.tolist()}, cf.linear_payoff(a), cf.linear_boundary(a))
    if family == "power":
        (w,) = _require(params, family, "w")
        w = _vector(w)
        if w.size == 1 and n is not None and n > 2:
            raise ConfigError("power: give all n weights for more than two coins")
        p = cf.ConstantMeanParams(tuple(w))
        return Model(family, {"w": list(p.w)}, cf.geometric_mean_payoff(p), cf.constant_mean_boundary(p))
    if family == "quadratic":
        A, a = _require(params, family, "A", "a")
        a = _vector(a)
        A = np.asarray(_vector(A) if isinstance(A, str) else A, dtype=float)
        A = A.reshape(a.size, a.size)
        p = cf.QuadraticParams(A, a, float(params.get("b", 0.0)))
        lo = 1e-2 * min(1.0, cf.quadratic_validity_limit(p)) if p.m == 1 else 1e-2
        hi = 1e2 * max(1.0, cf.quadratic_validity_limit(p)) if p.m == 1 else 1e2
        return Model(family, {"A": A.tolist(), "a": a.tolist(), "b": p.b}, cf.quadratic_payoff(p),
                     cf.quadratic_boundary(p), ratio_range=(lo, hi))
    if family == "covered_call_expiry":
        (K,) = _require(params, family, "K")
        return Model(family, {"K": float(K)}, cf.covered_call_expiry_payoff(float(K)),
                     cf.covered_call_expiry_boundary(float(K)))
    if family == "bs_covered_call":
        K, sigma, tau = _require(params, family, "K", "sigma", "tau")
        p = cf.BSCoveredCallParams(float(K), float(sigma), float(tau))
        return Model(family, {"K": p.K, "sigma": p.sigma, "tau": p.tau},
                     cf.bs_covered_call_payoff(p), cf.bs_covered_call_boundary(p))
    if family == "perpetual_put":
        K, sigma, r = _require(params, family, "K", "sigma", "r")
        p = cf.PerpetualPutParams(float(K), float(sigma), float(r))
        return Model(family, {"K": p.K, "sigma": p.sigma, "r": p.r},
                     cf.perpetual_put_payoff(p), cf.perpetual_put_boundary(p))
    if family == "log_contract":
        p = cf.LogContractParams(float(params.get("k", 0.0)))
        return Model(family, {"k": p.k}, cf.log_contract_payoff(p), cf.log_contract_boundary(p),
                     ratio_range=(p.price_floor, max(DEFAULT_RATIOS[1], 10 * p.price_floor)))
    if family == "custom_grid":
        prices, values = _require(params, family, "prices", "values")
        prices, values = _vector(prices), _vector(values)
        return Model(family, {"prices": prices.tolist(), "values": values.tolist()},
                     cf.custom_grid_payoff(prices, values), None,
                     ratio_range=(float(prices[0]) / 10, float(prices[-1]) * 10))
    raise ConfigError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")


def load_config(path) -> dict:
    """Read a JSON config.  Keys: ``family``, ``params``, ``n`` and optionally
    ``simulation`` (``sigma``, ``T``, ``steps``, ``paths``, ``seed``, ``c0``) and ``set``."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if "params" in data and not isinstance(data["params"], dict):
        raise ConfigError("params must be an object")
    if "n" in data and (not isinstance(data["n"], int) or data["n"] < 2):
        raise ConfigError("n must be an integer >= 2")
    for key in ("simulation",):
        if key in data and not isinstance(data[key], dict):
            raise ConfigError(f"{key} must be an object")
    return data

