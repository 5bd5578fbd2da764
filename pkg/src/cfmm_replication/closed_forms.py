"""Built-in payoff families and their closed-form trading sets.

Every family comes as a pair: a payoff (with analytic supergradient) and
the trading set whose arbitrage value reproduces it.  Two-coin families
quote the risky coin first and the numeraire second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .normal import norm_cdf, norm_quantile
from .payoff import PayoffFunction, ReducedPayoff, perspective
from .sets import CurveSet, LevelSet


# ---------------------------------------------------------------------------
# parameter types


@dataclass(frozen=True)
class ConstantMeanParams:
    w: tuple

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.w, dtype=float))
        if w.size == 1:
            w = np.array([w[0], 1.0 - w[0]])
        if w.size < 2 or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be strictly positive and sum to 1")
        object.__setattr__(self, "w", tuple(float(x) for x in w))

    @property
    def weights(self) -> np.ndarray:
        return np.array(self.w)


@dataclass(frozen=True, eq=False)
class QuadraticParams:
    """``U(c') = -1/2 c'^T A c' + a^T c' + b`` with ``A`` positive definite."""

    A: np.ndarray
    a: np.ndarray
    b: float = 0.0
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        if A.shape != (a.size, a.size):
            raise ValueError("A must be square and match the length of a")
        if np.max(np.abs(A - A.T)) > 1e-12:
            raise ValueError("A must be symmetric")
        try:
            chol = np.linalg.cholesky(A)
        except np.linalg.LinAlgError as exc:
            raise ValueError("A must be strictly positive definite") from exc
        if np.any(a < 0) or self.b < 0:
            raise ValueError("offsets a and b must be nonnegative")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "chol", chol)

    @property
    def m(self) -> int:
        return self.a.size

    def inv_quad(self, x: np.ndarray) -> np.ndarray:
        """``x^T A^{-1} x`` along the last axis, via the Cholesky factor."""
        flat = x.reshape(-1, self.m).T
        y = np.linalg.solve(self.chol, flat)
        return np.sum(y * y, axis=0).reshape(x.shape[:-1])


@dataclass(frozen=True)
class BSCoveredCallParams:
    K: float
    sigma: float
    tau: float

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError("strike must be positive")
        if self.sigma < 0 or self.tau < 0:
            raise ValueError("volatility and maturity must be nonnegative")
        if not math.isfinite(self.sigma * math.sqrt(self.tau)):
            raise ValueError("sigma * sqrt(tau) must be finite")

    @property
    def s(self) -> float:
        return self.sigma * math.sqrt(self.tau)


@dataclass(frozen=True)
class PerpetualPutParams:
    K: float
    sigma: float
    r: float

    def __post_init__(self):
        if not (self.K > 0 and self.sigma > 0 and self.r > 0):
            raise ValueError("K, sigma and r must be positive")

    @property
    def gamma(self) -> float:
        return 2 * self.r / (2 * self.r + self.sigma**2)

    @property
    def L(self) -> float:
        return self.gamma * self.K

    @property
    def beta(self) -> float:
        # decay exponent of the put value above the exercise boundary
        return 2 * self.r / self.sigma**2


@dataclass(frozen=True)
class LogContractParams:
    k: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.k):
            raise ValueError("k must be finite")

    @property
    def price_floor(self) -> float:
        return math.exp(-self.k)


# ---------------------------------------------------------------------------
# payoffs


def linear_payoff(a) -> PayoffFunction:
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size < 2 or np.any(a < 0):
        raise ValueError("linear payoff needs a nonnegative vector of at least two entries")
    return PayoffFunction(a.size, lambda c: c @ a, lambda c: np.broadcast_to(a, c.shape).copy(),
                          name="linear", params={"a": a.tolist()})


def geometric_mean_payoff(params: ConstantMeanParams) -> PayoffFunction:
    w = params.weights

    def value(c):
        return np.exp(np.sum(w * np.log(c), axis=-1))

    def gradient(c):
        return w * value(c)[..., None] / c

    return PayoffFunction(w.size, value, gradient, name="power", params={"w": list(params.w)})


def quadratic_reduced(params: QuadraticParams) -> ReducedPayoff:
    A, a, b = params.A, params.a, params.b

    def value(x):
        return -0.5 * np.einsum("...i,ij,...j->...", x, A, x) + x @ a + b

    def gradient(x):
        return a - x @ A

    return ReducedPayoff(params.m, value, gradient, name="quadratic",
                         params={"A": A.tolist(), "a": a.tolist(), "b": b})


def quadratic_payoff(params: QuadraticParams) -> PayoffFunction:
    return perspective(quadratic_reduced(params))


def quadratic_validity_limit(params: QuadraticParams) -> float:
    """Largest relative price at which the one-coin quadratic payoff is still replicated."""
    if params.m != 1:
        raise ValueError("validity limit is only tabulated for one risky coin")
    return float(params.a[0] / params.A[0, 0])


def covered_call_expiry_payoff(K: float) -> PayoffFunction:
    if not K > 0:
        raise ValueError("strike must be positive")
    U = ReducedPayoff(
        1,
        lambda x: np.minimum(x[..., 0], K),
        # left-continuous selection at the kink x == K
        lambda x: np.where(x <= K, 1.0, 0.0),
        name="covered_call_expiry", params={"K": K},
    )
    return perspective(U)


def bs_d1_d2(x, params: BSCoveredCallParams):
    s = params.s
    with np.errstate(divide="ignore"):
        d1 = (np.log(np.asarray(x, dtype=float) / params.K) + 0.5 * s * s) / s
    return d1, d1 - s


def bs_covered_call_price(x, params: BSCoveredCallParams):
    """Zero-rate Black-Scholes value of stock-minus-call at relative price ``x``."""
    x = np.asarray(x, dtype=float)
    if params.s == 0.0:
        return np.minimum(x, params.K)
    d1, d2 = bs_d1_d2(x, params)
    return x * norm_cdf(-d1) + params.K * norm_cdf(d2)


def bs_covered_call_holdings(x, params: BSCoveredCallParams):
    """Delta of the covered call, i.e. the risky-coin reserve ``1 - Phi(d1)``."""
    x = np.asarray(x, dtype=float)
    if params.s == 0.0:
        return np.where(x <= params.K, 1.0, 0.0)
    d1, _ = bs_d1_d2(x, params)
    return norm_cdf(-d1)


def bs_covered_call_payoff(params: BSCoveredCallParams) -> PayoffFunction:
    U = ReducedPayoff(
        1,
        lambda x: bs_covered_call_price(x[..., 0], params),
        lambda x: bs_covered_call_holdings(x, params),
        name="bs_covered_call",
        params={"K": params.K, "sigma": params.sigma, "tau": params.tau},
    )
    return perspective(U)


def perpetual_put_reduced(params: PerpetualPutParams) -> ReducedPayoff:
    K, L, beta = params.K, params.L, params.beta

    def value(x):
        x = x[..., 0]
        with np.errstate(divide="ignore", over="ignore"):
            upper = K - (K - L) * (np.maximum(x, L) / L) ** (-beta)
        return np.where(x <= L, x, upper)

    def gradient(x):
        with np.errstate(divide="ignore", over="ignore"):
            upper = (K - L) * beta / L * (np.maximum(x, L) / L) ** (-beta - 1.0)
        return np.where(x <= L, 1.0, upper)

    return ReducedPayoff(1, value, gradient, name="perpetual_put",
                         params={"K": K, "sigma": params.sigma, "r": params.r})


def perpetual_put_payoff(params: PerpetualPutParams) -> PayoffFunction:
    return perspective(perpetual_put_reduced(params))


def log_contract_payoff(params: LogContractParams) -> PayoffFunction:
    """Arbitrage value of the log-contract curve ``R2 = k - ln R1``.

    Above the floor price ``e^{-k}`` this is ``1 + k + ln x`` (the hedged
    log payoff up to the additive constant); below it the pool holds only the
    risky coin, ``e^k`` units of it.
    """
    k, floor = params.k, params.price_floor

    def value(x):
        x = x[..., 0]
        with np.errstate(divide="ignore"):
            return np.where(x <= floor, math.exp(k) * x, 1.0 + k + np.log(np.maximum(x, floor)))

    def gradient(x):
        return np.where(x <= floor, math.exp(k), 1.0 / np.maximum(x, floor))

    return perspective(ReducedPayoff(1, value, gradient, name="log_contract", params={"k": k}))


def custom_grid_payoff(prices, values) -> PayoffFunction:
    """Tabulated two-coin payoff, piecewise linear in log relative price.

    Below the first node the payoff is proportional to price, above the last
    it is flat.  Concavity is the caller's business; run
    :func:`~cfmm_replication.payoff.check_consistency` on the result.
    """
    x = np.asarray(prices, dtype=float)
    u = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.shape != u.shape or x.size < 2:
        raise ValueError("custom grid needs matching 1-d price and value tables")
    if np.any(x <= 0) or np.any(np.diff(x) <= 0):
        raise ValueError("grid prices must be positive and strictly increasing")
    lx = np.log(x)
    beta = np.diff(u) / np.diff(lx)

    def value(p):
        p = p[..., 0]
        with np.errstate(divide="ignore"):
            inner = np.interp(np.log(np.maximum(p, x[0])), lx, u)
        return np.where(p < x[0], u[0] * p / x[0], inner)

    def gradient(p):
        p = p[..., 0]
        idx = np.clip(np.searchsorted(x, p, side="left") - 1, 0, beta.size - 1)
        inner = beta[idx] / p
        out = np.where(p > x[-1], 0.0, inner)
        return np.where(p <= x[0], u[0] / x[0], out)[..., None]

    U = ReducedPayoff(1, value, gradient, name="custom_grid",
                      params={"prices": x.tolist(), "values": u.tolist()})
    return perspective(U)


# ---------------------------------------------------------------------------
# closed-form trading sets


def linear_boundary(a) -> "CurveSet | LevelSet":
    """Holding exactly ``a``: the set is ``{R >= a}``, a single boundary point."""
    a = np.asarray(a, dtype=float)
    meta = {"family": "linear", "params": {"a": a.tolist()}, "source": "closed_form"}
    if a.size == 2:
        a1, a2 = float(a[0]), float(a[1])
        return CurveSet(phi=lambda r: np.full(np.shape(r), a2), r1_min=a1, r1_max=a1,
                        slope=lambda r: np.zeros(np.shape(r)), points=a[None, :].copy(), meta=meta)
    return LevelSet(a.size, lambda R: np.min(R - a, axis=-1),
                    complete=lambda Rp: np.full(np.shape(Rp)[:-1], a[-1]), meta=meta)


def constant_mean_boundary(params: ConstantMeanParams) -> "CurveSet | LevelSet":
    w = params.weights
    meta = {"family": "power", "params": {"w": list(params.w)}, "source": "closed_form"}
    if w.size == 2:
        w1, w2 = w
        expo = -w1 / w2

        def phi(r):
            with np.errstate(divide="ignore"):
                return w2 * (np.asarray(r) / w1) ** expo

        def slope(r):
            return expo * phi(r) / np.asarray(r)

        return CurveSet(phi=phi, r1_min=0.0, r1_max=math.inf, slope=slope, meta=meta)

    def level(R):
        with np.errstate(divide="ignore"):
            return np.sum(w * np.log(R / w), axis=-1)

    def complete(Rp):
        with np.errstate(divide="ignore"):
            s = np.sum(w[:-1] * np.log(Rp / w[:-1]), axis=-1)
        return w[-1] * np.exp(-s / w[-1])

    return LevelSet(w.size, level, complete=complete, level_gradient=lambda R: w / R, meta=meta)


def quadratic_boundary(params: QuadraticParams) -> "CurveSet | LevelSet":
    """``1/2 (R'-a)^T A^{-1} (R'-a) <= R_n - b``; not upward closed in ``R'``."""
    a, b = params.a, params.b
    meta = {"family": "quadratic",
            "params": {"A": params.A.tolist(), "a": a.tolist(), "b": b}, "source": "closed_form"}
    if params.m == 1:
        A = float(params.A[0, 0])
        a1 = float(a[0])
        return CurveSet(
            phi=lambda r: b + (np.asarray(r) - a1) ** 2 / (2 * A),
            slope=lambda r: (np.asarray(r) - a1) / A,
            r1_min=0.0, r1_max=math.inf, upward=False, meta=meta,
        )

    def complete(Rp):
        return b + 0.5 * params.inv_quad(Rp - a)

    return LevelSet(params.m + 1, lambda R: R[..., -1] - complete(R[..., :-1]),
                    complete=complete, meta=meta)


def covered_call_expiry_boundary(K: float) -> CurveSet:
    if not K > 0:
        raise ValueError("strike must be positive")
    return CurveSet(
        phi=lambda r: K * (1.0 - np.asarray(r)),
        slope=lambda r: np.full(np.shape(r), -K),
        r1_min=0.0, r1_max=1.0,
        meta={"family": "covered_call_expiry", "params": {"K": K}, "source": "closed_form"},
    )


def bs_covered_call_boundary(params: BSCoveredCallParams) -> CurveSet:
    """``R2 = K Phi(Phi^{-1}(1 - R1) - sigma sqrt(tau))`` on ``[0, 1]``."""
    K, s = params.K, params.s
    meta = {"family": "bs_covered_call",
            "params": {"K": K, "sigma": params.sigma, "tau": params.tau}, "source": "closed_form"}
    if s == 0.0:
        out = covered_call_expiry_boundary(K)
        return CurveSet(phi=out.phi, slope=out.slope, r1_min=0.0, r1_max=1.0, meta=meta)

    def phi(r):
        r = np.asarray(r, dtype=float)
        inner = np.clip(r, 0.0, 1.0)
        # Phi^{-1}(1 - R1) = -Phi^{-1}(R1); the endpoints map to the limits K and 0
        val = K * norm_cdf(-(norm_quantile(inner) + s))
        return np.where(r <= 0.0, K, np.where(r >= 1.0, 0.0, val))

    def slope(r):
        r = np.clip(np.asarray(r, dtype=float), 0.0, 1.0)
        x = -norm_quantile(r)
        with np.errstate(over="ignore", invalid="ignore"):
            d = -K * np.exp(s * x - 0.5 * s * s)
        return np.where(r >= 1.0, 0.0, np.where(r <= 0.0, -np.inf, d))

    return CurveSet(phi=phi, slope=slope, r1_min=0.0, r1_max=1.0, meta=meta)


def bs_marginal_price(R1, params: BSCoveredCallParams):
    """Relative price at which ``R1`` is the arbitrage-optimal risky reserve."""
    s = params.s
    x = -norm_quantile(np.asarray(R1, dtype=float))
    return params.K * np.exp(s * x - 0.5 * s * s)


def perpetual_put_boundary(params: PerpetualPutParams) -> CurveSet:
    K, g = params.K, params.gamma

    def slope(r):
        with np.errstate(divide="ignore"):
            return -K * g * np.asarray(r, dtype=float) ** (g - 1.0)

    return CurveSet(
        phi=lambda r: K * (1.0 - np.asarray(r, dtype=float) ** g),
        slope=slope,
        r1_min=0.0, r1_max=1.0,
        meta={"family": "perpetual_put",
              "params": {"K": K, "sigma": params.sigma, "r": params.r}, "source": "closed_form"},
    )


def log_contract_boundary(params: LogContractParams) -> CurveSet:
    """``R2 = k - ln R1`` for ``0 < R1 <= e^k``."""
    k = params.k

    def phi(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return k - np.log(r)

    return CurveSet(
        phi=phi,
        slope=lambda r: -1.0 / np.asarray(r, dtype=float),
        r1_min=0.0, r1_max=math.exp(k), closed_left=False,
        valid_prices=(params.price_floor, math.inf),
        meta={"family": "log_contract", "params": {"k": k}, "source": "closed_form"},
    )


# ---------------------------------------------------------------------------
# delta-hedge construction


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-9, max_depth: int = 40) -> float:
    """Adaptive Simpson quadrature with Richardson correction."""

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + recurse(m, b, fm, frm, fb, right, tol / 2, depth - 1))

    if a == b:
        return 0.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def delta_hedge_curve(holdings, price_range=(1e-4, 1e4), k=None, calibrate=None,
                      nodes: int = 1025, tol: float = 1e-9) -> CurveSet:
    """Trading curve whose arbitrage-optimal risky reserve follows ``holdings(c1)``.

    The marginal price ``p(R1)`` is the inverse of ``holdings``; the curve is
    ``R2 = k + F(R1)`` with ``F(R1) = -int p dR1``, integrated by parts over
    price so that ``holdings`` never needs inverting.  ``F`` is normalised so that
    its values at the two ends of the traced holdings range sum to zero, which
    gives ``k - ln R1`` for ``holdings = 1/c1`` on a price range symmetric about
    1 in log terms.  The constant ``k`` is either given, or solved from
    ``calibrate=(c0, target_value)`` so that ``c0 R1(c0) + R2 = target_value``.
    """
    lo, hi = price_range
    if not 0 < lo < hi:
        raise ValueError("price range must be positive and increasing")
    if (k is None) == (calibrate is None):
        raise ValueError("give exactly one of k or calibrate")
    prices = np.geomspace(lo, hi, nodes)
    hold = np.array([float(holdings(p)) for p in prices])
    steps = np.diff(hold)
    if not np.all(np.isfinite(hold)) or np.any(steps > 0) or not np.any(steps < 0):
        raise ValueError("holdings must be strictly decreasing and invertible on the price range")
    # a plateau is a kink of the curve: keep one node per holdings level
    keep = np.concatenate([[True], steps < 0])
    prices, hold = prices[keep], hold[keep]

    def price_integral(pa, pb, ha, hb):
        # int p dR1 over the holdings range of prices [pa, pb], by parts:
        # pa h(pa) - pb h(pb) + int h dp, the last integral taken in log price
        if pb <= pa:
            return 0.0
        f = lambda y: float(holdings(math.exp(y))) * math.exp(y)
        scale = max(ha - hb, 0.0) * pb
        floor = 1e-15 * (pb - pa) * max(abs(ha), abs(hb))
        area = adaptive_simpson(f, math.log(pa), math.log(pb), tol=max(tol * scale, floor, 1e-300))
        return pa * ha - pb * hb + area

    integrals = np.array([price_integral(prices[j], prices[j + 1], hold[j], hold[j + 1])
                          for j in range(prices.size - 1)])

    # nodes ordered by increasing R1 (decreasing price)
    R = hold[::-1]
    slopes = -prices[::-1]
    F = np.concatenate([[0.0], -np.cumsum(integrals[::-1])])
    F -= 0.5 * (F[0] + F[-1])

    if k is None:
        c0, target = calibrate
        if not lo <= c0 <= hi:
            raise ValueError("calibration price outside the price range")
        r0 = float(holdings(c0))
        j = int(np.argmin(np.abs(prices - c0)))
        Fj = F[prices.size - 1 - j]
        if c0 >= prices[j]:
            F0 = Fj + price_integral(prices[j], c0, hold[j], r0)
        else:
            F0 = Fj - price_integral(c0, prices[j], r0, hold[j])
        k = float(target - c0 * r0 - F0)

    # nodes closer than rounding in R1 make the spline coefficients overflow
    gap = 1e-12 * (R[-1] - R[0])
    keep, last = [0], R[0]
    for i in range(1, R.size - 1):
        if R[i] - last > gap and R[-1] - R[i] > gap:
            keep.append(i)
            last = R[i]
    keep.append(R.size - 1)
    R, F, slopes = R[keep], F[keep], slopes[keep]
    spline = CubicHermiteSpline(R, F + k, slopes)
    deriv = spline.derivative()
    return CurveSet(
        phi=lambda r: spline(np.asarray(r, dtype=float)),
        slope=lambda r: deriv(np.asarray(r, dtype=float)),
        r1_min=float(R[0]), r1_max=float(R[-1]),
        points=np.column_stack([R, F + k]),
        meta={"family": "delta_hedge", "params": {"k": float(k)}, "source": "delta_hedge",
              "price_range": [lo, hi], "nodes": int(nodes), "quadrature_tol": tol},
    )
