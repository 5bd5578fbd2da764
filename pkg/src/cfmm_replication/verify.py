"""Forward direction: arbitrage value of a trading set, and round-trip checks.

The portfolio value of a set ``S`` at prices ``c`` is ``inf {c.R : R in S}``.
For two coins the infimum runs along the boundary curve; the objective
``c1 R1 + c2 phi(R1)`` is convex in ``R1`` and therefore unimodal in
``log R1``, which is the coordinate searched.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .optimize import golden_section
from .payoff import PayoffFunction, as_prices
from .sets import CurveSet, DomainError, LevelSet, TradingSet

# log R1 is never searched below this (R1 ~ 1e-300)
LOG_FLOOR = -690.0
LOG_CEIL = 700.0
DEFAULT_BOUND = 1e-5


class UnboundedSetError(RuntimeError):
    """The forward objective kept decreasing; the set is corrupt."""


@dataclass(frozen=True)
class ForwardSolution:
    value: float
    argmin_reserves: np.ndarray
    iterations: int
    gap_estimate: float


def _curve_objective(S: CurveSet, c1, c2):
    def g(x):
        r = np.exp(x)
        with np.errstate(invalid="ignore", over="ignore"):
            val = c1 * r + c2 * S._phi_clipped(r)
        return np.where(np.isnan(val), np.inf, val)
    return g


def _curve_brackets(S: CurveSet, g, m: int):
    lo = math.log(S.r1_min) if S.r1_min > 0 else None
    if math.isfinite(S.r1_max):
        hi = np.full(m, math.log(S.r1_max))
        lo = np.full(m, lo if lo is not None else hi[0] + LOG_FLOOR - 1.0)
        return np.maximum(lo, LOG_FLOOR), hi
    start = 0.0 if lo is None else lo
    lo = np.full(m, max(start - 700.0, LOG_FLOOR) if lo is None else lo)
    # expand the upper end geometrically until the objective turns up
    hi = np.full(m, start + 1.0)
    step = np.ones(m)
    active = np.ones(m, dtype=bool)
    while np.any(active):
        up = g(hi) > g(hi - step)
        active &= ~up
        if not np.any(active):
            break
        if np.any(hi[active] >= LOG_CEIL):
            raise UnboundedSetError("forward objective decreases without bound")
        step = np.where(active, 2 * step, step)
        hi = np.where(active, np.minimum(hi + step, LOG_CEIL), hi)
    return lo, hi


def forward_curve(S: CurveSet, C):
    """Vectorised forward values for a two-coin curve set.

    ``C`` has shape ``(m, 2)``.  Returns ``(values, argmins, iterations, gaps)``.
    """
    C = np.atleast_2d(as_prices(C, 2))
    c1, c2 = C[:, 0], C[:, 1]
    m = C.shape[0]
    if S.degenerate or S.r1_max <= 0:
        r1 = np.full(m, S.r1_max)
        r2 = S._phi_clipped(r1)
        R = np.column_stack([r1, r2])
        return c1 * r1 + c2 * r2, R, 0, np.zeros(m)

    g = _curve_objective(S, c1, c2)
    lo, hi = _curve_brackets(S, g, m)
    x, fx, it = golden_section(g, lo, hi)
    r1 = np.exp(x)
    # an exact left endpoint (R1 = 0 with finite phi) cannot be reached in log R1
    if S.r1_min == 0.0 and S.closed_left:
        phi0 = S._phi_clipped(np.zeros(1))[0]
        if math.isfinite(phi0):
            f0 = c2 * phi0
            take = f0 <= fx
            r1 = np.where(take, 0.0, r1)
    r2 = S._phi_clipped(r1)
    values = c1 * r1 + c2 * r2
    if not np.all(np.isfinite(values)):
        raise UnboundedSetError("non-finite forward value")
    gaps = _curve_gap_estimate(S, c1, c2, r1, values)
    return values, np.column_stack([r1, r2]), it, gaps


def _curve_gap_estimate(S, c1, c2, r1, values):
    # supporting-line lower bound: phi(R) >= phi(r1) + phi'(r1)(R - r1) on the domain
    if S.slope is None:
        return np.zeros_like(values)
    with np.errstate(invalid="ignore", over="ignore"):
        s = np.asarray(S.slope(np.clip(r1, S.r1_min, S.r1_max)), dtype=float)
        coef = c1 + c2 * s
        ends = []
        for end in (S.r1_min, S.r1_max):
            if math.isfinite(end):
                ends.append(values + coef * (end - r1))
            else:
                ends.append(np.where(np.abs(coef) <= 1e-12 * (1 + np.abs(values)), values,
                                     np.where(coef * np.sign(end) < 0, -np.inf, values)))
        lower = np.minimum(*ends)
    lower = np.where(np.isfinite(lower), lower, values)
    return np.maximum(values - lower, 0.0)


def _complete_last(S: LevelSet, Rp: np.ndarray) -> float:
    if S.complete is not None:
        return float(S.complete(Rp))
    # bisection on the last reserve; the set is upward closed in it
    def ok(t):
        return S.gap(np.append(Rp, t)) >= 0.0
    hi = 1.0
    while not ok(hi):
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    lo = 0.0
    if ok(lo):
        return 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * hi:
            break
    return hi


def forward_level(S: LevelSet, c, sweeps: int = 400, restarts: int = 3,
                  tol: float = 1e-14) -> ForwardSolution:
    """Pairwise coordinate descent on ``c.R`` along the set boundary.

    Each move re-optimises one reserve ``R_i`` (log coordinate) with the last
    reserve held on the boundary.  The returned ``gap_estimate`` comes from a
    supporting hyperplane at the final point and certifies the value from
    below.
    """
    c = as_prices(c, S.n)
    if np.any(c <= 0):
        raise ValueError("forward solve needs strictly positive prices")
    n = S.n
    best = None
    total_it = 0
    for restart in range(restarts):
        Rp = np.full(n - 1, 2.0 ** (restart - 1))
        value = float(c[:-1] @ Rp + c[-1] * _complete_last(S, Rp))
        for _ in range(sweeps):
            previous = value
            for i in range(n - 1):
                def g(x, i=i):
                    out = np.empty_like(x)
                    for j, xv in enumerate(x):
                        trial = Rp.copy()
                        trial[i] = math.exp(xv)
                        last = _complete_last(S, trial)
                        out[j] = c[:-1] @ trial + c[-1] * last
                    return out
                centre = math.log(Rp[i])
                x, fx, it = golden_section(g, [centre - 20.0], [centre + 20.0], rtol=1e-13)
                total_it += it
                if fx[0] <= value:
                    Rp[i] = math.exp(x[0])
                    value = float(fx[0])
            if previous - value <= tol * (1.0 + abs(value)):
                break
        R = np.append(Rp, _complete_last(S, Rp))
        value = float(c @ R)
        if best is None or value < best[0]:
            best = (value, R)
    value, R = best
    return ForwardSolution(value, R, total_it, _level_gap(S, c, R, value))


def _level_gap(S: LevelSet, c, R, value):
    if S.level_gradient is not None:
        q = np.asarray(S.level_gradient(R), dtype=float)
    else:
        q = np.empty(S.n)
        for i in range(S.n):
            h = 1e-6 * max(R[i], 1e-12)
            up, dn = R.copy(), R.copy()
            up[i] += h
            dn[i] = max(dn[i] - h, 0.0)
            q[i] = (S.gap(up) - S.gap(dn)) / (up[i] - dn[i])
    if np.any(q <= 0):
        return math.inf
    # every point of S satisfies q.R' >= q.R, hence c.R' >= (q.R) min_i(c_i / q_i)
    lower = float(q @ R) * float(np.min(c / q))
    return max(value - lower, 0.0)


def portfolio_value(S: TradingSet, c) -> ForwardSolution:
    """Arbitrage (portfolio) value of ``S`` at strictly positive prices ``c``."""
    c = as_prices(c, S.n)
    if np.any(c <= 0):
        raise ValueError("forward solve needs strictly positive prices")
    if isinstance(S, CurveSet):
        v, R, it, gap = forward_curve(S, c[None, :])
        return ForwardSolution(float(v[0]), R[0], it, float(gap[0]))
    if isinstance(S, LevelSet):
        return forward_level(S, c)
    raise TypeError(f"unsupported trading set {type(S).__name__}")


def forward_values(S: TradingSet, C) -> np.ndarray:
    """Forward values for a batch of price vectors, shape ``(m, n)``."""
    C = np.atleast_2d(as_prices(C, S.n))
    if isinstance(S, CurveSet):
        return forward_curve(S, C)[0]
    return np.array([portfolio_value(S, c).value for c in C])


def marginal_price(S: CurveSet, R1):
    """Relative price at which ``(R1, phi(R1))`` is the arbitrage-optimal reserve."""
    if not isinstance(S, CurveSet):
        raise TypeError("marginal prices are defined for two-coin curve sets")
    return S.marginal_price(R1)


def relative_price_grid(ratios) -> np.ndarray:
    """Two-coin price vectors ``(p, 1)`` for an array of relative prices ``p``."""
    p = np.asarray(ratios, dtype=float)
    return np.column_stack([p, np.ones_like(p)])


@dataclass(frozen=True)
class RoundTripReport:
    prices: np.ndarray
    target: np.ndarray
    forward: np.ndarray
    bound: float

    @property
    def abs_error(self) -> np.ndarray:
        return np.abs(self.forward - self.target)

    @property
    def rel_error(self) -> np.ndarray:
        return self.abs_error / (1.0 + np.abs(self.target))

    @property
    def gap(self) -> np.ndarray:
        """Signed ``forward - target``; nonnegative whenever ``S`` was built from the target."""
        return self.forward - self.target

    @property
    def max_rel_error(self) -> float:
        return float(np.max(self.rel_error))

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.bound

    @property
    def failing_rows(self) -> np.ndarray:
        return np.flatnonzero(self.rel_error > self.bound)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = [f"c{i + 1}" for i in range(self.prices.shape[1])]
        w.writerow(names + ["target", "forward", "rel_error"])
        for c, t, f, e in zip(self.prices, self.target, self.forward, self.rel_error):
            w.writerow([f"{x:.12g}" for x in (*c, t, f, e)])
        return buf.getvalue()

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [f"round trip {status}: {len(self.target)} prices, "
                 f"max rel error {self.max_rel_error:.12g} (bound {self.bound:.3g})"]
        bad = self.failing_rows
        if bad.size:
            lines.append(f"{bad.size} rows exceed the bound; gap table (forward - target):")
            for i in bad[:20]:
                c = ", ".join(f"{x:.6g}" for x in self.prices[i])
                lines.append(f"  c=({c})  gap={self.gap[i]:.12g}")
            if bad.size > 20:
                lines.append(f"  ... {bad.size - 20} more")
        return "\n".join(lines)


def round_trip(V: PayoffFunction, S: TradingSet, price_grid,
               bound: float = DEFAULT_BOUND) -> RoundTripReport:
    """Compare ``V`` with the forward value of ``S`` on a grid of prices.

    ``price_grid`` is either an ``(m, n)`` array of price vectors or, for two
    coins, a 1-d array of relative prices ``c1 / c2``.
    """
    grid = np.asarray(price_grid, dtype=float)
    if grid.ndim == 1:
        grid = relative_price_grid(grid)
    grid = as_prices(grid, S.n)
    if np.any(grid <= 0):
        raise ValueError("round-trip grid must be strictly positive")
    target = np.asarray(V(grid), dtype=float)
    forward = forward_values(S, grid)
    return RoundTripReport(grid, target, forward, bound)


__all__ = [
    "DomainError", "ForwardSolution", "RoundTripReport", "UnboundedSetError",
    "forward_curve", "forward_level", "forward_values", "marginal_price",
    "portfolio_value", "relative_price_grid", "round_trip",
]
