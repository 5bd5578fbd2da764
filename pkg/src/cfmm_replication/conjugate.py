"""From a payoff to its trading set.

For a consistent payoff ``V`` every supergradient ``R`` at a price ``c``
satisfies ``c.R = V(c)`` and lies in the feasible reserve set, so sweeping
``c`` over relative prices traces the lower boundary of the set.  The
indicator trading function is the signed gap ``inf_c (c.R - V(c))`` taken
over the price simplex (1-homogeneity makes the simplex sufficient).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .optimize import golden_section
from .payoff import DEFAULT_TOL, FD_TOL, PayoffFunction, as_prices
from .sets import MEMBERSHIP_TOL, CurveSet

DEFAULT_RATIOS = (1e-4, 1e4)
DEFAULT_POINTS = 512


class NonConcavePayoffError(ValueError):
    """Traced reserves are not monotone in price, so the payoff is not concave."""


class TightnessError(ValueError):
    """``c.R != V(c)`` at a supergradient; the payoff is not 1-homogeneous there."""


def reserves_on_boundary(V: PayoffFunction, c, tol: Optional[float] = None) -> np.ndarray:
    """A supergradient of ``V`` at ``c``, checked to satisfy ``c.R = V(c)``.

    Vectorised over leading axes of ``c``.
    """
    c = as_prices(c, V.n)
    if np.any(c <= 0):
        raise ValueError("boundary reserves need strictly positive prices")
    if tol is None:
        tol = DEFAULT_TOL if V.gradient is not None else FD_TOL
    R = V.supergradient(c)
    if np.any(R < -tol):
        raise NonConcavePayoffError(f"{V.name}: negative supergradient; payoff is decreasing")
    R = np.maximum(R, 0.0)
    v = np.asarray(V(c), dtype=float)
    miss = np.abs(np.sum(c * R, axis=-1) - v)
    if np.any(miss > tol * (1.0 + np.abs(v))):
        worst = float(np.max(miss / (1.0 + np.abs(v))))
        raise TightnessError(f"{V.name}: |c.R - V(c)| relative {worst:.3g} exceeds {tol:.3g}")
    return R


@dataclass(frozen=True, eq=False)
class HermiteCurve:
    """Piecewise cubic Hermite curve with one-sided slopes at every knot.

    ``d0[j]`` and ``d1[j]`` are the slopes at the left and right ends of
    interval ``j``; keeping them separate lets the curve carry kinks.
    """

    x: np.ndarray
    y: np.ndarray
    d0: np.ndarray
    d1: np.ndarray

    def _locate(self, r):
        r = np.asarray(r, dtype=float)
        j = np.clip(np.searchsorted(self.x, r, side="right") - 1, 0, self.x.size - 2)
        h = self.x[j + 1] - self.x[j]
        t = (r - self.x[j]) / h
        return j, h, t

    def __call__(self, r):
        j, h, t = self._locate(r)
        t2, t3 = t * t, t * t * t
        return ((2 * t3 - 3 * t2 + 1) * self.y[j] + (t3 - 2 * t2 + t) * h * self.d0[j]
                + (-2 * t3 + 3 * t2) * self.y[j + 1] + (t3 - t2) * h * self.d1[j])

    def derivative(self, r):
        j, h, t = self._locate(r)
        t2 = t * t
        return ((6 * t2 - 6 * t) * (self.y[j] - self.y[j + 1]) / h
                + (3 * t2 - 4 * t + 1) * self.d0[j] + (3 * t2 - 2 * t) * self.d1[j])


def _limit_slopes(x, y, d0, d1):
    # Fritsch-Carlson: keep every cubic piece nonincreasing
    delta = np.diff(y) / np.diff(x)
    d0, d1 = d0.copy(), d1.copy()
    flat = delta == 0.0
    d0[flat] = 0.0
    d1[flat] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(flat, 0.0, d0 / delta)
        beta = np.where(flat, 0.0, d1 / delta)
    alpha = np.maximum(alpha, 0.0)
    beta = np.maximum(beta, 0.0)
    norm = np.hypot(alpha, beta)
    scale = np.where(norm > 3.0, 3.0 / np.where(norm > 0, norm, 1.0), 1.0)
    return np.where(flat, 0.0, scale * alpha * delta), np.where(flat, 0.0, scale * beta * delta)


def _hermite_predict(xl, yl, dl, xr, yr, dr, x):
    h = xr - xl
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (x - xl) / h
    t2, t3 = t * t, t * t * t
    return ((2 * t3 - 3 * t2 + 1) * yl + (t3 - 2 * t2 + t) * h * dl
            + (-2 * t3 + 3 * t2) * yr + (t3 - t2) * h * dr)


def _ratios_from_grid(price_grid) -> np.ndarray:
    if price_grid is None:
        return np.geomspace(DEFAULT_RATIOS[0], DEFAULT_RATIOS[1], DEFAULT_POINTS)
    g = np.asarray(price_grid, dtype=float)
    if g.ndim == 2:
        g = as_prices(g, 2)
        if np.any(g <= 0):
            raise ValueError("price grid must be strictly positive")
        g = g[:, 0] / g[:, 1]
    if np.any(g <= 0) or g.size < 2:
        raise ValueError("need at least two strictly positive relative prices")
    return np.unique(g)


def _simplex(p):
    return np.column_stack([p, np.ones_like(p)]) / (1.0 + p)[:, None]


def trace_boundary(V: PayoffFunction, price_grid=None, tol: Optional[float] = None,
                   refine_tol: float = 1e-10, max_points: int = 20000) -> CurveSet:
    """Trace the two-coin trading set of ``V`` from its supergradients.

    ``price_grid`` holds relative prices ``c1/c2`` (or ``(m, 2)`` price
    vectors); the default is 512 log-spaced ratios on ``[1e-4, 1e4]``.  The
    grid is refined adaptively until the Hermite interpolant through
    neighbouring points predicts the midpoint reserve to ``refine_tol``, and at
    kinks until the bracketing prices agree to 1e-12 relative.
    """
    if V.n != 2:
        raise ValueError("boundary tracing is only available for two coins")
    if tol is None:
        tol = DEFAULT_TOL if V.gradient is not None else FD_TOL
    P = _ratios_from_grid(price_grid)
    R = reserves_on_boundary(V, _simplex(P), tol)

    scale = 1.0 + np.abs(R)
    if np.any(np.diff(R[:, 0]) > 1e-7 * scale[1:, 0]) or np.any(np.diff(R[:, 1]) < -1e-7 * scale[1:, 1]):
        raise NonConcavePayoffError(f"{V.name}: traced reserves are not monotone in price")

    for _ in range(200):
        i = np.arange(P.size - 1)
        same = np.all(np.abs(R[i + 1] - R[i]) <= 1e-13 * (1.0 + np.abs(R[i])), axis=1)
        open_bracket = P[i + 1] > P[i] * (1.0 + 1e-12)
        cand = i[~same & open_bracket]
        if cand.size == 0:
            break
        pm = np.sqrt(P[cand] * P[cand + 1])
        Rm = reserves_on_boundary(V, _simplex(pm), tol)
        # higher price -> smaller R1: the left knot of the piece is cand + 1
        left, right = R[cand + 1], R[cand]
        pred = _hermite_predict(left[:, 0], left[:, 1], -P[cand + 1],
                                right[:, 0], right[:, 1], -P[cand], Rm[:, 0])
        err = np.abs(pred - Rm[:, 1])
        at_end = (np.all(np.abs(Rm - left) <= 1e-13 * (1.0 + np.abs(left)), axis=1)
                  | np.all(np.abs(Rm - right) <= 1e-13 * (1.0 + np.abs(right)), axis=1))
        degenerate = np.abs(left[:, 0] - right[:, 0]) <= 1e-15 * (1.0 + np.abs(left[:, 0]))
        need = ~np.isfinite(err) | (err > refine_tol * (1.0 + np.abs(Rm[:, 1]))) | at_end | degenerate
        if not np.any(need):
            break
        if P.size + int(need.sum()) > max_points:
            raise RuntimeError("boundary refinement exceeded the point budget")
        P = np.concatenate([P, pm[need]])
        R = np.concatenate([R, Rm[need]])
        order = np.argsort(P)
        P, R = P[order], R[order]

    return _assemble(V, P, R, tol, refine_tol)


def _assemble(V, P, R, tol, refine_tol) -> CurveSet:
    # collapse repeated reserves; each unique point keeps its price range
    keep = np.ones(P.size, dtype=bool)
    keep[1:] = ~np.all(np.abs(np.diff(R, axis=0)) <= 1e-13 * (1.0 + np.abs(R[1:])), axis=1)
    starts = np.flatnonzero(keep)
    ends = np.append(starts[1:] - 1, P.size - 1)
    p_lo, p_hi = P[starts], P[ends]
    pts = R[starts]
    meta = {
        "family": V.name,
        "params": V.params,
        "source": "traced",
        "grid": {"ratio_min": float(P[0]), "ratio_max": float(P[-1]), "points": int(P.size)},
        "tolerances": {"tightness": tol, "refine": refine_tol, "membership": MEMBERSHIP_TOL},
    }
    if V.offset is not None:
        meta["offset"] = list(V.offset)

    if pts.shape[0] == 1 or np.max(np.ptp(pts, axis=0)) <= tol:
        a = pts[0]
        return CurveSet(phi=lambda r: np.full(np.shape(r), a[1]), r1_min=float(a[0]),
                        r1_max=float(a[0]), slope=lambda r: np.zeros(np.shape(r)),
                        points=a[None, :].copy(), meta=meta)

    # knots by increasing R1, i.e. decreasing price
    x, y = pts[::-1, 0].copy(), pts[::-1, 1].copy()
    p_lo, p_hi = p_lo[::-1], p_hi[::-1]
    if np.any(np.diff(x) <= 0):
        raise NonConcavePayoffError(f"{V.name}: traced R1 values are not strictly ordered")
    y = np.minimum.accumulate(y)
    # right slope of knot j is -(lowest price where it is optimal); left slope of knot j+1 is -(highest)
    d0, d1 = _limit_slopes(x, y, -p_lo[:-1], -p_hi[1:])
    curve = HermiteCurve(x, y, d0, d1)
    return CurveSet(phi=curve, slope=curve.derivative, r1_min=float(x[0]), r1_max=float(x[-1]),
                    points=np.column_stack([x, y]), meta=meta)


def _gap_two(V: PayoffFunction, R: np.ndarray) -> np.ndarray:
    R1, R2 = R[:, 0], R[:, 1]

    def f(t):
        c = np.column_stack([t, 1.0 - t])
        with np.errstate(invalid="ignore"):
            out = t * R1 + (1.0 - t) * R2 - np.asarray(V(c), dtype=float)
        return np.where(np.isnan(out), np.inf, out)

    m = R.shape[0]
    _, fx, _ = golden_section(f, np.zeros(m), np.ones(m))
    return fx


def _gap_many(V: PayoffFunction, R: np.ndarray, seed: int = 0, samples: int = 4000) -> float:
    n = V.n
    rng = np.random.default_rng(seed)
    cands = np.vstack([np.eye(n), np.full((1, n), 1.0 / n), rng.dirichlet(np.ones(n), samples)])
    with np.errstate(invalid="ignore"):
        vals = cands @ R - np.asarray(V(cands), dtype=float)
    vals = np.where(np.isnan(vals), np.inf, vals)
    c = cands[int(np.argmin(vals))].copy()
    best = float(np.min(vals))
    for _ in range(100):
        previous = best
        for i in range(n):
            for j in range(i + 1, n):
                mass = c[i] + c[j]
                if mass <= 0:
                    continue

                def f(t, i=i, j=j, mass=mass):
                    trial = np.repeat(c[None, :], t.size, axis=0)
                    trial[:, i] = t
                    trial[:, j] = mass - t
                    with np.errstate(invalid="ignore"):
                        out = trial @ R - np.asarray(V(trial), dtype=float)
                    return np.where(np.isnan(out), np.inf, out)

                t, ft, _ = golden_section(f, [0.0], [mass])
                if ft[0] <= best:
                    c[i], c[j] = t[0], mass - t[0]
                    best = float(ft[0])
        if previous - best <= 1e-15 * (1.0 + abs(best)):
            break
    return best


def membership_gap(V: PayoffFunction, R) -> "float | np.ndarray":
    """``inf (c.R - V(c))`` over the price simplex; ``>= -tol`` iff ``R`` is feasible.

    A recorded linear offset ``a`` is applied as ``gap_V(R - a)`` on the base payoff.
    """
    R = np.asarray(R, dtype=float)
    if R.shape[-1] != V.n:
        raise ValueError(f"expected {V.n} reserves")
    if np.any(R < 0):
        raise ValueError("reserves must be nonnegative")
    if V.offset is not None and V.base is not None:
        V, R = V.base, R - np.asarray(V.offset)
    flat = R.reshape(-1, V.n)
    if V.n == 2:
        out = _gap_two(V, flat)
    else:
        out = np.array([_gap_many(V, r) for r in flat])
    out = out.reshape(R.shape[:-1])
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TradingFunction:
    """Indicator trading function: ``0`` on the feasible set, ``-inf`` off it."""

    payoff: PayoffFunction
    level: float = 0.0
    tol: float = MEMBERSHIP_TOL

    def gap(self, R):
        return membership_gap(self.payoff, R)

    def __call__(self, R):
        g = np.asarray(self.gap(R), dtype=float)
        out = np.where(g >= -self.tol, 0.0, -math.inf)
        return float(out) if out.ndim == 0 else out

    def allows(self, R):
        """Whether ``R`` lies in the superlevel set ``psi(R) >= level``."""
        out = np.asarray(self(R)) >= self.level
        return bool(out) if out.ndim == 0 else out


def psi_indicator(V: PayoffFunction, tol: float = MEMBERSHIP_TOL) -> TradingFunction:
    return TradingFunction(V, 0.0, tol)
