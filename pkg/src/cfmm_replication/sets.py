"""Trading-set representations.

Two coins: the set is the region on or above a nonincreasing convex curve
``R2 = phi(R1)`` on ``[r1_min, r1_max]``, closed upwards (points right of the
curve's domain are inside iff ``R2 >= phi(r1_max)``).  Three or more coins:
the set is ``{R : level(R) >= 0}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np

MEMBERSHIP_TOL = 1e-7


class Membership(str, Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


class DomainError(ValueError):
    """Reserve or price argument outside the domain where a curve is defined."""


def _classify(gap, tol):
    if gap > tol:
        return Membership.INSIDE
    if gap >= -tol:
        return Membership.BOUNDARY
    return Membership.OUTSIDE


class TradingSet:
    """Common membership interface.  Subclasses implement ``gap``."""

    n: int
    meta: dict
    valid_prices: tuple

    def gap(self, R) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def classify(self, R, tol: float = MEMBERSHIP_TOL):
        g = np.asarray(self.gap(R), dtype=float)
        if g.ndim == 0:
            return _classify(float(g), tol)
        return np.array([_classify(x, tol) for x in g.ravel()], dtype=object).reshape(g.shape)

    def contains(self, R, tol: float = MEMBERSHIP_TOL):
        g = np.asarray(self.gap(R), dtype=float)
        out = g >= -tol
        return bool(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class CurveSet(TradingSet):
    phi: Callable[[np.ndarray], np.ndarray]
    r1_min: float
    r1_max: float
    slope: Optional[Callable[[np.ndarray], np.ndarray]] = None
    upward: bool = True
    closed_left: bool = True
    points: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)
    valid_prices: tuple = (0.0, math.inf)
    n: int = 2

    def __post_init__(self):
        if not self.r1_min <= self.r1_max:
            raise ValueError("empty curve domain")

    @property
    def degenerate(self) -> bool:
        return self.r1_max - self.r1_min <= 0.0

    def boundary(self, R1):
        """``phi`` on its domain; raises ``DomainError`` outside it."""
        R1 = np.asarray(R1, dtype=float)
        below = R1 < self.r1_min if self.closed_left else R1 <= self.r1_min
        if np.any(below) or np.any(R1 > self.r1_max):
            raise DomainError(f"R1 outside the curve domain [{self.r1_min}, {self.r1_max}]")
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.asarray(self.phi(R1), dtype=float)
        return float(out) if out.ndim == 0 else out

    def _phi_clipped(self, R1):
        x = np.clip(R1, self.r1_min, self.r1_max)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(self.phi(x), dtype=float)

    def gap(self, R):
        R = np.asarray(R, dtype=float)
        R1, R2 = R[..., 0], R[..., 1]
        above = R2 - self._phi_clipped(R1)
        left = R1 - self.r1_min
        if self.upward:
            g = np.where(left < 0, np.minimum(left, above), above)
        else:
            right = self.r1_max - R1
            g = np.minimum(np.minimum(left, right), above)
            g = np.where((left >= 0) & (right >= 0), above, g)
        return float(g) if g.ndim == 0 else g

    def marginal_price(self, R1):
        """``-dphi/dR1`` strictly inside the domain."""
        R1 = np.asarray(R1, dtype=float)
        if np.any(R1 <= self.r1_min) or np.any(R1 >= self.r1_max):
            raise DomainError("marginal price is only defined strictly inside the curve domain")
        if self.slope is None:
            h = 1e-6 * np.maximum(np.minimum(R1 - self.r1_min, self.r1_max - R1), 1e-300)
            d = (self.phi(R1 + h) - self.phi(R1 - h)) / (2 * h)
        else:
            d = self.slope(R1)
        out = -np.asarray(d, dtype=float)
        return float(out) if out.ndim == 0 else out

    def translated(self, a) -> "CurveSet":
        a1, a2 = (float(x) for x in a)
        phi, slope = self.phi, self.slope
        pts = None if self.points is None else self.points + np.array([a1, a2])
        return replace(
            self,
            phi=lambda r: phi(np.asarray(r) - a1) + a2,
            slope=None if slope is None else (lambda r: slope(np.asarray(r) - a1)),
            r1_min=self.r1_min + a1,
            r1_max=self.r1_max + a1,
            points=pts,
            meta={**self.meta, "offset": [a1, a2]},
        )


@dataclass(frozen=True, eq=False)
class LevelSet(TradingSet):
    """``{R >= 0 : level(R) >= 0}`` for any number of coins.

    ``complete`` (optional) maps the first ``n-1`` reserves to the smallest
    feasible last reserve; the forward solver bisects when it is absent.
    """

    n: int
    level: Callable[[np.ndarray], np.ndarray]
    complete: Optional[Callable[[np.ndarray], np.ndarray]] = None
    level_gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    meta: dict = field(default_factory=dict)
    valid_prices: tuple = (0.0, math.inf)

    def gap(self, R):
        R = np.asarray(R, dtype=float)
        if R.shape[-1] != self.n:
            raise ValueError(f"expected {self.n} reserves")
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.asarray(self.level(R), dtype=float)
        g = np.where(np.any(R < 0, axis=-1), np.minimum(g, np.min(R, axis=-1)), g)
        return float(g) if g.ndim == 0 else g
