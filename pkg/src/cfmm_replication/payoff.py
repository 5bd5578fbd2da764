"""Payoff functions and the transforms used to build them.

A payoff maps a nonnegative price vector ``c`` (shape ``(..., n)``) to the
value of the liquidity provider's position in numeraire units.  Every
callable here is vectorised over leading axes.  ``-inf`` is a legal value
(extended-real semantics); NaN never is.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

ArrayFn = Callable[[np.ndarray], np.ndarray]

DEFAULT_TOL = 1e-9
FD_TOL = 1e-6


class NonFiniteValueError(ValueError):
    """A payoff produced NaN, or an infinity where a finite value is required."""


def as_prices(c, n: Optional[int] = None) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim == 0 or c.shape[-1] < 2:
        raise ValueError(f"price vectors need at least two coins, got shape {c.shape}")
    if n is not None and c.shape[-1] != n:
        raise ValueError(f"expected {n} coins, got {c.shape[-1]}")
    if np.any(np.isnan(c)) or np.any(c < 0):
        raise ValueError("prices must be nonnegative")
    return c


@dataclass(frozen=True)
class PayoffFunction:
    """A payoff ``V`` on ``n`` coins, optionally with an analytic supergradient.

    ``offset`` records the accumulated linear offset ``a`` when the payoff was
    built with :func:`linear_offset`; ``base`` is the payoff before offsetting.
    """

    n: int
    value: ArrayFn
    gradient: Optional[ArrayFn] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)
    offset: Optional[tuple] = None
    base: Optional["PayoffFunction"] = None

    def __call__(self, c):
        c = as_prices(c, self.n)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            v = np.asarray(self.value(c), dtype=float)
        if np.any(np.isnan(v)):
            raise NonFiniteValueError(f"{self.name}: NaN payoff value")
        return float(v) if v.ndim == 0 else v

    def supergradient(self, c) -> np.ndarray:
        """Analytic supergradient when registered, else central differences."""
        if self.gradient is None:
            return supergradient_fd(self, c)
        c = as_prices(c, self.n)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            g = np.asarray(self.gradient(c), dtype=float)
        if not np.all(np.isfinite(g)):
            raise NonFiniteValueError(f"{self.name}: non-finite supergradient")
        return g


@dataclass(frozen=True)
class ReducedPayoff:
    """Payoff ``U(c')`` quoted against the last coin as numeraire.

    ``value`` and ``gradient`` take arrays of shape ``(..., m)``.
    """

    m: int
    value: ArrayFn
    gradient: Optional[ArrayFn] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, cp):
        cp = np.asarray(cp, dtype=float)
        if cp.ndim == 0:
            cp = cp[None]
        return self.value(cp)


def perspective(U: ReducedPayoff) -> PayoffFunction:
    """Lift ``U`` to the 1-homogeneous payoff ``V(c', c_n) = c_n U(c'/c_n)``.

    ``V`` is ``-inf`` wherever ``c_n <= 0``.
    """

    def value(c):
        cp, cn = c[..., :-1], c[..., -1]
        pos = cn > 0
        safe = np.where(pos, cn, 1.0)
        u = np.asarray(U.value(cp / safe[..., None]), dtype=float)
        return np.where(pos, safe * u, -np.inf)

    gradient = None
    if U.gradient is not None:
        def gradient(c):
            cp, cn = c[..., :-1], c[..., -1]
            x = cp / cn[..., None]
            g = np.asarray(U.gradient(x), dtype=float)
            last = np.asarray(U.value(x), dtype=float) - np.sum(x * g, axis=-1)
            return np.concatenate([g, last[..., None]], axis=-1)

    return PayoffFunction(U.m + 1, value, gradient, name=U.name, params=dict(U.params))


def linear_offset(V: PayoffFunction, a) -> PayoffFunction:
    """``V'(c) = V(c) + a.c``; the trading set of ``V'`` is that of ``V`` shifted by ``a``."""
    a = np.asarray(a, dtype=float)
    if a.shape != (V.n,):
        raise ValueError(f"offset must have shape ({V.n},)")
    if np.any(a < 0):
        raise ValueError("offset must be nonnegative")

    def value(c):
        return V.value(c) + c @ a

    gradient = None
    if V.gradient is not None:
        def gradient(c):
            return V.gradient(c) + a

    total = a if V.offset is None else np.asarray(V.offset) + a
    base = V if V.base is None else V.base
    return PayoffFunction(V.n, value, gradient, name=V.name, params=dict(V.params),
                          offset=tuple(float(x) for x in total), base=base)


def supergradient_fd(V: PayoffFunction, c, h: Optional[float] = None) -> np.ndarray:
    """Central-difference gradient of ``V`` at strictly positive ``c``.

    ``h`` is an absolute step; by default each coordinate uses ``1e-5 * c_i``.
    Components are clamped at zero.
    """
    c = as_prices(c, V.n)
    if np.any(c <= 0):
        raise ValueError("finite differences need strictly positive prices")
    if h is not None and h <= 0:
        raise ValueError("step must be positive")
    grad = np.empty_like(c)
    for i in range(V.n):
        step = np.full(c.shape[:-1], h) if h is not None else 1e-5 * c[..., i]
        up, dn = c.copy(), c.copy()
        up[..., i] += step
        dn[..., i] -= step
        vu, vd = np.asarray(V(up)), np.asarray(V(dn))
        if not (np.all(np.isfinite(vu)) and np.all(np.isfinite(vd))):
            raise NonFiniteValueError(f"{V.name}: non-finite value inside the stencil")
        grad[..., i] = (vu - vd) / (2.0 * step)
    return np.maximum(grad, 0.0)


@dataclass(frozen=True)
class ConsistencyGrid:
    samples: int = 200
    seed: int = 0
    log10_low: float = -3.0
    log10_high: float = 3.0
    max_scale: float = 10.0

    def __post_init__(self):
        if self.samples < 100:
            raise ValueError("consistency checks need at least 100 samples")
        if not self.log10_low < self.log10_high:
            raise ValueError("empty sampling range")


@dataclass(frozen=True)
class AxiomResult:
    passed: bool
    worst: float
    note: str = ""


@dataclass(frozen=True)
class ConsistencyReport:
    concave: AxiomResult
    nonnegative: AxiomResult
    nondecreasing: AxiomResult
    one_homogeneous: AxiomResult
    samples_used: int

    @property
    def passed(self) -> bool:
        return all(r.passed for r in (self.concave, self.nonnegative,
                                      self.nondecreasing, self.one_homogeneous))

    def summary(self) -> str:
        parts = []
        for name in ("concave", "nonnegative", "nondecreasing", "one_homogeneous"):
            r = getattr(self, name)
            parts.append(f"{name}={'pass' if r.passed else 'FAIL'}({r.worst:.3g})")
        return " ".join(parts)


def _axiom(evaluate, tol) -> AxiomResult:
    # evaluate() returns violation amounts (> 0 means violated) and per-point tolerances
    try:
        viol, allowed = evaluate()
    except NonFiniteValueError as exc:
        return AxiomResult(False, float("inf"), str(exc))
    viol = np.asarray(viol, dtype=float)
    if not np.all(np.isfinite(viol)):
        return AxiomResult(False, float("inf"), "non-finite payoff value at a sample")
    worst = float(np.max(viol, initial=0.0))
    return AxiomResult(bool(np.all(viol <= allowed)), max(worst, 0.0))


def check_consistency(V: PayoffFunction, grid: ConsistencyGrid = ConsistencyGrid(),
                      tol: float = DEFAULT_TOL) -> ConsistencyReport:
    """Sampled test of concavity, nonnegativity, monotonicity and 1-homogeneity.

    Tolerances are scaled by ``1 + |V|`` so that large payoff values are not
    penalised for roundoff.  A pass is evidence, not proof.
    """
    rng = np.random.default_rng(grid.seed)
    N = grid.samples
    c = 10.0 ** rng.uniform(grid.log10_low, grid.log10_high, size=(N, V.n))
    partner = c[rng.permutation(N)]
    # (0, max_scale]
    eta = grid.max_scale * (1.0 - rng.uniform(size=N))

    def values(x):
        v = np.asarray(V(x), dtype=float)
        return v

    def concave():
        mid = values(0.5 * (c + partner))
        avg = 0.5 * (values(c) + values(partner))
        return avg - mid, tol * (1.0 + np.abs(avg))

    def nonnegative():
        return -values(c), tol

    def nondecreasing():
        base = values(c)
        viol = np.zeros(N)
        for i in range(V.n):
            bumped = c.copy()
            bumped[:, i] *= 1.0 + 1e-3
            viol = np.maximum(viol, base - values(bumped))
        return viol, tol * (1.0 + np.abs(base))

    def homogeneous():
        base = values(c)
        return np.abs(values(eta[:, None] * c) - eta * base), tol * (1.0 + np.abs(base))

    return ConsistencyReport(
        concave=_axiom(concave, tol),
        nonnegative=_axiom(nonnegative, tol),
        nondecreasing=_axiom(nondecreasing, tol),
        one_homogeneous=_axiom(homogeneous, tol),
        samples_used=N,
    )
