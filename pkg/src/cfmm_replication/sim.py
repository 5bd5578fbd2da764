"""Monte-Carlo replication PNL under zero-drift geometric Brownian motion.

Prices are quoted in the numeraire (``c2 = 1``).  Paths are generated in
fixed blocks of ``CHUNK`` paths, each block drawing from its own substream of
the seed, so path ``i`` is the same whatever the worker count.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .sets import CurveSet
from .verify import forward_curve

CHUNK = 4096
MAX_EXCLUDED_FRACTION = 1e-3


class SimulationError(RuntimeError):
    """Too many paths left the price range the trading set supports."""


@dataclass(frozen=True)
class PathSpec:
    sigma: float
    T: float
    steps: int
    paths: int
    seed: int = 0
    c0: float = 1.0

    def __post_init__(self):
        if self.steps < 1 or self.paths < 1:
            raise ValueError("steps and paths must be at least 1")
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not self.c0 > 0:
            raise ValueError("c0 must be positive")

    @property
    def dt(self) -> float:
        return self.T / self.steps


@dataclass(frozen=True)
class PnLSummary:
    mean_pnl: float
    std_error: float
    mean_terminal_value: float
    theoretical: Optional[float]
    z_score: Optional[float]
    excluded: int = 0
    paths: int = 0

    def within(self, k: float = 3.0) -> bool:
        return self.z_score is None or abs(self.z_score) <= k

    def summary(self, label: str = "pnl") -> str:
        theo = "n/a" if self.theoretical is None else f"{self.theoretical:.12g}"
        z = "n/a" if self.z_score is None else f"{self.z_score:.12g}"
        return (f"{label}: mean {self.mean_pnl:.12g}  std error {self.std_error:.12g}  "
                f"theoretical {theo}  z {z}  paths {self.paths}  excluded {self.excluded}")


def _chunks(spec: PathSpec):
    n = math.ceil(spec.paths / CHUNK)
    seeds = np.random.SeedSequence(spec.seed).spawn(n)
    for i, ss in enumerate(seeds):
        start = i * CHUNK
        yield start, min(CHUNK, spec.paths - start), ss


def _block(spec: PathSpec, size: int, ss: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(ss)
    z = rng.standard_normal((size, spec.steps))
    dt = spec.dt
    incr = -0.5 * spec.sigma**2 * dt + spec.sigma * math.sqrt(dt) * z
    logc = np.concatenate([np.zeros((size, 1)), np.cumsum(incr, axis=1)], axis=1)
    return spec.c0 * np.exp(logc)


def _map_chunks(spec: PathSpec, fn, workers: Optional[int]):
    jobs = list(_chunks(spec))
    run = lambda job: fn(_block(spec, job[1], job[2]))
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def simulate_paths(spec: PathSpec, workers: Optional[int] = None) -> np.ndarray:
    """Price paths of shape ``(paths, steps + 1)``, starting at ``c0``."""
    return np.concatenate(_map_chunks(spec, lambda block: block, workers), axis=0)


def rebalance_pnl(paths: np.ndarray, holdings: Callable) -> np.ndarray:
    """Self-financed discrete hedge: ``sum R1(c_t) (c_{t+1} - c_t)`` per path."""
    paths = np.asarray(paths, dtype=float)
    h = np.asarray(holdings(paths[:, :-1]), dtype=float)
    return np.sum(h * np.diff(paths, axis=1), axis=1)


def cfmm_values(S: CurveSet, prices) -> np.ndarray:
    """Arbitrage value of ``S`` at relative prices ``prices`` (numeraire price 1)."""
    p = np.asarray(prices, dtype=float)
    C = np.column_stack([p.ravel(), np.ones(p.size)])
    return forward_curve(S, C)[0].reshape(p.shape)


def cfmm_pnl(S: CurveSet, paths: np.ndarray) -> np.ndarray:
    """``V(c_T) - V(c_0)`` per path; only the endpoints matter."""
    paths = np.asarray(paths, dtype=float)
    return cfmm_values(S, paths[:, -1]) - cfmm_values(S, paths[:, 0])


def _inside(S: CurveSet, paths: np.ndarray) -> np.ndarray:
    lo, hi = S.valid_prices
    return (paths.min(axis=1) >= lo) & (paths.max(axis=1) <= hi)


def theoretical_drift(S: CurveSet, spec: PathSpec) -> Optional[float]:
    """Expected CFMM PNL where it is known in closed form (the log contract)."""
    if S.meta.get("family") == "log_contract":
        return 0.0 - 0.5 * spec.sigma**2 * spec.T
    return None


def _summarise(pnl: np.ndarray, terminal: np.ndarray, theoretical, excluded: int) -> PnLSummary:
    n = pnl.size
    if n == 0:
        raise SimulationError("every path was excluded")
    mean = float(np.mean(pnl))
    se = float(np.std(pnl, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    z = None
    if theoretical is not None:
        diff = mean - theoretical
        if se > 0:
            z = diff / se
        else:
            z = 0.0 if abs(diff) <= 1e-12 * (1 + abs(theoretical)) else math.copysign(math.inf, diff)
    return PnLSummary(mean, se, float(np.mean(terminal)), theoretical, z, excluded, n)


def _check_excluded(excluded: int, spec: PathSpec):
    if excluded > MAX_EXCLUDED_FRACTION * spec.paths:
        raise SimulationError(f"{excluded} of {spec.paths} paths left the supported price range")


def cfmm_replication_pnl(S: CurveSet, spec: PathSpec, workers: Optional[int] = None,
                         theoretical: Optional[float] = None) -> PnLSummary:
    """Mean PNL of holding the CFMM position over ``spec``'s paths."""
    if not isinstance(S, CurveSet):
        raise TypeError("simulation supports two-coin curve sets")

    def work(block):
        ok = _inside(S, block)
        return block[ok, -1], int((~ok).sum())

    parts = _map_chunks(spec, work, workers)
    terminal = np.concatenate([p[0] for p in parts])
    excluded = sum(p[1] for p in parts)
    _check_excluded(excluded, spec)
    v_end = cfmm_values(S, terminal)
    v0 = float(cfmm_values(S, np.array([spec.c0]))[0])
    theo = theoretical if theoretical is not None else theoretical_drift(S, spec)
    return _summarise(v_end - v0, v_end, theo, excluded)


@dataclass(frozen=True)
class PairedPnL:
    cfmm: PnLSummary
    rebalance: PnLSummary
    gap: PnLSummary
    unpaired_gap_se: float
    path_index: np.ndarray
    terminal: np.ndarray
    cfmm_pnl: np.ndarray
    rebalance_pnl: np.ndarray

    def ledger_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["path", "terminal_price", "cfmm_pnl", "rebal_pnl"])
        for i, c, a, b in zip(self.path_index, self.terminal, self.cfmm_pnl, self.rebalance_pnl):
            w.writerow([int(i), f"{c:.12g}", f"{a:.12g}", f"{b:.12g}"])
        return buf.getvalue()

    def summary(self) -> str:
        return "\n".join([self.cfmm.summary("cfmm"), self.rebalance.summary("rebalance"),
                          self.gap.summary("gap"),
                          f"unpaired gap std error {self.unpaired_gap_se:.12g}"])


def rebalance_vs_cfmm_gap(holdings: Callable, S: CurveSet, spec: PathSpec,
                          workers: Optional[int] = None) -> PairedPnL:
    """Discrete delta hedge against the CFMM on the same paths.

    The gap ``rebalance - cfmm`` is the time decay the CFMM gives up.
    """
    if not isinstance(S, CurveSet):
        raise TypeError("simulation supports two-coin curve sets")

    def work(block):
        ok = _inside(S, block)
        kept = block[ok]
        return np.flatnonzero(ok), kept[:, -1], rebalance_pnl(kept, holdings)

    parts = _map_chunks(spec, work, workers)
    index = np.concatenate([p[0] + j * CHUNK for j, p in enumerate(parts)])
    terminal = np.concatenate([p[1] for p in parts])
    rebal = np.concatenate([p[2] for p in parts])
    excluded = spec.paths - index.size
    _check_excluded(excluded, spec)

    v_end = cfmm_values(S, terminal)
    v0 = float(cfmm_values(S, np.array([spec.c0]))[0])
    cf = v_end - v0
    drift = theoretical_drift(S, spec)
    cfmm = _summarise(cf, v_end, drift, excluded)
    reb = _summarise(rebal, v0 + rebal, 0.0, excluded)
    gap = _summarise(rebal - cf, v0 + rebal - v_end, None if drift is None else -drift, excluded)
    n = cf.size
    unpaired = math.sqrt((np.var(cf, ddof=1) + np.var(rebal, ddof=1)) / n) if n > 1 else 0.0
    return PairedPnL(cfmm, reb, gap, unpaired, index, terminal, cf, rebal)
