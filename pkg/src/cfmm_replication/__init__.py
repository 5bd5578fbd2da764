"""Constant function market makers that replicate consistent payoffs."""

from .conjugate import TradingFunction, membership_gap, psi_indicator, reserves_on_boundary, trace_boundary
from .payoff import (ConsistencyGrid, ConsistencyReport, PayoffFunction, ReducedPayoff,
                     check_consistency, linear_offset, perspective, supergradient_fd)
from .sets import CurveSet, LevelSet, Membership
from .sim import PathSpec, PnLSummary, cfmm_replication_pnl, rebalance_vs_cfmm_gap, simulate_paths
from .verify import ForwardSolution, RoundTripReport, forward_values, portfolio_value, round_trip

__version__ = "0.1.0"
