"""Command line: ``cfmm derive|verify|simulate|plot``.

Exit codes: 0 success, 1 a numerical check failed, 2 bad usage or input.
Values come from flags, then the ``--params`` JSON file, then defaults.
``CFMM_LOG`` sets the log level (name or number).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import closed_forms as cf
from .config import ConfigError, build_model, load_config
from .conjugate import NonConcavePayoffError, TightnessError, trace_boundary
from .export import BoundaryFormatError, boundary_points, parse_boundary, read_boundary, write_boundary
from .payoff import check_consistency
from .sim import PathSpec, SimulationError, rebalance_vs_cfmm_gap
from .svg import line_plot
from .verify import round_trip

log = logging.getLogger("cfmm_replication")


class UsageError(Exception):
    pass


def _floats(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _positive_int(text: str) -> int:
    try:
        return int(float(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", help="payoff family")
    common.add_argument("--params", help="JSON config file {family, params, n, ...}")
    common.add_argument("--out", help="output path")
    common.add_argument("--grid", type=_positive_int, help="number of grid prices")
    common.add_argument("--tol", type=float, help="tolerance")
    common.add_argument("--strike", type=float, help="strike K")
    common.add_argument("--rate", type=float, help="interest rate r (perpetual put)")
    common.add_argument("--w", type=_floats, help="constant-mean weight(s)")
    common.add_argument("--a", type=_floats, help="linear holdings or quadratic offset a")
    common.add_argument("--b", type=float, help="quadratic constant b")
    common.add_argument("--A", type=_floats, help="quadratic curvature A (row-major)")
    common.add_argument("--k", type=float, help="log-contract constant k")

    parser = argparse.ArgumentParser(prog="cfmm", description="Replicate payoffs with constant function market makers.")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("derive", parents=[common], help="trace the trading set of a payoff to CSV")
    d.add_argument("--sigma", type=float, help="volatility (payoff parameter)")
    d.add_argument("--tau", type=float, help="time to expiry (payoff parameter)")
    d.add_argument("--method", choices=("trace", "closed"), default="trace",
                   help="trace supergradients (default) or sample the closed-form set")

    v = sub.add_parser("verify", parents=[common], help="round-trip a payoff through its trading set")
    v.add_argument("--sigma", type=float, help="volatility (payoff parameter)")
    v.add_argument("--tau", type=float, help="time to expiry (payoff parameter)")
    v.add_argument("--set", dest="set_csv", help="boundary CSV to verify instead of the closed form")
    v.add_argument("--seed", type=int, help="seed for the price sample (three or more coins)")

    s = sub.add_parser("simulate", parents=[common], help="Monte-Carlo PNL of the CFMM and the delta hedge")
    s.add_argument("--sigma", type=float, help="path volatility")
    s.add_argument("--tau", type=float, help="horizon T")
    s.add_argument("--steps", type=_positive_int, help="time steps per path")
    s.add_argument("--paths", type=_positive_int, help="number of paths")
    s.add_argument("--seed", type=int, help="RNG seed")
    s.add_argument("--c0", type=float, help="initial relative price")
    s.add_argument("--set", dest="set_csv", help="boundary CSV to hold instead of the closed form")
    s.add_argument("--workers", type=int, default=None, help="worker threads")

    p = sub.add_parser("plot", help="overlay boundary CSVs in an SVG")
    p.add_argument("inputs", nargs="*", help="boundary CSV files")
    p.add_argument("--labels", help="comma-separated legend labels")
    p.add_argument("--figure", choices=("1", "2", "3"), help="preset: 1 BS covered call, 2 perpetual put, 3 log contract")
    p.add_argument("--title", default="", help="plot title")
    p.add_argument("--out", help="SVG output path")
    return parser


FLAG_PARAMS = {"strike": "K", "rate": "r", "w": "w", "a": "a", "b": "b", "A": "A", "k": "k"}


def _resolve(args, payoff_flags=("sigma", "tau")):
    cfg = load_config(args.params) if args.params else {}
    family = args.family or cfg.get("family")
    if not family:
        raise UsageError("a payoff family is required (--family or a config file)")
    params = dict(cfg.get("params", {}))
    names = dict(FLAG_PARAMS, **{f: f for f in payoff_flags})
    for flag, key in names.items():
        value = getattr(args, flag, None)
        if value is not None:
            params[key] = value
    model = build_model(family, params, cfg.get("n"))
    if cfg.get("n") is not None and cfg["n"] != model.n:
        raise ConfigError(f"config says n={cfg['n']} but the parameters give {model.n} coins")
    return cfg, model


def _trace(model, points, tol=None):
    lo, hi = model.ratio_range
    return trace_boundary(model.payoff, np.geomspace(lo, hi, points), tol=tol)


def cmd_derive(args) -> int:
    _, model = _resolve(args)
    if model.n != 2:
        raise UsageError("boundary export is only available for two coins")
    if args.tol is not None and not args.tol > 0:
        raise UsageError("--tol must be positive")
    points = args.grid or 512
    if points < 2:
        raise UsageError("--grid must be at least 2")
    report = check_consistency(model.payoff)
    if not report.passed:
        print(f"error: {model.family} payoff is not consistent: {report.summary()}", file=sys.stderr)
        return 1
    if args.method == "closed":
        S = model.closed_set
        pts = boundary_points(S, np.geomspace(*model.ratio_range, points))
        meta = {**S.meta, "grid": {"ratio_min": model.ratio_range[0], "ratio_max": model.ratio_range[1],
                                   "points": points}}
    else:
        try:
            S = _trace(model, points, args.tol)
        except (NonConcavePayoffError, TightnessError, RuntimeError) as exc:
            print(f"error: boundary trace failed: {exc}", file=sys.stderr)
            return 1
        pts, meta = S.points, S.meta
    if len(pts) == 1:
        print("warning: trading is degenerate; the set is a single point and only the null trade is allowed",
              file=sys.stderr)
    out = Path(args.out or "boundary.csv")
    side = write_boundary(out, pts, meta)
    print(f"wrote {len(pts)} boundary points to {out} (metadata {side})")
    return 0


def _verification_grid(model, points, seed):
    if model.n == 2:
        return np.geomspace(*model.ratio_range, points)
    rng = np.random.default_rng(seed)
    grid = 10.0 ** rng.uniform(-2, 2, size=(points, model.n))
    grid[:, -1] = 1.0
    return grid


def cmd_verify(args) -> int:
    _, model = _resolve(args)
    bound = 1e-5 if args.tol is None else args.tol
    if not (math.isfinite(bound) and bound > 0):
        raise UsageError("--tol must be positive")
    points = args.grid or (256 if model.n == 2 else 32)
    if points < 1:
        raise UsageError("--grid must be at least 1")
    if args.set_csv:
        S = read_boundary(args.set_csv)
    elif model.closed_set is not None:
        S = model.closed_set
    else:
        S = _trace(model, 512)
    report = round_trip(model.payoff, S, _verification_grid(model, points, args.seed or 0), bound)
    out = Path(args.out or "roundtrip.csv")
    out.write_text(report.to_csv())
    print(report.summary())
    print(f"report written to {out}")
    return 0 if report.passed else 1


def cmd_simulate(args) -> int:
    cfg, model = _resolve(args, payoff_flags=())
    if model.n != 2:
        raise UsageError("simulation is only available for two coins")
    simcfg = cfg.get("simulation", {})

    def pick(flag, key, default):
        v = getattr(args, flag)
        return v if v is not None else simcfg.get(key, default)

    try:
        spec = PathSpec(sigma=float(pick("sigma", "sigma", 0.2)), T=float(pick("tau", "T", 1.0)),
                        steps=int(pick("steps", "steps", 100)), paths=int(pick("paths", "paths", 10000)),
                        seed=int(pick("seed", "seed", 0)), c0=float(pick("c0", "c0", 1.0)))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    set_csv = args.set_csv or cfg.get("set")
    if set_csv:
        S = read_boundary(set_csv)
        S = replace(S, meta={**S.meta, "family": model.family})
    elif model.closed_set is not None:
        S = model.closed_set
    else:
        S = _trace(model, 512)
    if model.family == "log_contract":
        lo = S.valid_prices[0]
        if spec.c0 < lo:
            raise UsageError(f"c0 lies below the log-contract price floor {lo:.12g}")
    V = model.payoff

    def holdings(c):
        c = np.asarray(c, dtype=float)
        return V.supergradient(np.stack([c, np.ones_like(c)], axis=-1))[..., 0]

    log.info("simulating %d paths x %d steps", spec.paths, spec.steps)
    try:
        paired = rebalance_vs_cfmm_gap(holdings, S, spec, workers=args.workers)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(paired.summary())
    if args.out:
        Path(args.out).write_text(paired.ledger_csv())
        print(f"ledger written to {args.out}")
    return 0 if paired.cfmm.within(3.0) and paired.rebalance.within(3.0) else 1


def figure_curves(figure: str):
    """Closed-form boundary curves for the three preset figures."""
    r = np.linspace(0.0, 1.0, 401)
    if figure == "1":
        curves = []
        for sigma in (0.05, 0.1, 0.2):
            S = cf.bs_covered_call_boundary(cf.BSCoveredCallParams(1.0, sigma, 10.0))
            curves.append((f"sigma={sigma:g}", r, S.boundary(r)))
        return curves, "Covered call, K=1, tau=10", None, None
    if figure == "2":
        curves = []
        for rate in (0.05, 0.1):
            for sigma in (0.15, 0.25):
                S = cf.perpetual_put_boundary(cf.PerpetualPutParams(1.0, sigma, rate))
                curves.append((f"r={rate:g}, sigma={sigma:g}", r, S.boundary(r)))
        return curves, "Perpetual put, K=1", None, None
    curves = []
    for k in (0.0, 1.0, 2.0):
        S = cf.log_contract_boundary(cf.LogContractParams(k))
        x = np.linspace(0.02, S.r1_max, 401)
        curves.append((f"k={k:g}", x, S.boundary(x)))
    return curves, "Log contract", (0.0, math.exp(2.0)), (0.0, 6.0)


def cmd_plot(args) -> int:
    if not args.inputs and not args.figure:
        raise UsageError("give boundary CSV files or --figure")
    curves, title, xlim, ylim = [], args.title, None, None
    if args.figure:
        curves, preset_title, xlim, ylim = figure_curves(args.figure)
        title = title or preset_title
    labels = args.labels.split(",") if args.labels else []
    for i, path in enumerate(args.inputs):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise BoundaryFormatError(str(exc)) from exc
        pts = parse_boundary(text)
        label = labels[i] if i < len(labels) else Path(path).stem
        curves.append((label, pts[:, 0], pts[:, 1]))
    out = Path(args.out or "boundary.svg")
    out.write_text(line_plot(curves, title=title, xlim=xlim, ylim=ylim))
    print(f"wrote {len(curves)} curve(s) to {out}")
    return 0


COMMANDS = {"derive": cmd_derive, "verify": cmd_verify, "simulate": cmd_simulate, "plot": cmd_plot}


def _configure_logging():
    level = os.environ.get("CFMM_LOG", "WARNING").strip()
    value = int(level) if level.isdigit() else getattr(logging, level.upper(), logging.WARNING)
    logging.basicConfig(level=value, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, BoundaryFormatError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
