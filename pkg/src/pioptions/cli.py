"""Command-line front end: ``pioptions {price,table1,surface,calibrate,backtest,fixture}``.

Scalar results go out as JSON, series and grids as CSV.  Every output embeds a
manifest (command, parameters, seed, version); the ``runtime`` part of it holds
timestamps, wall time and thread count and is the only part that may differ
between identical invocations.  ``--no-runtime`` drops it.

Exit codes: 0 success, 2 validation error, 3 budget or runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import sys
import time
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .calibration import CalibrationWindow, PriceSeries, calibrate
from .errors import BudgetExceededError, InsufficientDataError, PiOptionsError, ValidationError
from .model import MarketParams, maturity_from_days
from .oracles import bs_european
from .payoffs import Kind, PiPayoff
from .portfolio import HedgeKind, PortfolioSpec, compare, premium_from_unit_price, write_comparison_csv
from .tree import DiscountMode, FixtureTree, TreeConfig, evaluate_fixture, node_budget, price

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3

_FIELD_FLAGS = {"s0": "--s0", "m0": "--m0", "r": "--r", "sigma": "--sigma", "maturity": "--maturity",
                "strike": "--strike", "a": "--a", "b": "--b", "steps": "--steps",
                "branches": "--branches", "replications": "--replications", "threads": "--threads",
                "csv": "csv", "tree": "fixture", "discount": "fixture", "date": "--end",
                "start": "--start", "inception": "--inception", "premium": "--put-premium/--pi-premium",
                "multiplier": "--multiplier", "m_init": "--m-init", "trading_days": "--trading-days"}


def sig6(x: Optional[float]) -> Optional[float]:
    if x is None:
        return None
    return float(f"{x:.6g}")


def _round_tree(obj):
    if isinstance(obj, float):
        return sig6(obj)
    if isinstance(obj, list):
        return [_round_tree(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _round_tree(v) for k, v in obj.items()}
    return obj


class _Run:
    """Collects the manifest for one command invocation."""

    def __init__(self, command: str, args: argparse.Namespace, params: Dict[str, Any]):
        self.command = command
        self.args = args
        self.params = params
        self.started = dt.datetime.now(dt.timezone.utc)
        self.t0 = time.perf_counter()

    def manifest(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "command": self.command,
            "parameters": self.params,
            "master_seed": self.params.get("seed"),
            "version": __version__,
        }
        if not self.args.no_runtime:
            out["runtime"] = {
                "started": self.started.isoformat(timespec="seconds"),
                "finished": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
                "wall_time": round(time.perf_counter() - self.t0, 3),
                "threads": getattr(self.args, "threads", 1),
            }
        return out

    def manifest_line(self) -> str:
        return "# manifest " + json.dumps(self.manifest(), sort_keys=True) + "\n"


def _emit_json(payload: Dict[str, Any], out) -> None:
    json.dump(payload, out, indent=2, sort_keys=True)
    out.write("\n")


def _parse_date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}")


def _parse_floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


# -- shared flag groups -------------------------------------------------------


def _add_market(p: argparse.ArgumentParser, defaults: Dict[str, Any]) -> None:
    g = p.add_argument_group("market")
    g.add_argument("--s0", type=float, default=defaults.get("s0"))
    g.add_argument("--m0", type=float, default=defaults.get("m0"),
                   help="running maximum at pricing time (default: s0)")
    g.add_argument("--r", type=float, default=defaults.get("r"))
    g.add_argument("--sigma", type=float, default=defaults.get("sigma"))
    g.add_argument("--maturity", type=float, default=defaults.get("maturity"), help="years")
    g.add_argument("--maturity-days", type=float, default=None,
                   help="calendar days, converted with --day-count (overrides --maturity)")
    g.add_argument("--day-count", type=float, default=365.0)


def _add_payoff(p: argparse.ArgumentParser, defaults: Dict[str, Any]) -> None:
    g = p.add_argument_group("payoff")
    g.add_argument("--a", type=float, default=defaults.get("a"), help="exponent on the running maximum")
    g.add_argument("--b", type=float, default=defaults.get("b"), help="exponent on the spot")
    g.add_argument("--strike", type=float, default=defaults.get("strike"))
    g.add_argument("--kind", choices=[k.value for k in Kind], default=defaults.get("kind", "put"))


def _add_tree(p: argparse.ArgumentParser, branches: int = 50, replications: int = 500) -> None:
    g = p.add_argument_group("tree")
    g.add_argument("--steps", type=int, default=3, help="exercise steps after t0 (n)")
    g.add_argument("--branches", type=int, default=branches, help="branches per node (l)")
    g.add_argument("--replications", type=int, default=replications)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=int, default=1)
    g.add_argument("--discount-mode", choices=[m.value for m in DiscountMode], default="calendar")
    g.add_argument("--z", type=float, default=1.96, help="interval half-width in standard errors")


def _require(args, *names: str) -> None:
    for name in names:
        if getattr(args, name) is None:
            raise ValidationError(f"{name} is required", field=name)


def _market(args) -> MarketParams:
    _require(args, "s0", "r", "sigma")
    maturity = args.maturity
    if args.maturity_days is not None:
        maturity = maturity_from_days(args.maturity_days, args.day_count)
    if maturity is None:
        raise ValidationError("maturity (or --maturity-days) is required", field="maturity")
    m0 = args.s0 if args.m0 is None else args.m0
    return MarketParams(args.s0, m0, args.r, args.sigma, maturity)


def _tree(args) -> TreeConfig:
    return TreeConfig(args.steps, args.branches, args.replications, args.seed, args.discount_mode)


def _market_dict(m: MarketParams) -> Dict[str, float]:
    return {"s0": m.s0, "m0": m.m0, "r": m.r, "sigma": m.sigma, "maturity": m.maturity}


def _tree_dict(c: TreeConfig, z: float) -> Dict[str, Any]:
    return {"steps": c.n, "branches": c.l, "replications": c.replications,
            "seed": c.master_seed, "discount_mode": c.discount_mode.value, "z": z}


def _payoff_dict(p: PiPayoff) -> Dict[str, Any]:
    return {"a": p.a, "b": p.b, "strike": p.strike, "kind": p.kind.value}


# -- commands -----------------------------------------------------------------


def cmd_price(args, out) -> int:
    market = _market(args)
    _require(args, "a", "b", "strike")
    payoff = PiPayoff(args.a, args.b, args.strike, args.kind)
    config = _tree(args)
    run = _Run("price", args, {**_market_dict(market), **_payoff_dict(payoff), **_tree_dict(config, args.z)})
    report = price(market, payoff, config, threads=args.threads, z=args.z)
    full = report.to_dict()
    payload = _round_tree(dict(full))
    payload["full_precision"] = full
    payload["manifest"] = run.manifest()
    _emit_json(payload, out)
    return EXIT_OK


TABLE1_COLUMNS = ("strike", "low", "high", "point", "se_low", "se_high", "oracle", "error")


def cmd_table1(args, out) -> int:
    if args.maturity is None and args.maturity_days is None:
        args.maturity_days = 30.0
    market = _market(args)
    config = _tree(args)
    run = _Run("table1", args, {**_market_dict(market), **_tree_dict(config, args.z),
                                "strikes": args.strikes, "kind": "call", "a": 0.0, "b": 1.0})
    out.write(run.manifest_line())
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TABLE1_COLUMNS)
    for K in args.strikes:
        rep = price(market, PiPayoff.american(K, Kind.CALL), config, threads=args.threads, z=args.z)
        oracle = bs_european(market, K, Kind.CALL)
        err = abs(rep.point - oracle) / oracle
        w.writerow([repr(float(v)) if v is not None else "" for v in
                    (K, rep.mean_low, rep.mean_high, rep.point, rep.se_low, rep.se_high, oracle, err)])
    return EXIT_OK


_SURFACE_PRESETS = {
    # drawdown put: vary strike and running maximum
    "k-m0": dict(s0=100.0, r=0.05, sigma=0.2, maturity=1.0, a=-1.0, b=1.0, strike=1.0, kind="put",
                 x=("strike", 0.8, 1.0, 5), y=("m0", 100.0, 120.0, 5)),
    # MSFT inputs: vary both exponents
    "a-b": dict(s0=106.08, m0=110.83, r=0.015, sigma=0.1703, maturity=0.25, strike=1.0, kind="put",
                a=-1.0, b=1.0, x=("a", -1.1, -0.9, 5), y=("b", 0.9, 1.1, 5)),
}


def _monotonicity(grid: np.ndarray, axis: int) -> Dict[str, int]:
    """Slices along ``axis`` that are non-decreasing / non-increasing / neither."""
    diffs = np.diff(grid, axis=axis)
    other = 1 - axis
    up = int(np.sum(np.all(diffs >= 0, axis=axis)))
    down = int(np.sum(np.all(diffs <= 0, axis=axis)))
    total = grid.shape[other]
    return {"slices": total, "non_decreasing": up, "non_increasing": down}


def cmd_surface(args, out) -> int:
    preset = _SURFACE_PRESETS[args.grid]
    for key in ("s0", "m0", "r", "sigma", "maturity", "a", "b", "strike"):
        if getattr(args, key) is None and key in preset:
            setattr(args, key, preset[key])
    if args.kind is None:
        args.kind = preset["kind"]
    xname, x0, x1, xn = preset["x"]
    yname, y0, y1, yn = preset["y"]
    xs = _axis(args.x_min, args.x_max, args.x_num, x0, x1, xn)
    ys = _axis(args.y_min, args.y_max, args.y_num, y0, y1, yn)
    config = _tree(args)
    cells = len(xs) * len(ys)
    if cells * config.l**config.n > node_budget():
        raise BudgetExceededError(
            f"{cells} cells x {config.l**config.n} leaves exceeds the node budget of {node_budget()}"
        )
    base = _market(args)
    run = _Run("surface", args, {**_market_dict(base), **_tree_dict(config, args.z), "grid": args.grid,
                                 "a": args.a, "b": args.b, "strike": args.strike, "kind": args.kind,
                                 xname: xs, yname: ys})
    out.write(run.manifest_line())
    w = csv.writer(out, lineterminator="\n")
    w.writerow((xname, yname, "low", "high", "point", "se_low", "se_high"))
    points = np.empty((len(ys), len(xs)))
    for iy, yv in enumerate(ys):
        for ix, xv in enumerate(xs):
            values = {"s0": base.s0, "m0": base.m0, "r": base.r, "sigma": base.sigma,
                      "maturity": base.maturity, "a": args.a, "b": args.b, "strike": args.strike}
            values[xname] = xv
            values[yname] = yv
            market = MarketParams(values["s0"], values["m0"], values["r"], values["sigma"], values["maturity"])
            payoff = PiPayoff(values["a"], values["b"], values["strike"], args.kind)
            # same seed in every cell: common random numbers across the grid
            rep = price(market, payoff, config, threads=args.threads, z=args.z)
            points[iy, ix] = rep.point
            w.writerow([repr(float(v)) if v is not None else "" for v in
                        (xv, yv, rep.mean_low, rep.mean_high, rep.point, rep.se_low, rep.se_high)])
    out.write(f"# monotonicity_in_{xname} {json.dumps(_monotonicity(points, 1), sort_keys=True)}\n")
    out.write(f"# monotonicity_in_{yname} {json.dumps(_monotonicity(points, 0), sort_keys=True)}\n")
    return EXIT_OK


def _axis(lo, hi, num, dlo, dhi, dnum) -> List[float]:
    lo = dlo if lo is None else lo
    hi = dhi if hi is None else hi
    num = dnum if num is None else num
    if num < 1:
        raise ValidationError("grid resolution must be at least 1", field="grid")
    if num == 1:
        return [float(lo)]
    return [float(v) for v in np.linspace(lo, hi, num)]


def _load_series(path: str) -> PriceSeries:
    try:
        return PriceSeries.read_csv(path)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}", field="csv") from None


def cmd_calibrate(args, out) -> int:
    series = _load_series(args.csv)
    start = args.start or (series.dates[0] if len(series) else None)
    end = args.end or (series.dates[-1] if len(series) else None)
    n_obs = len(series.between(start, end)) if len(series) else 0
    if n_obs < 2:
        raise InsufficientDataError(
            f"insufficient data: {n_obs} close(s) in the calibration window, need at least 2", field="csv"
        )
    window = CalibrationWindow(start, end, args.trading_days)
    cal = calibrate(series, window)
    run = _Run("calibrate", args, {"csv": args.csv, "start": start.isoformat(), "end": end.isoformat(),
                                   "trading_days": args.trading_days})
    full = {"sigma": cal.sigma, "s0": cal.s0, "m0": cal.m0}
    payload: Dict[str, Any] = _round_tree(dict(full))
    payload["full_precision"] = full
    payload["pricing_date"] = cal.pricing_date.isoformat()
    payload["window"] = {"start": start.isoformat(), "end": end.isoformat(),
                         "trading_days": args.trading_days, "observations": n_obs}
    payload["manifest"] = run.manifest()
    _emit_json(payload, out)
    return EXIT_OK


def cmd_backtest(args, out) -> int:
    series = _load_series(args.csv)
    if args.end is not None:
        series = series.between(end=args.end)
    inception = args.inception
    if inception not in series.dates:
        raise ValidationError(f"inception {inception} is not a date in the series", field="inception")
    s_incep = float(series.closes[series.dates.index(inception)])
    m_init = args.m_init
    if m_init is None:
        m_init = float(np.max(series.between(end=inception).closes))
    multiplier = m_init if args.multiplier is None else args.multiplier
    if args.pi_premium is not None:
        pi_premium = args.pi_premium
    elif args.pi_unit_price is not None:
        pi_premium = premium_from_unit_price(args.pi_unit_price, multiplier)
    else:
        raise ValidationError("give --pi-premium or --pi-unit-price", field="premium")
    if args.put_premium is None:
        raise ValidationError("--put-premium is required", field="premium")
    strike = s_incep if args.put_strike is None else args.put_strike
    put = PortfolioSpec(series, HedgeKind.AMERICAN_PUT, args.put_premium, inception, strike=strike)
    pi = PortfolioSpec(series, HedgeKind.PI_DRAWDOWN, pi_premium, inception, multiplier=multiplier)
    run = _Run("backtest", args, {"csv": args.csv, "inception": inception.isoformat(),
                                  "end": args.end.isoformat() if args.end else None,
                                  "put_strike": strike, "put_premium": args.put_premium,
                                  "multiplier": multiplier, "pi_premium": pi_premium, "m_init": m_init})
    out.write(run.manifest_line())
    write_comparison_csv(compare(put, pi, m_init), out)
    return EXIT_OK


def cmd_fixture(args, out) -> int:
    try:
        with open(args.fixture) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {args.fixture}: {exc.strerror}", field="tree") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}", field="tree") from None
    tree = FixtureTree.from_dict(data)
    estimates = evaluate_fixture(tree)
    run = _Run("fixture", args, {"fixture": args.fixture})
    nodes = [{"path": list(path), "theta": est.theta, "phi": est.phi}
             for path, est in sorted(estimates.items(), key=lambda kv: (len(kv[0]), kv[0]))]
    root = estimates[()]
    _emit_json({"theta": root.theta, "phi": root.phi, "nodes": nodes, "manifest": run.manifest()}, out)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pioptions", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--no-runtime", action="store_true",
                        help="omit timestamps, wall time and thread count from the manifest")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", parents=[common], help="low/high bounds for one option")
    _add_market(p, {})
    _add_payoff(p, {})
    _add_tree(p)
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("table1", parents=[common], help="American-call validation against Black-Scholes")
    _add_market(p, {"s0": 100.0, "r": 0.05, "sigma": 0.2})
    p.add_argument("--strikes", type=_parse_floats, default=[80.0, 85.0, 90.0, 95.0, 100.0, 105.0, 110.0])
    _add_tree(p)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("surface", parents=[common], help="price grid over (strike, m0) or (a, b)")
    p.add_argument("--grid", choices=sorted(_SURFACE_PRESETS), default="k-m0")
    _add_market(p, {})
    _add_payoff(p, {"kind": None})
    for axis in ("x", "y"):
        p.add_argument(f"--{axis}-min", type=float)
        p.add_argument(f"--{axis}-max", type=float)
        p.add_argument(f"--{axis}-num", type=int)
    _add_tree(p, branches=25, replications=200)
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("calibrate", parents=[common], help="volatility and running max from a date,close CSV")
    p.add_argument("csv")
    p.add_argument("--start", type=_parse_date)
    p.add_argument("--end", type=_parse_date)
    p.add_argument("--trading-days", type=int, default=252)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("backtest", parents=[common], help="American put vs drawdown pi-option portfolios")
    p.add_argument("csv")
    p.add_argument("--inception", type=_parse_date, required=True)
    p.add_argument("--end", type=_parse_date)
    p.add_argument("--put-strike", type=float, help="default: close at inception")
    p.add_argument("--put-premium", type=float)
    p.add_argument("--multiplier", type=float, help="drawdown contracts per unit (default: m-init)")
    p.add_argument("--pi-premium", type=float, help="total premium of the drawdown hedge")
    p.add_argument("--pi-unit-price", type=float, help="price of one drawdown contract")
    p.add_argument("--m-init", type=float, help="running max at inception (default: max close up to it)")
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("fixture", parents=[common], help="evaluate both estimators on a JSON tree")
    p.add_argument("fixture")
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except BudgetExceededError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_RUNTIME
    except ValidationError as exc:
        flag = _FIELD_FLAGS.get(exc.field or "", f"--{(exc.field or '').replace('_', '-')}")
        prefix = f"{flag}: " if exc.field else ""
        err.write(f"error: {prefix}{exc}\n")
        return EXIT_VALIDATION
    except PiOptionsError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
