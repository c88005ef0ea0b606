"""Command-line front end.

Thin adapters only: every subcommand parses flags, calls the matching
module function, and formats what comes back.  No numeric logic lives
here.  Exit codes: 0 success, 1 domain or convergence failure, 2 usage.
Text output prints 6 significant digits, csv and json print 12 so that
results can be re-ingested without loss.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from typing import Callable, Sequence

from .calibration import (
    BOND_CHAIN_DT,
    BOND_CHAIN_P0,
    BOND_CHAIN_TAIL_RATES,
    bond_chain_quotes,
    calibrate,
    format_report,
    read_price_series_csv,
    read_quotes_csv,
    log_returns,
    table_report,
)
from .distributions import ExpParams, HistogramSpec, build_histogram, delta_from_carry
from .dynamics import (
    DensityGrid,
    DynParams,
    fit_two_sided_exponential,
    predicted_exponents,
    simulate_returns,
)
from .exponential import ExpPriceInputs, exp_price_closed
from .gaussian import GaussParams, bs_price, implied_vol
from .stretched import StretchedParams, stretched_price_quadrature
from .types import ExpOptError, NoiseKind, OptionKind, PricingContext

__all__ = ["run", "main", "emit_plotdata"]

_TEXT_DIGITS = 6
_FULL_DIGITS = 12

_NOISE = {
    "exp": NoiseKind.TWO_SIDED_EXPONENTIAL,
    "gauss": NoiseKind.GAUSSIAN,
}


class _Usage(Exception):
    """Flag combination error below argparse's radar; maps to exit 2."""


def _sig(value: float, digits: int) -> str:
    return f"{value:.{digits}g}"


def _as_number(value):
    if isinstance(value, float):
        return float(f"{value:.{_FULL_DIGITS}g}")
    return value


def _render_pairs(pairs: Sequence[tuple[str, object]], fmt: str) -> str:
    """One scalar result set in the chosen format."""
    if fmt == "text":
        width = max(len(k) for k, _ in pairs)
        lines = []
        for key, value in pairs:
            shown = _sig(value, _TEXT_DIGITS) if isinstance(value, float) else str(value)
            lines.append(f"{key:<{width}}  {shown}")
        return "\n".join(lines)
    if fmt == "csv":
        lines = ["quantity,value"]
        for key, value in pairs:
            shown = _sig(value, _FULL_DIGITS) if isinstance(value, float) else str(value)
            lines.append(f"{key},{shown}")
        return "\n".join(lines)
    return json.dumps({k: _as_number(v) for k, v in pairs}, indent=2)


def emit_plotdata(kind: str, payload) -> list[str]:
    """Two-column CSV rows (with header) for external plotting.

    histogram: bin center and count from a HistogramResult.
    smile: strike and implied volatility from table_report rows (model
    vol when it inverts, market vol otherwise).
    density: grid point and density value from a DensityGrid.
    """
    if kind == "histogram":
        hist = payload
        if hist is None or len(hist.centers) == 0:
            raise _empty(kind)
        rows = ["x,count"]
        rows += [f"{_sig(float(c), _FULL_DIGITS)},{int(n)}"
                 for c, n in zip(hist.centers, hist.counts)]
        return rows
    if kind == "smile":
        table = list(payload or [])
        if not table:
            raise _empty(kind)
        rows = ["strike,implied_vol"]
        for r in table:
            vol = r.model_vol if r.model_vol is not None else r.market_vol
            if vol is None:
                continue
            rows.append(f"{_sig(r.strike, _FULL_DIGITS)},{_sig(vol, _FULL_DIGITS)}")
        if len(rows) == 1:
            raise _empty(kind)
        return rows
    if kind == "density":
        grid = payload
        if grid is None or len(getattr(grid, "x", ())) == 0:
            raise _empty(kind)
        rows = ["x,density"]
        rows += [f"{_sig(float(x), _FULL_DIGITS)},{_sig(float(v), _FULL_DIGITS)}"
                 for x, v in zip(grid.x, grid.values)]
        return rows
    raise _Usage(f"unknown plot kind {kind!r}")


def _empty(kind: str) -> ExpOptError:
    return ExpOptError(f"no data to plot for {kind!r}")


# ---------------------------------------------------------------------------
# subcommand handlers; each returns the full output string


def _require(args: argparse.Namespace, names: Sequence[str], model: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise _Usage(f"model {model!r} needs {', '.join(missing)}")


def _cmd_price(args: argparse.Namespace) -> str:
    carry = args.carry if args.carry is not None else 0.0
    ctx = PricingContext(args.p0, args.rate, carry, args.dt)
    kind = OptionKind(args.kind)
    if args.model == "exp":
        _require(args, ("gamma", "nu"), "exp")
        delta = delta_from_carry(carry, args.dt, args.gamma, args.nu)
        inputs = ExpPriceInputs(ctx, ExpParams(args.gamma, args.nu, delta))
        value = exp_price_closed(inputs, args.strike, kind)
    elif args.model == "bs":
        _require(args, ("sigma",), "bs")
        value = bs_price(ctx, GaussParams(args.sigma), args.strike, kind,
                         growth_rate=args.carry)
    else:
        _require(args, ("gamma", "nu", "alpha"), "stretched")
        params = StretchedParams(args.alpha, args.gamma, args.nu,
                                 delta=args.delta)
        value = stretched_price_quadrature(ctx, params, args.strike, kind)
    return _render_pairs([("price", value)], args.format)


def _cmd_implied_vol(args: argparse.Namespace) -> str:
    ctx = PricingContext(args.p0, args.rate,
                         args.carry if args.carry is not None else args.rate,
                         args.dt)
    vol = implied_vol(ctx, args.strike, OptionKind(args.kind), args.price,
                      growth_rate=args.carry)
    return _render_pairs([("implied_vol", vol)], args.format)


def _result_pairs(result) -> list[tuple[str, object]]:
    return [
        ("gamma", result.gamma),
        ("nu", result.nu),
        ("carry", result.carry),
        ("discount", result.discount),
        ("peak", result.delta),
        ("rms_fractional_deviation", result.rms_fractional_deviation),
        ("n_anchors", len(result.anchors)),
    ]


def _run_calibration(args: argparse.Namespace, quotes, p0: float, dt: float,
                     hold) -> str:
    result = calibrate(quotes, p0, dt, args.rate_init, args.carry_init,
                       freeze_carry_and_discount=getattr(args, "freeze_rates", False),
                       hold_tail_rates=hold)
    ctx = PricingContext(p0, result.discount, result.carry, dt)
    rows = table_report(quotes, result, ctx)
    if args.format == "text":
        return format_report(rows, result, style="text")
    if args.format == "csv":
        if getattr(args, "smile", False):
            return "\n".join(emit_plotdata("smile", rows))
        return _render_pairs(_result_pairs(result), "csv")
    doc = {k: _as_number(v) for k, v in _result_pairs(result)}
    doc["rows"] = [
        {
            "option": r.label,
            "market_price": _as_number(r.market_price),
            "market_vol": _as_number(r.market_vol) if r.market_vol is not None else None,
            "model_price": _as_number(r.model_price),
            "model_vol": _as_number(r.model_vol) if r.model_vol is not None else None,
        }
        for r in rows
    ]
    return json.dumps(doc, indent=2)


def _parse_hold(text: str | None) -> tuple[float, float] | None:
    if text is None:
        return None
    parts = text.split(",")
    if len(parts) != 2:
        raise _Usage("--hold-tails expects 'gamma,nu'")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise _Usage(f"--hold-tails expects numbers, got {text!r}") from exc


def _cmd_calibrate(args: argparse.Namespace) -> str:
    quotes = read_quotes_csv(args.quotes)
    return _run_calibration(args, quotes, args.p0, args.dt,
                            _parse_hold(args.hold_tails))


def _cmd_table1(args: argparse.Namespace) -> str:
    hold = BOND_CHAIN_TAIL_RATES if args.mode == "pinned" else None
    quotes = bond_chain_quotes(args.column)
    return _run_calibration(args, quotes, BOND_CHAIN_P0, BOND_CHAIN_DT, hold)


def _cmd_simulate(args: argparse.Namespace) -> str:
    seed = args.seed if args.seed is not None else secrets.randbits(32)
    params = DynParams(b=args.b, b_prime=args.bprime,
                       R_plus=args.r_plus, R_minus=args.r_minus,
                       alpha=args.alpha)
    ens = simulate_returns(params, args.t, args.paths, args.steps, seed,
                           _NOISE[args.noise])
    if args.histogram_bins:
        lo = float(ens.samples.min())
        hi = float(ens.samples.max())
        width = (hi - lo) / args.histogram_bins or 1.0
        hist = build_histogram(ens.samples, HistogramSpec(width, lo, hi))
        return "\n".join(emit_plotdata("histogram", hist))
    gamma_hat, nu_hat, peak_hat, loglik = fit_two_sided_exponential(ens.samples)
    gamma_ref, nu_ref = predicted_exponents(args.b, args.bprime, args.t)
    pairs = [
        ("seed", seed),
        ("paths", args.paths),
        ("steps", args.steps),
        ("horizon", args.t),
        ("sample_mean", float(ens.samples.mean())),
        ("sample_variance", float(ens.samples.var())),
        ("fitted_gamma", gamma_hat),
        ("fitted_nu", nu_hat),
        ("fitted_peak", peak_hat),
        ("loglik", loglik),
        ("scaling_gamma", gamma_ref),
        ("scaling_nu", nu_ref),
    ]
    return _render_pairs(pairs, args.format)


def _cmd_fit_returns(args: argparse.Namespace) -> str:
    series = read_price_series_csv(args.prices)
    xs = log_returns(series, args.lag)
    gamma_hat, nu_hat, peak_hat, loglik = fit_two_sided_exponential(xs)
    pairs = [
        ("n_returns", len(xs)),
        ("lag", args.lag),
        ("gamma", gamma_hat),
        ("nu", nu_hat),
        ("peak", peak_hat),
        ("loglik", loglik),
    ]
    return _render_pairs(pairs, args.format)


def _parse_matrix(text: str):
    return [[float(v) for v in row.split(",")] for row in text.split(";")]


def _cmd_capm(args: argparse.Namespace) -> str:
    from .capm import CapmInputs, efficient_weights

    import numpy as np

    sigma = np.asarray(_parse_matrix(args.sigma), dtype=float)
    excess = np.asarray([float(v) for v in args.excess.split(",")], dtype=float)
    inputs = CapmInputs(sigma, excess, args.r0)
    weights = efficient_weights(inputs)
    pairs: list[tuple[str, object]] = [
        (f"weight_{i}", float(w)) for i, w in enumerate(weights)]
    pairs.append(("portfolio_excess_return", float(weights @ excess)))
    pairs.append(("portfolio_variance", float(weights @ sigma @ weights)))
    return _render_pairs(pairs, args.format)


# ---------------------------------------------------------------------------
# parser


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--format", choices=("text", "csv", "json"),
                     default="text", help="output format")
    sub.add_argument("--out", help="write output to this path instead of stdout")


def _add_market(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--p0", type=float, required=True,
                     help="current underlying price")
    sub.add_argument("--dt", type=float, required=True,
                     help="time to expiration in years")
    sub.add_argument("--rate", type=float, required=True,
                     help="discount rate per annum")
    sub.add_argument("--carry", type=float, default=None,
                     help="carry (growth) rate per annum")
    sub.add_argument("--strike", type=float, required=True)
    sub.add_argument("--kind", choices=("call", "put"), required=True)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="expopt",
        description="Exponential-returns option pricing toolkit")
    subs = parser.add_subparsers(dest="command", required=True)

    price = subs.add_parser("price", help="price one option")
    _add_market(price)
    price.add_argument("--model", choices=("exp", "bs", "stretched"),
                       required=True)
    price.add_argument("--gamma", type=float, help="left tail rate")
    price.add_argument("--nu", type=float, help="right tail rate")
    price.add_argument("--sigma", type=float, help="lognormal volatility")
    price.add_argument("--alpha", type=float, help="stretching power")
    price.add_argument("--delta", type=float, default=0.0,
                       help="density peak (stretched model only)")
    _add_common(price)
    price.set_defaults(func=_cmd_price)

    iv = subs.add_parser("implied-vol", help="invert the lognormal price")
    _add_market(iv)
    iv.add_argument("--price", type=float, required=True,
                    help="observed option price")
    _add_common(iv)
    iv.set_defaults(func=_cmd_implied_vol)

    cal = subs.add_parser("calibrate", help="fit the density to quotes")
    cal.add_argument("--quotes", required=True,
                     help="CSV with header strike,kind,price")
    cal.add_argument("--p0", type=float, required=True)
    cal.add_argument("--dt", type=float, required=True)
    cal.add_argument("--rate-init", type=float, default=0.05)
    cal.add_argument("--carry-init", type=float, default=0.0)
    cal.add_argument("--freeze-rates", action="store_true",
                     help="pin carry and discount to the initial values")
    cal.add_argument("--hold-tails", default=None, metavar="GAMMA,NU",
                     help="pin the tail rates, fit carry and discount")
    cal.add_argument("--smile", action="store_true",
                     help="with --format csv, emit strike/vol rows")
    _add_common(cal)
    cal.set_defaults(func=_cmd_calibrate)

    t1 = subs.add_parser(
        "table1",
        help="calibration demo on the bundled 1989 bond option chain")
    t1.add_argument("--mode", choices=("pinned", "free"), default="pinned",
                    help="pinned: hold the shipped tail rates; free: fit all")
    t1.add_argument("--column", choices=("market", "reference"),
                    default="market", help="price column to calibrate against")
    t1.add_argument("--rate-init", type=float, default=0.05)
    t1.add_argument("--carry-init", type=float, default=0.0)
    t1.add_argument("--smile", action="store_true",
                    help="with --format csv, emit strike/vol rows")
    _add_common(t1)
    t1.set_defaults(func=_cmd_table1, freeze_rates=False)

    sim = subs.add_parser("simulate", help="simulate the return process")
    sim.add_argument("--b", type=float, required=True,
                     help="right-side diffusion scale")
    sim.add_argument("--bprime", type=float, required=True,
                     help="left-side diffusion scale")
    sim.add_argument("--alpha", type=float, default=1.0)
    sim.add_argument("--r-plus", type=float, default=0.0)
    sim.add_argument("--r-minus", type=float, default=0.0)
    sim.add_argument("--t", type=float, required=True,
                     help="horizon in years")
    sim.add_argument("--paths", type=int, required=True)
    sim.add_argument("--steps", type=int, required=True)
    sim.add_argument("--noise", choices=tuple(_NOISE), default="exp")
    sim.add_argument("--seed", type=int, default=None,
                     help="RNG seed; one is generated and printed if absent")
    sim.add_argument("--histogram-bins", type=int, default=0,
                     help="emit a histogram CSV instead of summary stats")
    _add_common(sim)
    sim.set_defaults(func=_cmd_simulate)

    fit = subs.add_parser("fit-returns",
                          help="fit the two-sided exponential to a price series")
    fit.add_argument("--prices", required=True,
                     help="CSV with header timestamp,price")
    fit.add_argument("--lag", type=int, default=1)
    _add_common(fit)
    fit.set_defaults(func=_cmd_fit_returns)

    cap = subs.add_parser("capm", help="efficient portfolio weights")
    cap.add_argument("--sigma", required=True, metavar="A,B;B,C",
                     help="covariance rows separated by ';'")
    cap.add_argument("--excess", required=True, metavar="X,Y",
                     help="excess returns, comma separated")
    cap.add_argument("--r0", type=float, default=0.0)
    _add_common(cap)
    cap.set_defaults(func=_cmd_capm)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        text = args.func(args)
    except SystemExit as exc:  # argparse handles usage errors and --help
        code = exc.code
        return code if isinstance(code, int) else 2
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ExpOptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:  # malformed numbers in input files or flags
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
