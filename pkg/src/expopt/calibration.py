"""Quote ingestion, tail-rate calibration, and price-table reporting.

The calibration fits the closed-form two-sided exponential price to a
small set of near-the-money quotes: puts struck below the underlying,
calls struck above.  The objective is the mean squared fractional
pricing error over that anchor set; the reported figure of merit is its
square root.  The carry and discount rates are weakly identified by a
single expiry, so they can be frozen to user-supplied values, and the
tail rates can be pinned when only the rate pair is wanted.
"""

from __future__ import annotations

import csv
import datetime as _dt
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .distributions import ExpParams, delta_from_carry
from .exponential import ExpPriceInputs, exp_price_closed
from .gaussian import implied_vol
from .types import ConvergenceError, DomainError, OptionKind, PricingContext

DEFAULT_TIC = 1.0 / 64.0
DEFAULT_TXN_COST_TICS = 0.5

_MAX_ITER = 500
_ANCHORS_PER_SIDE = 3
_MIN_ANCHORS = 4


@dataclass(frozen=True)
class Quote:
    strike: float
    kind: OptionKind
    price: float

    def __post_init__(self):
        if self.strike <= 0.0:
            raise DomainError(f"strike must be positive, got {self.strike}")
        if self.price < 0.0:
            raise DomainError(f"quoted price must be nonnegative, got {self.price}")
        if not isinstance(self.kind, OptionKind):
            object.__setattr__(self, "kind", OptionKind(self.kind))


@dataclass(frozen=True)
class CalibrationResult:
    gamma: float
    nu: float
    carry: float
    discount: float
    delta: float
    rms_fractional_deviation: float
    anchors: tuple[Quote, ...]

    def __post_init__(self):
        if self.nu <= 1.0:
            raise DomainError(f"calibrated nu must exceed 1, got {self.nu}")
        if self.rms_fractional_deviation < 0.0:
            raise DomainError("rms deviation cannot be negative")


@dataclass(frozen=True)
class PriceSeries:
    timestamps: tuple
    prices: tuple[float, ...]

    def __post_init__(self):
        if len(self.timestamps) != len(self.prices):
            raise DomainError("timestamps and prices must have equal length")
        if any(p <= 0.0 for p in self.prices):
            raise DomainError("prices must be positive")
        ts = list(self.timestamps)
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise DomainError("timestamps must be strictly increasing")

    def __len__(self):
        return len(self.prices)


def log_returns(series: PriceSeries, lag: int = 1) -> np.ndarray:
    """Log price changes over `lag` steps: ln(p[i+lag] / p[i])."""
    if lag < 1:
        raise DomainError(f"lag must be at least 1, got {lag}")
    if len(series) <= lag:
        raise DomainError(
            f"series of length {len(series)} is too short for lag {lag}"
        )
    p = np.asarray(series.prices, dtype=float)
    return np.log(p[lag:] / p[:-lag])


def tic_adjust(raw: float, tic: float = DEFAULT_TIC,
               txn_cost_tics: float = DEFAULT_TXN_COST_TICS) -> float:
    """Add the transaction cost, then round up to the next tic."""
    if tic <= 0.0:
        raise DomainError(f"tic must be positive, got {tic}")
    if raw < 0.0:
        raise DomainError(f"raw price must be nonnegative, got {raw}")
    # the 1e-9 slack keeps values already on the grid from jumping a tic
    loaded = raw + txn_cost_tics * tic
    return math.ceil(loaded / tic - 1e-9) * tic


def select_anchors(quotes: Sequence[Quote], p0: float,
                   per_side: int = _ANCHORS_PER_SIDE) -> tuple[Quote, ...]:
    """Nearest-the-money puts below p0 and calls above, by |log moneyness|."""
    if p0 <= 0.0:
        raise DomainError(f"underlying price must be positive, got {p0}")
    puts = [q for q in quotes
            if q.kind is OptionKind.PUT and q.strike < p0 and q.price > 0.0]
    calls = [q for q in quotes
             if q.kind is OptionKind.CALL and q.strike > p0 and q.price > 0.0]
    key = lambda q: abs(math.log(q.strike / p0))
    puts.sort(key=key)
    calls.sort(key=key)
    return tuple(puts[:per_side] + calls[:per_side])


def _check_anchor_moneyness(anchors: Sequence[Quote], p0: float) -> None:
    for q in anchors:
        if q.kind is OptionKind.PUT and q.strike > p0:
            raise DomainError(
                f"put anchor struck at {q.strike} above the underlying {p0}")
        if q.kind is OptionKind.CALL and q.strike < p0:
            raise DomainError(
                f"call anchor struck at {q.strike} below the underlying {p0}")
        if q.price <= 0.0:
            raise DomainError("anchor quotes must have positive prices")


def _anchor_prices(anchors, p0, dt, gamma, nu, c, R):
    d = delta_from_carry(c, dt, gamma, nu)
    inputs = ExpPriceInputs(PricingContext(p0, R, c, dt),
                            ExpParams(gamma, nu, d))
    return [exp_price_closed(inputs, q.strike, q.kind) for q in anchors]


def _mean_sq_fractional_error(anchors, p0, dt, gamma, nu, c, R):
    model = _anchor_prices(anchors, p0, dt, gamma, nu, c, R)
    return sum(((m - q.price) / q.price) ** 2
               for m, q in zip(model, anchors)) / len(anchors)


def _slope_seeds(anchors: Sequence[Quote], p0: float) -> tuple[float, float]:
    """Crude tail-rate guesses from adjacent-strike price ratios.

    A put tail decays like strike^(1+gamma) and a call tail like
    strike^(1-nu); two quotes per side give a slope estimate.
    """
    def side_slope(side, fallback):
        pts = sorted((q for q in anchors if q.kind is side),
                     key=lambda q: q.strike)
        if len(pts) < 2:
            return fallback
        a, b = pts[0], pts[-1]
        if a.price <= 0 or b.price <= 0 or a.strike == b.strike:
            return fallback
        return math.log(b.price / a.price) / math.log(b.strike / a.strike)

    gamma0 = side_slope(OptionKind.PUT, 11.0) - 1.0
    nu0 = 1.0 - side_slope(OptionKind.CALL, -15.0)
    gamma0 = min(max(gamma0, 2.0), 120.0)
    nu0 = min(max(nu0, 2.0), 160.0)
    return gamma0, nu0


def calibrate(quotes: Sequence[Quote], p0: float, dt: float,
              R_init: float = 0.05, c_init: float = 0.0, *,
              freeze_carry_and_discount: bool = False,
              hold_tail_rates: tuple[float, float] | None = None,
              anchors: Sequence[Quote] | None = None) -> CalibrationResult:
    """Fit tail rates (and optionally carry/discount) to near-money quotes.

    By default all four of (gamma, nu, carry, discount) are free, started
    from slope-based seeds and (c_init, R_init).  `freeze_carry_and_discount`
    pins the rates to the initial values; `hold_tail_rates` pins
    (gamma, nu) instead and fits only the rate pair.
    """
    if dt <= 0.0:
        raise DomainError(f"time to expiry must be positive, got {dt}")
    if anchors is None:
        anchors = select_anchors(quotes, p0)
    else:
        anchors = tuple(anchors)
    _check_anchor_moneyness(anchors, p0)
    if len(anchors) < _MIN_ANCHORS:
        raise DomainError(
            f"need at least {_MIN_ANCHORS} usable near-the-money quotes "
            f"(puts below {p0}, calls above), got {len(anchors)}")

    if freeze_carry_and_discount and hold_tail_rates is not None:
        raise DomainError("no free parameters left to fit")

    if hold_tail_rates is not None:
        g_pin, n_pin = hold_tail_rates
        if g_pin <= 0.0 or n_pin <= 1.0:
            raise DomainError(
                f"pinned tail rates must satisfy gamma > 0 and nu > 1, "
                f"got {hold_tail_rates}")

    gamma0, nu0 = _slope_seeds(anchors, p0)

    def unpack(theta):
        if hold_tail_rates is not None:
            c, R = theta
            return g_pin, n_pin, c, R
        if freeze_carry_and_discount:
            a, b = theta
            return math.exp(a), 1.0 + math.exp(b), c_init, R_init
        a, b, c, R = theta
        return math.exp(a), 1.0 + math.exp(b), c, R

    def objective(theta):
        gamma, nu, c, R = unpack(theta)
        try:
            return _mean_sq_fractional_error(anchors, p0, dt, gamma, nu, c, R)
        except (DomainError, OverflowError):
            return 1e12

    if hold_tail_rates is not None:
        starts = [[c_init, R_init], [c_init + 0.02, R_init],
                  [c_init - 0.02, R_init + 0.05]]
    else:
        seeds = [(gamma0, nu0), (0.6 * gamma0, 0.6 * nu0),
                 (1.6 * gamma0, 1.6 * nu0)]
        starts = []
        for g0, n0 in seeds:
            t = [math.log(g0), math.log(max(n0 - 1.0, 0.5))]
            if not freeze_carry_and_discount:
                t += [c_init, R_init]
            starts.append(t)

    opts = {"maxiter": _MAX_ITER, "xatol": 1e-10, "fatol": 1e-14}
    best = None
    converged = False
    for x0 in starts:
        res = minimize(objective, x0, method="Nelder-Mead", options=opts)
        converged = converged or res.success
        if best is None or res.fun < best.fun:
            best = res
    # one restart from the incumbent in case every start hit the cap
    res = minimize(objective, best.x, method="Nelder-Mead", options=opts)
    converged = converged or res.success
    if res.fun < best.fun:
        best = res
    if not converged:
        raise ConvergenceError(
            "calibration simplex failed to converge within "
            f"{_MAX_ITER} iterations per start")

    gamma, nu, c, R = unpack(best.x)
    rms = math.sqrt(_mean_sq_fractional_error(anchors, p0, dt, gamma, nu, c, R))
    return CalibrationResult(
        gamma=gamma, nu=nu, carry=c, discount=R,
        delta=delta_from_carry(c, dt, gamma, nu),
        rms_fractional_deviation=rms, anchors=anchors)


@dataclass(frozen=True)
class TableRow:
    strike: float
    kind: OptionKind
    market_price: float
    market_vol: float | None
    model_price: float
    model_vol: float | None

    @property
    def label(self) -> str:
        s = f"{self.strike:g}"
        return s + ("C" if self.kind is OptionKind.CALL else "P")


def table_report(quotes: Sequence[Quote], result: CalibrationResult,
                 ctx: PricingContext,
                 txn_cost_tics: float = DEFAULT_TXN_COST_TICS) -> list[TableRow]:
    """Market vs model prices and implied vols, one row per quote.

    Model prices come from the closed form under the calibrated
    parameters, tic-adjusted.  Implied vols invert the lognormal price
    at the calibrated carry; quotes outside the static no-arbitrage band
    get a blank vol rather than an error.
    """
    params = ExpParams(result.gamma, result.nu, result.delta)
    row_ctx = PricingContext(ctx.p0, result.discount, result.carry,
                             ctx.dt, ctx.tic)
    inputs = ExpPriceInputs(row_ctx, params)

    def vol_or_none(strike, kind, price):
        try:
            return implied_vol(row_ctx, strike, kind, price,
                               growth_rate=result.carry)
        except (DomainError, ConvergenceError):
            return None

    rows = []
    for q in sorted(quotes, key=lambda q: (q.strike, q.kind.value)):
        raw = exp_price_closed(inputs, q.strike, q.kind)
        model = tic_adjust(raw, ctx.tic, txn_cost_tics)
        rows.append(TableRow(
            strike=q.strike, kind=q.kind,
            market_price=q.price,
            market_vol=vol_or_none(q.strike, q.kind, q.price),
            model_price=model,
            model_vol=vol_or_none(q.strike, q.kind, model)))
    return rows


def format_report(rows: Sequence[TableRow], result: CalibrationResult,
                  style: str = "text") -> str:
    """Render a report as aligned text or a machine-readable key-value doc."""
    if style == "text":
        out = [f"{'option':>8} {'market':>10} {'mkt vol':>9} "
               f"{'model':>10} {'mdl vol':>9}"]
        for r in rows:
            mv = f"{r.market_vol:.4f}" if r.market_vol is not None else "-"
            dv = f"{r.model_vol:.4f}" if r.model_vol is not None else "-"
            out.append(f"{r.label:>8} {r.market_price:>10.6f} {mv:>9} "
                       f"{r.model_price:>10.6f} {dv:>9}")
        out.append(f"gamma={result.gamma:.6f} nu={result.nu:.6f} "
                   f"carry={result.carry:.6f} discount={result.discount:.6f} "
                   f"rms={result.rms_fractional_deviation:.6g}")
        return "\n".join(out)
    if style == "kv":
        out = [f"gamma {result.gamma!r}", f"nu {result.nu!r}",
               f"carry {result.carry!r}", f"discount {result.discount!r}",
               f"delta {result.delta!r}",
               f"rms_fractional_deviation {result.rms_fractional_deviation!r}",
               f"n_anchors {len(result.anchors)}"]
        for r in rows:
            mv = "" if r.market_vol is None else repr(r.market_vol)
            dv = "" if r.model_vol is None else repr(r.model_vol)
            out.append(f"row {r.label} {r.market_price!r} {mv} "
                       f"{r.model_price!r} {dv}")
        return "\n".join(out)
    raise DomainError(f"unknown report style {style!r}")


def read_quotes_csv(path) -> list[Quote]:
    """Quotes from a CSV with header strike,kind,price and kind in {C, P}."""
    kinds = {"C": OptionKind.CALL, "P": OptionKind.PUT}
    quotes = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"strike", "kind", "price"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise DomainError(
                f"quote CSV must have header strike,kind,price, "
                f"got {reader.fieldnames}")
        for line in reader:
            kind = line["kind"].strip().upper()
            if kind not in kinds:
                raise DomainError(f"option kind must be C or P, got {kind!r}")
            quotes.append(Quote(float(line["strike"]), kinds[kind],
                                float(line["price"])))
    return quotes


def read_price_series_csv(path) -> PriceSeries:
    """Price series from a CSV with header timestamp,price, ISO-8601 times."""
    stamps, prices = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"timestamp", "price"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise DomainError(
                f"series CSV must have header timestamp,price, "
                f"got {reader.fieldnames}")
        for line in reader:
            stamps.append(_dt.datetime.fromisoformat(line["timestamp"]))
            prices.append(float(line["price"]))
    return PriceSeries(tuple(stamps), tuple(prices))


# ---------------------------------------------------------------------------
# Bundled demo data: September 1989 Treasury bond futures option chain.
# The reference columns carry prices and implied vols from an earlier fit
# of the same two-sided exponential model at BOND_CHAIN_TAIL_RATES; they
# ship here as the regression target for the table demo.

BOND_CHAIN_P0 = 89.92
BOND_CHAIN_DT = 107.0 / 365.0
BOND_CHAIN_TAIL_RATES = (10.96, 16.76)

# (strike, kind, market price, market vol, reference price, reference vol)
BOND_CHAIN_1989 = (
    (76.0, OptionKind.PUT, 0.047, 0.150, 0.031, 0.139),
    (78.0, OptionKind.PUT, 0.063, 0.136, 0.047, 0.129),
    (80.0, OptionKind.PUT, 0.110, 0.128, 0.093, 0.128),
    (82.0, OptionKind.PUT, 0.172, 0.116, 0.172, 0.117),
    (84.0, OptionKind.PUT, 0.313, 0.109, 0.297, 0.108),
    (86.0, OptionKind.PUT, 0.594, 0.104, 0.594, 0.104),
    (88.0, OptionKind.PUT, 1.078, 0.100, 1.078, 0.100),
    (90.0, OptionKind.PUT, 1.852, 0.095, 2.859, 0.096),
    (92.0, OptionKind.PUT, 3.000, 0.093, 2.984, 0.093),
    (94.0, OptionKind.CALL, 0.469, 0.093, 0.469, 0.093),
    (96.0, OptionKind.CALL, 0.219, 0.094, 0.219, 0.094),
    (98.0, OptionKind.CALL, 0.109, 0.098, 0.109, 0.098),
    (100.0, OptionKind.CALL, 0.047, 0.100, 0.063, 0.104),
    (102.0, OptionKind.CALL, 0.016, 0.098, 0.031, 0.106),
    (104.0, OptionKind.CALL, 0.016, 0.109, 0.016, 0.109),
)


def bond_chain_quotes(column: str = "market") -> list[Quote]:
    """The bundled 1989 chain as Quote rows.

    ``column`` picks the price source: "market" for the screen quotes,
    "reference" for the shipped model prices.
    """
    idx = {"market": 2, "reference": 4}.get(column)
    if idx is None:
        raise DomainError(
            f"column must be 'market' or 'reference', got {column!r}")
    return [Quote(row[0], row[1], row[idx]) for row in BOND_CHAIN_1989]
