"""Quote handling, tic arithmetic, anchor choice and smile calibration."""

import math
import time

import pytest
from numpy.testing import assert_allclose

from expopt.calibration import (
    BOND_CHAIN_DT,
    BOND_CHAIN_P0,
    BOND_CHAIN_TAIL_RATES,
    DEFAULT_TIC,
    CalibrationResult,
    Quote,
    bond_chain_quotes,
    calibrate,
    format_report,
    log_returns,
    read_price_series_csv,
    read_quotes_csv,
    select_anchors,
    table_report,
    tic_adjust,
)
from expopt.distributions import ExpParams, delta_from_carry
from expopt.exponential import ExpPriceInputs, exp_price_closed
from expopt.types import DomainError, OptionKind, PricingContext

TRUE_GAMMA, TRUE_NU = 10.96, 16.76
TRUE_R, TRUE_C = 0.07, 0.01
STRIKES = [(76, "P"), (78, "P"), (80, "P"), (82, "P"), (84, "P"), (86, "P"),
           (88, "P"), (90, "P"), (92, "P"), (94, "C"), (96, "C"), (98, "C"),
           (100, "C"), (102, "C"), (104, "C")]


def synthetic_quotes(round_to_tic=False):
    ctx = PricingContext(BOND_CHAIN_P0, TRUE_R, TRUE_C, BOND_CHAIN_DT)
    delta = delta_from_carry(TRUE_C, BOND_CHAIN_DT, TRUE_GAMMA, TRUE_NU)
    inputs = ExpPriceInputs(ctx, ExpParams(TRUE_GAMMA, TRUE_NU, delta))
    quotes = []
    for strike, k in STRIKES:
        kind = OptionKind.CALL if k == "C" else OptionKind.PUT
        price = exp_price_closed(inputs, float(strike), kind)
        if round_to_tic:
            price = round(price / DEFAULT_TIC) * DEFAULT_TIC
        if price > 0.0:
            quotes.append(Quote(float(strike), kind, price))
    return quotes


def test_tic_adjust_rounds_up_after_loading():
    # half a tic of transaction cost, then up to the next 1/64
    assert tic_adjust(0.0) == 1.0 / 64.0
    assert tic_adjust(0.1) == 7.0 / 64.0
    assert tic_adjust(1.0 / 64.0) == 2.0 / 64.0
    assert tic_adjust(0.5, txn_cost_tics=0.0) == 32.0 / 64.0
    with pytest.raises(DomainError):
        tic_adjust(-0.01)
    with pytest.raises(DomainError):
        tic_adjust(0.1, tic=0.0)


def test_select_anchors_nearest_the_money(market_quotes):
    anchors = select_anchors(market_quotes, BOND_CHAIN_P0)
    labels = [f"{q.strike:g}{'C' if q.kind is OptionKind.CALL else 'P'}"
              for q in anchors]
    assert labels == ["88P", "86P", "84P", "94C", "96C", "98C"]


def test_anchor_moneyness_is_enforced(market_quotes):
    bad = [Quote(94.0, OptionKind.PUT, 0.5)] + list(market_quotes[:5])
    with pytest.raises(DomainError, match="above the underlying"):
        calibrate(bad, BOND_CHAIN_P0, BOND_CHAIN_DT, anchors=bad[:4])


def test_calibrate_needs_enough_anchors(market_quotes):
    with pytest.raises(DomainError, match="near-the-money"):
        calibrate(market_quotes[:3], BOND_CHAIN_P0, BOND_CHAIN_DT)


def test_calibrate_recovers_noise_free_rates():
    quotes = synthetic_quotes()
    t0 = time.perf_counter()
    result = calibrate(quotes, BOND_CHAIN_P0, BOND_CHAIN_DT)
    elapsed = time.perf_counter() - t0
    assert abs(result.gamma / TRUE_GAMMA - 1.0) < 0.005
    assert abs(result.nu / TRUE_NU - 1.0) < 0.005
    assert result.rms_fractional_deviation < 1e-5
    assert elapsed < 1.0


def test_calibrate_survives_tic_rounding():
    result = calibrate(synthetic_quotes(round_to_tic=True),
                       BOND_CHAIN_P0, BOND_CHAIN_DT)
    assert abs(result.gamma / TRUE_GAMMA - 1.0) < 0.05
    assert abs(result.nu / TRUE_NU - 1.0) < 0.05


def test_hold_tail_rates_pins_the_rates():
    result = calibrate(synthetic_quotes(), BOND_CHAIN_P0, BOND_CHAIN_DT,
                       hold_tail_rates=(TRUE_GAMMA, TRUE_NU))
    assert result.gamma == TRUE_GAMMA and result.nu == TRUE_NU
    assert abs(result.carry - TRUE_C) < 5e-3
    assert abs(result.discount - TRUE_R) < 5e-3


def test_freeze_carry_and_discount():
    result = calibrate(synthetic_quotes(), BOND_CHAIN_P0, BOND_CHAIN_DT,
                       R_init=TRUE_R, c_init=TRUE_C,
                       freeze_carry_and_discount=True)
    assert result.discount == TRUE_R and result.carry == TRUE_C
    assert abs(result.gamma / TRUE_GAMMA - 1.0) < 0.005
    with pytest.raises(DomainError, match="no free parameters"):
        calibrate(synthetic_quotes(), BOND_CHAIN_P0, BOND_CHAIN_DT,
                  freeze_carry_and_discount=True, hold_tail_rates=(10.0, 15.0))


def test_calibration_result_validates():
    with pytest.raises(DomainError, match="exceed 1"):
        CalibrationResult(gamma=10.0, nu=0.8, carry=0.0, discount=0.05,
                          delta=0.0, rms_fractional_deviation=0.01,
                          anchors=())


def test_table_report_shape_and_vols():
    quotes = synthetic_quotes()
    result = calibrate(quotes, BOND_CHAIN_P0, BOND_CHAIN_DT)
    ctx = PricingContext(BOND_CHAIN_P0, result.discount, result.carry,
                         BOND_CHAIN_DT)
    rows = table_report(quotes, result, ctx)
    assert len(rows) == len(quotes)
    assert [r.label for r in rows[:3]] == ["76P", "78P", "80P"]
    for r in rows:
        # model prices come out on the tic grid
        assert_allclose(r.model_price / DEFAULT_TIC,
                        round(r.model_price / DEFAULT_TIC), atol=1e-9)
    near = [r for r in rows if 84 <= r.strike <= 98]
    assert all(r.market_vol is not None for r in near)
    vols = [r.market_vol for r in near]
    assert all(0.01 < v < 1.0 for v in vols)


def test_format_report_styles():
    quotes = synthetic_quotes()
    result = calibrate(quotes, BOND_CHAIN_P0, BOND_CHAIN_DT)
    ctx = PricingContext(BOND_CHAIN_P0, result.discount, result.carry,
                         BOND_CHAIN_DT)
    rows = table_report(quotes, result, ctx)
    text = format_report(rows, result)
    assert "market" in text and "gamma=" in text
    assert len(text.splitlines()) == len(rows) + 2
    kv = format_report(rows, result, style="kv")
    assert kv.splitlines()[0].startswith("gamma ")
    assert sum(1 for line in kv.splitlines() if line.startswith("row ")) \
        == len(rows)
    with pytest.raises(DomainError):
        format_report(rows, result, style="html")


def test_log_returns_and_series_io(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text(
        "timestamp,price\n"
        "2026-01-05T09:00:00,100.0\n"
        "2026-01-05T10:00:00,101.0\n"
        "2026-01-05T11:00:00,99.5\n"
        "2026-01-05T12:00:00,99.5\n")
    series = read_price_series_csv(path)
    assert len(series.prices) == 4
    xs = log_returns(series)
    assert_allclose(xs, [math.log(101.0 / 100.0), math.log(99.5 / 101.0), 0.0],
                    atol=1e-15)
    assert len(log_returns(series, lag=2)) == 2


def test_read_quotes_csv(quotes_csv_path, market_quotes):
    quotes = read_quotes_csv(quotes_csv_path)
    assert quotes == market_quotes


def test_bundled_chain_columns(market_quotes, reference_quotes):
    assert len(market_quotes) == 15
    assert market_quotes[0] == Quote(76.0, OptionKind.PUT, 0.047)
    assert reference_quotes[7] == Quote(90.0, OptionKind.PUT, 2.859)
    assert BOND_CHAIN_TAIL_RATES == (10.96, 16.76)
    assert abs(BOND_CHAIN_DT - 107.0 / 365.0) < 1e-15
    with pytest.raises(DomainError):
        bond_chain_quotes("modeled")
