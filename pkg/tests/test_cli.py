"""End-to-end command line checks through the argparse entry point."""

import json

import pytest

from expopt.cli import emit_plotdata, run
from expopt.distributions import ExpParams, delta_from_carry
from expopt.exponential import ExpPriceInputs, exp_price_closed
from expopt.types import ExpOptError, OptionKind, PricingContext

PRICE_ARGS = ["price", "--model", "exp", "--p0", "100", "--dt", "0.3",
              "--rate", "0.05", "--carry", "0.01", "--strike", "95",
              "--kind", "call", "--gamma", "10.96", "--nu", "16.76"]


def run_ok(capsys, argv):
    code = run(argv)
    out = capsys.readouterr()
    assert code == 0, out.err
    return out.out


def test_price_exp_matches_library(capsys):
    out = run_ok(capsys, PRICE_ARGS + ["--format", "json"])
    got = json.loads(out)["price"]
    ctx = PricingContext(100.0, 0.05, 0.01, 0.3)
    delta = delta_from_carry(0.01, 0.3, 10.96, 16.76)
    inputs = ExpPriceInputs(ctx, ExpParams(10.96, 16.76, delta))
    expect = exp_price_closed(inputs, 95.0, OptionKind.CALL)
    assert abs(got / expect - 1.0) < 1e-11


def test_price_text_and_csv_formats(capsys):
    text = run_ok(capsys, PRICE_ARGS)
    assert text.startswith("price")
    csv = run_ok(capsys, PRICE_ARGS + ["--format", "csv"])
    assert csv.splitlines()[0] == "quantity,value"
    assert csv.splitlines()[1].startswith("price,")


def test_price_bs_and_implied_vol_roundtrip(capsys):
    args = ["--p0", "100", "--dt", "0.4", "--rate", "0.05",
            "--strike", "105", "--kind", "put"]
    priced = json.loads(run_ok(
        capsys, ["price", "--model", "bs", "--sigma", "0.25",
                 "--format", "json"] + args))["price"]
    vol = json.loads(run_ok(
        capsys, ["implied-vol", "--price", str(priced),
                 "--format", "json"] + args))["implied_vol"]
    assert abs(vol - 0.25) < 1e-7


def test_price_stretched_model(capsys):
    out = json.loads(run_ok(
        capsys, ["price", "--model", "stretched", "--p0", "100", "--dt",
                 "0.3", "--rate", "0.05", "--strike", "100", "--kind",
                 "call", "--gamma", "9", "--nu", "13", "--alpha", "1.5",
                 "--format", "json"]))
    assert 0.0 < out["price"] < 100.0


def test_missing_model_parameter_is_usage_error(capsys):
    code = run(["price", "--model", "exp", "--p0", "100", "--dt", "0.3",
                "--rate", "0.05", "--strike", "95", "--kind", "call"])
    err = capsys.readouterr().err
    assert code == 2
    assert "usage error:" in err and "--gamma" in err


def test_divergent_tail_is_a_domain_error(capsys):
    code = run(["price", "--model", "exp", "--p0", "100", "--dt", "0.3",
                "--rate", "0.05", "--strike", "95", "--kind", "call",
                "--gamma", "10", "--nu", "0.9"])
    err = capsys.readouterr().err
    assert code == 1
    assert err.startswith("error:") and "diverge" in err


def test_unknown_subcommand_exits_two(capsys):
    assert run(["froboz"]) == 2


def test_calibrate_from_csv(capsys, quotes_csv_path):
    out = run_ok(capsys, ["calibrate", "--quotes", str(quotes_csv_path),
                          "--p0", "89.92", "--dt", str(107.0 / 365.0),
                          "--format", "json"])
    doc = json.loads(out)
    assert doc["nu"] > 1.0
    assert len(doc["rows"]) == 15
    assert doc["rows"][0]["option"] == "76P"


def test_calibrate_hold_tails_reports_pinned_rates(capsys, quotes_csv_path):
    doc = json.loads(run_ok(
        capsys, ["calibrate", "--quotes", str(quotes_csv_path),
                 "--p0", "89.92", "--dt", str(107.0 / 365.0),
                 "--hold-tails", "10.96,16.76", "--format", "json"]))
    assert doc["gamma"] == 10.96 and doc["nu"] == 16.76


def test_calibrate_bad_hold_tails_is_usage_error(capsys, quotes_csv_path):
    code = run(["calibrate", "--quotes", str(quotes_csv_path),
                "--p0", "89.92", "--dt", "0.29", "--hold-tails", "10.96"])
    err = capsys.readouterr().err
    assert code == 2 and "usage error:" in err


def test_table1_pinned_text_report(capsys):
    out = run_ok(capsys, ["table1"])
    lines = out.splitlines()
    assert lines[0].split() == ["option", "market", "mkt", "vol",
                                "model", "mdl", "vol"]
    assert len(lines) == 17  # header + 15 rows + the parameter line
    assert "gamma=10.960000" in lines[-1]


def test_table1_free_smile_csv(capsys):
    out = run_ok(capsys, ["table1", "--mode", "free", "--format", "csv",
                          "--smile"])
    lines = out.splitlines()
    assert lines[0] == "strike,implied_vol"
    assert len(lines) > 10
    strike, vol = lines[1].split(",")
    assert float(strike) == 76.0 and 0.05 < float(vol) < 0.5


def test_simulate_is_deterministic_with_a_seed(capsys):
    argv = ["simulate", "--b", "1.0", "--bprime", "1.0", "--t", "0.1",
            "--paths", "400", "--steps", "30", "--seed", "7",
            "--format", "json"]
    first = run_ok(capsys, argv)
    second = run_ok(capsys, argv)
    assert first == second
    doc = json.loads(first)
    assert doc["seed"] == 7
    assert doc["fitted_nu"] > 0.0


def test_simulate_generates_and_prints_a_seed(capsys):
    argv = ["simulate", "--b", "1.0", "--bprime", "1.0", "--t", "0.1",
            "--paths", "400", "--steps", "30", "--format", "json"]
    doc = json.loads(run_ok(capsys, argv))
    assert isinstance(doc["seed"], int)


def test_simulate_histogram_output(capsys):
    out = run_ok(capsys, ["simulate", "--b", "1.0", "--bprime", "1.0",
                          "--t", "0.1", "--paths", "2000", "--steps", "30",
                          "--seed", "3", "--histogram-bins", "24"])
    lines = out.splitlines()
    assert lines[0] == "x,count"
    counts = [int(line.split(",")[1]) for line in lines[1:]]
    # rounding of the bin width can push the single largest sample past
    # the last edge
    assert 1999 <= sum(counts) <= 2000


def test_fit_returns_from_price_series(capsys, tmp_path):
    import numpy as np

    from expopt.distributions import sample_exp

    rng = np.random.Generator(np.random.Philox(key=12))
    # equal rates keep the walk driftless so the series stays in a band
    # the fixed-point csv format can hold
    xs = sample_exp(ExpParams(100.0, 100.0, 0.0), 4000, rng)
    prices = 100.0 * np.exp(np.concatenate([[0.0], np.cumsum(xs)]))
    path = tmp_path / "series.csv"
    rows = ["timestamp,price"]
    rows += [f"2026-01-01T{i // 3600:02d}:{i // 60 % 60:02d}:{i % 60:02d},"
             f"{p:.8f}" for i, p in enumerate(prices)]
    path.write_text("\n".join(rows) + "\n")
    doc = json.loads(run_ok(capsys, ["fit-returns", "--prices", str(path),
                                     "--format", "json"]))
    assert doc["n_returns"] == 4000
    assert abs(doc["gamma"] / 100.0 - 1.0) < 0.1
    assert abs(doc["nu"] / 100.0 - 1.0) < 0.1


def test_capm_weights_sum_to_one(capsys):
    doc = json.loads(run_ok(
        capsys, ["capm", "--sigma", "0.04,0.01;0.01,0.09",
                 "--excess", "0.03,0.05", "--r0", "0.02",
                 "--format", "json"]))
    assert abs(doc["weight_0"] + doc["weight_1"] - 1.0) < 1e-9
    assert doc["portfolio_variance"] > 0.0


def test_out_writes_the_file(capsys, tmp_path):
    target = tmp_path / "result.json"
    run_ok(capsys, PRICE_ARGS + ["--format", "json", "--out", str(target)])
    text = target.read_text()
    assert text.endswith("\n")
    assert "price" in json.loads(text)


def test_plotdata_rejects_empty_payloads():
    with pytest.raises(ExpOptError, match="no data"):
        emit_plotdata("smile", [])
    with pytest.raises(ExpOptError, match="no data"):
        emit_plotdata("density", None)


def test_json_numbers_are_trimmed_to_twelve_digits(capsys):
    out = json.loads(run_ok(capsys, PRICE_ARGS + ["--format", "json"]))
    assert out["price"] == float(f"{out['price']:.12g}")
