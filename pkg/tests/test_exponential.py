"""Closed-form pricing under the two-sided exponential return density."""

import math

import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from expopt.distributions import ExpParams, delta_from_carry
from expopt.exponential import (
    ExpPriceInputs,
    exp_price_closed,
    exp_price_quadrature,
    expected_price_ratio,
    expiry_limit_check,
)
from expopt.types import DomainError, OptionKind, PricingContext


def make_inputs(gamma=10.96, nu=16.76, c=0.01, R=0.06, p0=100.0, dt=0.3):
    ctx = PricingContext(p0=p0, discount_rate=R, carry_rate=c, dt=dt)
    delta = delta_from_carry(c, dt, gamma, nu)
    return ExpPriceInputs(ctx, ExpParams(gamma, nu, delta))


def test_forward_matches_carry():
    inp = make_inputs(c=0.04, dt=0.5)
    assert_allclose(expected_price_ratio(inp.params),
                    math.exp(0.04 * 0.5), rtol=1e-12)


def test_nu_at_most_one_is_rejected():
    ctx = PricingContext(p0=100.0, discount_rate=0.05, carry_rate=0.0, dt=0.3)
    with pytest.raises(DomainError, match="diverge"):
        ExpPriceInputs(ctx, ExpParams(gamma=10.0, nu=1.0, delta=0.0))


def test_closed_matches_quadrature_spot_checks():
    # the acceptance suite sweeps the full grid; a corner sample here
    for gamma, nu in ((5.0, 5.0), (10.96, 16.76), (50.0, 8.0)):
        inp = make_inputs(gamma=gamma, nu=nu)
        for strike in (80.0, 100.0, 120.0):
            for kind in OptionKind:
                a = exp_price_closed(inp, strike, kind)
                b = exp_price_quadrature(inp, strike, kind)
                assert_allclose(a, b, rtol=1e-9, atol=1e-12)


def test_branches_join_continuously_at_the_peak():
    inp = make_inputs()
    k_peak = inp.ctx.p0 * math.exp(inp.params.delta)
    eps = 1e-9 * k_peak
    for kind in OptionKind:
        lo = exp_price_closed(inp, k_peak - eps, kind)
        mid = exp_price_closed(inp, k_peak, kind)
        hi = exp_price_closed(inp, k_peak + eps, kind)
        assert abs(hi - lo) < 1e-6
        assert min(lo, hi) - 1e-7 <= mid <= max(lo, hi) + 1e-7


@settings(max_examples=100, deadline=None)
@given(
    st.floats(min_value=2.0, max_value=60.0),
    st.floats(min_value=1.5, max_value=60.0),
    st.floats(min_value=0.5, max_value=2.0),
    st.floats(min_value=0.05, max_value=1.0),
    st.floats(min_value=-0.1, max_value=0.1),
    st.floats(min_value=0.0, max_value=0.12),
)
def test_put_call_parity_property(gamma, nu, moneyness, dt, c, R):
    inp = make_inputs(gamma=gamma, nu=nu, c=c, R=R, dt=dt)
    strike = inp.ctx.p0 * moneyness
    call = exp_price_closed(inp, strike, OptionKind.CALL)
    put = exp_price_closed(inp, strike, OptionKind.PUT)
    disc = inp.ctx.discount_factor
    fwd = inp.ctx.p0 * math.exp(c * dt)
    assert abs(call - put - disc * (fwd - strike)) < 1e-9


def test_call_decreasing_put_increasing_in_strike():
    inp = make_inputs()
    strikes = [70.0, 85.0, 100.0, 115.0, 130.0]
    calls = [exp_price_closed(inp, k, OptionKind.CALL) for k in strikes]
    puts = [exp_price_closed(inp, k, OptionKind.PUT) for k in strikes]
    assert all(a > b for a, b in zip(calls, calls[1:]))
    assert all(a < b for a, b in zip(puts, puts[1:]))


def test_prices_respect_static_bounds():
    inp = make_inputs()
    disc = inp.ctx.discount_factor
    fwd = inp.ctx.p0 * math.exp(inp.ctx.carry_rate * inp.ctx.dt)
    for strike in (80.0, 100.0, 120.0):
        call = exp_price_closed(inp, strike, OptionKind.CALL)
        assert max(disc * (fwd - strike), 0.0) - 1e-12 <= call <= disc * fwd


def test_expiry_limit_shrinks_with_rate_scale():
    ctx = PricingContext(p0=100.0, discount_rate=0.05, carry_rate=0.0, dt=0.25)
    # at-the-money deviation falls like 1/scale
    devs = [expiry_limit_check(ctx, 100.0, OptionKind.CALL, s,
                               base_rates=(1.0, 1.0))
            for s in (100.0, 1000.0)]
    assert devs[1] < devs[0] * 0.2


def test_expiry_limit_rejects_bad_scale():
    ctx = PricingContext(p0=100.0, discount_rate=0.05, carry_rate=0.0, dt=0.25)
    with pytest.raises(DomainError, match="scale"):
        expiry_limit_check(ctx, 90.0, OptionKind.CALL, 0.0)
