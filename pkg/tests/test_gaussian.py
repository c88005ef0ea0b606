"""Lognormal pricing baseline: closed form, implied vol, pde residual."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import quad

from expopt.gaussian import (
    GaussParams,
    bs_price,
    bs_pde_residual,
    gaussian_green,
    implied_vol,
)
from expopt.types import DomainError, OptionKind, PricingContext

CTX = PricingContext(p0=100.0, discount_rate=0.05, carry_rate=0.05, dt=0.4)


def price_by_quadrature(ctx, sigma, strike, kind, growth=None):
    # oracle: discounted payoff against the log-return kernel
    g = ctx.discount_rate if growth is None else growth
    lim = 10.0 * sigma * math.sqrt(ctx.dt)

    def integrand(x):
        p_t = ctx.p0 * math.exp(x)
        pay = max(p_t - strike, 0.0) if kind is OptionKind.CALL \
            else max(strike - p_t, 0.0)
        return pay * gaussian_green(x, ctx.dt, g, sigma)

    x_k = math.log(strike / ctx.p0)
    pieces = sorted({-lim, min(max(x_k, -lim), lim), lim})
    total = sum(quad(integrand, a, b, limit=200)[0]
                for a, b in zip(pieces[:-1], pieces[1:]))
    return math.exp(-ctx.discount_rate * ctx.dt) * total


def test_green_function_is_a_density():
    sigma, dt, rate = 0.3, 0.25, 0.07
    mass = quad(lambda x: gaussian_green(x, dt, rate, sigma), -5, 5)[0]
    assert abs(mass - 1.0) < 1e-12
    mean = quad(lambda x: x * gaussian_green(x, dt, rate, sigma), -5, 5)[0]
    assert_allclose(mean, (rate - 0.5 * sigma ** 2) * dt, atol=1e-12)


def test_closed_form_against_quadrature():
    for sigma in (0.1, 0.25, 0.6):
        for strike in (80.0, 100.0, 115.0):
            for kind in OptionKind:
                closed = bs_price(CTX, GaussParams(sigma), strike, kind)
                ref = price_by_quadrature(CTX, sigma, strike, kind)
                assert abs(closed - ref) < 1e-9, (sigma, strike, kind)


def test_growth_rate_decouples_from_discounting():
    g = GaussParams(0.2)
    closed = bs_price(CTX, g, 95.0, OptionKind.CALL, growth_rate=0.01)
    ref = price_by_quadrature(CTX, 0.2, 95.0, OptionKind.CALL, growth=0.01)
    assert abs(closed - ref) < 1e-9


def test_put_call_parity():
    sigma, strike = 0.3, 92.0
    c = bs_price(CTX, GaussParams(sigma), strike, OptionKind.CALL)
    p = bs_price(CTX, GaussParams(sigma), strike, OptionKind.PUT)
    disc = math.exp(-CTX.discount_rate * CTX.dt)
    fwd = CTX.p0 * math.exp(CTX.discount_rate * CTX.dt)
    assert_allclose(c - p, disc * (fwd - strike), atol=1e-12)


@settings(max_examples=80, deadline=None)
@given(
    st.floats(min_value=0.05, max_value=1.5),
    st.floats(min_value=0.7, max_value=1.3),
)
def test_implied_vol_roundtrip(sigma, moneyness):
    strike = CTX.p0 * moneyness
    price = bs_price(CTX, GaussParams(sigma), strike, OptionKind.CALL)
    # deep in the money at low vol the extrinsic value drops below float
    # resolution and the inverse problem has no answer to recover
    fwd = CTX.p0 * math.exp(CTX.discount_rate * CTX.dt)
    extrinsic = price - max(
        0.0, math.exp(-CTX.discount_rate * CTX.dt) * (fwd - strike))
    assume(extrinsic > 1e-7)
    assert abs(implied_vol(CTX, strike, OptionKind.CALL, price) - sigma) < 1e-8


def test_implied_vol_rejects_arbitrage_violations():
    with pytest.raises(DomainError, match="arbitrage"):
        implied_vol(CTX, 80.0, OptionKind.CALL, 1.0)  # below intrinsic
    with pytest.raises(DomainError, match="arbitrage"):
        implied_vol(CTX, 100.0, OptionKind.CALL, 150.0)  # above the spot


def test_pde_residual_small_away_from_kink():
    # the residual's time axis is calendar time toward a fixed expiry, so
    # the surface maps t to the remaining life T - t
    sigma, strike, expiry = 0.25, 100.0, 0.8

    def u(x, t):
        ctx = PricingContext(CTX.p0 * math.exp(x), CTX.discount_rate,
                             CTX.carry_rate, expiry - t)
        return bs_price(ctx, GaussParams(sigma), strike, OptionKind.CALL)

    for x in (-0.3, -0.1, 0.15, 0.3):
        val = u(x, 0.4)
        res = bs_pde_residual(u, CTX.discount_rate, sigma, x, 0.4)
        assert abs(res) < 1e-4 * CTX.discount_rate * val, x


def test_price_monotone_in_volatility():
    prices = [bs_price(CTX, GaussParams(s), 105.0, OptionKind.CALL)
              for s in np.linspace(0.05, 1.0, 8)]
    assert np.all(np.diff(prices) > 0.0)
