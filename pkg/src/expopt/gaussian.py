"""Gaussian (lognormal) baseline pricing in log-return variables.

Everything here is the classical diffusion benchmark the exponential model
is measured against: the Gaussian transition density in log returns, the
closed-form call/put prices it implies, implied volatility inversion, and a
finite-difference residual of the backward pricing equation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .types import ConvergenceError, DomainError, OptionKind, PricingContext

__all__ = [
    "GaussParams",
    "gaussian_green",
    "bs_price",
    "implied_vol",
    "bs_pde_residual",
]

SIGMA_LO = 1e-6
SIGMA_HI = 5.0
_MAX_ITER = 200


@dataclass(frozen=True)
class GaussParams:
    """Volatility of the Gaussian benchmark; rates come from the context."""

    sigma: float

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise DomainError(f"volatility must be positive, got {self.sigma}")


def gaussian_green(x, dt: float, rate: float, sigma: float):
    """Transition density of log returns after time dt.

    Normal with mean (rate - sigma^2/2)*dt and variance sigma^2*dt; it is
    the dt-propagator, so two half-steps compose into one full step.
    """
    if not dt > 0.0:
        raise DomainError(f"horizon must be positive, got {dt}")
    if not sigma > 0.0:
        raise DomainError(f"volatility must be positive, got {sigma}")
    mean = (rate - 0.5 * sigma * sigma) * dt
    std = sigma * math.sqrt(dt)
    z = (np.asarray(x, dtype=float) - mean) / std
    out = np.exp(-0.5 * z * z) / (std * math.sqrt(2.0 * math.pi))
    return out if out.ndim else float(out)


def _d12(forward: float, strike: float, sigma: float, dt: float) -> tuple[float, float]:
    srt = sigma * math.sqrt(dt)
    d1 = (math.log(forward / strike) + 0.5 * srt * srt) / srt
    return d1, d1 - srt


def bs_price(
    ctx: PricingContext,
    g: GaussParams,
    strike: float,
    kind: OptionKind,
    growth_rate: float | None = None,
) -> float:
    """Discounted Gaussian expectation of the option payoff.

    Equivalent to integrating the payoff against gaussian_green and
    discounting at the context rate.  ``growth_rate`` is the drift used
    inside the Green function; by default it equals the discount rate,
    which reproduces the textbook closed form.  Passing the carry rate
    instead prices a futures-style underlying whose forward is
    p0*exp(c*dt) while discounting stays at R.
    """
    if not strike > 0.0:
        raise DomainError(f"strike must be positive, got {strike}")
    growth = ctx.discount_rate if growth_rate is None else growth_rate
    forward = ctx.p0 * math.exp(growth * ctx.dt)
    disc = math.exp(-ctx.discount_rate * ctx.dt)
    d1, d2 = _d12(forward, strike, g.sigma, ctx.dt)
    if kind is OptionKind.CALL:
        return disc * (forward * ndtr(d1) - strike * ndtr(d2))
    return disc * (strike * ndtr(-d2) - forward * ndtr(-d1))


def _vega(ctx: PricingContext, sigma: float, strike: float, growth: float) -> float:
    forward = ctx.p0 * math.exp(growth * ctx.dt)
    disc = math.exp(-ctx.discount_rate * ctx.dt)
    d1, _ = _d12(forward, strike, sigma, ctx.dt)
    phi = math.exp(-0.5 * d1 * d1) / math.sqrt(2.0 * math.pi)
    return disc * forward * phi * math.sqrt(ctx.dt)


def implied_vol(
    ctx: PricingContext,
    strike: float,
    kind: OptionKind,
    market_price: float,
    growth_rate: float | None = None,
) -> float:
    """Invert bs_price for sigma by bisection with a Newton polish.

    Raises DomainError when the quote violates the no-arbitrage band for
    any volatility in [1e-6, 5], and ConvergenceError on a failed solve.
    """
    growth = ctx.discount_rate if growth_rate is None else growth_rate
    forward = ctx.p0 * math.exp(growth * ctx.dt)
    disc = math.exp(-ctx.discount_rate * ctx.dt)
    if kind is OptionKind.CALL:
        lower = max(disc * (forward - strike), 0.0)
        upper = disc * forward
    else:
        lower = max(disc * (strike - forward), 0.0)
        upper = disc * strike
    if market_price < lower or market_price > upper:
        raise DomainError(
            f"quote {market_price} lies outside the arbitrage band "
            f"[{lower:.6g}, {upper:.6g}] for this {kind.value}"
        )

    def f(sig: float) -> float:
        return bs_price(ctx, GaussParams(sig), strike, kind, growth_rate=growth) - market_price

    lo, hi = SIGMA_LO, SIGMA_HI
    f_lo, f_hi = f(lo), f(hi)
    if f_lo > 0.0:
        return lo
    if f_hi < 0.0:
        raise DomainError(
            f"quote {market_price} is unreachable below the volatility cap {SIGMA_HI}"
        )
    mid = 0.5 * (lo + hi)
    for _ in range(_MAX_ITER):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    sigma = 0.5 * (lo + hi)
    for _ in range(8):
        v = _vega(ctx, sigma, strike, growth)
        if v <= 0.0:
            break
        step = f(sigma) / v
        nxt = sigma - step
        if not (SIGMA_LO <= nxt <= SIGMA_HI):
            break
        sigma = nxt
        if abs(step) < 1e-14:
            break
    if abs(f(sigma)) > 1e-8 * max(1.0, market_price):
        raise ConvergenceError("implied volatility solve did not reach tolerance")
    return sigma


def bs_pde_residual(
    u: Callable[[float, float], float],
    rate: float,
    sigma: float,
    x: float,
    t: float,
    dx: float = 1e-4,
    dt_fd: float = 1e-5,
) -> float:
    """Backward-equation residual of a price surface in log-return form.

    For a surface u(x, t) discounted at ``rate`` with volatility ``sigma``,
    returns R*u - u_t - (R - sigma^2/2)*u_x - (sigma^2/2)*u_xx, with the
    derivatives taken by central differences.  Zero (to truncation error)
    when u is a discounted Gaussian expectation of any terminal payoff.
    """
    u0 = u(x, t)
    u_x = (u(x + dx, t) - u(x - dx, t)) / (2.0 * dx)
    u_xx = (u(x + dx, t) - 2.0 * u0 + u(x - dx, t)) / (dx * dx)
    u_t = (u(x, t + dt_fd) - u(x, t - dt_fd)) / (2.0 * dt_fd)
    half_var = 0.5 * sigma * sigma
    return rate * u0 - u_t - (rate - half_var) * u_x - half_var * u_xx
