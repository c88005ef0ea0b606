"""Efficient-portfolio weights and the two option-pricing strategies.

Two threads live here.  First, mean-variance portfolio selection: the
weight vector minimizing portfolio variance at a given expected excess
return solves covariance @ f proportional to the excess-return vector.
Second, the comparison between delta-hedge and portfolio-strategy
option pricing: the hedged portfolio keeps a variance of order dt^2
from the square of the noise (so it is not riskless), its expected
return is not the risk-free rate, and the two strategies obey different
pricing equations whose gap is computed here on any supplied surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .gaussian import GaussParams
from .types import DomainError, NoiseKind, PricingContext

__all__ = [
    "CapmInputs",
    "HedgeState",
    "HedgeStats",
    "efficient_weights",
    "two_asset_ratio",
    "asset_beta",
    "capm_return",
    "hedge_correlations",
    "capm_fractions",
    "hedge_stats",
    "pde_gap",
]


@dataclass(frozen=True)
class CapmInputs:
    """Covariance of excess returns, excess returns, and the base rate.

    sigma is per annum squared and must be symmetric positive definite;
    excess_returns holds R_i - r0 per annum.
    """

    sigma: np.ndarray
    excess_returns: np.ndarray
    r0: float

    def __post_init__(self) -> None:
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        excess = np.atleast_1d(np.asarray(self.excess_returns, dtype=float))
        if sigma.shape[0] != sigma.shape[1]:
            raise DomainError(f"covariance must be square, got {sigma.shape}")
        if sigma.shape[0] != excess.shape[0]:
            raise DomainError(
                f"dimension mismatch: covariance {sigma.shape} vs "
                f"{excess.shape[0]} excess returns")
        if not np.allclose(sigma, sigma.T, rtol=1e-10, atol=1e-12):
            raise DomainError("covariance must be symmetric")
        try:
            np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            raise DomainError("covariance must be positive definite") from None
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "excess_returns", excess)

    @property
    def n_assets(self) -> int:
        return self.sigma.shape[0]


@dataclass(frozen=True)
class HedgeState:
    """Point data for the hedge-portfolio formulas.

    slope_ratio is the composite price * (d option / d price) / option
    value; convexity is the second price derivative of the option value.
    """

    price: float
    option_value: float
    slope_ratio: float
    asset_beta: float
    option_beta: float
    market_excess: float
    sigma1: float
    convexity: float
    dt: float

    def __post_init__(self) -> None:
        if not self.option_value > 0.0:
            raise DomainError(
                f"option value must be positive, got {self.option_value}")


def efficient_weights(inputs: CapmInputs) -> np.ndarray:
    """Weights of the minimum-variance portfolio at its own excess return.

    Solves sigma @ f proportional to the excess returns and scales to
    sum one.  Among all weight vectors with the same expected excess
    return, the result attains the smallest variance; the scaling costs
    nothing because variance and excess return trade off along the ray.
    """
    try:
        raw = np.linalg.solve(inputs.sigma, inputs.excess_returns)
    except np.linalg.LinAlgError:
        raise DomainError("covariance is singular") from None
    total = raw.sum()
    if abs(total) < 1e-300:
        raise DomainError(
            "degenerate portfolio: solved weights sum to zero, "
            "no normalized solution exists")
    return raw / total


def two_asset_ratio(sigma11: float, sigma12: float, sigma22: float,
                    d_r1: float, d_r2: float) -> float:
    """Weight ratio f1/f2 of the two-asset efficient portfolio."""
    den = sigma12 * d_r1 - sigma11 * d_r2
    if den == 0.0:
        raise DomainError(
            "degenerate portfolio: the second asset receives zero weight, "
            "the ratio is undefined")
    return (sigma12 * d_r2 - sigma22 * d_r1) / den


def asset_beta(sigma_ke: float, sigma_ee: float) -> float:
    """Covariance with the efficient portfolio over its variance."""
    if not sigma_ee > 0.0:
        raise DomainError(
            f"efficient-portfolio variance must be positive, got {sigma_ee}")
    return sigma_ke / sigma_ee


def capm_return(beta: float, d_re: float, r0: float) -> float:
    """Expected return of an asset from its beta: r0 + beta * excess."""
    return r0 + beta * d_re


def hedge_correlations(h: HedgeState,
                       noise_kind: NoiseKind = NoiseKind.GAUSSIAN,
                       leading_order: bool = True
                       ) -> tuple[float, float, float]:
    """(sigma11, sigma12, sigma22) for the asset/option pair.

    Leading order in dt: sigma11 = sigma1^2/dt and the option entries
    scale by the slope ratio, making the matrix rank one.  With
    leading_order False, sigma22 also carries the dt^0 term from the
    squared noise, (convexity * sigma1^2 * price^2 / (2 * option))^2
    times var(noise^2); the cross term vanishes because the noise third
    moment is zero for both supported laws.  That correction is what
    makes the weights time dependent.
    """
    s11 = h.sigma1 ** 2 / h.dt
    s12 = h.slope_ratio * s11
    s22 = h.slope_ratio ** 2 * s11
    if not leading_order:
        curb = h.convexity * h.sigma1 ** 2 * h.price ** 2 / (2.0 * h.option_value)
        s22 += curb * curb * noise_kind.squared_noise_variance
    return s11, s12, s22


def capm_fractions(h: HedgeState,
                   noise_kind: NoiseKind = NoiseKind.GAUSSIAN,
                   leading_order: bool = True) -> tuple[float, float]:
    """Unnormalized weight directions (f1, f2) of the asset/option pair.

    At leading order the covariance is rank one and the adjugate
    directions collapse to
        f1 = (asset_beta * slope_ratio - option_beta) * slope_ratio
        f2 = option_beta - asset_beta * slope_ratio
    whose ratio is -slope_ratio, the same hedge ratio the delta hedge
    prescribes; f2 vanishes exactly when option_beta equals
    asset_beta * slope_ratio, which is why that relation cannot hold
    for an agent actually holding the option.  Beyond leading order the
    adjugate of the corrected covariance is used and the directions
    pick up the market excess return.
    """
    if leading_order:
        f2 = h.option_beta - h.asset_beta * h.slope_ratio
        return -h.slope_ratio * f2, f2
    s11, s12, s22 = hedge_correlations(h, noise_kind, leading_order=False)
    d_r1 = h.asset_beta * h.market_excess
    d_r2 = h.option_beta * h.market_excess
    f1 = s22 * d_r1 - s12 * d_r2
    f2 = s11 * d_r2 - s12 * d_r1
    return f1, f2


class HedgeStats(NamedTuple):
    excess_return: float
    hedge_beta: float
    residual_variance: float
    approx_sigma22: float


def hedge_stats(h: HedgeState,
                noise_kind: NoiseKind = NoiseKind.GAUSSIAN) -> HedgeStats:
    """Expected return, beta, and residual risk of the hedged portfolio.

    excess_return and hedge_beta share the factor
    (asset_beta * slope_ratio - option_beta)/(slope_ratio - 1): the
    hedge earns the risk-free rate only in the special case where the
    numerator vanishes.  residual_variance is the dt^2 variance kept by
    the square of the noise, (sigma1^2 price^2 convexity dt / 2)^2
    times var(noise^2) with var(noise^2) = 2 Gaussian, 5 two-sided
    exponential.  approx_sigma22 is the rank-one shortcut
    slope_ratio^2 * sigma1^2/dt whose riskless corollary the exact
    residual_variance overturns.
    """
    if h.slope_ratio == 1.0:
        raise DomainError(
            "degenerate hedge: slope ratio of 1 makes the hedge return "
            "indeterminate")
    core = (h.asset_beta * h.slope_ratio - h.option_beta) / (h.slope_ratio - 1.0)
    half_quad = h.sigma1 ** 2 * h.price ** 2 * h.convexity * h.dt / 2.0
    return HedgeStats(
        excess_return=h.market_excess * core,
        hedge_beta=core,
        residual_variance=half_quad * half_quad * noise_kind.squared_noise_variance,
        approx_sigma22=h.slope_ratio ** 2 * h.sigma1 ** 2 / h.dt,
    )


def pde_gap(ctx: PricingContext, r1: float, r2: float, g: GaussParams,
            sampler: Callable[[float, float], float],
            price: float, t: float, rel_step: float = 1e-5) -> float:
    """Difference of the two pricing-equation residuals on one surface.

    The risk-neutral residual discounts everything at the context rate;
    the strategy residual grows the underlying at r1 and discounts the
    option at r2.  Both are built from the same finite differences of
    sampler(price, t), so the shared derivative terms cancel exactly
    and the gap reduces to (r2 - r0)*w - (r1 - r0)*price*dw/dp, zero
    precisely when both strategy rates equal the context rate.
    """
    if not price > 0.0:
        raise DomainError(f"price must be positive, got {price}")
    r0 = ctx.discount_rate
    hp = price * rel_step
    ht = max(abs(t), 1.0) * rel_step
    w = sampler(price, t)
    w_up = sampler(price + hp, t)
    w_dn = sampler(price - hp, t)
    w_p = (w_up - w_dn) / (2.0 * hp)
    w_pp = (w_up - 2.0 * w + w_dn) / (hp * hp)
    w_t = (sampler(price, t + ht) - sampler(price, t - ht)) / (2.0 * ht)
    half_diff = 0.5 * g.sigma ** 2 * price ** 2 * w_pp
    res_neutral = w_t + r0 * price * w_p + half_diff - r0 * w
    res_strategy = w_t + r1 * price * w_p + half_diff - r2 * w
    return res_neutral - res_strategy
