"""Shared contract types, units, and error classes.

All horizons and rates in this library are expressed per annum.  Market data
quoted in trading hours is converted through ``hours_to_years``, which assumes
a 9-hour trading day and 324 trading days, i.e. 2916 trading hours per year.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

TRADING_HOURS_PER_DAY = 9.0
TRADING_DAYS_PER_YEAR = 324.0
TRADING_HOURS_PER_YEAR = TRADING_HOURS_PER_DAY * TRADING_DAYS_PER_YEAR


class ExpOptError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ExpOptError, ValueError):
    """A parameter or input lies outside the model's admissible domain."""


class ConvergenceError(ExpOptError, RuntimeError):
    """An iterative routine failed to converge to tolerance."""


class GridError(ExpOptError, ValueError):
    """A density grid is unusable: too narrow, leaking mass, or unstable."""


class OptionKind(str, Enum):
    CALL = "call"
    PUT = "put"


class NoiseKind(str, Enum):
    """Step-noise family for simulation and hedge-error statistics.

    The two-sided exponential noise is scaled to unit variance, so its
    fourth moment is 6; the Gaussian fourth moment is 3.
    """

    TWO_SIDED_EXPONENTIAL = "two_sided_exponential"
    GAUSSIAN = "gaussian"

    @property
    def fourth_moment(self) -> float:
        return 6.0 if self is NoiseKind.TWO_SIDED_EXPONENTIAL else 3.0

    @property
    def squared_noise_variance(self) -> float:
        """Var(eps^2) = <eps^4> - 1 for a unit-variance noise."""
        return self.fourth_moment - 1.0


@dataclass(frozen=True)
class PricingContext:
    """Market frame for a pricing problem.

    Attributes:
        p0: current underlying (futures-style) price, > 0.
        discount_rate: trader's discount rate R per annum.  This may sit
            above the risk-free rate; the spread is the caller's concern,
            only R itself enters discounting here.
        carry_rate: growth rate c per annum implied by <p/p0> = exp(c*dt).
        dt: time to expiration in years, > 0.
        tic: minimum quote increment for this market.
    """

    p0: float
    discount_rate: float
    carry_rate: float
    dt: float
    tic: float = 1.0 / 64.0

    def __post_init__(self) -> None:
        if not self.p0 > 0.0:
            raise DomainError(f"underlying price must be positive, got {self.p0}")
        if not self.dt > 0.0:
            raise DomainError(f"time to expiration must be positive, got {self.dt}")
        if not self.tic > 0.0:
            raise DomainError(f"tic size must be positive, got {self.tic}")

    @property
    def discount_factor(self) -> float:
        import math

        return math.exp(-self.discount_rate * self.dt)


def hours_to_years(hours: float) -> float:
    """Convert trading hours to years (2916 trading hours per year)."""
    return hours / TRADING_HOURS_PER_YEAR


def years_to_hours(years: float) -> float:
    return years * TRADING_HOURS_PER_YEAR
