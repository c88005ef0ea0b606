"""Two-sided exponential distribution of log returns.

The density is piecewise exponential around a peak location ``delta``: it
rises like exp(gamma*(x - delta)) below the peak and decays like
exp(-nu*(x - delta)) above it, with a common normalisation
A = gamma*nu/(gamma + nu).  In price space the same law becomes a pair of
power-law tails.  The module also carries the moment bookkeeping used
throughout the library, where the two sides of the peak are treated as
separate conditional populations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .types import DomainError

__all__ = [
    "ExpParams",
    "MomentReport",
    "SideConsistencyReport",
    "HistogramSpec",
    "HistogramResult",
    "exp_density",
    "price_density",
    "exp_moments",
    "delta_from_carry",
    "exp_cdf",
    "exp_ppf",
    "sample_exp",
    "sample_consistency_report",
    "build_histogram",
]


@dataclass(frozen=True)
class ExpParams:
    """Tail rates and peak of the two-sided exponential return density.

    Attributes:
        gamma: left (downside) tail rate, > 0.
        nu: right (upside) tail rate, > 0.  Pricing additionally needs
            nu > 1 or the discounted-payoff integrals diverge; that check
            lives with the pricing routines, not here.
        delta: peak location in log-return space.
    """

    gamma: float
    nu: float
    delta: float = 0.0

    def __post_init__(self) -> None:
        if not self.gamma > 0.0:
            raise DomainError(f"left tail rate gamma must be positive, got {self.gamma}")
        if not self.nu > 0.0:
            raise DomainError(f"right tail rate nu must be positive, got {self.nu}")

    @property
    def amplitude(self) -> float:
        """Shared normalisation constant gamma*nu/(gamma + nu)."""
        return self.gamma * self.nu / (self.gamma + self.nu)


@dataclass(frozen=True)
class MomentReport:
    """Side-conditional and combined moments of the return density.

    ``mean_plus``/``var_plus`` condition on x >= delta, ``mean_minus``/
    ``var_minus`` on x < delta, and ``mean`` is the unconditional mean.
    ``var`` is the sum of the two conditional variances, which for this
    density coincides with the unconditional variance.
    """

    mean_plus: float
    mean_minus: float
    mean: float
    var_plus: float
    var_minus: float
    var: float


def exp_density(x, params: ExpParams):
    """Density of log returns; accepts a scalar or an array."""
    x = np.asarray(x, dtype=float)
    a = params.amplitude
    z = x - params.delta
    # pick the exponent first: it is <= 0 on the live branch, so the exp
    # underflows cleanly instead of overflowing on the dead one
    out = a * np.exp(np.where(z < 0.0, params.gamma * z, -params.nu * z))
    return out if out.ndim else float(out)

def price_density(y, params: ExpParams):
    """Density of the price ratio y = exp(x), with power-law tails.

    Below exp(delta) the density is A*exp(-gamma*delta)*y**(gamma - 1),
    above it A*exp(nu*delta)*y**(-nu - 1); this is exactly
    exp_density(log y)/y, and the branch constants keep that identity.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0.0):
        raise DomainError("price ratio must be positive")
    a = params.amplitude
    knee = math.exp(params.delta)
    below = a * math.exp(-params.gamma * params.delta) * y ** (params.gamma - 1.0)
    above = a * math.exp(params.nu * params.delta) * y ** (-params.nu - 1.0)
    out = np.where(y < knee, below, above)
    return out if out.ndim else float(out)


def exp_moments(params: ExpParams) -> MomentReport:
    g, n, d = params.gamma, params.nu, params.delta
    return MomentReport(
        mean_plus=d + 1.0 / n,
        mean_minus=d - 1.0 / g,
        mean=d + (g - n) / (g * n),
        var_plus=1.0 / n**2,
        var_minus=1.0 / g**2,
        var=1.0 / n**2 + 1.0 / g**2,
    )


def delta_from_carry(c: float, dt: float, gamma: float, nu: float) -> float:
    """Peak location that makes <exp(x)> equal exp(c*dt).

    The mean of exp(x) under the two-sided exponential density is
    exp(delta)*gamma*nu/((gamma + 1)*(nu - 1)), finite only for nu > 1,
    so delta = c*dt + log((nu - 1)*(gamma + 1)/(nu*gamma)).
    """
    if not nu > 1.0:
        raise DomainError(
            "right tail rate nu must exceed 1: <exp(x)> and the discounted "
            f"payoff integrals diverge for nu <= 1, got {nu}"
        )
    if not gamma > 0.0:
        raise DomainError(f"left tail rate gamma must be positive, got {gamma}")
    # log1p keeps precision when the rates are huge and delta is tiny.
    return c * dt + math.log1p(-1.0 / nu) + math.log1p(1.0 / gamma)


def exp_cdf(x, params: ExpParams):
    """Cumulative distribution of the two-sided exponential density."""
    x = np.asarray(x, dtype=float)
    g, n, d = params.gamma, params.nu, params.delta
    z = x - d
    left = (n / (g + n)) * np.exp(g * np.minimum(z, 0.0))
    right = 1.0 - (g / (g + n)) * np.exp(-n * np.maximum(z, 0.0))
    out = np.where(z < 0.0, left, right)
    return out if out.ndim else float(out)


def exp_ppf(q, params: ExpParams):
    """Quantile function, the exact inverse of exp_cdf on (0, 1)."""
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0.0) | (q >= 1.0)):
        raise DomainError("quantile levels must lie strictly inside (0, 1)")
    g, n, d = params.gamma, params.nu, params.delta
    split = n / (g + n)
    with np.errstate(divide="ignore", invalid="ignore"):
        left = d + np.log(q / split) / g
        right = d - np.log((1.0 - q) * (g + n) / g) / n
    out = np.where(q < split, left, right)
    return out if out.ndim else float(out)


def sample_exp(params: ExpParams, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw iid log returns by inverting the CDF on uniform variates."""
    return exp_ppf(rng.uniform(size=size), params)


@dataclass(frozen=True)
class SideConsistencyReport:
    """Empirical check that a sample behaves like a two-sided exponential.

    Splits the sample at a supplied peak, measures the conditional moments
    on each side, and reports how badly two identities fail that hold
    exactly for the two-sided exponential law:

      * the full variance equals the sum of the conditional variances;
      * the gap between the conditional means equals the sum of the
        conditional standard deviations.

    Both defects are relative; Gaussian data leaves them near 0.25.
    """

    n_plus: int
    n_minus: int
    mean_plus: float
    mean_minus: float
    var_full: float
    var_plus: float
    var_minus: float
    variance_split_defect: float
    mean_spread_defect: float


def sample_consistency_report(xs, delta: float) -> SideConsistencyReport:
    xs = np.asarray(xs, dtype=float)
    above = xs[xs >= delta]
    below = xs[xs < delta]
    if len(above) < 10 or len(below) < 10:
        raise DomainError(
            "need at least 10 samples on each side of the peak, got "
            f"{len(below)} below and {len(above)} above"
        )
    var_full = float(np.var(xs))
    var_plus = float(np.var(above))
    var_minus = float(np.var(below))
    mean_plus = float(np.mean(above))
    mean_minus = float(np.mean(below))
    spread = mean_plus - mean_minus
    sigma_sum = math.sqrt(var_plus) + math.sqrt(var_minus)
    return SideConsistencyReport(
        n_plus=int(len(above)),
        n_minus=int(len(below)),
        mean_plus=mean_plus,
        mean_minus=mean_minus,
        var_full=var_full,
        var_plus=var_plus,
        var_minus=var_minus,
        variance_split_defect=abs(var_full - (var_plus + var_minus)) / var_full,
        mean_spread_defect=abs(sigma_sum - spread) / spread,
    )


@dataclass(frozen=True)
class HistogramSpec:
    """Explicit histogram binning: uniform bins of ``bin_width`` over [lo, hi]."""

    bin_width: float
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.bin_width > 0.0:
            raise DomainError(f"bin width must be positive, got {self.bin_width}")
        if not self.hi > self.lo:
            raise DomainError("histogram range must have hi > lo")


@dataclass(frozen=True)
class HistogramResult:
    """Binned counts plus the log-frequency view with empty bins dropped."""

    centers: np.ndarray
    counts: np.ndarray
    log_centers: np.ndarray
    log_counts: np.ndarray


def build_histogram(xs, spec: HistogramSpec | None = None) -> HistogramResult:
    """Bin a sample for tail-slope inspection.

    Without an explicit spec the bin width follows the Freedman-Diaconis
    rule over the sample range.  Counts cover samples inside [lo, hi];
    log_counts is ln(count) for the non-empty bins only, so a straight-line
    fit of log_counts against log_centers reads off a tail rate directly.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise DomainError("cannot histogram an empty sample")
    if spec is None:
        q75, q25 = np.percentile(xs, [75.0, 25.0])
        iqr = q75 - q25
        if iqr <= 0.0:
            raise DomainError("sample has no spread, supply an explicit HistogramSpec")
        width = 2.0 * iqr / len(xs) ** (1.0 / 3.0)
        spec = HistogramSpec(bin_width=width, lo=float(xs.min()), hi=float(xs.max()))
    n_bins = max(1, int(math.ceil((spec.hi - spec.lo) / spec.bin_width - 1e-9)))
    edges = spec.lo + spec.bin_width * np.arange(n_bins + 1)
    counts, _ = np.histogram(xs, bins=edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    filled = counts > 0
    return HistogramResult(
        centers=centers,
        counts=counts,
        log_centers=centers[filled],
        log_counts=np.log(counts[filled]),
    )
