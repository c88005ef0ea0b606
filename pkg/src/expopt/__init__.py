"""Two-sided exponential returns: density, option pricing, dynamics.

The package keeps one module per concern: distributions for the static
density, gaussian for the lognormal baseline, exponential for the
closed-form prices, dynamics for the singular-diffusion process and its
Fokker-Planck/Monte-Carlo machinery, stretched for the alpha-stretched
family, capm for portfolio-strategy comparisons, calibration for
fitting quotes, and cli for the command line.
"""

from .calibration import (
    BOND_CHAIN_1989,
    BOND_CHAIN_DT,
    BOND_CHAIN_P0,
    BOND_CHAIN_TAIL_RATES,
    CalibrationResult,
    PriceSeries,
    Quote,
    TableRow,
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
from .capm import (
    CapmInputs,
    HedgeState,
    HedgeStats,
    asset_beta,
    capm_fractions,
    capm_return,
    efficient_weights,
    hedge_correlations,
    hedge_stats,
    pde_gap,
    two_asset_ratio,
)
from .distributions import (
    ExpParams,
    HistogramResult,
    HistogramSpec,
    MomentReport,
    SideConsistencyReport,
    build_histogram,
    delta_from_carry,
    exp_cdf,
    exp_density,
    exp_moments,
    exp_ppf,
    price_density,
    sample_consistency_report,
    sample_exp,
)
from .dynamics import (
    DensityGrid,
    DynParams,
    PathEnsemble,
    average_volatility_check,
    default_density_grid,
    delta_evolution,
    dynamic_price,
    dynamic_v_density,
    fit_two_sided_exponential,
    fluctuation_estimates,
    fokker_planck_evolve,
    predicted_exponents,
    simulate_returns,
    singular_diffusion,
    tail_anchor_shifts,
)
from .exponential import (
    ExpPriceInputs,
    exp_price_closed,
    exp_price_quadrature,
    expected_price_ratio,
    expiry_limit_check,
)
from .gaussian import GaussParams, bs_pde_residual, bs_price, gaussian_green, implied_vol
from .stretched import (
    StretchedParams,
    stretched_density,
    stretched_moment,
    stretched_price_gamma_split,
    stretched_price_quadrature,
    stretched_side_mean,
)
from .types import (
    ConvergenceError,
    DomainError,
    ExpOptError,
    GridError,
    NoiseKind,
    OptionKind,
    PricingContext,
)

__version__ = "0.1.0"
