"""Singular-volatility dynamics for log returns.

The diffusion coefficient vanishes at the distribution peak and grows
with distance from it, with an exponent that interpolates between the
exponential world (alpha = 1, piecewise-linear diffusion) and the
Gaussian world (alpha = 2, constant diffusion).  Built on top of it:
Euler path simulation with reproducible per-path substreams, an explicit
conservative Fokker-Planck stepper, maximum-likelihood tail fitting,
the drift-shifted density used by the dynamic option formulas, and
crash-regime fluctuation diagnostics.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .distributions import ExpParams
from .exponential import ExpPriceInputs
from .types import DomainError, GridError, NoiseKind, OptionKind

# unit-variance two-sided exponential noise
TWO_SIDED_SCALE = 1.0 / math.sqrt(2.0)

_CFL_FACTOR = 0.4
_MASS_TOL = 1e-6
_MASS_LEAK_LIMIT = 1e-4
_DEFAULT_CHUNK = 8192


@dataclass(frozen=True)
class DynParams:
    """Scales and rates of the two-sided singular diffusion.

    b and b_prime set the right/left diffusion scales per sqrt-year,
    R_plus and R_minus the regional mean returns, R_hedge the rate
    earned by the hedged book, and alpha the interpolation exponent
    (1 = exponential returns, 2 = Gaussian).
    """
    b: float
    b_prime: float
    R_plus: float = 0.0
    R_minus: float = 0.0
    R_hedge: float = 0.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.b <= 0.0 or self.b_prime <= 0.0:
            raise DomainError(
                f"diffusion scales must be positive, got b={self.b}, "
                f"b_prime={self.b_prime}")
        if not 1.0 <= self.alpha <= 2.0:
            raise DomainError(
                f"interpolation exponent must lie in [1, 2], got {self.alpha}")


@dataclass(frozen=True)
class PathEnsemble:
    t: float
    samples: np.ndarray
    n_steps: int
    seed: int
    noise_kind: NoiseKind

    def __post_init__(self):
        if len(self.samples) == 0:
            raise DomainError("ensemble must contain at least one path")

    @property
    def n_paths(self) -> int:
        return len(self.samples)


@dataclass
class DensityGrid:
    x: np.ndarray
    values: np.ndarray
    time: float

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.x.ndim != 1 or self.x.shape != self.values.shape:
            raise DomainError("grid and values must be equal-length vectors")
        if len(self.x) < 3:
            raise DomainError("grid needs at least 3 points")
        steps = np.diff(self.x)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]:
            raise DomainError("grid must be uniformly spaced and increasing")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def mass(self) -> float:
        return float(np.trapezoid(self.values, self.x))


def singular_diffusion(x, params: DynParams, gamma: float, nu: float,
                       delta: float):
    """State-dependent diffusion, zero at the peak for alpha < 2.

    Right of the peak: b^2 (nu (x - delta))^(2 - alpha); left of it the
    same with the left scale and gamma.  At alpha = 2 both sides
    collapse to the constant scales.
    """
    x = np.asarray(x, dtype=float)
    expo = 2.0 - params.alpha
    z_plus = nu * np.maximum(x - delta, 0.0)
    z_minus = gamma * np.maximum(delta - x, 0.0)
    d = np.where(x >= delta,
                 params.b ** 2 * z_plus ** expo,
                 params.b_prime ** 2 * z_minus ** expo)
    return d if d.ndim else float(d)


def predicted_exponents(b: float, b_prime: float, dt: float) -> tuple[float, float]:
    """Tail rates implied by the diffusion scales at horizon dt:
    gamma = 1/(b_prime sqrt(dt)), nu = 1/(b sqrt(dt))."""
    if dt <= 0.0:
        raise DomainError(f"horizon must be positive, got {dt}")
    if b <= 0.0 or b_prime <= 0.0:
        raise DomainError("diffusion scales must be positive")
    root = math.sqrt(dt)
    return 1.0 / (b_prime * root), 1.0 / (b * root)


def delta_evolution(params: DynParams, dt: float, gamma: float,
                    nu: float) -> tuple[float, float, float]:
    """Peak location seen from either side, plus the admissibility defect.

    The right-side view is R_plus*dt - 1/nu, the left-side view is
    R_minus*dt + 1/gamma; they agree exactly when
    (R_plus - R_minus)*dt equals 1/gamma - 1/nu, and the returned
    defect is the difference of those two quantities.
    """
    if dt <= 0.0:
        raise DomainError(f"horizon must be positive, got {dt}")
    plus_view = params.R_plus * dt - 1.0 / nu
    minus_view = params.R_minus * dt + 1.0 / gamma
    defect = (params.R_plus - params.R_minus) * dt - (1.0 / gamma - 1.0 / nu)
    return plus_view, minus_view, defect


def _noise_matrix(seed: int, first_path: int, n_paths: int, n_steps: int,
                  kind: NoiseKind) -> np.ndarray:
    """Unit-variance noise, one reproducible substream per path."""
    out = np.empty((n_paths, n_steps))
    for i in range(n_paths):
        rng = np.random.Generator(np.random.Philox(key=seed ^ (first_path + i)))
        if kind is NoiseKind.GAUSSIAN:
            out[i] = rng.standard_normal(n_steps)
        else:
            out[i] = rng.laplace(0.0, TWO_SIDED_SCALE, n_steps)
    return out


def _step_chunk(params: DynParams, h: float, n_steps: int,
                noise: np.ndarray) -> np.ndarray:
    x = np.zeros(noise.shape[0])
    for k in range(n_steps):
        elapsed = (k + 1) * h  # coefficients at end-of-step time stay finite
        gamma, nu = predicted_exponents(params.b, params.b_prime, elapsed)
        delta = params.R_plus * elapsed - 1.0 / nu
        drift = np.where(x >= delta, params.R_plus, params.R_minus)
        d = singular_diffusion(x, params, gamma, nu, delta)
        x = x + drift * h + np.sqrt(d * h) * noise[:, k]
    return x


def simulate_returns(params: DynParams, dt_total: float, n_paths: int,
                     n_steps: int, seed: int,
                     noise_kind: NoiseKind = NoiseKind.TWO_SIDED_EXPONENTIAL
                     ) -> PathEnsemble:
    """Euler simulation of the singular-diffusion return process.

    Each step refreshes (gamma, nu) and the peak location from the
    elapsed time, picks drift and diffusion from the side the path is
    on, and adds sqrt(D h) times unit-variance noise.  Path i draws
    from the substream keyed by seed XOR i, so the ensemble is
    bit-identical for a given seed at any chunking or thread count
    (EXPOPT_THREADS caps the worker pool).
    """
    if n_paths < 1 or n_steps < 1:
        raise DomainError(
            f"need at least one path and one step, got {n_paths}, {n_steps}")
    if dt_total <= 0.0:
        raise DomainError(f"horizon must be positive, got {dt_total}")
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    h = dt_total / n_steps

    chunks = [(lo, min(lo + _DEFAULT_CHUNK, n_paths))
              for lo in range(0, n_paths, _DEFAULT_CHUNK)]

    def run(chunk):
        lo, hi = chunk
        noise = _noise_matrix(seed, lo, hi - lo, n_steps, noise_kind)
        return lo, hi, _step_chunk(params, h, n_steps, noise)

    samples = np.empty(n_paths)
    n_workers = max(1, int(os.environ.get("EXPOPT_THREADS", "1")))
    if n_workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            for lo, hi, xs in pool.map(run, chunks):
                samples[lo:hi] = xs
    else:
        for chunk in chunks:
            lo, hi, xs = run(chunk)
            samples[lo:hi] = xs
    return PathEnsemble(t=dt_total, samples=samples, n_steps=n_steps,
                        seed=seed, noise_kind=noise_kind)


def _profile_loglik(xs: np.ndarray, delta: float):
    """Two-sided exponential log-likelihood maximized over the rates."""
    n = len(xs)
    plus = xs >= delta
    n_plus = int(plus.sum())
    n_minus = n - n_plus
    s_plus = float((xs[plus] - delta).sum())
    s_minus = float((delta - xs[~plus]).sum())
    if n_plus == 0 or s_plus == 0.0:
        gamma_hat = n / s_minus
        return math.inf, gamma_hat, n * math.log(gamma_hat) - n
    if n_minus == 0 or s_minus == 0.0:
        nu_hat = n / s_plus
        return nu_hat, math.inf, n * math.log(nu_hat) - n
    nu_hat = n_plus / s_plus
    gamma_hat = n_minus / s_minus
    amp = gamma_hat * nu_hat / (gamma_hat + nu_hat)
    return nu_hat, gamma_hat, n * (math.log(amp) - 1.0)


def fit_two_sided_exponential(xs) -> tuple[float, float, float, float]:
    """Maximum-likelihood (gamma, nu, delta, loglik) for two-sided
    exponential returns.

    For a trial peak the rate estimates are the reciprocal conditional
    mean distances on each side; the peak itself maximizes the profile
    likelihood, located by a coarse quantile scan refined with
    golden-section search.
    """
    xs = np.sort(np.asarray(xs, dtype=float))
    if len(xs) < 50:
        raise DomainError(f"need at least 50 samples, got {len(xs)}")
    if xs[0] == xs[-1]:
        raise DomainError("degenerate sample: all values equal")

    qs = np.linspace(0.005, 0.995, 199)
    candidates = np.unique(np.quantile(xs, qs))
    lls = np.array([_profile_loglik(xs, d)[2] for d in candidates])
    k = int(np.argmax(lls))
    lo = candidates[max(k - 1, 0)]
    hi = candidates[min(k + 1, len(candidates) - 1)]
    if lo == hi:
        delta_hat = lo
    else:
        res = minimize_scalar(lambda d: -_profile_loglik(xs, d)[2],
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10})
        delta_hat = float(res.x)
        if -res.fun < lls[k]:
            delta_hat = float(candidates[k])
    nu_hat, gamma_hat, loglik = _profile_loglik(xs, delta_hat)
    return gamma_hat, nu_hat, delta_hat, loglik


def average_volatility_check(params: DynParams, dt: float, side: str,
                             n_draws: int = 100_000,
                             seed: int = 0) -> tuple[float, float]:
    """Mean diffusion times dt over one side of the exponential density.

    Returns (analytic, monte_carlo): the analytic value is the flat
    b^2*dt (or the left-scale version), exact at alpha = 1 where the
    unit-mean of the scaled side distance cancels the rate; the
    Monte-Carlo value averages the actual diffusion over side-
    conditioned exponential draws at the rates implied by dt.
    """
    if side not in ("plus", "minus"):
        raise DomainError(f"side must be 'plus' or 'minus', got {side!r}")
    gamma, nu = predicted_exponents(params.b, params.b_prime, dt)
    rng = np.random.Generator(np.random.Philox(key=seed))
    expo = 2.0 - params.alpha
    if side == "plus":
        z = rng.exponential(1.0 / nu, n_draws)
        mc = float(np.mean(params.b ** 2 * (nu * z) ** expo)) * dt
        return params.b ** 2 * dt, mc
    z = rng.exponential(1.0 / gamma, n_draws)
    mc = float(np.mean(params.b_prime ** 2 * (gamma * z) ** expo)) * dt
    return params.b_prime ** 2 * dt, mc


def default_density_grid(params: DynParams, t0: float,
                         t_scale: float | None = None,
                         n_points: int = 4001,
                         decades: float = 20.0) -> DensityGrid:
    """Initial near-delta density on a grid sized for the target horizon.

    The range spans `decades` tail widths on each side at the rates of
    t_scale (default t0), so the boundary density stays negligible; the
    initial condition is a normalized Gaussian of width 1e-3 centered
    on the peak location at t0.
    """
    if t0 <= 0.0:
        raise DomainError(f"start time must be positive, got {t0}")
    g_range, n_range = predicted_exponents(params.b, params.b_prime,
                                           t_scale if t_scale else t0)
    _, nu0 = predicted_exponents(params.b, params.b_prime, t0)
    delta0 = params.R_plus * t0 - 1.0 / nu0
    x = np.linspace(delta0 - decades / g_range, delta0 + decades / n_range,
                    n_points)
    width = 1e-3
    values = np.exp(-0.5 * ((x - delta0) / width) ** 2)
    values /= np.trapezoid(values, x)
    return DensityGrid(x=x, values=values, time=t0)


def fokker_planck_evolve(initial: DensityGrid, params: DynParams,
                         t_final: float, n_time_steps: int) -> DensityGrid:
    """Conservative explicit evolution of the return density.

    Advances P_t = -(R_side P)' + ((D P)'')/2 in flux form with upwinded
    advection, refreshing (gamma, nu) and the peak from elapsed time
    each step.  Violating the diffusion or advection stability bound
    raises a step-size error naming a sufficient step count; probability
    reaching the boundary raises a grid-size error.
    """
    if initial.time <= 0.0:
        raise DomainError("initial grid must carry a positive start time")
    if t_final <= initial.time:
        raise DomainError(
            f"final time {t_final} must exceed start time {initial.time}")
    if n_time_steps < 1:
        raise DomainError("need at least one time step")
    if initial.values[0] > 1e-12 or initial.values[-1] > 1e-12:
        raise GridError("grid too small: initial boundary density above 1e-12")

    x = initial.x
    dx = initial.dx
    p = initial.values.copy()
    dt_step = (t_final - initial.time) / n_time_steps
    x_face = 0.5 * (x[:-1] + x[1:])

    for k in range(n_time_steps):
        elapsed = initial.time + (k + 1) * dt_step
        gamma, nu = predicted_exponents(params.b, params.b_prime, elapsed)
        delta = params.R_plus * elapsed - 1.0 / nu
        d = singular_diffusion(x, params, gamma, nu, delta)
        r_face = np.where(x_face >= delta, params.R_plus, params.R_minus)

        d_max = float(d.max())
        limit = _CFL_FACTOR * dx * dx / d_max if d_max > 0 else math.inf
        r_max = float(np.abs(r_face).max())
        if r_max > 0:
            limit = min(limit, dx / r_max)
        if dt_step > limit:
            need = math.ceil((t_final - initial.time) / limit)
            raise GridError(
                f"time step {dt_step:.3e} exceeds the stability bound "
                f"{limit:.3e}; use at least {need} steps")

        dp = d * p
        flux = (np.where(r_face > 0, r_face * p[:-1], r_face * p[1:])
                - (dp[1:] - dp[:-1]) / (2.0 * dx))
        p[1:-1] -= dt_step / dx * (flux[1:] - flux[:-1])
        p[0] = 0.0
        p[-1] = 0.0

        mass = float(np.trapezoid(p, x))
        if abs(mass - 1.0) > _MASS_LEAK_LIMIT:
            raise GridError(
                f"grid too small: mass drifted to {mass:.6f} at t={elapsed:.4f}")
    return DensityGrid(x=x, values=p, time=t_final)


def tail_anchor_shifts(params: DynParams, gamma: float,
                       nu: float) -> tuple[float, float]:
    """Displacements of the two tail anchors away from the peak.

    The right anchor moves by 2(R_plus - R_hedge)/(b^2 nu^2) + ln(nu)/nu,
    the left one by -2(R_minus - R_hedge)/(b_prime^2 gamma^2)
    + 2 ln(gamma)/gamma.  Both vanish when the regional rates absorb
    the hedge rate and the logarithmic terms.
    """
    dr_plus = params.R_plus - params.R_hedge
    dr_minus = params.R_minus - params.R_hedge
    a_plus = 2.0 * dr_plus / (params.b ** 2 * nu ** 2) + math.log(nu) / nu
    a_minus = (-2.0 * dr_minus / (params.b_prime ** 2 * gamma ** 2)
               + 2.0 * math.log(gamma) / gamma)
    return a_plus, a_minus


def dynamic_v_density(x, dt: float, params: DynParams, gamma: float,
                      nu: float, delta: float):
    """Drift-shifted two-sided exponential used by the dynamic pricer.

    Same shape and amplitude as the static return density, but each
    tail is anchored at the peak displaced by its tail_anchor_shift.
    `dt` records the horizon the coefficients were evaluated at; the
    value depends on it only through (gamma, nu, delta).
    """
    if gamma <= 0.0 or nu <= 0.0:
        raise DomainError("tail rates must be positive")
    del dt
    x = np.asarray(x, dtype=float)
    a_plus, a_minus = tail_anchor_shifts(params, gamma, nu)
    amp = gamma * nu / (gamma + nu)
    v = np.where(x >= delta,
                 amp * np.exp(-nu * (x - delta - a_plus)),
                 amp * np.exp(gamma * (x - delta - a_minus)))
    return v if v.ndim else float(v)


def dynamic_price(inputs: ExpPriceInputs, params: DynParams, strike: float,
                  kind: OptionKind) -> float:
    """Option price under the drift-shifted density, discounted at the
    hedge rate.

    With both anchor shifts zero and the peak placed by the carry
    condition this reduces exactly to the static closed form.
    """
    ctx = inputs.ctx
    p = inputs.params
    gamma, nu, delta = p.gamma, p.nu, p.delta
    amp = p.amplitude
    if strike <= 0.0:
        raise DomainError(f"strike must be positive, got {strike}")
    a_plus, a_minus = tail_anchor_shifts(params, gamma, nu)
    disc = math.exp(-params.R_hedge * ctx.dt)
    x_k = math.log(strike / ctx.p0)

    def tail_nu():
        # right-tail piece, safe only for x_k >= delta
        return (strike * amp * math.exp(-nu * (x_k - delta - a_plus))
                / (nu * (nu - 1.0)))

    def tail_gamma():
        return (strike * amp * math.exp(gamma * (x_k - delta - a_minus))
                / (gamma * (gamma + 1.0)))

    def far_side_terms():
        e_minus = math.exp(-gamma * a_minus)
        e_plus = math.exp(nu * a_plus)
        forward_v = (amp * ctx.p0 * math.exp(delta)
                     * (e_minus / (gamma + 1.0) + e_plus / (nu - 1.0)))
        mass_v = amp * (e_minus / gamma + e_plus / nu)
        return forward_v, mass_v

    if kind is OptionKind.CALL:
        if x_k >= delta:
            return disc * tail_nu()
        forward_v, mass_v = far_side_terms()
        return disc * (forward_v - strike * mass_v + tail_gamma())
    if x_k <= delta:
        return disc * tail_gamma()
    forward_v, mass_v = far_side_terms()
    return disc * (strike * mass_v - forward_v + tail_nu())


def fluctuation_estimates(x: float, u: float, u_prime: float,
                          params: DynParams, gamma: float, nu: float,
                          delta: float, dt: float, delta_x: float = 0.0,
                          noise_kind: NoiseKind = NoiseKind.TWO_SIDED_EXPONENTIAL
                          ) -> tuple[float, float, float]:
    """Crash-regime size of option-price fluctuations, valid left of the
    peak.

    rms_ratio grows linearly with the distance below the peak and
    carries the fourth moment of the noise; avg_based_ratio is the
    flat-volatility version with no x dependence; dD is the volatility
    jump -b^2 nu delta_x produced by a move of delta_x.
    """
    if u <= 0.0:
        raise DomainError(f"option price must be positive, got {u}")
    if dt <= 0.0:
        raise DomainError(f"horizon must be positive, got {dt}")
    ratio = abs(u_prime / u)
    root_dt = math.sqrt(dt)
    rms_ratio = (ratio * params.b ** 2 * (delta - x)
                 * math.sqrt(noise_kind.fourth_moment) * root_dt)
    avg_based_ratio = ratio * params.b ** 2 * root_dt
    d_d = -params.b ** 2 * nu * delta_x
    return rms_ratio, avg_based_ratio, d_d
