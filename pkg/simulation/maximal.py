"""
Orlicz norm of exp(B(1, 1)) and the two-parameter maximal inequality for exp(B).

Young function psi(t) = t * log+(t). Quadrature is the source of truth; the
closed forms are kept beside it for comparison.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize
from scipy.special import ndtr

from .exceptions import BracketingError, ConfigurationError
from .replicas import Mapper, resolve_mapper
from .rng import RngStream, StreamPurpose, derive_stream

logger = logging.getLogger(__name__)

QUADRATURE_TOLERANCE = 1e-12
TAIL_TRUNCATION = 40.0
ORLICZ_BRACKET = (0.1, 10.0)
MONOTONICITY_POINTS = 100
BOOTSTRAP_RESAMPLES = 200

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def psi(t):
    t_array = np.asarray(t, dtype=float)
    if np.any(t_array < 0.0):
        raise ConfigurationError(f"psi is defined for t >= 0, got {t}")
    with np.errstate(divide='ignore'):
        value = np.where(t_array > 1.0, t_array * np.log(np.where(t_array > 0.0, t_array, 1.0)), 0.0)
    return float(value) if value.ndim == 0 else value


def expected_psi_exp_gaussian(mu: float) -> float:
    """E psi(exp(Z) / mu) for Z standard normal, by adaptive quadrature"""
    if not mu > 0:
        raise ConfigurationError(f"mu must be positive, got {mu}")
    log_mu = math.log(mu)

    def integrand(x):
        return (x - log_mu) * math.exp(x - 0.5 * x * x - log_mu) / _SQRT_2PI

    value, _ = integrate.quad(integrand, log_mu, log_mu + TAIL_TRUNCATION,
                              epsabs=QUADRATURE_TOLERANCE, epsrel=QUADRATURE_TOLERANCE, limit=200)
    return value


def expected_psi_closed_form(mu: float) -> float:
    """(e**0.5 / mu) * (phi(c) + c Phi(c)), c = 1 - log mu"""
    c = 1.0 - math.log(mu)
    return math.exp(0.5) / mu * (math.exp(-0.5 * c * c) / _SQRT_2PI + c * float(ndtr(c)))


def expected_psi_displayed_form(mu: float) -> float:
    """The variant with (pi / 2)**0.5 c in place of sqrt(2 pi) c Phi(c); kept for comparison only"""
    c = 1.0 - math.log(mu)
    return math.exp(0.5) / (_SQRT_2PI * mu) * (math.exp(-0.5 * c * c) + math.sqrt(math.pi / 2.0) * c)


@dataclass(frozen=True)
class OrliczNormResult:
    mu_star: float
    residual: float
    method: str
    tolerance: float


def orlicz_norm_exp_gaussian(tolerance: float = 1e-6,
                             bracket: Tuple[float, float] = ORLICZ_BRACKET) -> OrliczNormResult:
    """
    ||exp(B(1, 1))||_psi as the root of E psi(exp(Z) / mu) = 1.

    The map is checked to be strictly decreasing on the bracket before
    bisection starts.
    """
    if not tolerance > 0:
        raise ConfigurationError(f"tolerance must be positive, got {tolerance}")
    low, high = bracket
    trial_mus = np.geomspace(low, high, MONOTONICITY_POINTS)
    values = np.array([expected_psi_exp_gaussian(mu) for mu in trial_mus])
    if np.any(np.diff(values) >= 0.0):
        raise BracketingError(f"E psi(exp(Z)/mu) is not strictly decreasing on [{low}, {high}]")
    if not values[0] > 1.0 > values[-1]:
        raise BracketingError(f"bracket [{low}, {high}] does not enclose the root: "
                              f"values {values[0]:.6g} and {values[-1]:.6g}")

    mu_star = optimize.bisect(lambda mu: expected_psi_exp_gaussian(mu) - 1.0, low, high,
                              xtol=tolerance * 1e-2, maxiter=200)
    residual = expected_psi_exp_gaussian(mu_star) - 1.0
    if abs(residual) > tolerance:
        raise BracketingError(f"bisection stopped at mu={mu_star} with residual {residual:.3g} above {tolerance}")
    logger.info(f"orlicz norm of exp(B(1,1)): {mu_star:.8f} (residual {residual:.2e})")
    return OrliczNormResult(mu_star=float(mu_star), residual=float(residual), method='quadrature',
                            tolerance=tolerance)


def orlicz_monte_carlo(mu: float, samples: int, stream: RngStream, chunk: int = 10 ** 6) -> Tuple[float, float]:
    """Monte Carlo E psi(exp(Z) / mu) and its standard error"""
    if samples < 2:
        raise ConfigurationError(f"Monte Carlo needs at least 2 samples, got {samples}")
    total, total_sq, drawn, index = 0.0, 0.0, 0, 0
    while drawn < samples:
        size = min(chunk, samples - drawn)
        z = stream.derive(index).standard_normal(size)
        x = np.exp(z) / mu
        values = psi(x)
        total += math.fsum(values)
        total_sq += math.fsum(values * values)
        drawn += size
        index += 1
    mean = total / samples
    variance = max(total_sq / samples - mean * mean, 0.0) * samples / (samples - 1)
    return mean, math.sqrt(variance / samples)


def gaussian_tail_integral(m: float) -> float:
    """integral over (0, inf) of x exp(-(x - m)**2 / 2) dx, by quadrature"""
    upper = max(m, 0.0) + TAIL_TRUNCATION
    points = [m] if 0.0 < m < upper else None
    value, _ = integrate.quad(lambda x: x * math.exp(-0.5 * (x - m) ** 2), 0.0, upper,
                              epsabs=QUADRATURE_TOLERANCE, epsrel=QUADRATURE_TOLERANCE, limit=200, points=points)
    return value


def gaussian_tail_closed_form(m: float) -> float:
    return math.exp(-0.5 * m * m) + m * _SQRT_2PI * float(ndtr(m))


def gaussian_tail_displayed_form(m: float) -> float:
    """Agrees with the integral only at m = 0"""
    return math.exp(-0.5 * m * m) + m * math.sqrt(math.pi / 2.0)


def _checked_axis(name: str, grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ConfigurationError(f"{name} grid must be a non-empty 1-d sequence")
    if grid[0] < 0.0 or np.any(np.diff(grid) <= 0.0):
        raise ConfigurationError(f"{name} grid must be non-negative and strictly ascending")
    return grid


def simulate_sheet(stream: RngStream, s_grid: Sequence[float], t_grid: Sequence[float],
                   count: Optional[int] = None) -> np.ndarray:
    """
    Exact Brownian sheet values on s_grid x t_grid.

    Cell increments are independent N(0, ds dt), summed along both axes. With
    count given, returns count independent sheets stacked on the first axis.
    """
    s_grid, t_grid = _checked_axis('s', s_grid), _checked_axis('t', t_grid)
    ds = np.diff(np.concatenate([[0.0], s_grid]))
    dt = np.diff(np.concatenate([[0.0], t_grid]))
    area = np.sqrt(np.outer(ds, dt))
    shape = (s_grid.size, t_grid.size) if count is None else (count, s_grid.size, t_grid.size)
    cells = stream.standard_normal(shape) * area
    return np.cumsum(np.cumsum(cells, axis=-1), axis=-2)


Point = Tuple[float, float]


@dataclass(frozen=True)
class MeanCheck:
    upper: Point
    lower: Point
    empirical: float
    stderr: float
    target: float
    displayed_target: float

    @property
    def z_score(self) -> float:
        return (self.empirical - self.target) / self.stderr if self.stderr > 0 else 0.0


def exp_sheet_mean_check(upper: Point, lower: Point, replicas: int, stream: RngStream,
                         chunk: int = 10 ** 5) -> MeanCheck:
    """
    Empirical E exp(B(s, t) - B(s', t')) against exp((s t - s' t') / 2).

    upper = (s, t), lower = (s', t') with lower <= upper componentwise. The
    displayed exponent (t t' - s s') / 2 is reported alongside.
    """
    (s, t), (s_low, t_low) = upper, lower
    for value in (s, t, s_low, t_low):
        if not 0.0 <= value <= 1.0:
            raise ConfigurationError(f"points must lie in the unit square, got {upper} and {lower}")
    if s_low > s or t_low > t:
        raise ConfigurationError(f"lower point {lower} must not exceed upper point {upper}")
    if replicas < 2:
        raise ConfigurationError(f"replicas must be at least 2, got {replicas}")

    s_grid = np.unique([0.0, s_low, s])
    t_grid = np.unique([0.0, t_low, t])
    si, ti = int(np.searchsorted(s_grid, s)), int(np.searchsorted(t_grid, t))
    sj, tj = int(np.searchsorted(s_grid, s_low)), int(np.searchsorted(t_grid, t_low))

    total, total_sq, drawn, index = 0.0, 0.0, 0, 0
    while drawn < replicas:
        size = min(chunk, replicas - drawn)
        sheets = simulate_sheet(stream.derive(index), s_grid, t_grid, count=size)
        values = np.exp(sheets[:, si, ti] - sheets[:, sj, tj])
        total += math.fsum(values)
        total_sq += math.fsum(values * values)
        drawn += size
        index += 1

    mean = total / replicas
    variance = max(total_sq / replicas - mean * mean, 0.0) * replicas / (replicas - 1)
    return MeanCheck(upper=(s, t), lower=(s_low, t_low), empirical=mean, stderr=math.sqrt(variance / replicas),
                     target=math.exp(0.5 * (s * t - s_low * t_low)),
                     displayed_target=math.exp(0.5 * (t * t_low - s * s_low)))


MEAN_CHECK_RECTANGLES: List[Tuple[Point, Point]] = [
    ((1.0, 1.0), (0.0, 0.0)),
    ((1.0, 1.0), (0.5, 0.5)),
    ((0.75, 0.5), (0.25, 0.25)),
    ((0.5, 1.0), (0.5, 0.25)),
    ((1.0, 0.25), (0.5, 0.25)),
]


def maximal_replica_max(master_seed: int, base_path: Sequence[int], replica: int, grid_size: int) -> float:
    """max of exp(B) over the (grid_size + 1)**2 points (i/G, j/G)"""
    grid = np.linspace(0.0, 1.0, grid_size + 1)
    stream = derive_stream(master_seed, list(base_path) + [replica, StreamPurpose.SHEET])
    return float(np.exp(np.max(simulate_sheet(stream, grid, grid))))


@dataclass(frozen=True)
class RatioRow:
    beta: float
    tail: float
    stderr: float
    ratio: float


@dataclass(frozen=True)
class MaximalRatioResult:
    mu_star: float
    rows: List[RatioRow]
    max_mean: float
    max_mean_stderr: float
    maxima: np.ndarray = field(repr=False)

    @property
    def max_ratio(self) -> float:
        return max(row.ratio for row in self.rows)


def maximal_ratio_experiment(betas: Sequence[float], replicas: int, grid_size: int, stream: RngStream,
                             mu_star: Optional[float] = None, mapper: Optional[Mapper] = None) -> MaximalRatioResult:
    """
    Empirical P(max exp(B) > beta) and beta * tail / ||exp(B(1,1))||_psi.

    The maximal inequality bounds the normalized ratio by a constant that
    does not depend on beta.
    """
    if not betas or any(beta <= 0 for beta in betas):
        raise ConfigurationError(f"betas must be a non-empty list of positive reals, got {list(betas)}")
    if replicas < 2:
        raise ConfigurationError(f"replicas must be at least 2, got {replicas}")
    if replicas < 1000:
        logger.warning(f"maximal inequality experiment with {replicas} replicas; 1000 or more are recommended")
    if grid_size < 1:
        raise ConfigurationError(f"grid size must be positive, got {grid_size}")
    if mu_star is None:
        mu_star = orlicz_norm_exp_gaussian().mu_star

    mapper = resolve_mapper(mapper)
    maxima = np.asarray(mapper(maximal_replica_max,
                               [(stream.master_seed, list(stream.path), replica, grid_size)
                                for replica in range(replicas)]))

    rows = []
    for beta in sorted(betas):
        tail = float(np.mean(maxima > beta))
        rows.append(RatioRow(beta=float(beta), tail=tail, stderr=math.sqrt(tail * (1.0 - tail) / replicas),
                             ratio=beta * tail / mu_star))

    resamples = stream.derive(StreamPurpose.BOOTSTRAP).generator.integers(0, replicas, (BOOTSTRAP_RESAMPLES, replicas))
    boot_means = maxima[resamples].mean(axis=1)
    logger.info(f"maximal experiment: {replicas} replicas on a {grid_size + 1}-point grid, "
                f"mean max {maxima.mean():.4f}")
    return MaximalRatioResult(mu_star=mu_star, rows=rows, max_mean=float(maxima.mean()),
                              max_mean_stderr=float(boot_means.std(ddof=1)), maxima=maxima)


imkeller_ratio_experiment = maximal_ratio_experiment
