"""
Brownian motion realised on the randomness of a transport path.

Write x(u) = sign * I(u) for the unscaled transport and h(u) = +-1 for its
heading. (x, h) is Markov, and for a unit-rate telegraph over a length L the
law of (x(L), h(L)) given h(0) = s is known in closed form: a point mass
e**-L at x = s L plus Bessel densities on |x| < L.

The coupling is a dyadic quantile construction over fixed times
t = k / 2**J, with cells of about SKELETON_BLOCK units of u:

    * x(n) is mapped to B(1) through its law given h(0);
    * level by level, the midpoint of every dyadic cell is mapped to the
      Brownian-bridge midpoint through its law given (x, h) at both ends;
    * point masses are split with an independent uniform, so every score is
      exactly uniform and independent of all coarser ones.

The skeleton is therefore an exact Levy construction of a standard Brownian
motion. Errors stay of order one in u at every level instead of piling up
with a random clock. Grid points and kinks between skeleton nodes are filled
with Brownian bridges from an independent stream.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from .exceptions import ConfigurationError
from .replicas import Mapper, resolve_mapper
from .rng import RngStream, StreamPurpose, derive_stream
from .transport import TelegraphPath, build_telegraph, eval_transport_grid

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 2048
SKELETON_BLOCK = 4.0
QUADRATURE_POINTS = 129
WINDOW_SPREADS = 12.0
NODE_CHUNK = 2048

_TINY = np.finfo(float).tiny


def uniform_grid(size: int) -> np.ndarray:
    """size equally spaced points on [0, 1], endpoints included"""
    if size < 2:
        raise ConfigurationError(f"a t grid needs at least the two endpoints, got size {size}")
    return np.linspace(0.0, 1.0, int(size))


def transition_log_density(x, length, start, end):
    """
    log density of (x(length) in dx, h(length) = end) given h(0) = start.

    Unit switching rate and unit speed, continuous part only (the no-switch
    mass e**-length at start * length is left out). With r = sqrt(L**2 - x**2):

        switched heading:  e**-L I0(r) / 2
        same heading:      e**-L (L + start x) I1(r) / (2 r)

    -inf outside |x| <= length.
    """
    x = np.asarray(x, dtype=float)
    length = np.asarray(length, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        r = np.sqrt(np.maximum(length ** 2 - x ** 2, 0.0))
        excess = -x ** 2 / (r + length)  # r - L without cancellation
        ratio = np.where(r > 0.0, special.i1e(r) / np.where(r > 0.0, r, 1.0), 0.5)
        same = np.log(length + start * x) + np.log(ratio)
        switched = np.log(special.i0e(r))
        value = math.log(0.5) + excess + np.where(np.equal(start, end), same, switched)
    return np.where(np.abs(x) <= length, value, -np.inf)


def skeleton_levels(n: int) -> int:
    """Dyadic depth J with cells of at most SKELETON_BLOCK units of u"""
    return max(0, math.ceil(math.log2(n / SKELETON_BLOCK)))


def _distribution_levels(log_density: Callable[[np.ndarray], np.ndarray], lower_end, upper_end, centre, spread,
                         x, atom_at, atom_log, realized, v) -> Tuple[np.ndarray, np.ndarray]:
    """
    Randomised (F(x), 1 - F(x)) for rows of laws with a continuous part on
    [lower_end, upper_end] and point masses at atom_at.

    The continuous part is integrated by Simpson's rule on both sides of x,
    inside centre +- WINDOW_SPREADS * spread. A realized point mass is split
    by v.
    """
    x = np.clip(x, lower_end, upper_end)
    a = np.minimum(np.maximum(centre - WINDOW_SPREADS * spread - 2.0, lower_end), x)
    b = np.maximum(np.minimum(centre + WINDOW_SPREADS * spread + 2.0, upper_end), x)
    theta = np.linspace(0.0, 1.0, QUADRATURE_POINTS)
    left = a[:, None] + (x - a)[:, None] * theta
    right = x[:, None] + (b - x)[:, None] * theta
    log_left, log_right = log_density(left), log_density(right)

    offset = np.max(np.concatenate([log_left, log_right, atom_log], axis=1), axis=1)
    offset = np.where(np.isfinite(offset), offset, 0.0)[:, None]
    below = (x - a) * integrate.simpson(np.exp(log_left - offset), dx=theta[1], axis=1)
    above = (b - x) * integrate.simpson(np.exp(log_right - offset), dx=theta[1], axis=1)

    masses = np.exp(atom_log - offset)
    split = np.sum(np.where(realized, masses, 0.0), axis=1)
    lower = below + np.sum(np.where((atom_at < x[:, None]) & ~realized, masses, 0.0), axis=1) + v * split
    upper = above + np.sum(np.where((atom_at > x[:, None]) & ~realized, masses, 0.0), axis=1) + (1.0 - v) * split
    total = lower + upper
    degenerate = ~(total > 0.0)
    total = np.where(degenerate, 1.0, total)
    return np.where(degenerate, v, lower / total), np.where(degenerate, 1.0 - v, upper / total)


def _terminal_levels(path: TelegraphPath, x_end: float, events: int, v: float) -> Tuple[float, float]:
    """Scores of x(n) under its law given h(0) = sign"""
    length, start = float(path.n), float(path.sign)

    def log_density(points):
        return np.logaddexp(transition_log_density(points, length, start, 1.0),
                            transition_log_density(points, length, start, -1.0))

    still = events == 0
    lower, upper = _distribution_levels(
        log_density, np.array([-length]), np.array([length]), np.zeros(1), np.array([math.sqrt(length)]),
        np.array([start * length if still else x_end]),
        np.array([[start * length]]), np.array([[-length]]), np.array([[still]]), np.array([v]),
    )
    return float(lower[0]), float(upper[0])


def _midpoint_levels(half: float, x_left, x_mid, x_right, start, end, n_left, n_mid, n_right, v):
    """
    Scores of the cell midpoints under their law given (x, h) at both ends.

    half is the length in u of each half cell; the halves switch independently
    given the heading at the midpoint, which is summed out.
    """
    delta = x_right - x_left
    x = x_mid - x_left
    s, e = start[:, None], end[:, None]

    def log_density(points):
        total = np.full(points.shape, -np.inf)
        for heading in (1.0, -1.0):
            total = np.logaddexp(total, transition_log_density(points, half, s, heading)
                                 + transition_log_density(delta[:, None] - points, half, heading, e))
        return total

    first_still, second_still = n_mid == n_left, n_right == n_mid
    atom_at = np.stack([start * half, delta - end * half], axis=1)
    atom_log = np.stack([-half + transition_log_density(delta - start * half, half, start, end),
                         -half + transition_log_density(delta - end * half, half, start, end)], axis=1)
    x = np.where(first_still, atom_at[:, 0], np.where(second_still, atom_at[:, 1], x))

    lower, upper = _distribution_levels(
        log_density, np.maximum(-half, delta - half), np.minimum(half, delta + half),
        0.5 * delta, np.full(delta.shape, math.sqrt(half / 2.0)),
        x, atom_at, atom_log, np.stack([first_still, second_still], axis=1), v,
    )
    # no switch on the whole cell: the midpoint is determined
    whole_still = n_right == n_left
    return np.where(whole_still, v, lower), np.where(whole_still, 1.0 - v, upper)


def skeleton_scores(path: TelegraphPath, levels: int, stream: RngStream) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Node times k / 2**levels and the randomised distribution-function values
    (lower, upper = 1 - lower) of the transport at each node given the coarser
    nodes. Node 0 carries no score.
    """
    size = 2 ** levels
    times = np.arange(size + 1) / size
    u = path.n * times
    positions = path.sign * path.integral(u)
    switches = np.searchsorted(path.events, u, side='right')
    headings = path.sign * np.where(switches % 2 == 0, 1.0, -1.0)
    v = stream.uniform(size + 1)

    lower, upper = np.full(size + 1, 0.5), np.full(size + 1, 0.5)
    lower[size], upper[size] = _terminal_levels(path, positions[size], int(switches[size]), v[size])
    for level in range(1, levels + 1):
        step = size >> level
        mids = np.arange(step, size, 2 * step)
        for chunk in np.array_split(mids, math.ceil(mids.size / NODE_CHUNK)):
            left, right = chunk - step, chunk + step
            lower[chunk], upper[chunk] = _midpoint_levels(
                path.n * step / size, positions[left], positions[chunk], positions[right],
                headings[left], headings[right], switches[left], switches[chunk], switches[right], v[chunk],
            )
    return times, lower, upper


def gaussian_score(lower, upper):
    """Standard normal quantile of a score, taken from the nearer tail"""
    lower = np.maximum(np.asarray(lower, dtype=float), _TINY)
    upper = np.maximum(np.asarray(upper, dtype=float), _TINY)
    return np.where(lower < 0.5, special.ndtri(lower), -special.ndtri(upper))


def levy_skeleton(levels: int, scores: np.ndarray) -> np.ndarray:
    """Brownian motion at k / 2**levels from standard normal node scores (score 0 unused)"""
    size = 2 ** levels
    values = np.zeros(size + 1)
    values[size] = scores[size]
    for level in range(1, levels + 1):
        step = size >> level
        mids = np.arange(step, size, 2 * step)
        values[mids] = 0.5 * (values[mids - step] + values[mids + step]) + math.sqrt(step / (2.0 * size)) * scores[mids]
    return values


def bridge_fill(anchor_times: np.ndarray, anchor_values: np.ndarray,
                query_times: np.ndarray, stream: RngStream) -> np.ndarray:
    """
    Brownian motion at query_times, conditioned on its values at anchor_times.

    anchor_times must be ascending and start at 0. Queries beyond the last
    anchor continue freely from it. One independent Brownian path is drawn on
    the union of all times and turned into bridges interval by interval.
    """
    times = np.unique(np.concatenate([anchor_times, query_times]))
    noise = np.concatenate([[0.0], np.cumsum(np.sqrt(np.diff(times)) * stream.standard_normal(times.size - 1))])

    def free(at):
        return noise[np.searchsorted(times, at)]

    left = np.searchsorted(anchor_times, query_times, side='right') - 1
    right = np.minimum(left + 1, anchor_times.size - 1)
    has_right = left + 1 < anchor_times.size

    a, b = anchor_times[left], anchor_times[right]
    width = b - a
    frac = np.divide(query_times - a, width, out=np.zeros_like(query_times), where=has_right & (width > 0.0))

    drift = anchor_values[left] + frac * (anchor_values[right] - anchor_values[left])
    fluctuation = free(query_times) - free(a) - frac * (free(b) - free(a))
    return drift + fluctuation


@dataclass(frozen=True, eq=False)
class CoupledBmPair:
    """
    A transport path and a Brownian motion on shared randomness.

    support_times is the union of the t grid and the transport kinks; the
    Brownian values are kept on all of it, bm_values is the grid restriction.
    skeleton_times are the dyadic nodes where the two are quantile coupled.
    """

    path: TelegraphPath
    t_grid: np.ndarray = field(repr=False)
    support_times: np.ndarray = field(repr=False)
    support_values: np.ndarray = field(repr=False)
    skeleton_times: np.ndarray = field(repr=False)
    skeleton_values: np.ndarray = field(repr=False)

    @property
    def bm_values(self) -> np.ndarray:
        return self.support_values[np.searchsorted(self.support_times, self.t_grid)]

    @classmethod
    def from_transport(cls, path: TelegraphPath, t_grid: Sequence[float]) -> 'CoupledBmPair':
        """Degenerate pair whose second leg is the transport itself"""
        t_grid = _checked_grid(t_grid)
        support = np.unique(np.concatenate([t_grid, path.kink_times]))
        values = path.values(support)
        return cls(path=path, t_grid=t_grid, support_times=support, support_values=values,
                   skeleton_times=support, skeleton_values=values)


def _checked_grid(t_grid: Sequence[float]) -> np.ndarray:
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size < 2 or t_grid[0] != 0.0 or t_grid[-1] != 1.0:
        raise ConfigurationError("coupling grid must contain both endpoints 0 and 1")
    if np.any(np.diff(t_grid) <= 0.0):
        raise ConfigurationError("coupling grid must be strictly ascending")
    return t_grid


def couple_bm(path: TelegraphPath, stream: RngStream, t_grid: Sequence[float]) -> CoupledBmPair:
    t_grid = _checked_grid(t_grid)

    levels = skeleton_levels(path.n)
    times, lower, upper = skeleton_scores(path, levels, stream.derive(StreamPurpose.COUPLING))
    skeleton = levy_skeleton(levels, gaussian_score(lower, upper))

    support = np.unique(np.concatenate([t_grid, path.kink_times]))
    values = bridge_fill(times, skeleton, support, stream.derive(StreamPurpose.BRIDGE))
    return CoupledBmPair(path=path, t_grid=t_grid, support_times=support, support_values=values,
                         skeleton_times=times, skeleton_values=skeleton)


def refine_pair(pair: CoupledBmPair, factor: int, stream: RngStream) -> CoupledBmPair:
    """
    Insert factor - 1 equally spaced grid points in every grid cell.

    New Brownian values are bridges between the neighbouring known values, so
    the refined pair is the same Brownian motion observed on a superset.
    """
    if factor < 1:
        raise ConfigurationError(f"refinement factor must be >= 1, got {factor}")
    steps = np.arange(factor) / factor
    cells = pair.t_grid[:-1, None] + steps[None, :] * np.diff(pair.t_grid)[:, None]
    t_grid = np.unique(np.concatenate([cells.ravel(), pair.t_grid]))

    fresh = np.setdiff1d(t_grid, pair.support_times)
    fresh_values = bridge_fill(pair.support_times, pair.support_values, fresh, stream)
    support = np.concatenate([pair.support_times, fresh])
    values = np.concatenate([pair.support_values, fresh_values])
    order = np.argsort(support, kind='stable')
    return CoupledBmPair(path=pair.path, t_grid=t_grid, support_times=support[order], support_values=values[order],
                         skeleton_times=pair.skeleton_times, skeleton_values=pair.skeleton_values)


def sup_distance(pair: CoupledBmPair) -> float:
    """max over grid points and transport kinks of |transport - Brownian motion|"""
    transport = eval_transport_grid(pair.path, pair.support_times)
    return float(np.max(np.abs(transport - pair.support_values)))


def bm_replica_distance(n: int, replica: int, master_seed: int, grid_size: int, refine: int = 1) -> float:
    """
    Sup-distance of one replica; streams keyed on [n, replica, purpose].

    refine > 1 evaluates on the grid refined by that factor, sharing the
    Brownian values of the base grid.
    """
    base = derive_stream(master_seed, [n, replica])
    path = build_telegraph(n, base.derive(StreamPurpose.TRANSPORT))
    pair = couple_bm(path, base, uniform_grid(grid_size))
    if refine > 1:
        pair = refine_pair(pair, refine, base.derive(StreamPurpose.REFINE))
    return sup_distance(pair)


@dataclass(frozen=True)
class BmRateRow:
    n: int
    replicas: int
    median: float
    q90: float
    q99: float
    seed: int


def bm_rate_experiment(n_list: Sequence[int], replicas: int, master_seed: int,
                       grid_size: int = DEFAULT_GRID_SIZE, refine: int = 1,
                       mapper: Optional[Mapper] = None) -> List[BmRateRow]:
    if not n_list:
        raise ConfigurationError("n list must not be empty")
    if any(later <= earlier for earlier, later in zip(n_list, n_list[1:])):
        raise ConfigurationError("n list must be strictly ascending")
    if replicas < 1:
        raise ConfigurationError(f"replicas must be positive, got {replicas}")
    if refine < 1:
        raise ConfigurationError(f"refinement factor must be >= 1, got {refine}")
    if replicas < 100:
        logger.warning(f"{replicas} replicas give unreliable 0.99-quantiles")

    mapper = resolve_mapper(mapper)
    rows = []
    for n in n_list:
        distances = np.asarray(mapper(bm_replica_distance,
                                      [(int(n), replica, master_seed, grid_size, refine)
                                       for replica in range(replicas)]))
        median, q90, q99 = np.quantile(distances, [0.5, 0.9, 0.99])
        rows.append(BmRateRow(n=int(n), replicas=replicas, median=float(median), q90=float(q90),
                              q99=float(q99), seed=master_seed))
        logger.info(f"bm-rate n={n}: median sup-distance {median:.5f}")
    return rows
