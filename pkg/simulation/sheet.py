"""
Coupled pair (W_n, W) on the unit square.

[0, 1] is cut into K = floor(n**lam) strips of width h = n**-lam plus a remainder
(K h, 1]. Strip k carries a transport path and the Brownian motion coupled to
it; W_n at the strip points is the cumulative sum of n**(-lam/2) times the
transports, W the same sum of the Brownian motions. Inside a strip, W_n is the
linear interpolation of its endpoints and W is refined on m sub-strips by a
conditional split of the strip Brownian motion. Both legs are frozen on the
remainder strip.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .coupling import CoupledBmPair, couple_bm, sup_distance, uniform_grid
from .exceptions import ConfigurationError
from .replicas import Mapper, resolve_mapper
from .rng import RngStream, StreamPurpose, derive_stream
from .transport import build_telegraph, strip_increment

logger = logging.getLogger(__name__)

LAMBDA_CONSTRAINT = "lambda must lie in (0, 1/5) for the sheet rate to hold"

DEFAULT_LAMBDA = 0.19
DEFAULT_SUBSTRIPS = 8
DEFAULT_T_GRID_SIZE = 1024


def check_lambda(lam: float):
    if not 0.0 < lam < 0.2:
        raise ConfigurationError(f"{LAMBDA_CONSTRAINT}; got lambda={lam}")


@dataclass(frozen=True)
class SheetConfig:
    n: int
    lam: float = DEFAULT_LAMBDA
    m: int = DEFAULT_SUBSTRIPS
    t_grid_size: int = DEFAULT_T_GRID_SIZE

    def __post_init__(self):
        check_lambda(self.lam)
        if self.n < 1:
            raise ConfigurationError(f"n must be a positive integer, got {self.n}")
        if self.m < 1:
            raise ConfigurationError(f"sub-strip count m must be >= 1, got {self.m}")
        if self.t_grid_size < 2:
            raise ConfigurationError(f"t grid needs at least 2 points, got {self.t_grid_size}")
        if self.strips < 1:
            raise ConfigurationError(f"floor(n**lambda) must be >= 1, got n={self.n}, lambda={self.lam}")

    @property
    def scale(self) -> float:
        """n**lam"""
        return self.n ** self.lam

    @property
    def strips(self) -> int:
        """K = floor(n**lam), guarded against n**lam landing just below an integer"""
        return int(math.floor(self.scale * (1.0 + 1e-12)))

    @property
    def strip_width(self) -> float:
        return 1.0 / self.scale

    @property
    def has_remainder(self) -> bool:
        return self.strips * self.strip_width < 1.0

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SheetConfig':
        return cls(n=int(data['n']), lam=float(data['lam']), m=int(data['m']), t_grid_size=int(data['t_grid_size']))


def brownian_on_grid(stream: RngStream, t_grid: np.ndarray) -> np.ndarray:
    increments = np.sqrt(np.diff(t_grid)) * stream.standard_normal(t_grid.size - 1)
    return np.concatenate([[0.0], np.cumsum(increments)])


def auxiliary_sheet(stream: RngStream, m: int, t_grid: np.ndarray) -> np.ndarray:
    """
    A standard Brownian sheet Y(u, t) at u = j/m, j = 0..m.

    For m a power of two the u-direction is built by midpoint (Levy)
    refinement with one stream per dyadic point u = k / 2**level, so the sheet
    for m is the sheet for 2m observed at every other point.
    """
    rows = np.zeros((m + 1, t_grid.size))
    if m & (m - 1) == 0:
        rows[m] = brownian_on_grid(stream.derive(0, 1), t_grid)
        span, level = m, 0
        while span > 1:
            level += 1
            half = span // 2
            std = 0.5 * math.sqrt(span / m)
            for index in range(half, m, span):
                mean = 0.5 * (rows[index - half] + rows[index + half])
                dyadic = index * 2 ** level // m
                rows[index] = mean + std * brownian_on_grid(stream.derive(level, dyadic), t_grid)
            span = half
    else:
        increments = [brownian_on_grid(stream.derive(1, j), t_grid) / math.sqrt(m) for j in range(m)]
        rows[1:] = np.cumsum(increments, axis=0)
    return rows


def substrip_motions(strip_bm: np.ndarray, stream: RngStream, m: int, t_grid: np.ndarray) -> np.ndarray:
    """
    Split a strip Brownian motion into m sub-strip Brownian motions.

    With V_j = sqrt(m) * (Y(j/m) - Y((j-1)/m)) independent standard Brownian
    motions, the sub-strip motions are V_j - mean(V) + strip_bm / sqrt(m); they
    are standard, pairwise uncorrelated, and (1/sqrt(m)) * their sum is strip_bm.
    """
    auxiliary = np.sqrt(m) * np.diff(auxiliary_sheet(stream, m, t_grid), axis=0)
    return auxiliary - auxiliary.mean(axis=0) + strip_bm / math.sqrt(m)


@dataclass(frozen=True, eq=False)
class SheetGrid:
    """
    Values of W on the refined strip grid s_i = i h / m (plus s = 1) and of W_n
    at the strip points l h, both over the same uniform t grid.
    """

    config: SheetConfig
    s_grid: np.ndarray = field(repr=False)
    t_grid: np.ndarray = field(repr=False)
    w_values: np.ndarray = field(repr=False)
    wn_strip_values: np.ndarray = field(repr=False)
    strip_pairs: List[CoupledBmPair] = field(repr=False)
    substrips: List[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def refined_points(self) -> int:
        """Number of s-grid points on [0, K h]"""
        return self.config.strips * self.config.m + 1

    @property
    def left_strip(self) -> np.ndarray:
        """floor(s n**lam) for every s-grid point (K on the frozen remainder)"""
        index = np.arange(self.s_grid.size) // self.config.m
        return np.minimum(index, self.config.strips)

    @property
    def w_strip_values(self) -> np.ndarray:
        return self.w_values[: self.refined_points: self.config.m]

    @property
    def wn_values(self) -> np.ndarray:
        """W_n interpolated onto the refined s grid"""
        m, strips = self.config.m, self.config.strips
        index = np.arange(self.s_grid.size)
        left = np.minimum(index // m, strips)
        right = np.minimum(left + 1, strips)
        frac = np.where(index < self.refined_points, (index % m) / m, 0.0)[:, None]
        return (1.0 - frac) * self.wn_strip_values[left] + frac * self.wn_strip_values[right]


def build_sheet_pair(config: SheetConfig, stream: RngStream) -> SheetGrid:
    t_grid = uniform_grid(config.t_grid_size)
    strips, m = config.strips, config.m
    scale = config.n ** (-config.lam / 2.0)
    sub_scale = math.sqrt(config.strip_width / m)

    pairs, increments, motions, substrips = [], [], [], []
    for k in range(1, strips + 1):
        strip_stream = stream.derive(k)
        path = build_telegraph(config.n, strip_stream.derive(StreamPurpose.TRANSPORT))
        pair = couple_bm(path, strip_stream, t_grid)
        pairs.append(pair)
        increments.append(strip_increment(path, config.lam, t_grid))
        motions.append(pair.bm_values)
        substrips.append(substrip_motions(pair.bm_values, strip_stream.derive(StreamPurpose.SUBSTRIP), m, t_grid))

    zero = np.zeros((1, t_grid.size))
    wn_strip = np.vstack([zero, np.cumsum(np.asarray(increments), axis=0)])
    w_strip = np.vstack([zero, np.cumsum(scale * np.asarray(motions), axis=0)])

    rows = [w_strip[0]]
    for k in range(strips):
        inner = w_strip[k] + sub_scale * np.cumsum(substrips[k][:-1], axis=0)
        rows.extend(inner)
        rows.append(w_strip[k + 1])

    s_grid = np.arange(strips * m + 1) * config.strip_width / m
    if config.has_remainder:
        s_grid = np.append(s_grid, 1.0)
        rows.append(w_strip[strips])

    return SheetGrid(config=config, s_grid=s_grid, t_grid=t_grid, w_values=np.vstack(rows),
                     wn_strip_values=wn_strip, strip_pairs=pairs, substrips=substrips)


def interp_weights(config: SheetConfig, s: float) -> Dict[int, float]:
    """Weights of the strip points l h in W_n(s, .), constant beyond K h"""
    if not 0.0 <= s <= 1.0:
        raise ConfigurationError(f"s must lie in [0, 1], got {s}")
    strips = config.strips
    position = s * config.scale
    if position >= strips:
        return {strips: 1.0}
    left = min(int(math.floor(position)), strips - 1)
    frac = position - left
    return {left: 1.0 - frac, left + 1: frac}


def interp_Wn(grid: SheetGrid, s: float, t: float) -> float:
    column = int(np.argmin(np.abs(grid.t_grid - t)))
    if not math.isclose(grid.t_grid[column], t, rel_tol=0.0, abs_tol=1e-12):
        raise ConfigurationError(f"t={t} is not a point of the sheet's t grid")
    weights = interp_weights(grid.config, s)
    return float(sum(weight * grid.wn_strip_values[index, column] for index, weight in weights.items()))


def sup_error(grid: SheetGrid) -> float:
    return float(np.max(np.abs(grid.wn_values - grid.w_values)))


@dataclass(frozen=True)
class ErrorDecomposition:
    p1: float
    p2: float
    p3: float

    @property
    def total(self) -> float:
        return self.p1 + self.p2 + self.p3


def error_decomposition(grid: SheetGrid) -> ErrorDecomposition:
    """
    p1: interpolation error |W_n(s) - W_n(left)|, p2: strip coupling error at
    strip points, p3: sheet increment |W(left) - W(s)|; maxima over the grid.
    """
    left = grid.left_strip
    wn_left = grid.wn_strip_values[left]
    w_left = grid.w_strip_values[left]
    return ErrorDecomposition(
        p1=float(np.max(np.abs(grid.wn_values - wn_left))),
        p2=float(np.max(np.abs(grid.wn_strip_values - grid.w_strip_values))),
        p3=float(np.max(np.abs(w_left - grid.w_values))),
    )


def interpolation_bound(grid: SheetGrid) -> Tuple[float, float, float]:
    """
    Split of p1 through the strip endpoints: coupling error at the left point,
    sheet increment across the strip, coupling error at the right point.
    """
    wn, w = grid.wn_strip_values, grid.w_strip_values
    coupling = np.abs(wn - w)
    p11 = float(np.max(coupling))
    p12 = float(np.max(np.abs(np.diff(w, axis=0)))) if grid.config.strips else 0.0
    p13 = float(np.max(coupling[1:])) if grid.config.strips else 0.0
    return p11, p12, p13


def sheet_replica_record(config_data: Dict[str, Any], replica: int, master_seed: int) -> Dict[str, Any]:
    """Errors of one replica; streams keyed on [n, replica, strip, purpose]"""
    config = SheetConfig.from_dict(config_data)
    grid = build_sheet_pair(config, derive_stream(master_seed, [config.n, replica]))
    decomposition = error_decomposition(grid)
    p11, p12, p13 = interpolation_bound(grid)
    return {
        'sup_error': sup_error(grid),
        'p1': decomposition.p1,
        'p2': decomposition.p2,
        'p3': decomposition.p3,
        'p11': p11,
        'p12': p12,
        'p13': p13,
        'strip_distances': [sup_distance(pair) for pair in grid.strip_pairs],
    }


Point = Tuple[float, float]


@dataclass(frozen=True)
class CovarianceRow:
    first: Point
    second: Point
    empirical: float
    exact: float
    interpolated: float
    stderr: float

    @property
    def z_score(self) -> float:
        return (self.empirical - self.exact) / self.stderr if self.stderr > 0 else 0.0


def sheet_covariance(first: Point, second: Point) -> float:
    """(s1 ^ s2)(t1 ^ t2)"""
    return min(first[0], second[0]) * min(first[1], second[1])


def interpolated_covariance(config: SheetConfig, first: Point, second: Point) -> float:
    """Covariance of the interpolated, frozen sheet that W_n approximates at scale n"""
    total = 0.0
    for a, wa in interp_weights(config, first[0]).items():
        for b, wb in interp_weights(config, second[0]).items():
            total += wa * wb * min(a, b)
    return total * config.strip_width * min(first[1], second[1])


def covariance_replica_values(config_data: Dict[str, Any], master_seed: int, base_path: Sequence[int],
                              replica: int, points: Sequence[Point]) -> List[float]:
    """W_n at each point for one replica, from the strip transports alone"""
    config = SheetConfig.from_dict(config_data)
    stream = derive_stream(master_seed, list(base_path) + [replica])
    times = np.array([point[1] for point in points])
    strip_rows = [np.zeros(times.size)]
    for k in range(1, config.strips + 1):
        path = build_telegraph(config.n, stream.derive(k, StreamPurpose.TRANSPORT))
        strip_rows.append(strip_rows[-1] + strip_increment(path, config.lam, times))
    strip_values = np.vstack(strip_rows)

    values = []
    for column, (s, _) in enumerate(points):
        weights = interp_weights(config, s)
        values.append(float(sum(weight * strip_values[index, column] for index, weight in weights.items())))
    return values


def covariance_check(config: SheetConfig, replicas: int, pairs: Sequence[Tuple[Point, Point]],
                     stream: RngStream, mapper: Optional[Mapper] = None) -> List[CovarianceRow]:
    if replicas < 2:
        raise ConfigurationError(f"covariance estimation needs at least 2 replicas, got {replicas}")
    if replicas < 1000:
        logger.warning(f"covariance check with {replicas} replicas; 1000 or more are recommended")

    points = []
    for first, second in pairs:
        for point in (tuple(first), tuple(second)):
            if not (0.0 <= point[0] <= 1.0 and 0.0 <= point[1] <= 1.0):
                raise ConfigurationError(f"point {point} lies outside the unit square")
            if point not in points:
                points.append(point)

    mapper = resolve_mapper(mapper)
    values = np.asarray(mapper(covariance_replica_values,
                               [(config.as_dict(), stream.master_seed, list(stream.path), replica, points)
                                for replica in range(replicas)]))

    rows = []
    for first, second in pairs:
        first, second = tuple(first), tuple(second)
        products = values[:, points.index(first)] * values[:, points.index(second)]
        rows.append(CovarianceRow(
            first=first,
            second=second,
            empirical=float(products.mean()),
            exact=sheet_covariance(first, second),
            interpolated=interpolated_covariance(config, first, second),
            stderr=float(products.std(ddof=1) / math.sqrt(replicas)),
        ))
    return rows


DEFAULT_COVARIANCE_PAIRS: List[Tuple[Point, Point]] = [
    ((0.25, 0.5), (0.25, 0.5)),
    ((0.5, 0.5), (0.5, 0.5)),
    ((0.5, 1.0), (0.5, 1.0)),
    ((0.3, 0.7), (0.6, 0.4)),
    ((0.75, 0.25), (0.25, 0.75)),
    ((0.9, 0.9), (0.9, 0.9)),
    ((0.2, 0.2), (0.8, 0.8)),
    ((0.6, 0.3), (0.6, 0.9)),
    ((1.0, 1.0), (0.5, 0.5)),
    ((0.0, 0.5), (0.5, 0.5)),
]
