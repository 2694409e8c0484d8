"""
Monte Carlo rate harness for the sheet approximation: tail probabilities
against thresholds alpha * n**-beta and log-log rate fits of sup-error quantiles.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .exceptions import ConfigurationError, SimulationError
from .replicas import Mapper, resolve_mapper
from .sheet import DEFAULT_SUBSTRIPS, DEFAULT_T_GRID_SIZE, SheetConfig, check_lambda, sheet_replica_record

logger = logging.getLogger(__name__)

DECOMPOSITION_SLACK = 1e-9

RATE_COLUMNS = ['n', 'lambda', 'beta', 'alpha', 'threshold', 'tail', 'stderr',
                'median_sup', 'q90_sup', 'median_p1', 'median_p2', 'median_p3']
REPLICA_COLUMNS = ['n', 'lambda', 'm', 'replica', 'sup_error', 'p1', 'p2', 'p3', 'seed',
                   'p11', 'p12', 'p13', 'max_strip_distance']


@dataclass(frozen=True)
class TailEstimate:
    n: int
    threshold: float
    tail: float
    stderr: float


def tail_probability(errors: Sequence[float], threshold: float, n: int = 0) -> TailEstimate:
    """Fraction of errors strictly above threshold, with its binomial standard error"""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ConfigurationError("tail probability needs at least one error sample")
    tail = float(np.mean(errors > threshold))
    return TailEstimate(n=n, threshold=float(threshold), tail=tail,
                        stderr=math.sqrt(tail * (1.0 - tail) / errors.size))


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    stderr_slope: float
    r_squared: float


def fit_rate(points: Sequence[Tuple[int, float]]) -> RateFit:
    """Least squares of log value on log n"""
    if len(points) < 3:
        raise ConfigurationError(f"a rate fit needs at least 3 points, got {len(points)}")
    ns = np.array([point[0] for point in points], dtype=float)
    values = np.array([point[1] for point in points], dtype=float)
    if np.unique(ns).size != ns.size:
        raise ConfigurationError("rate fit points must have distinct n")
    if np.any(ns <= 0.0) or np.any(values <= 0.0):
        raise ConfigurationError("rate fit needs positive n and positive values (log undefined)")

    result = stats.linregress(np.log(ns), np.log(values))
    r_squared = float(result.rvalue) ** 2
    return RateFit(slope=float(result.slope), intercept=float(result.intercept),
                   stderr_slope=float(result.stderr), r_squared=min(max(r_squared, 0.0), 1.0))


@dataclass(frozen=True)
class RateExperimentConfig:
    lam: float
    beta: float
    n_list: Tuple[int, ...]
    replicas: int
    master_seed: int
    alpha: Optional[float] = None
    m: int = DEFAULT_SUBSTRIPS
    t_grid_size: int = DEFAULT_T_GRID_SIZE

    def __post_init__(self):
        check_lambda(self.lam)
        if not 0.0 < self.beta < self.lam / 2.0:
            raise ConfigurationError(f"beta must satisfy 0 < beta < lambda/2 = {self.lam / 2.0}, got beta={self.beta}")
        if self.alpha is not None and not self.alpha > 0:
            raise ConfigurationError(f"alpha must be positive, got {self.alpha}")
        if not self.n_list:
            raise ConfigurationError("n list must not be empty")
        if any(later <= earlier for earlier, later in zip(self.n_list, self.n_list[1:])):
            raise ConfigurationError("n list must be strictly ascending")
        if self.replicas < 1:
            raise ConfigurationError(f"replicas must be positive, got {self.replicas}")
        object.__setattr__(self, 'n_list', tuple(int(n) for n in self.n_list))
        for n in self.n_list:
            self.sheet_config(n)

    def sheet_config(self, n: int) -> SheetConfig:
        return SheetConfig(n=n, lam=self.lam, m=self.m, t_grid_size=self.t_grid_size)

    def as_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['n_list'] = list(self.n_list)
        return data


@dataclass(frozen=True)
class SheetRateRow:
    n: int
    lam: float
    beta: float
    alpha: float
    threshold: float
    tail: float
    stderr: float
    median_sup: float
    q90_sup: float
    median_p1: float
    median_p2: float
    median_p3: float
    p2_union_bound: float

    def csv_row(self) -> List[Any]:
        return [self.n, self.lam, self.beta, self.alpha, self.threshold, self.tail, self.stderr,
                self.median_sup, self.q90_sup, self.median_p1, self.median_p2, self.median_p3]


@dataclass(frozen=True)
class SheetRateResult:
    config: RateExperimentConfig
    alpha: float
    rows: List[SheetRateRow]
    median_fit: Optional[RateFit]
    q90_fit: Optional[RateFit]
    records: List[Dict[str, Any]] = field(repr=False)

    def replica_rows(self) -> List[List[Any]]:
        config = self.config
        return [[record['n'], config.lam, config.m, record['replica'], record['sup_error'], record['p1'], record['p2'],
                 record['p3'], config.master_seed, record['p11'], record['p12'], record['p13'],
                 max(record['strip_distances'])]
                for record in self.records]


def _checked_record(record: Dict[str, Any], n: int, replica: int) -> Dict[str, Any]:
    bound = record['p1'] + record['p2'] + record['p3']
    if record['sup_error'] > bound + DECOMPOSITION_SLACK:
        raise SimulationError(f"sup error {record['sup_error']} exceeds p1 + p2 + p3 = {bound} "
                              f"at n={n}, replica={replica}")
    return dict(record, n=n, replica=replica)


def p2_union_bound(config: RateExperimentConfig, n: int, threshold: float,
                   records: Sequence[Dict[str, Any]]) -> float:
    """K * P(strip distance > n**(lam/2) * threshold / (3K)), estimated over all strips"""
    strips = config.sheet_config(n).strips
    cutoff = n ** (config.lam / 2.0) * threshold / (3.0 * strips)
    distances = np.concatenate([record['strip_distances'] for record in records])
    return float(strips * np.mean(distances > cutoff))


def sheet_rate_experiment(config: RateExperimentConfig, mapper: Optional[Mapper] = None) -> SheetRateResult:
    mapper = resolve_mapper(mapper)
    per_n = {}
    for n in config.n_list:
        sheet_data = config.sheet_config(n).as_dict()
        raw = mapper(sheet_replica_record, [(sheet_data, replica, config.master_seed)
                                            for replica in range(config.replicas)])
        per_n[n] = [_checked_record(record, n, replica) for replica, record in enumerate(raw)]
        logger.info(f"sheet-rate n={n}: {config.replicas} replicas done")

    alpha = config.alpha
    if alpha is None:
        alpha = 2.0 * float(np.median([record['sup_error'] for record in per_n[config.n_list[0]]]))
        logger.info(f"sheet-rate alpha set to twice the smallest-n median sup error: {alpha:.6g}")

    rows = []
    for n in config.n_list:
        records = per_n[n]
        sup_errors = np.array([record['sup_error'] for record in records])
        threshold = alpha * n ** (-config.beta)
        estimate = tail_probability(sup_errors, threshold, n)
        median_sup, q90_sup = np.quantile(sup_errors, [0.5, 0.9])
        rows.append(SheetRateRow(
            n=n, lam=config.lam, beta=config.beta, alpha=alpha, threshold=threshold,
            tail=estimate.tail, stderr=estimate.stderr,
            median_sup=float(median_sup), q90_sup=float(q90_sup),
            median_p1=float(np.median([record['p1'] for record in records])),
            median_p2=float(np.median([record['p2'] for record in records])),
            median_p3=float(np.median([record['p3'] for record in records])),
            p2_union_bound=p2_union_bound(config, n, threshold, records),
        ))

    median_fit = q90_fit = None
    if len(rows) >= 3:
        median_fit = fit_rate([(row.n, row.median_sup) for row in rows])
        q90_fit = fit_rate([(row.n, row.q90_sup) for row in rows])
        logger.info(f"sheet-rate median slope {median_fit.slope:.4f} (r^2 {median_fit.r_squared:.3f})")
    else:
        logger.warning(f"rate fit skipped: {len(rows)} n-values, at least 3 are needed")

    records = [record for n in config.n_list for record in per_n[n]]
    return SheetRateResult(config=config, alpha=alpha, rows=rows, median_fit=median_fit,
                           q90_fit=q90_fit, records=records)
