"""
Uniform transport (telegraph) paths of one strip.

A path with scale n, sign (-1)**A and Poisson event times e_1 < ... < e_E in
(0, n] is the piecewise linear function

    value(t) = n**-0.5 * sign * I(n t),    I(u) = integral_0^u (-1)**N(v) dv,

with slopes +-sqrt(n) and kinks at e_i / n.
"""
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import ConfigurationError
from .rng import RngStream, sample_poisson_events, sample_sign

SUMMATION_BLOCK = 256


def compensated_cumsum(values: np.ndarray, block: int = SUMMATION_BLOCK) -> np.ndarray:
    """
    Cumulative sum with block-level compensation.

    Each block is summed with math.fsum and the block offsets are carried with
    Kahan summation, so the error no longer grows with the number of terms.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return values.copy()

    pad = (-values.size) % block
    blocks = np.concatenate([values, np.zeros(pad)]).reshape(-1, block)
    partial = np.cumsum(blocks, axis=1)

    offsets = np.empty(blocks.shape[0])
    total, carry = 0.0, 0.0
    for index, row in enumerate(blocks):
        offsets[index] = total
        term = math.fsum(row) - carry
        updated = total + term
        carry = (updated - total) - term
        total = updated

    return (partial + offsets[:, None]).ravel()[: values.size]


@dataclass(frozen=True, eq=False)
class TelegraphPath:
    n: int
    sign: int
    events: np.ndarray = field(repr=False)
    knot_times: np.ndarray = field(init=False, repr=False, compare=False)
    knot_values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError(f"transport scale n must be >= 1, got {self.n}")
        if self.sign not in (1, -1):
            raise ConfigurationError(f"transport sign must be +1 or -1, got {self.sign}")

        events = np.asarray(self.events, dtype=float)
        if events.size and (events[0] <= 0.0 or events[-1] > self.n or np.any(np.diff(events) <= 0.0)):
            raise ConfigurationError("event times must be strictly increasing within (0, n]")

        knot_times = np.concatenate([[0.0], events])
        slopes = np.where(np.arange(events.size) % 2 == 0, 1.0, -1.0)
        knot_values = np.concatenate([[0.0], compensated_cumsum(slopes * np.diff(knot_times))])

        for name, array in (('events', events), ('knot_times', knot_times), ('knot_values', knot_values)):
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def event_count(self) -> int:
        return int(self.events.size)

    @property
    def kink_times(self) -> np.ndarray:
        """Kinks on the t-scale, e_i / n"""
        return self.events / self.n

    def integral(self, u: np.ndarray) -> np.ndarray:
        """Unscaled I(u) for u in [0, n]"""
        u = np.asarray(u, dtype=float)
        index = np.searchsorted(self.knot_times, u, side='right') - 1
        slope = np.where(index % 2 == 0, 1.0, -1.0)
        return self.knot_values[index] + slope * (u - self.knot_times[index])

    def values(self, t: np.ndarray) -> np.ndarray:
        return self.sign * self.integral(self.n * np.asarray(t, dtype=float)) / math.sqrt(self.n)


def build_telegraph(n: int, stream: RngStream) -> TelegraphPath:
    """Draw the sign and the Poisson events on [0, n] of one strip"""
    if int(n) != n or n < 1:
        raise ConfigurationError(f"transport scale n must be a positive integer, got {n}")
    sign = sample_sign(stream)
    events = sample_poisson_events(stream, float(n))
    return TelegraphPath(n=int(n), sign=sign, events=events)


def _check_unit_interval(t: np.ndarray):
    if t.size and (np.min(t) < 0.0 or np.max(t) > 1.0):
        raise ConfigurationError("transport paths are evaluated for t in [0, 1]")


def eval_transport(path: TelegraphPath, t: float) -> float:
    t = float(t)
    _check_unit_interval(np.array([t]))
    return float(path.values(np.array([t]))[0])


def eval_transport_grid(path: TelegraphPath, t_grid: Sequence[float]) -> np.ndarray:
    """
    Evaluate on an ascending grid.

    One vectorised searchsorted pass over the knots; the values match
    eval_transport pointwise.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) < 0.0):
        raise ConfigurationError("t grid must be ascending")
    _check_unit_interval(t_grid)
    return path.values(t_grid)


def sup_abs_transport(path: TelegraphPath) -> float:
    """Exact max over [0, 1] of |value|, attained at a kink or at t = 1"""
    candidates = np.append(np.abs(path.knot_values), abs(float(path.integral(np.array([float(path.n)]))[0])))
    return float(np.max(candidates)) / math.sqrt(path.n)


def strip_increment(path: TelegraphPath, lam: float, t_grid: Sequence[float]) -> np.ndarray:
    """
    Strip-scale values W^(n)k(t) = n**(-(1 + lam) / 2) * sign * I(n t)
    """
    t_grid = np.asarray(t_grid, dtype=float)
    _check_unit_interval(t_grid)
    return path.sign * path.integral(path.n * t_grid) * path.n ** (-(1.0 + lam) / 2.0)
