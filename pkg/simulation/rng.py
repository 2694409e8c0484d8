"""
Reproducible randomness: hierarchical stream derivation and primitive samplers
"""
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Tuple

import numpy as np

from .exceptions import ConfigurationError


class StreamPurpose(IntEnum):
    """Last path component of a stream, naming what the stream feeds"""

    TRANSPORT = 0  # Poisson events and the initial sign of one strip
    COUPLING = 1  # split uniforms of the dyadic quantile coupling
    BRIDGE = 2  # Brownian-bridge fill between skeleton nodes
    SUBSTRIP = 3  # auxiliary Brownian motions of the sub-strip split
    SHEET = 4  # exact grid simulation of a Brownian sheet
    REFINE = 5  # conditional refinement of a coupled pair
    BOOTSTRAP = 6


@dataclass(frozen=True)
class RngStream:
    """
    A numpy generator keyed on (master_seed, path).

    Two streams with equal keys replay the same samples; streams with
    different paths come from distinct SeedSequence spawn keys and are
    independent.
    """

    master_seed: int
    path: Tuple[int, ...]
    generator: np.random.Generator = field(compare=False, repr=False)

    def derive(self, *suffix: int) -> 'RngStream':
        """Child stream at path + suffix"""
        return derive_stream(self.master_seed, self.path + tuple(suffix))

    def uniform(self, size=None):
        return self.generator.random(size)

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def exponential(self, size=None):
        """Exp(1) draws by inversion of the CDF, -log(1 - U)"""
        return -np.log1p(-self.generator.random(size))


def derive_stream(master_seed: int, path: Iterable[int]) -> RngStream:
    """
    Build the stream for (master_seed, path).

    The path becomes the spawn key of a numpy SeedSequence, so derivation is
    a keyed hash of the full path and never depends on how many streams were
    derived before.
    """
    path = tuple(int(component) for component in path)
    if master_seed < 0 or master_seed >= 2 ** 64:
        raise ConfigurationError(f"master seed must be an unsigned 64-bit integer, got {master_seed}")
    if any(component < 0 for component in path):
        raise ConfigurationError(f"stream path components must be non-negative, got {list(path)}")

    sequence = np.random.SeedSequence(entropy=int(master_seed), spawn_key=path)
    return RngStream(master_seed=int(master_seed), path=path, generator=np.random.Generator(np.random.PCG64(sequence)))


def sample_poisson_events(stream: RngStream, horizon: float) -> np.ndarray:
    """
    Event times of a unit-rate Poisson process on (0, horizon].

    Spacings are drawn in blocks sized from the horizon alone, so the number
    of uniforms consumed is a function of the stream and horizon only.
    """
    if not horizon > 0:
        raise ConfigurationError(f"Poisson horizon must be positive, got {horizon}")

    block = int(horizon + 6.0 * np.sqrt(horizon) + 16)
    times = np.cumsum(stream.exponential(block))
    while times[-1] <= horizon:
        more = times[-1] + np.cumsum(stream.exponential(block))
        times = np.concatenate([times, more])

    events = times[: np.searchsorted(times, horizon, side='right')]
    events.setflags(write=False)
    return events


def sample_sign(stream: RngStream) -> int:
    """(-1)**A with A ~ Bernoulli(1/2)"""
    return 1 if stream.uniform() < 0.5 else -1
