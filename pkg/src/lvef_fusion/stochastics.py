"""Deterministic, seedable random streams and sampling primitives.

All randomness in this package flows through RngStream.  Streams are built on
the Philox counter-based generator with key = (seed, stream_index), so any
substream is constructed algebraically in O(1) and distinct indices give
independent sequences by construction — no draws are burned, no spawning state
is carried around.  Replaying a (seed, stream_index) pair reproduces the draw
sequence bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInputError, InvalidParameterError

__all__ = [
    "RngStream",
    "SampleSummary",
    "make_stream",
    "sample_normal",
    "sample_gamma",
    "summarize",
]


@dataclass(frozen=True)
class RngStream:
    """A keyed random stream.  Equality of (seed, stream_index) implies equality
    of the generated sequence."""

    seed: int
    stream_index: int
    generator: np.random.Generator = field(repr=False, compare=False)

    def fork(self, stream_index: int) -> "RngStream":
        """A sibling stream under the same seed with a different index."""
        return make_stream(self.seed, stream_index)


def make_stream(seed: int, stream_index: int = 0) -> RngStream:
    """Create the deterministic stream identified by (seed, stream_index)."""
    for name, value in (("seed", seed), ("stream_index", stream_index)):
        if not 0 <= int(value) < 2**64:
            raise InvalidParameterError(f"{name} must be a 64-bit unsigned integer, got {value!r}")
    key = np.array([seed, stream_index], dtype=np.uint64)
    generator = np.random.Generator(np.random.Philox(key=key))
    return RngStream(seed=int(seed), stream_index=int(stream_index), generator=generator)


def sample_normal(stream: RngStream, mean: float, sd: float, size: int | None = None):
    """Draw from Normal(mean, sd^2).  sd = 0 returns the mean exactly.

    Returns a scalar when size is None, else an ndarray of that length.
    """
    if not sd >= 0:
        raise InvalidParameterError(f"sd must be >= 0, got {sd}")
    draws = stream.generator.normal(loc=mean, scale=sd, size=size)
    return float(draws) if size is None else draws


def sample_gamma(stream: RngStream, shape: float, rate: float, size: int | None = None):
    """Draw from Gamma(shape, rate), mean shape/rate.

    The underlying sampler is the Marsaglia-Tsang rejection scheme, valid for
    all shape > 0 (shape < 1 via the boosting identity).  Returns a scalar when
    size is None, else an ndarray.
    """
    if not shape > 0:
        raise InvalidParameterError(f"shape must be > 0, got {shape}")
    if not rate > 0:
        raise InvalidParameterError(f"rate must be > 0, got {rate}")
    draws = stream.generator.gamma(shape=shape, scale=1.0 / rate, size=size)
    return float(draws) if size is None else draws


@dataclass(frozen=True)
class SampleSummary:
    """Moments and empirical quantiles of a sample."""

    mean: float
    sd: float
    quantiles: dict[float, float]
    n: int


def summarize(values, probability_levels=(0.025, 0.5, 0.975)) -> SampleSummary:
    """Mean, sd (denominator n-1; sd of a singleton is 0 by convention), and
    empirical quantiles by linear interpolation between order statistics."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise EmptyInputError("summarize requires at least one value")
    levels = [float(p) for p in probability_levels]
    for p in levels:
        if not 0.0 <= p <= 1.0:
            raise InvalidParameterError(f"probability level must be in [0, 1], got {p}")
    if np.all(arr == arr[0]):
        # Summed means of a constant sample drift by an ulp; a degenerate
        # sample must summarize to its value bit-exactly (mean == quantiles).
        value = float(arr[0])
        return SampleSummary(
            mean=value, sd=0.0, quantiles={p: value for p in levels}, n=int(arr.size)
        )
    sd = float(np.std(arr, ddof=1))
    qs = np.quantile(arr, levels) if levels else np.array([])
    return SampleSummary(
        mean=float(np.mean(arr)),
        sd=sd,
        quantiles={p: float(q) for p, q in zip(levels, qs)},
        n=int(arr.size),
    )
