"""Monte Carlo unraveling of the kick dissipator.

A trajectory at horizon ``t`` draws a jump count ``k ~ Poisson(t)``, then
``k`` channel indices i.i.d. by weight, and applies the corresponding kicks to
the covariance.  Jump times never matter because the jump channels commute
with the free (identity) evolution.  Each trajectory owns a deterministic
random stream derived from ``(seed, index)`` via
``SeedSequence(entropy=seed, spawn_key=(index,))``, so ensembles are
bit-reproducible for a fixed seed, trajectory count, and accumulation order
(trajectories are always reduced in index order).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import OVERFLOW_BOUND, ChannelSet
from .errors import DomainError
from .symplectic import check_symmetric

KickSampler = Callable[[np.random.Generator], np.ndarray]


@dataclass(frozen=True)
class TrajectoryConfig:
    """Ensemble size, base seed, and the divergence bound for flagging."""

    n_trajectories: int
    seed: int
    overflow_bound: float = OVERFLOW_BOUND

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise DomainError("n_trajectories must be positive")
        if self.seed < 0:
            raise DomainError("seed must be a nonnegative integer")


@dataclass(frozen=True)
class EnsembleStatistics:
    """Covariance ensemble summary.

    Attributes:
        mean_covariance: elementwise mean over non-divergent trajectories.
        standard_error: elementwise sample standard error of that mean.
        n_samples: trajectories entering the mean (excludes divergent ones).
        jump_count_histogram: jump count -> frequency, over all trajectories;
            frequencies sum to the configured trajectory count.
        n_divergent: trajectories flagged divergent and excluded, never clamped.
    """

    mean_covariance: np.ndarray
    standard_error: np.ndarray
    n_samples: int
    jump_count_histogram: dict[int, int]
    n_divergent: int


def trajectory_stream(seed: int, index: int) -> np.random.Generator:
    """The deterministic random stream owned by trajectory ``index``."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    )


def _draw_trajectory(
    channels: ChannelSet,
    v0: np.ndarray,
    t: float,
    stream: np.random.Generator,
) -> tuple[np.ndarray, int]:
    """One covariance draw plus its jump count.

    Draw order (fixed for reproducibility): the Poisson jump count first, then
    all channel indices in a single call.
    """
    k = int(stream.poisson(t))
    v = v0
    if k > 0:
        indices = stream.choice(len(channels.channels), size=k, p=channels.weights)
        for j in indices:
            kick = channels.channels[j].kick
            v = kick @ v @ kick.T
    return v, k


def sample_trajectory(
    channels: ChannelSet,
    v0: np.ndarray,
    t: float,
    stream: np.random.Generator,
) -> np.ndarray:
    """Sample one trajectory covariance at horizon ``t``."""
    if t < 0.0:
        raise DomainError(f"time must be nonnegative, got {t}")
    v0 = check_symmetric(v0, "V0")
    if v0.shape[0] != channels.dim:
        raise DomainError("V0 dimension does not match channels")
    v, _ = _draw_trajectory(channels, v0, t, stream)
    return v


def _accumulate(draw, v0: np.ndarray, t: float, config: TrajectoryConfig) -> EnsembleStatistics:
    """Reduce ``config.n_trajectories`` draws in index order."""
    if t < 0.0:
        raise DomainError(f"time must be nonnegative, got {t}")
    total = np.zeros_like(v0)
    total_sq = np.zeros_like(v0)
    histogram: dict[int, int] = {}
    n_samples = 0
    n_divergent = 0
    for index in range(config.n_trajectories):
        stream = trajectory_stream(config.seed, index)
        v, k = draw(v0, t, stream)
        histogram[k] = histogram.get(k, 0) + 1
        if np.max(np.abs(v)) > config.overflow_bound:
            n_divergent += 1
            continue
        total += v
        total_sq += v * v
        n_samples += 1
    if n_samples == 0:
        raise DomainError("every trajectory diverged; no ensemble mean exists")
    mean = total / n_samples
    if n_samples > 1:
        var = (total_sq - n_samples * mean * mean) / (n_samples - 1)
        se = np.sqrt(np.maximum(var, 0.0) / n_samples)
    else:
        se = np.zeros_like(mean)
    return EnsembleStatistics(
        mean_covariance=mean,
        standard_error=se,
        n_samples=n_samples,
        jump_count_histogram=dict(sorted(histogram.items())),
        n_divergent=n_divergent,
    )


def ensemble_mean(
    channels: ChannelSet,
    v0: np.ndarray,
    t: float,
    config: TrajectoryConfig,
) -> EnsembleStatistics:
    """Unbiased ensemble estimate of the covariance at horizon ``t``.

    Divergent trajectories (any entry beyond the overflow bound) are flagged
    and excluded from the mean; their count is reported.
    """
    v0 = check_symmetric(v0, "V0")
    if v0.shape[0] != channels.dim:
        raise DomainError("V0 dimension does not match channels")

    def draw(v, horizon, stream):
        return _draw_trajectory(channels, v, horizon, stream)

    return _accumulate(draw, v0, t, config)


def scattering_sample(
    kick_sampler: KickSampler,
    v0: np.ndarray,
    t: float,
    config: TrajectoryConfig,
) -> EnsembleStatistics:
    """Ensemble estimate with fresh kicks drawn per jump.

    ``kick_sampler`` receives the trajectory's stream and must return a
    symplectic kick; it is invoked once per jump, so a continuum of scattering
    events is supported without enumerating channels.
    """
    v0 = check_symmetric(v0, "V0")

    def draw(v_init, horizon, stream):
        k = int(stream.poisson(horizon))
        v = v_init
        for _ in range(k):
            kick = np.asarray(kick_sampler(stream), dtype=float)
            v = kick @ v @ kick.T
        return v, k

    return _accumulate(draw, v0, t, config)


def discrete_collision(
    channels: ChannelSet,
    v0: np.ndarray,
    dt: float,
    n_steps: int,
    stream: np.random.Generator,
) -> np.ndarray:
    """One trajectory of the discrete collision chain.

    Each step applies at most one kick: channel j fires with probability
    ``gamma_j dt``, nothing happens otherwise.  First-order in ``dt`` against
    the continuous dynamics.

    Raises:
        DomainError: if ``sum_j gamma_j dt > 1`` (not a probability split) or
            ``dt`` / ``n_steps`` are invalid.
    """
    v0 = check_symmetric(v0, "V0")
    if v0.shape[0] != channels.dim:
        raise DomainError("V0 dimension does not match channels")
    if dt <= 0.0:
        raise DomainError(f"dt must be positive, got {dt}")
    if n_steps < 0:
        raise DomainError(f"n_steps must be nonnegative, got {n_steps}")
    thresholds = np.cumsum(channels.weights) * dt
    if thresholds[-1] > 1.0 + 1e-12:
        raise DomainError(
            f"sum_j gamma_j dt = {thresholds[-1]:.3g} exceeds 1; shrink dt"
        )
    v = v0
    for _ in range(n_steps):
        u = stream.random()
        hit = int(np.searchsorted(thresholds, u, side="right"))
        if hit < len(channels.channels):
            kick = channels.channels[hit].kick
            v = kick @ v @ kick.T
    return v
