"""Clip-region policies.

A policy turns per-step context into a clip region.  Exact-statistics
policies read the problem's conditional mean gradient (and noise variance)
at the current iterate; estimator-driven policies track running gradient
statistics instead.  Policies are causal: the region for step t is a
function of gradients from steps strictly before t, and estimator policies
are fed each raw gradient only after the step that used it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clipmath import PerCoordinate, Region, as_vector

__all__ = [
    "WelfordEstimator",
    "EwmaEstimator",
    "RegionContext",
    "FixedPolicy",
    "OracleAdditivePolicy",
    "OracleVariancePolicy",
    "ProportionalPolicy",
    "AdaptiveABPolicy",
    "RegionPolicy",
    "region_for_step",
]


class WelfordEstimator:
    """Single-pass per-coordinate sample mean and variance."""

    def __init__(self, dim: int):
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def ingest(self, g) -> None:
        g = as_vector(g, dim=self.mean.shape[0])
        self.count += 1
        delta = g - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (g - self.mean)

    def variance(self) -> np.ndarray:
        """Sample variance; zero until two observations arrive."""
        if self.count < 2:
            return np.zeros_like(self.m2)
        return self.m2 / (self.count - 1)

    def mean_estimate(self) -> np.ndarray:
        return self.mean

    def std_estimate(self) -> np.ndarray:
        return np.sqrt(self.variance())


class EwmaEstimator:
    """Exponentially weighted first and second moments, no bias correction.

    The spread estimate is the square root of the raw (uncentered) second
    moment.
    """

    def __init__(self, dim: int, decay: float = 0.95):
        if not 0.0 <= decay < 1.0:
            raise ValueError(f"decay must lie in [0, 1), got {decay!r}")
        self.decay = decay
        self.m1 = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def ingest(self, g) -> None:
        g = as_vector(g, dim=self.m1.shape[0])
        self.m1 = self.decay * self.m1 + (1.0 - self.decay) * g
        self.m2 = self.decay * self.m2 + (1.0 - self.decay) * (g * g)

    def mean_estimate(self) -> np.ndarray:
        return self.m1

    def std_estimate(self) -> np.ndarray:
        return np.sqrt(self.m2)


@dataclass(frozen=True)
class RegionContext:
    """Exact per-step statistics a problem can expose to oracle policies."""

    mean_gradient: np.ndarray | None = None
    noise_variance: float | None = None


class FixedPolicy:
    """Always the same region."""

    def __init__(self, region: Region):
        self.region = region

    def region_for_step(self, t: int, context: RegionContext | None = None) -> Region:
        return self.region

    def observe(self, g) -> None:
        pass


def _require_mean(context: RegionContext | None, policy: str) -> np.ndarray:
    if context is None or context.mean_gradient is None:
        raise ValueError(
            f"{policy} needs the problem's exact mean gradient; this problem does not expose one"
        )
    return as_vector(context.mean_gradient)


class OracleAdditivePolicy:
    """Exact mean gradient magnitude plus a constant margin."""

    def __init__(self, margin: float):
        if not margin > 0.0:
            raise ValueError("margin must be positive")
        self.margin = margin

    def region_for_step(self, t: int, context: RegionContext | None = None) -> Region:
        mean = _require_mean(context, "additive oracle policy")
        return PerCoordinate(np.abs(mean) + self.margin)

    def observe(self, g) -> None:
        pass


class OracleVariancePolicy:
    """Exact mean gradient magnitude plus a weighted noise variance."""

    def __init__(self, weight: float):
        if not weight > 0.0:
            raise ValueError("variance weight must be positive")
        self.weight = weight

    def region_for_step(self, t: int, context: RegionContext | None = None) -> Region:
        mean = _require_mean(context, "variance oracle policy")
        if context is None or context.noise_variance is None:
            raise ValueError("variance oracle policy needs the problem's noise variance")
        return PerCoordinate(np.abs(mean) + self.weight * context.noise_variance)

    def observe(self, g) -> None:
        pass


class ProportionalPolicy:
    """Running mean-magnitude estimate scaled by a constant, floored."""

    def __init__(self, estimator, scale: float, floor: float = 1e-8):
        if not scale > 0.0:
            raise ValueError("scale must be positive")
        if not floor > 0.0:
            raise ValueError("floor must be positive")
        self.estimator = estimator
        self.scale = scale
        self.floor = floor

    def region_for_step(self, t: int, context: RegionContext | None = None) -> Region:
        scales = self.scale * np.abs(self.estimator.mean_estimate())
        return PerCoordinate(np.maximum(scales, self.floor))

    def observe(self, g) -> None:
        self.estimator.ingest(g)


class AdaptiveABPolicy:
    """Estimated mean and spread combined linearly, floored.

    Region per coordinate: mean_coeff * |mean estimate| + std_coeff * spread
    estimate, never below the floor (which also covers the empty-history
    start, where both estimates are zero).
    """

    def __init__(self, estimator, mean_coeff: float, std_coeff: float, floor: float = 1e-8):
        if mean_coeff < 0.0 or std_coeff < 0.0:
            raise ValueError("coefficients must be nonnegative")
        if not floor > 0.0:
            raise ValueError("floor must be positive")
        self.estimator = estimator
        self.mean_coeff = mean_coeff
        self.std_coeff = std_coeff
        self.floor = floor

    def region_for_step(self, t: int, context: RegionContext | None = None) -> Region:
        scales = self.mean_coeff * np.abs(
            self.estimator.mean_estimate()
        ) + self.std_coeff * self.estimator.std_estimate()
        return PerCoordinate(np.maximum(scales, self.floor))

    def observe(self, g) -> None:
        self.estimator.ingest(g)


RegionPolicy = (
    FixedPolicy
    | OracleAdditivePolicy
    | OracleVariancePolicy
    | ProportionalPolicy
    | AdaptiveABPolicy
)


def region_for_step(
    policy: RegionPolicy, t: int, context: RegionContext | None = None
) -> Region:
    return policy.region_for_step(t, context)
