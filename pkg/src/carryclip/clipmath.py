"""Clipping primitives and dense-vector helpers.

Everything here is a pure function over 1-D float64 arrays.  A clip region
comes in four variants: one scale shared by every coordinate, a vector of
per-coordinate scales, a Euclidean-norm budget, or an explicit no-op.

Coordinate clipping maps each entry to ``max(min(x_j, s_j), -s_j)``; norm
clipping rescales the whole vector by ``min(1, s / ||x||)``, preserving its
direction.  Inputs that already satisfy the region are returned with their
bit patterns untouched, which downstream code relies on for exact no-op
comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ComponentConstant",
    "PerCoordinate",
    "Norm",
    "Unbounded",
    "Region",
    "as_vector",
    "clip",
    "clip_component",
    "clip_norm",
]


def as_vector(values, dim: int | None = None) -> np.ndarray:
    """Coerce ``values`` to a finite 1-D float64 array.

    Raises ValueError on NaN/Inf entries (a silent NaN would corrupt every
    later carry update) and, when ``dim`` is given, on length mismatch.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim != 1 or x.size == 0:
        raise ValueError(f"expected a nonempty 1-D vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    if dim is not None and x.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {x.shape[0]}")
    return x


def _check_positive_scale(value: float, what: str) -> None:
    if not (np.isfinite(value) and value > 0.0):
        raise ValueError(f"{what} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class ComponentConstant:
    """One clip scale applied to every coordinate."""

    scale: float

    def __post_init__(self) -> None:
        _check_positive_scale(self.scale, "clip scale")


@dataclass(frozen=True)
class PerCoordinate:
    """A positive clip scale per coordinate."""

    scales: np.ndarray

    def __post_init__(self) -> None:
        scales = as_vector(self.scales)
        if np.any(scales <= 0.0):
            raise ValueError("per-coordinate clip scales must all be positive")
        scales = scales.copy()
        scales.setflags(write=False)
        object.__setattr__(self, "scales", scales)


@dataclass(frozen=True)
class Norm:
    """Euclidean-norm budget for the whole vector."""

    scale: float

    def __post_init__(self) -> None:
        _check_positive_scale(self.scale, "norm clip scale")


@dataclass(frozen=True)
class Unbounded:
    """Explicit no-op region: clip is the identity."""


Region = ComponentConstant | PerCoordinate | Norm | Unbounded


def clip_component(x, region: ComponentConstant | PerCoordinate) -> np.ndarray:
    """Clip each coordinate of ``x`` into ``[-s_j, s_j]``."""
    x = as_vector(x)
    if isinstance(region, ComponentConstant):
        limit = region.scale
    elif isinstance(region, PerCoordinate):
        limit = as_vector(region.scales, dim=x.shape[0])
    else:
        raise TypeError(f"component clipping needs a component region, got {type(region).__name__}")
    return np.clip(x, -limit, limit)


def clip_norm(x, region: Norm) -> np.ndarray:
    """Scale ``x`` onto the Euclidean ball of radius ``region.scale``.

    The zero vector (and anything already inside the ball) is returned
    unchanged: the projection fixes it, and this avoids a 0/0 rescale.
    """
    if not isinstance(region, Norm):
        raise TypeError(f"norm clipping needs a Norm region, got {type(region).__name__}")
    x = as_vector(x)
    norm = float(np.linalg.norm(x))
    if norm <= region.scale:
        return x.copy()
    scaled = x * (region.scale / norm)
    # rounding can leave the rescaled norm a hair above the budget; nudge it
    # down by ulps so the output is exactly inside and clipping is idempotent
    while float(np.linalg.norm(scaled)) > region.scale:
        scaled *= 1.0 - 2.0**-52
    return scaled


def clip(x, region: Region) -> np.ndarray:
    """Dispatch to the clip variant selected by ``region``."""
    if isinstance(region, (ComponentConstant, PerCoordinate)):
        return clip_component(x, region)
    if isinstance(region, Norm):
        return clip_norm(x, region)
    if isinstance(region, Unbounded):
        return as_vector(x).copy()
    raise TypeError(f"unknown clip region {type(region).__name__}")
