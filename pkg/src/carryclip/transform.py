"""The clip-with-carry gradient transformation over a black-box optimizer.

Instead of discarding the part of the gradient that clipping removes, the
transform keeps it in a running carry buffer and adds the buffer back to the
next gradient before clipping:

    u      = clip(g + carry, region)
    carry' = (g + carry) - u

The clipped value ``u`` is what the wrapped optimizer sees.  The carry update
reuses the identical intermediate ``g + carry`` that was clipped, so the
telescoped identity  carry_T + sum(u) - sum(g) = 0  holds up to summation
rounding only, and a step that clips nothing flushes the carry to exactly
zero.  A sign-with-carry variant replaces clip by the element-wise sign.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .clipmath import Norm, Region, as_vector, clip
from .optimizers import OptimizerConfig, OptimizerState, init_state, opt_step

__all__ = [
    "CarryState",
    "StepRecord",
    "init_carry",
    "clip_carry_step",
    "sign_carry_step",
    "average_bias",
]


@dataclass
class CarryState:
    """Carry buffer plus the wrapped optimizer's state."""

    carry: np.ndarray
    inner: OptimizerState


@dataclass
class StepRecord:
    raw_gradient: np.ndarray
    update: np.ndarray
    carry_after: np.ndarray
    clipped: np.ndarray | bool  # per-coordinate flags, or one flag in norm mode


def init_carry(config: OptimizerConfig, dim: int) -> CarryState:
    """Fresh state: zero carry and a fresh inner optimizer."""
    return CarryState(carry=np.zeros(dim), inner=init_state(config, dim))


def clip_carry_step(
    state: CarryState, params, gradient, region: Region
) -> tuple[CarryState, np.ndarray, StepRecord]:
    """Clip gradient-plus-carry, update the carry, step the inner optimizer."""
    g = as_vector(gradient, dim=state.carry.shape[0])
    shifted = g + state.carry
    update = clip(shifted, region)
    carry_after = shifted - update
    if isinstance(region, Norm):
        clipped: np.ndarray | bool = bool(np.linalg.norm(shifted) > region.scale)
    else:
        clipped = ~np.equal(update, shifted)
    inner, new_params = opt_step(state.inner, params, update)
    record = StepRecord(
        raw_gradient=g, update=update, carry_after=carry_after, clipped=clipped
    )
    return CarryState(carry=carry_after, inner=inner), new_params, record


def sign_carry_step(
    state: CarryState, params, gradient
) -> tuple[CarryState, np.ndarray, StepRecord]:
    """Like clip_carry_step but the update is sign(g + carry) in {-1, 0, +1}.

    sign(0) = 0, which keeps the operator odd and the carry identity clean.
    """
    g = as_vector(gradient, dim=state.carry.shape[0])
    shifted = g + state.carry
    update = np.sign(shifted)
    carry_after = shifted - update
    inner, new_params = opt_step(state.inner, params, update)
    record = StepRecord(
        raw_gradient=g,
        update=update,
        carry_after=carry_after,
        clipped=~np.equal(update, shifted),
    )
    return CarryState(carry=carry_after, inner=inner), new_params, record


def average_bias(records: Sequence[StepRecord], t: int) -> np.ndarray:
    """Single-run bias estimate after ``t`` steps: carry at step t over t."""
    if not 1 <= t <= len(records):
        raise IndexError(f"step {t} outside trace of length {len(records)}")
    return records[t - 1].carry_after / t
