"""Carry-compensated gradient clipping over black-box optimizers.

The clipped-away part of each gradient is kept in a carry buffer and added
back before the next clip, which makes the clipped updates unbiased on
average.  The package bundles the transform, base optimizers, clip-region
policies, stochastic test problems, closed-form bound evaluators, and a
deterministic experiment harness.
"""

from .clipmath import (
    ComponentConstant,
    Norm,
    PerCoordinate,
    Region,
    Unbounded,
    as_vector,
    clip,
    clip_component,
    clip_norm,
)
from .optimizers import (
    Adam,
    Momentum,
    NesterovMomentum,
    OptimizerConfig,
    OptimizerState,
    Sgd,
    init_state,
    opt_step,
)
from .transform import (
    CarryState,
    StepRecord,
    average_bias,
    clip_carry_step,
    init_carry,
    sign_carry_step,
)

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
    "Sgd",
    "Momentum",
    "NesterovMomentum",
    "Adam",
    "OptimizerConfig",
    "OptimizerState",
    "init_state",
    "opt_step",
    "CarryState",
    "StepRecord",
    "init_carry",
    "clip_carry_step",
    "sign_carry_step",
    "average_bias",
]

__version__ = "0.1.0"
