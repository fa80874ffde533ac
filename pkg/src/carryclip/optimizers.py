"""Base first-order optimizers treated as interchangeable black boxes.

Each optimizer is a pure step function over an explicit state value, so a
trajectory can be forked or replayed deterministically: identical
``(state, params, gradient)`` triples produce bitwise-identical outputs.
The optimizers never clip; any gradient transformation happens upstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clipmath import as_vector

__all__ = [
    "Sgd",
    "Momentum",
    "NesterovMomentum",
    "Adam",
    "OptimizerConfig",
    "OptimizerState",
    "init_state",
    "opt_step",
]


def _check_unit_interval(value: float, what: str) -> None:
    if not (0.0 <= value < 1.0):
        raise ValueError(f"{what} must lie in [0, 1), got {value!r}")


@dataclass(frozen=True)
class Sgd:
    lr: float

    def __post_init__(self) -> None:
        if not self.lr > 0.0:
            raise ValueError("learning rate must be positive")


@dataclass(frozen=True)
class Momentum:
    lr: float
    decay: float = 0.9

    def __post_init__(self) -> None:
        if not self.lr > 0.0:
            raise ValueError("learning rate must be positive")
        _check_unit_interval(self.decay, "momentum decay")


@dataclass(frozen=True)
class NesterovMomentum:
    lr: float
    decay: float = 0.9

    def __post_init__(self) -> None:
        if not self.lr > 0.0:
            raise ValueError("learning rate must be positive")
        _check_unit_interval(self.decay, "momentum decay")


@dataclass(frozen=True)
class Adam:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if not self.lr > 0.0:
            raise ValueError("learning rate must be positive")
        _check_unit_interval(self.beta1, "beta1")
        _check_unit_interval(self.beta2, "beta2")
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")


OptimizerConfig = Sgd | Momentum | NesterovMomentum | Adam


@dataclass
class OptimizerState:
    """Config plus step count and zero, one, or two moment buffers."""

    config: OptimizerConfig
    step_count: int
    buffers: tuple[np.ndarray, ...]


def init_state(config: OptimizerConfig, dim: int) -> OptimizerState:
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    if isinstance(config, Sgd):
        buffers: tuple[np.ndarray, ...] = ()
    elif isinstance(config, (Momentum, NesterovMomentum)):
        buffers = (np.zeros(dim),)
    elif isinstance(config, Adam):
        buffers = (np.zeros(dim), np.zeros(dim))
    else:
        raise TypeError(f"unknown optimizer config {type(config).__name__}")
    return OptimizerState(config=config, step_count=0, buffers=buffers)


def opt_step(
    state: OptimizerState, params, gradient
) -> tuple[OptimizerState, np.ndarray]:
    """Apply one update and return the new state and parameters.

    SGD is exactly ``params - lr * g``.  Momentum keeps a decayed gradient
    buffer; the Nesterov variant re-applies the decayed buffer to the update
    (lookahead-free formulation).  Adam uses bias-corrected first and second
    moments with eps added after the square root.
    """
    params = as_vector(params)
    g = as_vector(gradient, dim=params.shape[0])
    cfg = state.config
    t = state.step_count + 1

    if isinstance(cfg, Sgd):
        new_params = params - cfg.lr * g
        buffers: tuple[np.ndarray, ...] = ()
    elif isinstance(cfg, Momentum):
        (buf,) = state.buffers
        buf = cfg.decay * buf + g
        new_params = params - cfg.lr * buf
        buffers = (buf,)
    elif isinstance(cfg, NesterovMomentum):
        (buf,) = state.buffers
        buf = cfg.decay * buf + g
        new_params = params - cfg.lr * (cfg.decay * buf + g)
        buffers = (buf,)
    elif isinstance(cfg, Adam):
        m, v = state.buffers
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * (g * g)
        m_hat = m / (1.0 - cfg.beta1**t)
        v_hat = v / (1.0 - cfg.beta2**t)
        new_params = params - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
        buffers = (m, v)
    else:
        raise TypeError(f"unknown optimizer config {type(cfg).__name__}")

    return OptimizerState(config=cfg, step_count=t, buffers=buffers), new_params
