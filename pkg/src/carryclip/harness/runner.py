"""Deterministic trajectory runners.

`run_trajectory` is the general scalar loop: any problem, any base
optimizer, any transform mode, any region policy.  `run_scalar_ensemble` is
a vectorized kernel for the one-dimensional noisy-absolute-value problem
with exact-statistics policies, simulating all seeds simultaneously; each
seed column reproduces the scalar loop bit for bit, which the test suite
checks.  Randomness is keyed by (experiment id, grid index, seed), so
results are independent of execution order and thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..clipmath import ComponentConstant, Norm, Region, Unbounded, clip
from ..optimizers import (
    Adam,
    Momentum,
    NesterovMomentum,
    OptimizerConfig,
    Sgd,
    init_state,
    opt_step,
)
from ..problems import (
    AbsUniform,
    AliasingPiecewise,
    LogisticSynthetic,
    QuadraticMixture,
    SyntheticDataset,
    make_rng,
)
from ..regions import (
    AdaptiveABPolicy,
    EwmaEstimator,
    FixedPolicy,
    OracleAdditivePolicy,
    OracleVariancePolicy,
    ProportionalPolicy,
    RegionContext,
    WelfordEstimator,
)
from ..transform import CarryState, StepRecord, clip_carry_step, init_carry, sign_carry_step
from .config import ExperimentConfig

__all__ = [
    "MODES",
    "build_problem",
    "build_optimizer_config",
    "build_policy",
    "geometric_checkpoints",
    "percentile",
    "TraceRow",
    "RunTrace",
    "run_trajectory",
    "EnsembleStats",
    "run_scalar_ensemble",
]

MODES = ("none", "clip-only", "clip-carry", "sign-carry")


def build_problem(cfg: ExperimentConfig):
    if cfg.problem == "abs-uniform":
        return AbsUniform.from_noise_variance(cfg.noise_variance, dim=cfg.dim)
    if cfg.problem == "quadratic-mixture":
        return QuadraticMixture()
    if cfg.problem == "aliasing-piecewise":
        return AliasingPiecewise()
    if cfg.problem == "logistic-synthetic":
        dataset = SyntheticDataset.two_blobs(
            n=cfg.dataset_points,
            dim=cfg.dataset_dim,
            separation=cfg.dataset_separation,
            noise_std=cfg.dataset_noise_std,
            margin_floor=cfg.dataset_margin_floor,
            seed=cfg.dataset_seed,
        )
        return LogisticSynthetic(dataset, batch_size=cfg.batch_size)
    raise ValueError(f"unknown problem {cfg.problem!r}")


def build_optimizer_config(cfg: ExperimentConfig) -> OptimizerConfig:
    if cfg.optimizer == "sgd":
        return Sgd(lr=cfg.lr)
    if cfg.optimizer == "momentum":
        return Momentum(lr=cfg.lr, decay=cfg.momentum_decay)
    if cfg.optimizer == "nesterov":
        return NesterovMomentum(lr=cfg.lr, decay=cfg.momentum_decay)
    if cfg.optimizer == "adam":
        return Adam(lr=cfg.lr, beta1=cfg.adam_beta1, beta2=cfg.adam_beta2, eps=cfg.adam_eps)
    raise ValueError(f"unknown optimizer {cfg.optimizer!r}")


def _fixed_region(cfg: ExperimentConfig, dim: int) -> Region:
    if cfg.region_kind == "component":
        return ComponentConstant(cfg.gamma)
    if cfg.region_kind == "norm":
        return Norm(cfg.gamma)
    if cfg.region_kind == "unbounded":
        return Unbounded()
    raise ValueError(f"unknown region kind {cfg.region_kind!r}")


def build_policy(cfg: ExperimentConfig, dim: int):
    if cfg.policy == "fixed":
        return FixedPolicy(_fixed_region(cfg, dim))
    if cfg.policy == "oracle-additive":
        return OracleAdditivePolicy(cfg.clip_margin)
    if cfg.policy == "oracle-variance":
        return OracleVariancePolicy(cfg.variance_weight)
    if cfg.policy in ("proportional", "adaptive-ab"):
        if cfg.estimator == "welford":
            estimator = WelfordEstimator(dim)
        elif cfg.estimator == "ewma":
            estimator = EwmaEstimator(dim, decay=cfg.ewma_decay)
        else:
            raise ValueError(f"unknown estimator {cfg.estimator!r}")
        if cfg.policy == "proportional":
            return ProportionalPolicy(estimator, cfg.prop_scale, floor=cfg.gamma_floor)
        return AdaptiveABPolicy(
            estimator, cfg.mean_coeff, cfg.std_coeff, floor=cfg.gamma_floor
        )
    raise ValueError(f"unknown policy {cfg.policy!r}")


def geometric_checkpoints(steps: int) -> list[int]:
    """1, 2, 4, ... doubling, always including the final step."""
    points = []
    t = 1
    while t < steps:
        points.append(t)
        t *= 2
    points.append(steps)
    return points


def percentile(samples, q: float) -> float:
    """Nearest-rank percentile: sort ascending, take index ceil(q * n) - 1."""
    values = np.sort(np.asarray(samples, dtype=np.float64))
    if values.ndim != 1 or values.size == 0:
        raise ValueError("need a nonempty 1-D sample collection")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    rank = max(1, math.ceil(q * values.size))
    return float(values[rank - 1])


@dataclass
class TraceRow:
    t: int
    x0: float
    x_norm: float
    objective_gap: float
    carry_norm: float
    update_norm: float
    clipped_any: bool
    cum_regret: float
    avg_regret: float
    avg_bias: float  # carry norm after step t divided by t


@dataclass
class RunTrace:
    rows: list[TraceRow]
    final_params: np.ndarray
    final_carry: np.ndarray
    average_regret: float
    avg_iterate_regret: float
    max_carry_norm: float
    steps: int
    records: list[StepRecord] = field(default_factory=list)


def _problem_context(problem, x) -> RegionContext:
    mean = problem.mean_gradient(x) if hasattr(problem, "mean_gradient") else None
    noise = problem.noise_proxy()[0] if hasattr(problem, "noise_proxy") else None
    return RegionContext(mean_gradient=mean, noise_variance=noise)


def run_trajectory(
    cfg: ExperimentConfig,
    seed: int,
    grid_index: int = 0,
    retain_records: bool = False,
) -> RunTrace:
    """One deterministic trajectory; full per-step rows behind cfg.full_trace."""
    problem = build_problem(cfg)
    dim = problem.dim
    opt_config = build_optimizer_config(cfg)
    policy = build_policy(cfg, dim)
    rng = make_rng(cfg.experiment, grid_index, seed)

    if cfg.problem == "logistic-synthetic":
        x = np.zeros(dim)
        f_star = None
    else:
        x = np.full(dim, cfg.x_init)
        _, f_star = problem.minimizer()

    carry_state = init_carry(opt_config, dim)
    opt_state = carry_state.inner  # used directly by the carry-free modes
    if cfg.mode not in MODES:
        raise ValueError(f"unknown transform mode {cfg.mode!r}")

    checkpoints = (
        list(range(1, cfg.steps + 1)) if cfg.full_trace else geometric_checkpoints(cfg.steps)
    )
    checkpoint_set = set(checkpoints)

    rows: list[TraceRow] = []
    records: list[StepRecord] = []
    cum_regret = 0.0
    x_sum = np.zeros(dim)
    max_carry = 0.0

    for t in range(1, cfg.steps + 1):
        gap = (
            problem.expected_objective(x) - f_star
            if f_star is not None
            else float("nan")
        )
        if f_star is not None:
            cum_regret += gap
        x_sum += x

        context = _problem_context(problem, x)
        g = problem.sample_subgradient(x, rng)

        if cfg.mode == "none":
            update = g
            opt_state, x = opt_step(opt_state, x, update)
            carry_after = np.zeros(dim)
            clipped_any = False
        elif cfg.mode == "clip-only":
            region = policy.region_for_step(t, context)
            shifted = g
            update = clip(shifted, region)
            opt_state, x = opt_step(opt_state, x, update)
            carry_after = np.zeros(dim)
            clipped_any = bool(np.any(~np.equal(update, shifted)))
        elif cfg.mode == "clip-carry":
            region = policy.region_for_step(t, context)
            carry_state, x, record = clip_carry_step(carry_state, x, g, region)
            carry_after = record.carry_after
            clipped_any = bool(np.any(record.clipped))
            update = record.update
            if retain_records:
                records.append(record)
        else:  # sign-carry
            carry_state, x, record = sign_carry_step(carry_state, x, g)
            carry_after = record.carry_after
            clipped_any = bool(np.any(record.clipped))
            update = record.update
            if retain_records:
                records.append(record)

        policy.observe(g)
        if not np.all(np.isfinite(x)):
            raise FloatingPointError(f"parameters became non-finite at step {t}")

        carry_norm = float(np.linalg.norm(carry_after))
        max_carry = max(max_carry, carry_norm)

        if t in checkpoint_set:
            rows.append(
                TraceRow(
                    t=t,
                    x0=float(x[0]),
                    x_norm=float(np.linalg.norm(x)),
                    objective_gap=gap,
                    carry_norm=carry_norm,
                    update_norm=float(np.linalg.norm(update)),
                    clipped_any=clipped_any,
                    cum_regret=cum_regret if f_star is not None else float("nan"),
                    avg_regret=cum_regret / t if f_star is not None else float("nan"),
                    avg_bias=carry_norm / t,
                )
            )

    x_bar = x_sum / cfg.steps
    avg_iter_regret = (
        problem.expected_objective(x_bar) - f_star if f_star is not None else float("nan")
    )
    final_carry = carry_state.carry if cfg.mode in ("clip-carry", "sign-carry") else np.zeros(dim)
    return RunTrace(
        rows=rows,
        final_params=x,
        final_carry=final_carry,
        average_regret=cum_regret / cfg.steps if f_star is not None else float("nan"),
        avg_iterate_regret=avg_iter_regret,
        max_carry_norm=max_carry,
        steps=cfg.steps,
        records=records,
    )


@dataclass
class EnsembleStats:
    checkpoints: np.ndarray  # (k,) step indices
    avg_regret: np.ndarray  # (k,) mean over seeds of cumulative regret / t
    avg_iterate_regret: np.ndarray  # (k,) objective gap of the running iterate mean
    observed_carry: np.ndarray  # (k,) mean over seeds of the running max |carry|
    bias_over_t: np.ndarray  # (k,) mean over seeds of |carry| / t
    final_abs_carry: np.ndarray  # (n,) |carry| after the last step
    max_abs_carry: np.ndarray  # (n,) running max |carry| per seed


def run_scalar_ensemble(
    experiment: str,
    grid_index: int,
    seeds: list[int],
    steps: int,
    lr: float,
    x_init: float,
    noise_halfwidth: float,
    policy_kind: str,  # "additive" | "variance"
    policy_param: float,  # margin or variance weight
) -> EnsembleStats:
    """All seeds of the 1-D noisy-absolute-value problem at once.

    Column j reproduces run_trajectory(seed=seeds[j]) exactly: the per-seed
    generators and the arithmetic per step are identical.
    """
    n = len(seeds)
    if n < 1:
        raise ValueError("need at least one seed")
    noise = np.empty((steps, n))
    for j, seed in enumerate(seeds):
        gen = make_rng(experiment, grid_index, seed)
        noise[:, j] = gen.uniform(-noise_halfwidth, noise_halfwidth, size=steps)

    if policy_kind == "additive":
        margin = policy_param
    elif policy_kind == "variance":
        margin = policy_param * noise_halfwidth**2
    else:
        raise ValueError(f"unknown policy kind {policy_kind!r}")

    checkpoints = np.asarray(geometric_checkpoints(steps))
    checkpoint_set = set(int(t) for t in checkpoints)

    x = np.full(n, float(x_init))
    carry = np.zeros(n)
    cum_regret = np.zeros(n)
    x_sum = np.zeros(n)
    max_abs = np.zeros(n)

    avg_regret = np.empty(len(checkpoints))
    avg_iter = np.empty(len(checkpoints))
    observed = np.empty(len(checkpoints))
    bias = np.empty(len(checkpoints))
    k = 0

    for t in range(1, steps + 1):
        cum_regret += np.abs(x)
        x_sum += x
        signs = np.sign(x)
        g = signs + noise[t - 1]
        limit = np.abs(signs) + margin
        shifted = g + carry
        update = np.clip(shifted, -limit, limit)
        carry = shifted - update
        x = x - lr * update
        np.maximum(max_abs, np.abs(carry), out=max_abs)
        if t in checkpoint_set:
            avg_regret[k] = float(np.mean(cum_regret)) / t
            avg_iter[k] = float(np.mean(np.abs(x_sum / t)))
            observed[k] = float(np.mean(max_abs))
            bias[k] = float(np.mean(np.abs(carry))) / t
            k += 1

    return EnsembleStats(
        checkpoints=checkpoints,
        avg_regret=avg_regret,
        avg_iterate_regret=avg_iter,
        observed_carry=observed,
        bias_over_t=bias,
        final_abs_carry=np.abs(carry),
        max_abs_carry=max_abs,
    )
