"""Experiment configuration and the flat key-value config format.

A config file is plain text, one ``key = value`` per line, ``#`` comments.
Keys map 1:1 to ExperimentConfig fields; anything else is an error.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

__all__ = ["ExperimentConfig", "parse_kv_text", "apply_kv", "load_config", "parse_grid"]


@dataclass
class ExperimentConfig:
    experiment: str = "aliasing"
    out: str = "results"

    # problem
    problem: str = "abs-uniform"  # abs-uniform | quadratic-mixture | aliasing-piecewise | logistic-synthetic
    noise_variance: float = 0.1
    dim: int = 1
    x_init: float = 100.0
    batch_size: int = 10
    dataset_points: int = 1000
    dataset_dim: int = 20
    dataset_seed: int = 7
    dataset_separation: float = 0.5
    dataset_noise_std: float = 1.0
    dataset_margin_floor: float = 0.02

    # base optimizer
    optimizer: str = "sgd"  # sgd | momentum | nesterov | adam
    lr: float = 0.1
    momentum_decay: float = 0.9
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    # gradient transform
    mode: str = "clip-carry"  # none | clip-only | clip-carry | sign-carry
    region_kind: str = "component"  # component | norm | unbounded (fixed policy)
    gamma: float = 1.0
    policy: str = "fixed"  # fixed | oracle-additive | oracle-variance | proportional | adaptive-ab
    clip_margin: float = 0.1
    variance_weight: float = 0.25
    prop_scale: float = 10.0
    mean_coeff: float = 1.0
    std_coeff: float = 2.0
    gamma_floor: float = 1e-8
    estimator: str = "welford"  # welford | ewma
    ewma_decay: float = 0.95

    # run shape
    steps: int = 10000
    seeds: int = 100
    seed_base: int = 1
    grid: str = ""  # e.g. "clip_margin=0.1:1.0:10" or "noise_variance=0.1,1,15"
    delta: float = 0.01
    shards: int = 4
    epochs_cap: int = 50
    threads: int = 1
    full_trace: bool = False

    def seed_list(self) -> list[int]:
        if self.seeds < 1:
            raise ValueError("need at least one seed")
        return list(range(self.seed_base, self.seed_base + self.seeds))


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(raw: str, target_type) -> object:
    if target_type is bool:
        lowered = raw.strip().lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if target_type is int:
        return int(raw)
    if target_type is float:
        return float(raw)
    return raw.strip()


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a dict; blank lines and # comments skipped."""
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key in pairs:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value.strip()
    return pairs


def apply_kv(cfg: ExperimentConfig, pairs: dict[str, str]) -> ExperimentConfig:
    updates: dict[str, object] = {}
    for key, raw in pairs.items():
        field = _FIELDS.get(key)
        if field is None:
            raise ValueError(f"unknown config key {key!r}")
        updates[key] = _coerce(raw, field.type if isinstance(field.type, type) else type(getattr(cfg, key)))
    return dataclasses.replace(cfg, **updates)


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    with open(path) as fh:
        pairs = parse_kv_text(fh.read())
    return apply_kv(base if base is not None else ExperimentConfig(), pairs)


def parse_grid(spec: str) -> tuple[str, np.ndarray]:
    """Parse a sweep spec: ``name=start:stop:count`` or ``name=v1,v2,...``."""
    if "=" not in spec:
        raise ValueError(f"grid spec needs 'name=...', got {spec!r}")
    name, _, rest = spec.partition("=")
    name = name.strip()
    if name not in _FIELDS:
        raise ValueError(f"grid sweeps an unknown config key {name!r}")
    rest = rest.strip()
    if ":" in rest:
        parts = rest.split(":")
        if len(parts) != 3:
            raise ValueError(f"range grid needs start:stop:count, got {rest!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("grid needs at least one point")
        values = np.linspace(start, stop, count)
    else:
        values = np.array([float(v) for v in rest.split(",") if v.strip()])
        if values.size == 0:
            raise ValueError("empty grid")
    return name, values
