"""Command-line entry point.

Subcommands map one-to-one to experiment protocols; each writes CSVs under
--out and prints the paths.  `bounds` evaluates the closed-form bound
formulas for inputs given as flags or a key-value config file.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from ..theory import (
    BoundInputs,
    adaptive_carry_bounds,
    carry_expectation_bound,
    carry_highprob_bound,
    carry_tail_bound,
    regret_bound_adaptive_region,
    regret_bound_constant_region,
    regret_bound_from_carry,
    regret_bound_varying_region,
)
from .config import ExperimentConfig, apply_kv, load_config, parse_kv_text
from . import experiments

EXPERIMENTS = {
    "aliasing": experiments.run_aliasing,
    "validate-carry": experiments.run_validate_carry,
    "validate-adaptive": experiments.run_validate_adaptive,
    "validate-regret": experiments.run_validate_regret,
    "sharded": experiments.run_sharded,
    "train-toy": experiments.run_train_toy,
}

_BOUND_FLAGS = [
    "grad_bound",
    "clip_margin",
    "variance_weight",
    "min_variance",
    "region",
    "region_sup",
    "dim",
    "steps",
    "lr",
    "carry_bound",
    "update_bound_sum",
    "update_bound_sq_sum",
    "start_distance",
    "iterate_radius",
    "noise_proxy",
]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carryclip",
        description="Carry-compensated gradient clipping: experiments and bound evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} protocol")
        p.add_argument("--config", help="key-value config file overriding protocol defaults")
        p.add_argument("--out", help="output directory for CSVs")
        p.add_argument("--seeds", type=int, help="number of seeds")
        p.add_argument("--threads", type=int, help="worker threads for grid points")
        p.add_argument("--full-trace", action="store_true", help="log every step, not just checkpoints")
        p.add_argument("--steps", type=int, help="steps per trajectory")
        p.add_argument("--grid", help="sweep spec, e.g. clip_margin=0.1:1.0:10")

    b = sub.add_parser("bounds", help="print bound-formula evaluations for given inputs")
    b.add_argument("--config", help="key-value file with bound inputs")
    for flag in _BOUND_FLAGS:
        kind = int if flag in ("dim", "steps") else float
        b.add_argument(f"--{flag.replace('_', '-')}", type=kind, dest=flag)
    b.add_argument("--delta", type=float, default=0.01)
    b.add_argument("--eps", type=float, default=1.0)
    b.add_argument("--t", type=int, default=10_000)
    b.add_argument("--region-mean", type=float, dest="region_mean")
    b.add_argument("--region-sq-mean", type=float, dest="region_sq_mean")
    return parser


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = experiments.default_config(args.command)
    if args.config:
        cfg = load_config(args.config, base=cfg)
    overrides = {}
    for name in ("out", "seeds", "threads", "steps", "grid"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "full_trace", False):
        overrides["full_trace"] = True
    return dataclasses.replace(cfg, **overrides)


def _run_bounds(args: argparse.Namespace) -> int:
    values: dict[str, object] = {}
    if args.config:
        with open(args.config) as fh:
            pairs = parse_kv_text(fh.read())
        allowed = set(_BOUND_FLAGS) | {"delta", "eps", "t", "region_mean", "region_sq_mean"}
        for key, raw in pairs.items():
            if key not in allowed:
                raise ValueError(f"unknown bound input {key!r}")
            values[key] = int(raw) if key in ("dim", "steps", "t") else float(raw)
    for flag in _BOUND_FLAGS + ["delta", "eps", "t", "region_mean", "region_sq_mean"]:
        value = getattr(args, flag, None)
        if value is not None:
            values[flag] = value

    delta = float(values.pop("delta", 0.01))
    eps = float(values.pop("eps", 1.0))
    t = int(values.pop("t", 10_000))
    region_mean = values.pop("region_mean", None)
    region_sq_mean = values.pop("region_sq_mean", None)
    inputs = BoundInputs(**{k: v for k, v in values.items()})

    printed = 0

    def show(label, fn, *fn_args):
        nonlocal printed
        try:
            result = fn(*fn_args)
        except ValueError:
            return
        if hasattr(result, "terms"):
            terms = ", ".join(f"{v:.6g}" for v in result.terms)
            print(f"{label}: total={result.total:.6g} terms=[{terms}]")
        elif isinstance(result, tuple):
            print(f"{label}: " + ", ".join(f"{v:.6g}" for v in result))
        else:
            print(f"{label}: {result:.6g}")
        printed += 1

    show(f"carry_tail_bound(eps={eps}, t={t})", carry_tail_bound, inputs, eps, t)
    show("carry_expectation_bound", carry_expectation_bound, inputs)
    show(f"carry_highprob_bound(delta={delta})", carry_highprob_bound, inputs, delta)
    show(
        f"adaptive_carry_bounds(delta={delta}, t={t}) [highprob, expectation]",
        adaptive_carry_bounds,
        inputs,
        delta,
        t,
    )
    show("regret_bound_from_carry", regret_bound_from_carry, inputs)
    show("regret_bound_constant_region", regret_bound_constant_region, inputs)
    show("regret_bound_adaptive_region", regret_bound_adaptive_region, inputs)
    if region_mean is not None and region_sq_mean is not None:
        show(
            "regret_bound_varying_region",
            regret_bound_varying_region,
            inputs,
            float(region_mean),
            float(region_sq_mean),
        )
    if printed == 0:
        print("no bound had all of its inputs; pass e.g. --grad-bound and --clip-margin")
        return 1
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "bounds":
        return _run_bounds(args)
    cfg = _experiment_config(args)
    paths = EXPERIMENTS[args.command](cfg)
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
