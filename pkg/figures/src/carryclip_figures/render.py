"""Render experiment CSVs into figures.

Four figure kinds, one per experiment CSV family:

  trajectory          aliasing.csv (+ aliasing_objective.csv for a left panel)
  bound-vs-empirical  carry.csv / adaptive.csv, one panel per swept parameter
  regret-curves       regret.csv, one panel per tracked policy
  epochs-vs-batch     train_toy.csv, median epochs per configuration

Rendering is read-only over the CSVs and fully deterministic, so re-running
produces an identical layout.  Missing columns and empty CSVs raise before
any image is written.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["FigureSpec", "KINDS", "build_figure", "render"]

KINDS = ("trajectory", "bound-vs-empirical", "regret-curves", "epochs-vs-batch")


@dataclass
class FigureSpec:
    kind: str
    csv: list[str]
    out: str
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""


def _read_rows(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        rows = [dict(zip(header, row)) for row in reader]
    if not rows:
        raise ValueError(f"{path}: CSV has a header but no rows")
    return rows


def _need(rows: list[dict[str, str]], path, *columns: str) -> None:
    missing = [c for c in columns if c not in rows[0]]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")


def _floats(rows, column):
    return [float(r[column]) for r in rows]


def _panel_grid(n: int):
    fig, axes = plt.subplots(1, n, figsize=(5.5 * n, 4.0))
    return fig, [axes] if n == 1 else list(axes)


def _trajectory_figure(spec: FigureSpec):
    trajectories = _read_rows(spec.csv[0])
    _need(trajectories, spec.csv[0], "mode", "t", "x")
    objective_rows = None
    if len(spec.csv) > 1:
        objective_rows = _read_rows(spec.csv[1])
        _need(objective_rows, spec.csv[1], "x", "expected_objective", "aliased_objective")

    n_panels = 2 if objective_rows is not None else 1
    fig, axes = _panel_grid(n_panels)
    if objective_rows is not None:
        ax = axes[0]
        xs = _floats(objective_rows, "x")
        ax.plot(xs, _floats(objective_rows, "expected_objective"), label="expected objective")
        ax.plot(
            xs,
            _floats(objective_rows, "aliased_objective"),
            linestyle="--",
            label="objective seen after clipping",
        )
        ax.set_xlabel("x")
        ax.set_ylabel("objective")
        ax.legend()

    ax = axes[-1]
    modes = sorted({r["mode"] for r in trajectories})
    for mode in modes:
        rows = [r for r in trajectories if r["mode"] == mode]
        ax.plot(_floats(rows, "t"), _floats(rows, "x"), label=mode)
    ax.set_xlabel(spec.xlabel or "step")
    ax.set_ylabel(spec.ylabel or "iterate")
    ax.legend()
    fig.suptitle(spec.title or "optimization trajectories")
    return fig


def _bound_vs_empirical_figure(spec: FigureSpec):
    rows = _read_rows(spec.csv[0])
    _need(
        rows,
        spec.csv[0],
        "param",
        "value",
        "p99_final",
        "p99_max",
        "mean_final",
        "bound_highprob",
        "bound_expectation",
    )
    params = sorted({r["param"] for r in rows})
    fig, axes = _panel_grid(len(params))
    for ax, param in zip(axes, params):
        group = sorted((r for r in rows if r["param"] == param), key=lambda r: float(r["value"]))
        xs = _floats(group, "value")
        ax.plot(xs, _floats(group, "bound_highprob"), label="high-probability bound")
        ax.plot(xs, _floats(group, "p99_final"), marker="o", label="empirical 99th percentile")
        ax.plot(xs, _floats(group, "bound_expectation"), linestyle="--", label="expectation bound")
        ax.plot(xs, _floats(group, "mean_final"), marker="s", linestyle=":", label="empirical mean")
        ax.set_yscale("log")
        ax.set_xlabel(spec.xlabel or param)
        ax.set_ylabel(spec.ylabel or "carry magnitude")
        ax.legend()
    fig.suptitle(spec.title or "carry bound vs empirical tail")
    return fig


def _regret_curves_figure(spec: FigureSpec):
    rows = _read_rows(spec.csv[0])
    _need(rows, spec.csv[0], "policy", "t", "avg_regret", "bound_observed", "bound_predicted")
    policies = sorted({r["policy"] for r in rows})
    fig, axes = _panel_grid(len(policies))
    for ax, policy in zip(axes, policies):
        group = sorted((r for r in rows if r["policy"] == policy), key=lambda r: int(r["t"]))
        ts = _floats(group, "t")
        ax.plot(ts, _floats(group, "bound_predicted"), linestyle="--", label="bound (predicted carry)")
        ax.plot(ts, _floats(group, "bound_observed"), label="bound (observed carry)")
        ax.plot(ts, _floats(group, "avg_regret"), marker="o", markersize=3, label="empirical regret")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(spec.xlabel or "step")
        ax.set_ylabel(spec.ylabel or "average regret")
        ax.set_title(f"{policy} region")
        ax.legend()
    fig.suptitle(spec.title or "regret bound vs empirical regret")
    return fig


def _epochs_figure(spec: FigureSpec):
    rows = _read_rows(spec.csv[0])
    _need(rows, spec.csv[0], "optimizer", "mode", "region_kind", "seed", "epochs_to_target")
    optimizers = sorted({r["optimizer"] for r in rows})
    combos = sorted({(r["mode"], r["region_kind"]) for r in rows})
    fig, axes = _panel_grid(1)
    ax = axes[0]
    positions = range(len(optimizers))
    for mode, region_kind in combos:
        medians = []
        for optimizer in optimizers:
            values = [
                int(r["epochs_to_target"])
                for r in rows
                if r["optimizer"] == optimizer
                and r["mode"] == mode
                and r["region_kind"] == region_kind
                and int(r["epochs_to_target"]) > 0
            ]
            medians.append(sorted(values)[len(values) // 2] if values else float("nan"))
        label = mode if region_kind == "-" else f"{mode} ({region_kind})"
        ax.plot(list(positions), medians, marker="o", label=label)
    ax.set_xticks(list(positions))
    ax.set_xticklabels(optimizers)
    ax.set_xlabel(spec.xlabel or "base optimizer")
    ax.set_ylabel(spec.ylabel or "median epochs to target accuracy")
    ax.legend()
    fig.suptitle(spec.title or "epochs to target accuracy")
    return fig


_RENDERERS = {
    "trajectory": _trajectory_figure,
    "bound-vs-empirical": _bound_vs_empirical_figure,
    "regret-curves": _regret_curves_figure,
    "epochs-vs-batch": _epochs_figure,
}


def build_figure(spec: FigureSpec):
    """Validate the spec and return the assembled matplotlib figure."""
    if spec.kind not in _RENDERERS:
        raise ValueError(f"unknown figure kind {spec.kind!r}; expected one of {KINDS}")
    if not spec.csv:
        raise ValueError("figure spec needs at least one CSV path")
    for path in spec.csv:
        if not os.path.exists(path):
            raise ValueError(f"CSV not found: {path}")
    return _RENDERERS[spec.kind](spec)


def render(spec: FigureSpec) -> str:
    """Render the figure to spec.out and return the written path."""
    fig = build_figure(spec)
    parent = os.path.dirname(spec.out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    try:
        fig.savefig(spec.out, dpi=150)
    finally:
        plt.close(fig)
    return spec.out
