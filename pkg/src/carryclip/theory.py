"""Closed-form evaluators for the carry and regret bounds.

Every evaluator is a pure formula over `BoundInputs`.  Probability-valued
bounds are computed in log space and clamped to [0, 1]; multi-term regret
bounds return their terms individually so validation plots can show which
term dominates.

Notation used below (field names in parentheses):
    G  (grad_bound)      per-coordinate bound on |gradient|
    a  (clip_margin)     inf over steps of (clip region - |mean gradient|)
    b  (variance_weight) weight on the noise variance in the adaptive region
    s2 (min_variance)    lower bound on the per-step noise variance proxy
    r+ (region_sup)      sup over steps of the clip region
    D  (carry_bound)     bound on the expected (or high-probability) carry norm
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "BoundInputs",
    "BoundTerms",
    "carry_tail_bound",
    "carry_expectation_bound",
    "carry_highprob_bound",
    "adaptive_carry_bounds",
    "regret_bound_from_carry",
    "regret_bound_from_carry_highprob",
    "regret_bound_constant_region",
    "regret_bound_adaptive_region",
    "regret_bound_varying_region",
]


@dataclass(frozen=True)
class BoundInputs:
    """Inputs shared by the bound evaluators; leave unused fields at None."""

    grad_bound: float | None = None
    clip_margin: float | None = None
    variance_weight: float | None = None
    min_variance: float | None = None
    region_sup: float | None = None
    region: float | None = None  # constant clip region
    dim: int | None = None
    steps: int | None = None  # horizon T
    lr: float | None = None
    carry_bound: float | None = None
    update_bound_sum: float | None = None  # sum over steps of the update-norm bound
    update_bound_sq_sum: float | None = None  # sum of its squares
    start_distance: float | None = None  # distance from the start to the minimizer
    iterate_radius: float | None = None  # sup over steps of that distance
    noise_proxy: float | None = None  # sub-Gaussian proxy for the high-probability form


@dataclass(frozen=True)
class BoundTerms:
    """A bound reported as individual additive terms."""

    terms: tuple[float, ...]

    @property
    def total(self) -> float:
        return float(sum(self.terms))


def _require(inp: BoundInputs, *fields: str) -> list[float]:
    values = []
    for field in fields:
        value = getattr(inp, field)
        if value is None:
            raise ValueError(f"bound evaluation needs '{field}'")
        values.append(value)
    return values


def _check_margin(margin: float) -> None:
    if margin <= 0.0:
        raise ValueError(
            "clip margin must be positive: at margin zero the carry is a random walk "
            "and no constant bound exists"
        )


def _log_expm1(y: float) -> float:
    """log(exp(y) - 1), stable for large y."""
    if y <= 0.0:
        raise ValueError("need y > 0")
    if y > 40.0:
        return y + math.log1p(-math.exp(-y))
    return math.log(math.expm1(y))


def _log_tail_coefficient(margin: float, grad_bound: float) -> float:
    """log of 1 / (exp(margin^2 / (2 G^2)) - 1)."""
    return -_log_expm1(margin * margin / (2.0 * grad_bound * grad_bound))


def carry_tail_bound(inp: BoundInputs, eps: float, t: int) -> float:
    """P(|carry at step t| >= eps + G + region_sup), clamped to [0, 1].

    Formula: 2 c exp(-(eps^2 + 2 a eps t) / (2 G^2 t)) with
    c = 1 / (exp(a^2 / 2G^2) - 1).
    """
    grad_bound, margin = _require(inp, "grad_bound", "clip_margin")
    _check_margin(margin)
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if t < 1:
        raise ValueError("t must be at least 1")
    log_bound = (
        math.log(2.0)
        + _log_tail_coefficient(margin, grad_bound)
        - (eps * eps + 2.0 * margin * eps * t) / (2.0 * grad_bound * grad_bound * t)
    )
    return min(1.0, math.exp(log_bound))


def carry_expectation_bound(inp: BoundInputs) -> float:
    """Bound on E|carry|: 2 c G^2 / a + G + region_sup."""
    grad_bound, margin, region_sup = _require(
        inp, "grad_bound", "clip_margin", "region_sup"
    )
    _check_margin(margin)
    c = math.exp(_log_tail_coefficient(margin, grad_bound))
    return 2.0 * c * grad_bound * grad_bound / margin + grad_bound + region_sup


def carry_highprob_bound(inp: BoundInputs, delta: float) -> float:
    """Carry bound holding with probability 1 - delta:
    (G^2 / a^2) log(4 G^2 / (a^2 delta)) + 2G."""
    grad_bound, margin = _require(inp, "grad_bound", "clip_margin")
    _check_margin(margin)
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    ratio = grad_bound * grad_bound / (margin * margin)
    return ratio * math.log(4.0 * ratio / delta) + 2.0 * grad_bound


def adaptive_carry_bounds(
    inp: BoundInputs, delta: float, t: int
) -> tuple[float, float]:
    """Carry bounds for the variance-weighted adaptive region.

    High-probability form: (2/b) log(2 m / delta) + (2 + b) G with
    m = min(t, 1 / (2 b^2 s2)).  Expectation form: 8 / (b^3 s2) + (2 + b) G.
    """
    grad_bound, weight, min_variance = _require(
        inp, "grad_bound", "variance_weight", "min_variance"
    )
    if weight <= 0.0:
        raise ValueError("variance weight must be positive")
    if min_variance <= 0.0:
        raise ValueError("minimum variance must be positive")
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    if t < 1:
        raise ValueError("t must be at least 1")
    m = min(float(t), 1.0 / (2.0 * weight * weight * min_variance))
    tail = (2.0 + weight) * grad_bound
    highprob = (2.0 / weight) * math.log(2.0 * m / delta) + tail
    expectation = 8.0 / (weight**3 * min_variance) + tail
    return highprob, expectation


def regret_bound_from_carry(inp: BoundInputs) -> BoundTerms:
    """Average-regret bound given a carry bound D and update-norm bounds.

    Terms: 2 lr D / T * sum(update bounds), lr / 2T * sum(squares),
    start^2 / (2 lr T), D start / T.
    """
    lr, steps, carry, u_sum, u_sq_sum, start = _require(
        inp,
        "lr",
        "steps",
        "carry_bound",
        "update_bound_sum",
        "update_bound_sq_sum",
        "start_distance",
    )
    if lr <= 0.0 or steps < 1:
        raise ValueError("need lr > 0 and at least one step")
    if carry < 0.0:
        raise ValueError("carry bound must be nonnegative")
    t = float(steps)
    return BoundTerms(
        terms=(
            2.0 * lr * carry / t * u_sum,
            lr / (2.0 * t) * u_sq_sum,
            start * start / (2.0 * lr * t),
            carry / t * start,
        )
    )


def regret_bound_from_carry_highprob(inp: BoundInputs, delta: float) -> BoundTerms:
    """As regret_bound_from_carry, plus the concentration term
    sqrt(2) R sigma log(2/delta) / sqrt(T); holds with probability 1 - 2 delta."""
    base = regret_bound_from_carry(inp)
    radius, sigma = _require(inp, "iterate_radius", "noise_proxy")
    (steps,) = _require(inp, "steps")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    extra = math.sqrt(2.0) * radius * sigma * math.log(2.0 / delta) / math.sqrt(steps)
    return BoundTerms(terms=base.terms + (extra,))


def regret_bound_constant_region(inp: BoundInputs) -> BoundTerms:
    """Expected-average-regret bound for a constant clip region with the
    learning rate fixed to 1/sqrt(T).

    Terms: 8 G^4 d^{3/2} r / (a^3 sqrt(T)),
    (4 G sqrt(d) r + (4 sqrt(d) + d) r^2 + start^2) / (2 sqrt(T)),
    (4 d G^4 / a^3 + G + r) start / T.
    """
    grad_bound, margin, region, dim, steps, start = _require(
        inp, "grad_bound", "clip_margin", "region", "dim", "steps", "start_distance"
    )
    _check_margin(margin)
    d = float(dim)
    root_t = math.sqrt(steps)
    g4a3 = grad_bound**4 / margin**3
    return BoundTerms(
        terms=(
            8.0 * g4a3 * d**1.5 * region / root_t,
            (
                4.0 * grad_bound * math.sqrt(d) * region
                + (4.0 * math.sqrt(d) + d) * region * region
                + start * start
            )
            / (2.0 * root_t),
            (4.0 * d * g4a3 + grad_bound + region) * start / steps,
        )
    )


def regret_bound_adaptive_region(inp: BoundInputs) -> BoundTerms:
    """Expected-average-regret bound for the variance-weighted adaptive
    region with the learning rate fixed to 1/sqrt(T).

    Terms: 16 d^{3/2} G / (b^3 s2 sqrt(T)),
    (4 (2+b) sqrt(d) G^2 + d G^2 + start^2) / (2 sqrt(T)),
    (8 d / (b^3 s2) + (2+b) G) start / T.
    """
    grad_bound, weight, min_variance, dim, steps, start = _require(
        inp, "grad_bound", "variance_weight", "min_variance", "dim", "steps", "start_distance"
    )
    if weight <= 0.0 or min_variance <= 0.0:
        raise ValueError("need positive variance weight and minimum variance")
    d = float(dim)
    root_t = math.sqrt(steps)
    inv = 1.0 / (weight**3 * min_variance)
    g2 = grad_bound * grad_bound
    return BoundTerms(
        terms=(
            16.0 * d**1.5 * grad_bound * inv / root_t,
            (4.0 * (2.0 + weight) * math.sqrt(d) * g2 + d * g2 + start * start)
            / (2.0 * root_t),
            (8.0 * d * inv + (2.0 + weight) * grad_bound) * start / steps,
        )
    )


def regret_bound_varying_region(
    inp: BoundInputs, region_mean: float, region_sq_mean: float
) -> BoundTerms:
    """Expected-average-regret bound for a time-varying clip region with the
    learning rate fixed to 1/sqrt(T).

    ``region_mean`` and ``region_sq_mean`` are the time averages of the
    region and its square.  With a constant region this reduces exactly to
    regret_bound_constant_region.

    Terms: 8 G^4 d^{3/2} rm / (a^3 sqrt(T)),
    (4 (G + r+) sqrt(d) rm + d rsm + start^2) / (2 sqrt(T)),
    (4 d G^4 / a^3 + G + r+) start / T.
    """
    grad_bound, margin, region_sup, dim, steps, start = _require(
        inp, "grad_bound", "clip_margin", "region_sup", "dim", "steps", "start_distance"
    )
    _check_margin(margin)
    if region_mean <= 0.0 or region_sq_mean <= 0.0:
        raise ValueError("region averages must be positive")
    d = float(dim)
    root_t = math.sqrt(steps)
    g4a3 = grad_bound**4 / margin**3
    return BoundTerms(
        terms=(
            8.0 * g4a3 * d**1.5 * region_mean / root_t,
            (
                4.0 * (grad_bound + region_sup) * math.sqrt(d) * region_mean
                + d * region_sq_mean
                + start * start
            )
            / (2.0 * root_t),
            (4.0 * d * g4a3 + grad_bound + region_sup) * start / steps,
        )
    )
