import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carryclip.clipmath import (
    ComponentConstant,
    Norm,
    PerCoordinate,
    Unbounded,
    as_vector,
    clip,
    clip_component,
    clip_norm,
)


def test_component_worked_examples():
    assert np.array_equal(clip_component([3.0], ComponentConstant(2.0)), [2.0])
    assert np.array_equal(clip_component([-5.0, 0.5], ComponentConstant(2.0)), [-2.0, 0.5])
    assert np.array_equal(clip_component([1.0], ComponentConstant(1.0)), [1.0])


def test_norm_worked_examples():
    assert np.array_equal(clip_norm([3.0, 4.0], Norm(10.0)), [3.0, 4.0])
    # |x| = 5, so the clipped vector is x * (1/5)
    out = clip_norm([3.0, 4.0], Norm(1.0))
    np.testing.assert_allclose(out, [0.6, 0.8], rtol=0, atol=1e-15)
    assert np.array_equal(clip_norm([0.0, 0.0], Norm(1.0)), [0.0, 0.0])


def test_dispatch():
    assert np.array_equal(clip([7.0], Unbounded()), [7.0])
    assert np.array_equal(clip([7.0], ComponentConstant(2.0)), [2.0])
    np.testing.assert_allclose(clip([3.0, 4.0], Norm(1.0)), [0.6, 0.8], atol=1e-15)
    assert np.array_equal(
        clip([3.0, -0.5], PerCoordinate(np.array([1.0, 2.0]))), [1.0, -0.5]
    )


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        clip([np.nan], ComponentConstant(1.0))
    with pytest.raises(ValueError):
        clip([np.inf, 0.0], Norm(1.0))
    with pytest.raises(ValueError):
        ComponentConstant(0.0)
    with pytest.raises(ValueError):
        ComponentConstant(-1.0)
    with pytest.raises(ValueError):
        Norm(0.0)
    with pytest.raises(ValueError):
        PerCoordinate(np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        clip_component([1.0, 2.0], PerCoordinate(np.array([1.0, 1.0, 1.0])))
    with pytest.raises(ValueError):
        as_vector([1.0], dim=2)


finite_vectors = st.lists(
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=1, max_size=6
)
scales = st.floats(min_value=1e-3, max_value=1e3)


def _regions_for(x, scale):
    return [
        ComponentConstant(scale),
        PerCoordinate(np.full(len(x), scale)),
        Norm(scale),
        Unbounded(),
    ]


@settings(max_examples=200, deadline=None)
@given(finite_vectors, scales)
def test_idempotent(x, scale):
    for region in _regions_for(x, scale):
        once = clip(x, region)
        assert np.array_equal(clip(once, region), once)


@settings(max_examples=200, deadline=None)
@given(finite_vectors, scales)
def test_odd(x, scale):
    x = np.asarray(x)
    for region in _regions_for(x, scale):
        assert np.array_equal(clip(-x, region), -clip(x, region))


@settings(max_examples=200, deadline=None)
@given(finite_vectors, finite_vectors, scales)
def test_component_monotone(x, y, scale):
    n = min(len(x), len(y))
    x, y = np.asarray(x[:n]), np.asarray(y[:n])
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    for region in (ComponentConstant(scale), PerCoordinate(np.full(n, scale))):
        assert np.all(clip(lo, region) <= clip(hi, region))


@settings(max_examples=200, deadline=None)
@given(finite_vectors, scales)
def test_region_bound(x, scale):
    assert np.max(np.abs(clip(x, ComponentConstant(scale)))) <= scale
    assert np.linalg.norm(clip(x, Norm(scale))) <= scale


@settings(max_examples=200, deadline=None)
@given(finite_vectors, finite_vectors, scales)
def test_nonexpansive(x, y, scale):
    n = min(len(x), len(y))
    x, y = np.asarray(x[:n]), np.asarray(y[:n])
    gap = np.abs(x - y)
    clipped_gap = np.abs(clip(x, ComponentConstant(scale)) - clip(y, ComponentConstant(scale)))
    assert np.all(clipped_gap <= gap + 1e-9 * (1 + gap))
    # norm clipping is a projection onto a convex set
    d = np.linalg.norm(x - y)
    dc = np.linalg.norm(clip(x, Norm(scale)) - clip(y, Norm(scale)))
    assert dc <= d * (1 + 1e-9) + 1e-12


def test_inside_region_is_bitwise_noop():
    rng = np.random.default_rng(5)
    for _ in range(50):
        x = rng.uniform(-1, 1, size=4)
        assert np.array_equal(clip(x, ComponentConstant(1.5)), x)
        assert np.array_equal(clip(x, Norm(np.linalg.norm(x) + 0.1)), x)
        # exactly at the boundary is also untouched
        assert np.array_equal(clip(x, Norm(float(np.linalg.norm(x)))), x)
