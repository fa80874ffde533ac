import numpy as np
import pytest

from carryclip.optimizers import (
    Adam,
    Momentum,
    NesterovMomentum,
    Sgd,
    init_state,
    opt_step,
)


def test_sgd_closed_form():
    state = init_state(Sgd(lr=0.1), 1)
    state, params = opt_step(state, [1.0], [2.0])
    assert np.array_equal(params, [0.8])
    assert state.step_count == 1


def test_zero_gradient_is_noop_for_sgd():
    state = init_state(Sgd(lr=7.0), 3)
    _, params = opt_step(state, [1.0, -2.0, 0.5], [0.0, 0.0, 0.0])
    assert np.array_equal(params, [1.0, -2.0, 0.5])


def test_sgd_matches_exact_oracle_over_many_steps():
    rng = np.random.default_rng(11)
    lr = 0.05
    state = init_state(Sgd(lr=lr), 4)
    params = rng.normal(size=4)
    expected = params.copy()
    for _ in range(50):
        g = rng.normal(size=4)
        state, params = opt_step(state, params, g)
        expected = expected - lr * g
    assert np.array_equal(params, expected)


def test_adam_first_step_bias_correction():
    state = init_state(Adam(lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8), 1)
    _, params = opt_step(state, [1.0], [1.0])
    # bias-corrected first and second moments are both exactly 1 on step one
    assert params[0] == pytest.approx(1.0 - 0.1 / (1.0 + 1e-8), abs=1e-15)


def test_adam_first_step_magnitude_is_scale_free():
    for g in (1e-4, 0.1, 3.0, 1e4):
        state = init_state(Adam(lr=0.1), 1)
        _, params = opt_step(state, [0.0], [g])
        step = abs(params[0])
        assert abs(step - 0.1) <= 0.1 * 1e-8 / g + 1e-15
        assert params[0] < 0  # sign-preserving


def test_momentum_zero_decay_equals_sgd_bitwise():
    rng = np.random.default_rng(3)
    params0 = rng.normal(size=3)
    grads = [rng.normal(size=3) for _ in range(20)]
    for config in (Momentum(lr=0.2, decay=0.0), NesterovMomentum(lr=0.2, decay=0.0)):
        s_mom, s_sgd = init_state(config, 3), init_state(Sgd(lr=0.2), 3)
        p_mom, p_sgd = params0.copy(), params0.copy()
        for g in grads:
            s_mom, p_mom = opt_step(s_mom, p_mom, g)
            s_sgd, p_sgd = opt_step(s_sgd, p_sgd, g)
            assert np.array_equal(p_mom, p_sgd)


def test_momentum_accumulates_buffer():
    state = init_state(Momentum(lr=1.0, decay=0.5), 1)
    state, params = opt_step(state, [0.0], [1.0])
    assert params[0] == -1.0
    state, params = opt_step(state, params, [1.0])
    # buffer = 0.5 * 1 + 1 = 1.5
    assert params[0] == -2.5


def test_nesterov_reapplies_decayed_buffer():
    state = init_state(NesterovMomentum(lr=1.0, decay=0.5), 1)
    state, params = opt_step(state, [0.0], [1.0])
    # buffer = 1; update = 0.5 * 1 + 1 = 1.5
    assert params[0] == -1.5


def test_determinism():
    rng = np.random.default_rng(9)
    g = rng.normal(size=5)
    p = rng.normal(size=5)
    for config in (Sgd(0.1), Momentum(0.1), NesterovMomentum(0.1), Adam(0.1)):
        s1, out1 = opt_step(init_state(config, 5), p, g)
        s2, out2 = opt_step(init_state(config, 5), p, g)
        assert np.array_equal(out1, out2)
        for b1, b2 in zip(s1.buffers, s2.buffers):
            assert np.array_equal(b1, b2)


def test_validation_errors():
    with pytest.raises(ValueError):
        Sgd(lr=0.0)
    with pytest.raises(ValueError):
        Momentum(lr=0.1, decay=1.0)
    with pytest.raises(ValueError):
        Adam(lr=0.1, beta2=1.0)
    with pytest.raises(ValueError):
        Adam(lr=0.1, eps=0.0)
    state = init_state(Sgd(0.1), 2)
    with pytest.raises(ValueError):
        opt_step(state, [1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        opt_step(state, [1.0, 2.0], [np.nan, 0.0])
