import numpy as np
import pytest

from carryclip.clipmath import ComponentConstant, clip
from carryclip.problems import (
    AbsUniform,
    AliasingPiecewise,
    LogisticSynthetic,
    QuadraticMixture,
    SyntheticDataset,
    make_rng,
    sharded_sample,
)


def test_closed_form_values():
    problem = AliasingPiecewise()
    x_star, f_star = problem.minimizer()
    assert x_star[0] == 0.25 and f_star == 0.9375
    assert problem.expected_objective([-1.0]) == 1.25
    q = QuadraticMixture()
    x_star, f_star = q.minimizer()
    assert x_star[0] == 0.0 and f_star == 4.5
    a = AbsUniform(0.5, dim=3)
    x_star, f_star = a.minimizer()
    assert f_star == 0.0 and np.array_equal(x_star, np.zeros(3))


def test_noise_proxy():
    sigma_sq, grad_bound = AbsUniform.from_noise_variance(0.1).noise_proxy()
    assert sigma_sq == pytest.approx(0.1, rel=1e-12)
    assert grad_bound == pytest.approx(1.0 + np.sqrt(0.1), rel=1e-12)
    sigma_sq, grad_bound = AbsUniform.from_noise_variance(15.0).noise_proxy()
    assert grad_bound == pytest.approx(4.872983346207417, rel=1e-12)
    sigma_sq, grad_bound = AbsUniform(0.0).noise_proxy()
    assert sigma_sq == 0.0 and grad_bound == 1.0


def test_quadratic_mixture_support():
    rng = make_rng("support", 0, 1)
    problem = QuadraticMixture()
    draws = {float(problem.sample_subgradient([0.0], rng)[0]) for _ in range(200)}
    assert draws == {-3.0, 3.0}


def test_aliasing_support_and_probabilities():
    rng = make_rng("support", 0, 2)
    problem = AliasingPiecewise()
    draws = np.array([float(problem.sample_subgradient([2.0], rng)[0]) for _ in range(4000)])
    values, counts = np.unique(draws, return_counts=True)
    assert set(values) == {1.0, 4.0}
    p4 = counts[values == 4.0][0] / 4000
    assert abs(p4 - 0.25) < 4 * np.sqrt(0.25 * 0.75 / 4000)


def test_clipped_aliasing_samples_match_the_aliased_objective_gradients():
    # clipping the samples at 2 gives {+-2 w.p. 1/4, +-1 w.p. 3/4} patterns,
    # exactly the subgradient law of the aliased objective
    problem = AliasingPiecewise()
    region = ComponentConstant(2.0)
    for x, big, small in ((2.0, 2.0, 1.0), (0.0, -2.0, 1.0), (-2.0, -2.0, -1.0)):
        rng = make_rng("aliasing-clip", 0, int(x * 10) + 100)
        draws = np.array(
            [float(clip(problem.sample_subgradient([x], rng), region)[0]) for _ in range(4000)]
        )
        values, counts = np.unique(draws, return_counts=True)
        assert set(values) == {big, small}
        p_big = counts[values == big][0] / 4000
        assert abs(p_big - 0.25) < 4 * np.sqrt(0.25 * 0.75 / 4000)


def _mc_mean(problem, x, n, key):
    rng = make_rng("mc", key, 0)
    total = np.zeros(len(np.atleast_1d(x)))
    for _ in range(n):
        total += problem.sample_subgradient(x, rng)
    return total / n


def test_subgradient_sampler_is_unbiased():
    rng = np.random.default_rng(41)
    n = 20_000
    cases = [
        (AbsUniform.from_noise_variance(0.5), lambda p, x: p.mean_gradient(x), 1),
        (QuadraticMixture(), lambda p, x: p.mean_gradient(x), 1),
        (AliasingPiecewise(), lambda p, x: p.mean_gradient(x), 1),
    ]
    for key, (problem, mean_fn, dim) in enumerate(cases):
        for trial in range(5):
            x = rng.uniform(-5, 5, size=dim)
            if abs(x[0]) < 0.3:
                x[0] += 0.5  # keep away from subdifferential kinks
            mc = _mc_mean(problem, x, n, 100 * key + trial)
            expected = mean_fn(problem, x)
            # conservative per-coordinate scale bound for all three samplers
            se = 4.0 / np.sqrt(n)
            assert np.all(np.abs(mc - expected) <= 4 * se + 1e-9)


def test_logistic_minibatch_mean_matches_full_batch():
    dataset = SyntheticDataset.two_blobs(n=200, dim=5, seed=3)
    problem = LogisticSynthetic(dataset, batch_size=10)
    rng = make_rng("logistic-mc", 0, 0)
    w = np.full(5, 0.1)
    mc = np.mean([problem.sample_subgradient(w, rng) for _ in range(4000)], axis=0)
    full = problem.mean_gradient(w)
    assert np.all(np.abs(mc - full) < 0.05)


def test_expected_objective_is_convex_on_random_triples():
    rng = np.random.default_rng(43)
    problems = [AbsUniform(0.3), QuadraticMixture(), AliasingPiecewise()]
    for problem in problems:
        for _ in range(50):
            x, y = rng.uniform(-10, 10, size=2)
            lam = rng.uniform()
            mid = lam * x + (1 - lam) * y
            f_mid = problem.expected_objective([mid])
            bound = lam * problem.expected_objective([x]) + (1 - lam) * problem.expected_objective([y])
            assert f_mid <= bound + 1e-12


def test_identical_seeds_yield_identical_streams():
    problem = AbsUniform(0.5, dim=2)
    a = [problem.sample_subgradient([1.0, -1.0], make_rng("det", 7, 3)) for _ in range(1)]
    b = [problem.sample_subgradient([1.0, -1.0], make_rng("det", 7, 3)) for _ in range(1)]
    assert np.array_equal(a[0], b[0])
    r1, r2 = make_rng("det", 7, 3), make_rng("det", 7, 3)
    s1 = [problem.sample_subgradient([1.0, -1.0], r1) for _ in range(20)]
    s2 = [problem.sample_subgradient([1.0, -1.0], r2) for _ in range(20)]
    assert all(np.array_equal(u, v) for u, v in zip(s1, s2))


def test_sharded_sampling():
    problem = AbsUniform(0.5)
    rng = make_rng("shards", 0, 1)
    samples = sharded_sample(problem, [2.0], 4, rng)
    assert len(samples) == 4
    single = sharded_sample(problem, [2.0], 1, make_rng("shards", 0, 2))
    assert len(single) == 1
    with pytest.raises(ValueError):
        sharded_sample(problem, [2.0], 0, rng)
    # shard means concentrate on the expected gradient
    rng = make_rng("shards", 0, 3)
    means = [np.mean(sharded_sample(problem, [5.0], 4, rng)) for _ in range(2000)]
    assert abs(np.mean(means) - 1.0) < 4 * 0.5 / np.sqrt(3 * 2000 * 4)


def test_minimizer_unavailable_for_logistic():
    dataset = SyntheticDataset.two_blobs(n=50, dim=4, seed=1)
    problem = LogisticSynthetic(dataset, batch_size=5)
    with pytest.raises(ValueError):
        problem.minimizer()


def test_dataset_is_separable_and_round_trips(tmp_path):
    dataset = SyntheticDataset.two_blobs(n=100, dim=6, seed=9)
    assert dataset.margin > 0
    # a weight vector along the blob axis classifies everything correctly
    axis = np.ones(6) / np.sqrt(6)
    scores = dataset.features @ axis
    assert np.all(np.sign(scores) == dataset.labels)
    path = tmp_path / "blobs.csv"
    dataset.to_csv(path)
    loaded = SyntheticDataset.from_csv(path)
    assert np.array_equal(loaded.features, dataset.features)
    assert np.array_equal(loaded.labels, dataset.labels)
    assert loaded.margin == pytest.approx(dataset.margin, rel=1e-12)
