"""Stochastic problems with known expected objectives and subgradient samplers.

Each problem exposes a subgradient sampler whose conditional mean at any
point is a true subgradient of the expected objective.  The closed-form
problems additionally expose the exact objective, its minimizer, and the
exact conditional mean gradient, which power regret computation and the
exact-statistics clip policies.  Randomness always flows through a
counter-based generator keyed by caller-supplied parts, so parallel runs
never share generator state and every stream is reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .clipmath import as_vector

__all__ = [
    "make_rng",
    "AbsUniform",
    "QuadraticMixture",
    "AliasingPiecewise",
    "SyntheticDataset",
    "LogisticSynthetic",
    "StochasticProblem",
    "sharded_sample",
]


def make_rng(*key_parts) -> np.random.Generator:
    """Counter-based generator keyed by a tuple of ints and strings.

    The same key always yields the same stream, independent of thread count
    or creation order.
    """
    entropy: list[int] = []
    for part in key_parts:
        if isinstance(part, str):
            digest = hashlib.sha256(part.encode("utf-8")).digest()
            entropy.append(int.from_bytes(digest[:8], "little"))
        elif isinstance(part, (int, np.integer)):
            entropy.append(int(part) & 0xFFFFFFFFFFFFFFFF)
        else:
            raise TypeError(f"rng key parts must be int or str, got {type(part).__name__}")
    return np.random.Generator(np.random.Philox(seed=np.random.SeedSequence(entropy)))


class AbsUniform:
    """Expected objective sum_j |x_j| with symmetric uniform gradient noise.

    Subgradients are sign(x) plus independent Uniform[-l, l] noise per
    coordinate.  The sub-Gaussian variance proxy for noise bounded on an
    interval of width 2l is (2l)^2 / 4 = l^2, and each gradient coordinate
    is bounded by 1 + l.
    """

    def __init__(self, noise_halfwidth: float, dim: int = 1):
        if noise_halfwidth < 0.0:
            raise ValueError("noise half-width must be nonnegative")
        if dim < 1:
            raise ValueError("dimension must be at least 1")
        self.noise_halfwidth = float(noise_halfwidth)
        self.dim = dim

    @classmethod
    def from_noise_variance(cls, variance: float, dim: int = 1) -> "AbsUniform":
        """Build from the variance proxy by inverting l^2 = variance."""
        if variance < 0.0:
            raise ValueError("noise variance must be nonnegative")
        return cls(math.sqrt(variance), dim=dim)

    def sample_subgradient(self, x, rng: np.random.Generator) -> np.ndarray:
        x = as_vector(x, dim=self.dim)
        noise = rng.uniform(-self.noise_halfwidth, self.noise_halfwidth, size=self.dim)
        return np.sign(x) + noise

    def mean_gradient(self, x) -> np.ndarray:
        return np.sign(as_vector(x, dim=self.dim))

    def expected_objective(self, x) -> float:
        return float(np.sum(np.abs(as_vector(x, dim=self.dim))))

    def minimizer(self) -> tuple[np.ndarray, float]:
        return np.zeros(self.dim), 0.0

    def noise_proxy(self) -> tuple[float, float]:
        """(variance proxy, per-coordinate gradient bound)."""
        return self.noise_halfwidth**2, 1.0 + self.noise_halfwidth


class QuadraticMixture:
    """Mean of two quadratics centered at +3 and -3; the sampler returns the
    gradient of one of them, chosen by a fair coin."""

    dim = 1
    centers = (3.0, -3.0)

    def sample_subgradient(self, x, rng: np.random.Generator) -> np.ndarray:
        x = as_vector(x, dim=1)
        center = self.centers[int(rng.integers(0, 2))]
        return x - center

    def mean_gradient(self, x) -> np.ndarray:
        return as_vector(x, dim=1).copy()

    def expected_objective(self, x) -> float:
        v = float(as_vector(x, dim=1)[0])
        return 0.25 * (v - 3.0) ** 2 + 0.25 * (v + 3.0) ** 2

    def minimizer(self) -> tuple[np.ndarray, float]:
        return np.zeros(1), 4.5


class AliasingPiecewise:
    """Two-piece absolute-value mixture whose magnitude-2-clipped subgradients
    are distributed exactly like the subgradients of a different objective
    with a different minimizer.

    Expected objective: |4x - 1| / 4 + 3 |x + 1| / 4, minimized at x = 1/4.
    The sampler returns 4 * sign(4x - 1) with probability 1/4 and
    sign(x + 1) otherwise.
    """

    dim = 1

    def sample_subgradient(self, x, rng: np.random.Generator) -> np.ndarray:
        v = float(as_vector(x, dim=1)[0])
        if rng.random() < 0.25:
            return np.array([4.0 * np.sign(4.0 * v - 1.0)])
        return np.array([np.sign(v + 1.0)])

    def mean_gradient(self, x) -> np.ndarray:
        v = float(as_vector(x, dim=1)[0])
        return np.array([np.sign(4.0 * v - 1.0) + 0.75 * np.sign(v + 1.0)])

    def expected_objective(self, x) -> float:
        v = float(as_vector(x, dim=1)[0])
        return 0.25 * abs(4.0 * v - 1.0) + 0.75 * abs(v + 1.0)

    def minimizer(self) -> tuple[np.ndarray, float]:
        return np.array([0.25]), 15.0 / 16.0

    def aliased_objective(self, x) -> float:
        """The objective the magnitude-2-clipped dynamics actually minimize."""
        v = float(as_vector(x, dim=1)[0])
        return 0.125 * abs(4.0 * v - 1.0) + 0.75 * abs(v + 1.0)

    def aliased_minimizer(self) -> tuple[np.ndarray, float]:
        return np.array([-1.0]), 0.625


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    # 0.5 * (1 + tanh(z/2)) avoids overflow for large |z|
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class SyntheticDataset:
    """Two Gaussian blobs, linearly separable by construction.

    Points are resampled until every one has signed margin at least
    ``margin_floor`` along the blob axis, so the recorded worst-case margin
    is always positive.
    """

    features: np.ndarray  # (n, dim)
    labels: np.ndarray  # (n,) in {-1.0, +1.0}
    margin: float
    separation: float
    seed: int

    @classmethod
    def two_blobs(
        cls,
        n: int = 1000,
        dim: int = 20,
        separation: float = 3.0,
        noise_std: float = 0.5,
        margin_floor: float = 0.2,
        seed: int = 7,
    ) -> "SyntheticDataset":
        if n < 2 or n % 2 != 0:
            raise ValueError("need an even number of points, at least 2")
        rng = make_rng("two-blobs", n, dim, seed)
        axis = np.ones(dim) / math.sqrt(dim)
        labels = np.repeat([1.0, -1.0], n // 2)
        features = labels[:, None] * (separation / 2.0) * axis + noise_std * rng.standard_normal(
            (n, dim)
        )
        while True:
            margins = labels * (features @ axis)
            bad = margins < margin_floor
            if not np.any(bad):
                break
            k = int(np.sum(bad))
            features[bad] = labels[bad, None] * (
                separation / 2.0
            ) * axis + noise_std * rng.standard_normal((k, dim))
        return cls(
            features=features,
            labels=labels,
            margin=float(np.min(labels * (features @ axis))),
            separation=separation,
            seed=seed,
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{j}" for j in range(self.features.shape[1])] + ["label"])
            for row, label in zip(self.features, self.labels):
                writer.writerow([f"{v:.17g}" for v in row] + [f"{label:.0f}"])

    @classmethod
    def from_csv(cls, path) -> "SyntheticDataset":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if not header or header[-1] != "label":
                raise ValueError("dataset CSV must end with a 'label' column")
            rows = [[float(v) for v in row] for row in reader]
        if not rows:
            raise ValueError("dataset CSV has no rows")
        data = np.asarray(rows)
        features, labels = data[:, :-1], data[:, -1]
        axis = np.ones(features.shape[1]) / math.sqrt(features.shape[1])
        return cls(
            features=features,
            labels=labels,
            margin=float(np.min(labels * (features @ axis))),
            separation=float("nan"),
            seed=-1,
        )


class LogisticSynthetic:
    """Minibatch logistic regression on a separable synthetic dataset.

    The expected objective is the full-batch mean logistic loss; its
    minimizer has no closed form (weights diverge on separable data), so
    ``minimizer`` raises.
    """

    def __init__(self, dataset: SyntheticDataset, batch_size: int = 10):
        if not 1 <= batch_size <= dataset.features.shape[0]:
            raise ValueError("batch size must lie in [1, n]")
        self.dataset = dataset
        self.batch_size = batch_size
        self.dim = dataset.features.shape[1]

    def sample_subgradient(self, w, rng: np.random.Generator) -> np.ndarray:
        w = as_vector(w, dim=self.dim)
        n = self.dataset.features.shape[0]
        idx = rng.choice(n, size=self.batch_size, replace=False)
        x, y = self.dataset.features[idx], self.dataset.labels[idx]
        z = -y * (x @ w)
        return -(x * (y * _stable_sigmoid(z))[:, None]).mean(axis=0)

    def mean_gradient(self, w) -> np.ndarray:
        w = as_vector(w, dim=self.dim)
        x, y = self.dataset.features, self.dataset.labels
        z = -y * (x @ w)
        return -(x * (y * _stable_sigmoid(z))[:, None]).mean(axis=0)

    def expected_objective(self, w) -> float:
        w = as_vector(w, dim=self.dim)
        z = -self.dataset.labels * (self.dataset.features @ w)
        return float(np.mean(np.logaddexp(0.0, z)))

    def minimizer(self) -> tuple[np.ndarray, float]:
        raise ValueError("the synthetic logistic task has no closed-form minimizer")

    def accuracy(self, w) -> float:
        w = as_vector(w, dim=self.dim)
        scores = self.dataset.features @ w
        predictions = np.where(scores >= 0.0, 1.0, -1.0)
        return float(np.mean(predictions == self.dataset.labels))


StochasticProblem = AbsUniform | QuadraticMixture | AliasingPiecewise | LogisticSynthetic


def sharded_sample(
    problem: StochasticProblem, x, shards: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Independent subgradient samples at x, one per simulated device."""
    if shards < 1:
        raise ValueError("need at least one shard")
    return [problem.sample_subgradient(x, rng) for _ in range(shards)]
