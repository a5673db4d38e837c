"""Synthetic expected-risk objectives with exact ground truth and controlled noise.

Each problem exposes the exact objective value and gradient for
instrumentation, together with per-sample stochastic estimates whose second
moments respect the declared noise scales by construction:

* value samples deviate from the truth by centered noise with variance at
  most sigma_f**2;
* gradient samples deviate by a vector with squared norm expectation
  exactly m_c + m_v * ||grad||**2 (Gaussian mode), which makes scaling
  checks on minibatch sizes sharp;
* Bernoulli corruption mode returns the exact quantity with probability
  1 - delta and an adversarially shifted one otherwise, so oracle failure
  probabilities are realized exactly.

Gaussian value noise is sub-Gaussian and therefore subexponential, which is
what the step-search value oracle's tail condition needs; this holds by
construction and is not separately enforced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParameterError, MissingGroundTruthError

__all__ = ["NoiseSpec", "Problem", "make_problem", "sample_loss", "sample_grad"]

GAUSSIAN = "gaussian"
BERNOULLI = "bernoulli_corruption"


@dataclass(frozen=True)
class NoiseSpec:
    """Noise scales for sampled values and gradients.

    sigma_f bounds the standard deviation of value samples; the gradient
    noise second moment is m_c + m_v * ||grad||**2.  sigma_g, when set,
    declares a uniform gradient bound (requires m_v = 0) for methods that
    need one.  delta0/delta1 are the corruption probabilities of the
    Bernoulli mode, which replaces Gaussian perturbations by returning the
    value shifted by value_shift, or the gradient negated, with those
    probabilities.
    """

    sigma_f: float = 0.0
    m_c: float = 0.0
    m_v: float = 0.0
    sigma_g: float | None = None
    distribution: str = GAUSSIAN
    delta0: float = 0.0
    delta1: float = 0.0
    value_shift: float = 1.0e6

    def __post_init__(self):
        for name in ("sigma_f", "m_c", "m_v"):
            if getattr(self, name) < 0.0:
                raise InvalidParameterError(f"{name} must be nonnegative")
        if self.distribution not in (GAUSSIAN, BERNOULLI):
            raise InvalidParameterError(f"unknown noise distribution {self.distribution!r}")
        for name in ("delta0", "delta1"):
            d = getattr(self, name)
            if not (0.0 <= d < 1.0):
                raise InvalidParameterError(f"{name} must lie in [0,1)")
        if self.sigma_g is not None:
            if self.m_v != 0.0:
                raise InvalidParameterError(
                    "a uniform gradient bound sigma_g requires m_v = 0"
                )
            if self.sigma_g**2 < self.m_c - 1e-15:
                raise InvalidParameterError("sigma_g**2 must dominate m_c")

    @classmethod
    def none(cls) -> "NoiseSpec":
        return cls()

    @classmethod
    def gaussian(cls, sigma_f: float = 0.0, m_c: float = 0.0, m_v: float = 0.0) -> "NoiseSpec":
        sigma_g = math.sqrt(m_c) if m_v == 0.0 else None
        return cls(sigma_f=sigma_f, m_c=m_c, m_v=m_v, sigma_g=sigma_g)

    @classmethod
    def corruption(
        cls, delta0: float, delta1: float, value_shift: float = 1.0e6
    ) -> "NoiseSpec":
        return cls(
            distribution=BERNOULLI, delta0=delta0, delta1=delta1, value_shift=value_shift
        )

    @property
    def noiseless(self) -> bool:
        if self.distribution == BERNOULLI:
            return self.delta0 == 0.0 and self.delta1 == 0.0
        return self.sigma_f == 0.0 and self.m_c == 0.0 and self.m_v == 0.0


@dataclass(frozen=True)
class Problem:
    """A synthetic objective with exact value/gradient and noisy sampling."""

    kind: str
    dim: int
    conditioning: float
    noise: NoiseSpec
    lipschitz: float
    min_value: float | None
    seed: int
    x0: np.ndarray = field(repr=False)
    _diag: np.ndarray | None = field(default=None, repr=False)
    _features: np.ndarray | None = field(default=None, repr=False)
    _labels: np.ndarray | None = field(default=None, repr=False)
    _reg: float = 0.0

    # -- exact ground truth -------------------------------------------------

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if self.kind == "quadratic":
            return float(0.5 * np.dot(x, self._diag * x))
        margins = -self._labels * (self._features @ x)
        return float(np.mean(np.logaddexp(0.0, margins)) + 0.5 * self._reg * np.dot(x, x))

    def grad(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "quadratic":
            return self._diag * x
        margins = -self._labels * (self._features @ x)
        sig = 1.0 / (1.0 + np.exp(-margins))
        coeff = -self._labels * sig / len(self._labels)
        return self._features.T @ coeff + self._reg * x

    def gap(self, x: np.ndarray) -> float:
        if self.min_value is None:
            raise MissingGroundTruthError(f"{self.kind} problem has no known minimum value")
        return self.value(x) - self.min_value

    # -- stochastic sampling ------------------------------------------------

    def _grad_noise_std(self, x: np.ndarray) -> float:
        g = self.grad(x)
        total_var = self.noise.m_c + self.noise.m_v * float(np.dot(g, g))
        return math.sqrt(total_var / self.dim)

    def sample_loss_batch(self, x: np.ndarray, batch: int, rng: np.random.Generator) -> np.ndarray:
        """batch i.i.d. stochastic value samples at x."""
        if batch < 1:
            raise InvalidParameterError("batch must be at least 1")
        if not np.all(np.isfinite(x)):
            raise InvalidParameterError("x must be finite")
        true = self.value(x)
        if self.noise.distribution == BERNOULLI:
            corrupted = rng.random(batch) < self.noise.delta0
            return true + self.noise.value_shift * corrupted
        if self.noise.sigma_f == 0.0:
            return np.full(batch, true)
        return true + rng.normal(0.0, self.noise.sigma_f, size=batch)

    def sample_grad_batch(self, x: np.ndarray, batch: int, rng: np.random.Generator) -> np.ndarray:
        """batch i.i.d. stochastic gradient samples at x, shape (batch, dim)."""
        if batch < 1:
            raise InvalidParameterError("batch must be at least 1")
        if not np.all(np.isfinite(x)):
            raise InvalidParameterError("x must be finite")
        g = self.grad(x)
        if self.noise.distribution == BERNOULLI:
            corrupted = rng.random(batch) < self.noise.delta1
            signs = np.where(corrupted, -1.0, 1.0)
            return signs[:, None] * g
        std = self._grad_noise_std(x)
        if std == 0.0:
            return np.tile(g, (batch, 1))
        return g + rng.normal(0.0, std, size=(batch, self.dim))

    def descriptor(self) -> str:
        """key=value text block for experiment output headers."""
        n = self.noise
        items = [
            ("kind", self.kind),
            ("dim", self.dim),
            ("conditioning", self.conditioning),
            ("lipschitz", self.lipschitz),
            ("min_value", "unknown" if self.min_value is None else self.min_value),
            ("seed", self.seed),
            ("noise_distribution", n.distribution),
            ("sigma_f", n.sigma_f),
            ("m_c", n.m_c),
            ("m_v", n.m_v),
            ("delta0", n.delta0),
            ("delta1", n.delta1),
        ]
        return "\n".join(f"{k}={v}" for k, v in items)

    def with_noise(self, noise: NoiseSpec) -> "Problem":
        return replace(self, noise=noise)


def sample_loss(problem: Problem, x: np.ndarray, rng: np.random.Generator) -> float:
    """One unbiased stochastic estimate of the objective value at x."""
    return float(problem.sample_loss_batch(x, 1, rng)[0])


def sample_grad(problem: Problem, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One unbiased stochastic estimate of the gradient at x."""
    return problem.sample_grad_batch(x, 1, rng)[0]


def _logistic_minimum(features: np.ndarray, labels: np.ndarray, reg: float, dim: int) -> float:
    """Minimum of the regularized logistic loss by damped Newton iteration."""
    x = np.zeros(dim)
    n = len(labels)
    for _ in range(200):
        margins = -labels * (features @ x)
        sig = 1.0 / (1.0 + np.exp(-margins))
        grad = features.T @ (-labels * sig / n) + reg * x
        w = sig * (1.0 - sig) / n
        hess = features.T @ (features * w[:, None]) + reg * np.eye(dim)
        step = np.linalg.solve(hess, grad)
        x = x - step
        if np.linalg.norm(grad) < 1e-14:
            break
    margins = -labels * (features @ x)
    return float(np.mean(np.logaddexp(0.0, margins)) + 0.5 * reg * np.dot(x, x))


def make_problem(
    kind: str,
    dim: int,
    conditioning: float = 1.0,
    noise: NoiseSpec | None = None,
    seed: int = 0,
) -> Problem:
    """Construct a synthetic objective.

    quadratic: 0.5 x^T D x with diagonal spectrum spread over
    [1, conditioning]; smoothness constant equals the top eigenvalue and
    the minimum value is 0.

    logistic_synthetic: l2-regularized logistic loss over a generated
    dataset; the smoothness constant is 0.25 * lambda_max(A^T A / N) + reg
    and the minimum value is computed to high precision at construction.
    """
    if dim < 1:
        raise InvalidParameterError("dim must be at least 1")
    if conditioning < 1.0:
        raise InvalidParameterError("conditioning must be at least 1")
    noise = noise if noise is not None else NoiseSpec.none()

    if kind == "quadratic":
        diag = np.linspace(1.0, conditioning, dim) if dim > 1 else np.array([conditioning])
        x0 = np.full(dim, 2.0 / math.sqrt(dim))
        return Problem(
            kind=kind,
            dim=dim,
            conditioning=conditioning,
            noise=noise,
            lipschitz=float(diag.max()),
            min_value=0.0,
            seed=seed,
            x0=x0,
            _diag=diag,
        )
    if kind == "logistic_synthetic":
        rng = np.random.default_rng(seed)
        n_samples = max(50, 10 * dim)
        scales = np.sqrt(np.linspace(1.0, conditioning, dim)) if dim > 1 else np.array([1.0])
        features = rng.standard_normal((n_samples, dim)) * scales
        planted = rng.standard_normal(dim)
        labels = np.where(features @ planted + 0.1 * rng.standard_normal(n_samples) >= 0, 1.0, -1.0)
        reg = 0.1
        second_moment = features.T @ features / n_samples
        lipschitz = 0.25 * float(np.linalg.eigvalsh(second_moment).max()) + reg
        min_value = _logistic_minimum(features, labels, reg, dim)
        return Problem(
            kind=kind,
            dim=dim,
            conditioning=conditioning,
            noise=noise,
            lipschitz=lipschitz,
            min_value=min_value,
            seed=seed,
            x0=np.full(dim, 0.5),
            _features=features,
            _labels=labels,
            _reg=reg,
        )
    raise InvalidParameterError(f"unknown problem kind {kind!r}")
