"""Stochastic zeroth/first-order oracles and their per-call cost models.

Oracles deliver value and gradient estimates whose accuracy requirement
tightens as the step size parameter alpha shrinks; in the expected-risk
setting they are minibatch averages, and the minibatch size needed to meet
the accuracy contract at reliability 1 - delta is the per-call cost.  Two
families are implemented:

* trust-region style: |f - phi| <= kappa_ef * alpha**2 and
  ||g - grad|| <= kappa_eg * alpha, Chebyshev-sized batches;
* step-search style: |f - phi| < eps_f + t with subexponential tail, and
  ||g - grad|| <= max(eps_g, min(tau, kappa * alpha) * ||g||), batches sized
  by the target tolerance epsilon with an explicit constant multiplier.

Each algorithm iteration draws two value estimates (current and trial
point) and one gradient estimate, so the per-iteration value cost is twice
the per-call batch; the CostModel type records that multiplicity so cost
accounting and theoretical bounds stay consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, InvalidParameterError
from .problems import BERNOULLI, NoiseSpec, Problem

__all__ = [
    "SassOracleSpec",
    "StormOracleSpec",
    "CostModel",
    "SummedCost",
    "minibatch_value",
    "minibatch_grad",
    "storm_batch_sizes",
    "sass_batch_sizes",
    "storm_cost_models",
    "sass_cost_models",
    "empirical_oracle_failure_rate",
    "StormValueOracle",
    "StormGradOracle",
    "SassGradOracle",
    "CorruptionValueOracle",
    "CorruptionGradOracle",
    "ExactOracles",
    "StormMinibatchOracles",
    "SassMinibatchOracles",
    "PairCorruptionOracles",
    "cost_table_rows",
]


@dataclass(frozen=True)
class SassOracleSpec:
    """Accuracy/reliability parameters of the step-search oracle pair.

    eps_f and lam describe the value estimate: errors beyond eps_f have a
    subexponential tail exp(-lam * t).  The gradient contract is
    ||g - grad|| <= max(eps_g, min(tau, kappa * alpha) * ||g||) with failure
    probability at most delta1.  Cost formulas assume tau >= kappa * alpha_bar.
    """

    eps_f: float = 0.0
    lam: float = 1.0
    eps_g: float = 0.0
    kappa: float = 1.0
    tau: float = math.inf
    delta1: float = 0.1

    def __post_init__(self):
        if self.eps_f < 0.0 or self.eps_g < 0.0:
            raise InvalidParameterError("eps_f and eps_g must be nonnegative")
        if self.lam <= 0.0 or self.kappa <= 0.0 or self.tau <= 0.0:
            raise InvalidParameterError("lam, kappa and tau must be positive")
        if not (0.0 <= self.delta1 < 1.0):
            raise InvalidParameterError("delta1 must lie in [0,1)")

    def recommended_r(self) -> float:
        """Default noise-compensation offset 2*eps_f + (2/lam)*log(4)."""
        return 2.0 * self.eps_f + 2.0 / self.lam * math.log(4.0)


@dataclass(frozen=True)
class StormOracleSpec:
    """Accuracy/reliability parameters of the trust-region oracle pair."""

    kappa_ef: float = 1.0
    delta0: float = 0.1
    kappa_eg: float = 1.0
    delta1: float = 0.1
    sigma_f: float = 0.0
    sigma_g: float = 0.0

    def __post_init__(self):
        if self.kappa_ef < 0.0 or self.kappa_eg < 0.0:
            raise InvalidParameterError("kappa_ef and kappa_eg must be nonnegative")
        if self.sigma_f < 0.0 or self.sigma_g < 0.0:
            raise InvalidParameterError("sigma_f and sigma_g must be nonnegative")
        for name in ("delta0", "delta1"):
            if not (0.0 <= getattr(self, name) < 1.0):
                raise InvalidParameterError(f"{name} must lie in [0,1)")
        if self.delta0 + self.delta1 >= 0.5:
            raise InvalidParameterError(
                "delta0 + delta1 must stay below 1/2 so the success probability exceeds 1/2"
            )

    @property
    def p(self) -> float:
        """Per-iteration reliability 1 - delta0 - delta1."""
        return 1.0 - self.delta0 - self.delta1


@dataclass(frozen=True)
class CostModel:
    """Per-iteration oracle cost as a function of the step size parameter.

    raw(alpha) is the smooth batch-size formula; one call costs
    max(1, ceil(raw)) samples and an iteration makes calls_per_iteration of
    them.  Costs must be non-increasing in alpha.  Values too large for an
    integer are returned as math.inf by cost() (the bounds treat that as an
    honest divergence); batch() raises instead.
    """

    raw: Callable[[float], float]
    calls_per_iteration: int = 1
    label: str = ""
    monotone: bool = True

    def per_call(self, alpha: float) -> float:
        if alpha <= 0.0:
            raise InvalidParameterError("alpha must be positive")
        with np.errstate(divide="ignore", over="ignore"):
            v = float(self.raw(alpha))
        if math.isnan(v):
            raise InvalidParameterError(f"cost model {self.label!r} produced nan at {alpha}")
        if math.isinf(v):
            return math.inf
        # float-domain ceiling: exact below 2**53, graceful inf beyond float range
        return max(1.0, float(np.ceil(v)))

    def cost(self, alpha: float) -> float:
        return self.calls_per_iteration * self.per_call(alpha)

    def batch(self, alpha: float) -> int:
        c = self.per_call(alpha)
        if math.isinf(c):
            raise InvalidParameterError(
                f"cost model {self.label!r} overflows at alpha={alpha}"
            )
        return int(c)

    def __call__(self, alpha: float) -> float:
        return self.cost(alpha)


@dataclass(frozen=True)
class SummedCost:
    """Sum of component cost models, for total-cost bounds."""

    components: tuple[CostModel, ...]
    label: str = "total"

    def cost(self, alpha: float) -> float:
        return sum(c.cost(alpha) for c in self.components)

    def __call__(self, alpha: float) -> float:
        return self.cost(alpha)


# -- minibatch averaging ----------------------------------------------------


def minibatch_value(problem: Problem, x: np.ndarray, batch: int, rng: np.random.Generator) -> float:
    """Arithmetic mean of `batch` i.i.d. stochastic value samples at x."""
    if batch < 1:
        raise InvalidParameterError("batch must be at least 1")
    return float(problem.sample_loss_batch(x, batch, rng).mean())


def minibatch_grad(
    problem: Problem, x: np.ndarray, batch: int, rng: np.random.Generator
) -> np.ndarray:
    """Componentwise mean of `batch` i.i.d. stochastic gradient samples at x."""
    if batch < 1:
        raise InvalidParameterError("batch must be at least 1")
    return problem.sample_grad_batch(x, batch, rng).mean(axis=0)


# -- batch-size formulas ----------------------------------------------------


def storm_batch_sizes(alpha: float, spec: StormOracleSpec) -> tuple[int, int]:
    """Chebyshev minibatch sizes meeting the trust-region oracle contracts.

    oc0 = ceil(sigma_f**2 / (delta0 * kappa_ef**2 * alpha**4)) and
    oc1 = ceil(sigma_g**2 / (delta1 * kappa_eg**2 * alpha**2)), both at
    least one sample.
    """
    if alpha <= 0.0:
        raise InvalidParameterError("alpha must be positive")
    if spec.sigma_f == 0.0:
        oc0 = 1
    else:
        if spec.delta0 == 0.0 or spec.kappa_ef == 0.0:
            raise InvalidParameterError("delta0 and kappa_ef must be positive when sigma_f > 0")
        oc0 = max(1, math.ceil(spec.sigma_f**2 / (spec.delta0 * spec.kappa_ef**2 * alpha**4)))
    if spec.sigma_g == 0.0:
        oc1 = 1
    else:
        if spec.delta1 == 0.0 or spec.kappa_eg == 0.0:
            raise InvalidParameterError("delta1 and kappa_eg must be positive when sigma_g > 0")
        oc1 = max(1, math.ceil(spec.sigma_g**2 / (spec.delta1 * spec.kappa_eg**2 * alpha**2)))
    return oc0, oc1


def sass_batch_sizes(
    alpha: float,
    epsilon: float,
    spec: SassOracleSpec,
    noise: NoiseSpec,
    case: str,
    c: float = 1.0,
) -> tuple[int, int]:
    """Minibatch sizes meeting the step-search oracle contracts at tolerance epsilon.

    Zeroth order: c * sigma_f**2 / epsilon**4 (nonconvex) or / epsilon**2
    (strongly convex), independent of alpha.  First order:
    c * (m_c / epsilon**2 + m_v / min(tau, kappa * alpha)**2) in the
    nonconvex case, with m_c / epsilon in the strongly convex one.  The
    multiplier c makes the hidden constant explicit; scaling exponents are
    what matters.
    """
    if alpha <= 0.0:
        raise InvalidParameterError("alpha must be positive")
    if epsilon <= 0.0:
        raise InvalidParameterError("epsilon must be positive")
    if case not in ("nonconvex", "strongly_convex"):
        raise InvalidParameterError(f"unknown case {case!r}")
    if c <= 0.0:
        raise InvalidParameterError("the batch multiplier must be positive")
    if case == "nonconvex":
        oc0_raw = c * noise.sigma_f**2 / epsilon**4
        oc1_raw = c * (noise.m_c / epsilon**2 + noise.m_v / min(spec.tau, spec.kappa * alpha) ** 2)
    else:
        oc0_raw = c * noise.sigma_f**2 / epsilon**2
        oc1_raw = c * (noise.m_c / epsilon + noise.m_v / min(spec.tau, spec.kappa * alpha) ** 2)
    return max(1, math.ceil(oc0_raw)), max(1, math.ceil(oc1_raw))


def storm_cost_models(spec: StormOracleSpec) -> tuple[CostModel, CostModel]:
    """Per-iteration value and gradient cost models for the trust-region oracles."""
    coef0 = spec.sigma_f**2 / (spec.delta0 * spec.kappa_ef**2) if spec.sigma_f > 0 else 0.0
    coef1 = spec.sigma_g**2 / (spec.delta1 * spec.kappa_eg**2) if spec.sigma_g > 0 else 0.0
    value = CostModel(
        raw=lambda a: float(np.float64(coef0) / np.float64(a) ** 4),
        calls_per_iteration=2,
        label="tr_value",
    )
    grad = CostModel(
        raw=lambda a: float(np.float64(coef1) / np.float64(a) ** 2),
        calls_per_iteration=1,
        label="tr_grad",
    )
    return value, grad


def sass_cost_models(
    spec: SassOracleSpec,
    noise: NoiseSpec,
    epsilon: float,
    case: str,
    c: float = 1.0,
) -> tuple[CostModel, CostModel]:
    """Per-iteration value and gradient cost models for the step-search oracles."""
    if epsilon <= 0.0:
        raise InvalidParameterError("epsilon must be positive")
    if case not in ("nonconvex", "strongly_convex"):
        raise InvalidParameterError(f"unknown case {case!r}")
    if case == "nonconvex":
        value_const = c * noise.sigma_f**2 / epsilon**4
        grad_const = c * noise.m_c / epsilon**2
    else:
        value_const = c * noise.sigma_f**2 / epsilon**2
        grad_const = c * noise.m_c / epsilon
    m_v = c * noise.m_v
    kappa, tau = spec.kappa, spec.tau

    def grad_raw(a: float) -> float:
        reach = min(tau, kappa * a)
        return float(np.float64(grad_const) + np.float64(m_v) / np.float64(reach) ** 2)

    value = CostModel(raw=lambda a: value_const, calls_per_iteration=2, label="ss_value")
    grad = CostModel(raw=grad_raw, calls_per_iteration=1, label="ss_grad")
    return value, grad


def cost_table_rows(
    alphas: Sequence[float], value_model: CostModel, grad_model: CostModel
) -> list[tuple[float, int, int]]:
    """Rows (alpha, oc0, oc1) of per-call batch sizes, for CSV export."""
    return [(float(a), value_model.batch(a), grad_model.batch(a)) for a in alphas]


# -- oracle contract validation ---------------------------------------------


@dataclass(frozen=True)
class StormValueOracle:
    """Value estimate contract |f - phi| <= kappa_ef * alpha**2."""

    spec: StormOracleSpec

    def draw(self, problem: Problem, x, alpha: float, rng) -> float:
        batch, _ = storm_batch_sizes(alpha, self.spec)
        return minibatch_value(problem, x, batch, rng)

    def violated(self, problem: Problem, x, alpha: float, estimate: float) -> bool:
        return abs(estimate - problem.value(x)) > self.spec.kappa_ef * alpha**2


@dataclass(frozen=True)
class StormGradOracle:
    """Gradient estimate contract ||g - grad|| <= kappa_eg * alpha."""

    spec: StormOracleSpec

    def draw(self, problem: Problem, x, alpha: float, rng) -> np.ndarray:
        _, batch = storm_batch_sizes(alpha, self.spec)
        return minibatch_grad(problem, x, batch, rng)

    def violated(self, problem: Problem, x, alpha: float, estimate) -> bool:
        err = float(np.linalg.norm(estimate - problem.grad(x)))
        return err > self.spec.kappa_eg * alpha


@dataclass(frozen=True)
class SassGradOracle:
    """Gradient contract ||g - grad|| <= max(eps_g, min(tau, kappa*alpha) * ||g||)."""

    spec: SassOracleSpec
    epsilon: float
    case: str = "nonconvex"
    batch_scale: float = 1.0

    def draw(self, problem: Problem, x, alpha: float, rng) -> np.ndarray:
        _, batch = sass_batch_sizes(
            alpha, self.epsilon, self.spec, problem.noise, self.case, self.batch_scale
        )
        return minibatch_grad(problem, x, batch, rng)

    def violated(self, problem: Problem, x, alpha: float, estimate) -> bool:
        err = float(np.linalg.norm(estimate - problem.grad(x)))
        rel = min(self.spec.tau, self.spec.kappa * alpha) * float(np.linalg.norm(estimate))
        return err > max(self.spec.eps_g, rel)


@dataclass(frozen=True)
class CorruptionValueOracle:
    """Single-sample oracle over Bernoulli-corruption noise; failure = corruption."""

    def draw(self, problem: Problem, x, alpha: float, rng) -> float:
        return minibatch_value(problem, x, 1, rng)

    def violated(self, problem: Problem, x, alpha: float, estimate: float) -> bool:
        scale = 1.0 + abs(problem.value(x))
        return abs(estimate - problem.value(x)) > 1e-12 * scale


@dataclass(frozen=True)
class CorruptionGradOracle:
    def draw(self, problem: Problem, x, alpha: float, rng) -> np.ndarray:
        return minibatch_grad(problem, x, 1, rng)

    def violated(self, problem: Problem, x, alpha: float, estimate) -> bool:
        scale = 1.0 + float(np.linalg.norm(problem.grad(x)))
        return float(np.linalg.norm(estimate - problem.grad(x))) > 1e-12 * scale


def empirical_oracle_failure_rate(
    oracle,
    problem: Problem,
    x: np.ndarray,
    alpha: float,
    trials: int,
    master_seed: int,
) -> float:
    """Fraction of independent trials on which the oracle's accuracy contract fails."""
    if trials < 1:
        raise InvalidParameterError("trials must be at least 1")
    rng = np.random.default_rng(master_seed)
    failures = 0
    for _ in range(trials):
        estimate = oracle.draw(problem, x, alpha, rng)
        if oracle.violated(problem, x, alpha, estimate):
            failures += 1
    return failures / trials


# -- runtime oracle suites ---------------------------------------------------
#
# A suite supplies the three estimates an iteration needs and reports how
# many samples were drawn.  gradient() is called first (the step depends on
# it), then values() with both the current and the trial point.


class ExactOracles:
    """Noise-free oracles: estimates equal the ground truth, one sample per call."""

    family = "any"

    def validate(self, problem: Problem) -> None:
        pass

    def gradient(self, problem: Problem, x, alpha: float, rng) -> tuple[np.ndarray, int]:
        return problem.grad(x), 1

    def values(self, problem: Problem, x, x_plus, alpha: float, rng) -> tuple[float, float, int]:
        return problem.value(x), problem.value(x_plus), 2


@dataclass(frozen=True)
class StormMinibatchOracles:
    """Chebyshev-sized minibatch oracles for the trust-region method."""

    spec: StormOracleSpec

    family = "storm"

    def validate(self, problem: Problem) -> None:
        if problem.noise.distribution == BERNOULLI:
            raise ConfigurationError("minibatch oracles require additive sampling noise")
        if problem.noise.m_v != 0.0:
            raise ConfigurationError(
                "trust-region oracles need a uniform gradient noise bound (m_v = 0)"
            )

    def gradient(self, problem, x, alpha, rng):
        _, batch = storm_batch_sizes(alpha, self.spec)
        return minibatch_grad(problem, x, batch, rng), batch

    def values(self, problem, x, x_plus, alpha, rng):
        batch, _ = storm_batch_sizes(alpha, self.spec)
        f0 = minibatch_value(problem, x, batch, rng)
        f_plus = minibatch_value(problem, x_plus, batch, rng)
        return f0, f_plus, 2 * batch


@dataclass(frozen=True)
class SassMinibatchOracles:
    """Tolerance-sized minibatch oracles for the step-search method."""

    spec: SassOracleSpec
    epsilon: float
    case: str = "nonconvex"
    batch_scale: float = 1.0

    family = "sass"

    def validate(self, problem: Problem) -> None:
        if problem.noise.distribution == BERNOULLI:
            raise ConfigurationError("minibatch oracles require additive sampling noise")

    def gradient(self, problem, x, alpha, rng):
        _, batch = sass_batch_sizes(
            alpha, self.epsilon, self.spec, problem.noise, self.case, self.batch_scale
        )
        return minibatch_grad(problem, x, batch, rng), batch

    def values(self, problem, x, x_plus, alpha, rng):
        batch, _ = sass_batch_sizes(
            alpha, self.epsilon, self.spec, problem.noise, self.case, self.batch_scale
        )
        f0 = minibatch_value(problem, x, batch, rng)
        f_plus = minibatch_value(problem, x_plus, batch, rng)
        return f0, f_plus, 2 * batch


@dataclass(frozen=True)
class PairCorruptionOracles:
    """Exact oracles corrupted by independent per-iteration Bernoulli events.

    One delta0 coin covers the iteration's value pair and one delta1 coin
    the gradient, so an iteration is clean with probability exactly
    (1 - delta0) * (1 - delta1) >= 1 - delta0 - delta1.  Corruptions are
    adversarial: the trial value is shifted up (forcing rejection) and the
    gradient is negated (an ascent direction, rejected on any convex
    objective when r = 0).
    """

    delta0: float
    delta1: float
    value_shift: float = 1.0e6

    family = "any"

    def __post_init__(self):
        for name in ("delta0", "delta1"):
            if not (0.0 <= getattr(self, name) < 0.5):
                raise InvalidParameterError(f"{name} must lie in [0, 1/2)")

    @property
    def clean_probability(self) -> float:
        return (1.0 - self.delta0) * (1.0 - self.delta1)

    def validate(self, problem: Problem) -> None:
        pass

    def gradient(self, problem, x, alpha, rng):
        g = problem.grad(x)
        if rng.random() < self.delta1:
            g = -g
        return g, 1

    def values(self, problem, x, x_plus, alpha, rng):
        f0 = problem.value(x)
        f_plus = problem.value(x_plus)
        if rng.random() < self.delta0:
            f_plus = f_plus + self.value_shift
        return f0, f_plus, 2
