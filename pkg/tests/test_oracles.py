import math

import numpy as np
import pytest

from adastoc.errors import ConfigurationError, InvalidParameterError
from adastoc.oracles import (
    CorruptionGradOracle,
    CorruptionValueOracle,
    CostModel,
    SassOracleSpec,
    StormGradOracle,
    StormOracleSpec,
    StormValueOracle,
    StormMinibatchOracles,
    SummedCost,
    cost_table_rows,
    empirical_oracle_failure_rate,
    minibatch_grad,
    minibatch_value,
    sass_batch_sizes,
    sass_cost_models,
    storm_batch_sizes,
    storm_cost_models,
)
from adastoc.problems import NoiseSpec, make_problem


class _ForcedSamples:
    """Problem stand-in delivering scripted per-sample values."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def sample_loss_batch(self, x, batch, rng):
        assert batch == len(self.values)
        return self.values

    def sample_grad_batch(self, x, batch, rng):
        return np.tile(self.values[:, None], (1, 2))[:batch]


def test_minibatch_value_is_arithmetic_mean():
    assert minibatch_value(_ForcedSamples([1.0, 2.0, 3.0]), None, 3, None) == 2.0


def test_minibatch_zero_noise_exact():
    prob = make_problem("quadratic", 2, 1.0, NoiseSpec.none(), seed=0)
    x = np.array([1.0, 2.0])
    assert minibatch_value(prob, x, 17, np.random.default_rng(0)) == prob.value(x)
    assert np.array_equal(minibatch_grad(prob, x, 17, np.random.default_rng(0)), prob.grad(x))


def test_minibatch_batch_one_matches_single_draw():
    prob = make_problem("quadratic", 3, 2.0, NoiseSpec.gaussian(m_c=1.0), seed=0)
    x = np.array([1.0, -1.0, 0.0])
    from adastoc.problems import sample_grad

    assert np.array_equal(
        minibatch_grad(prob, x, 1, np.random.default_rng(4)),
        sample_grad(prob, x, np.random.default_rng(4)),
    )


def test_minibatch_variance_law():
    # variance of a size-100 minibatch mean is sigma^2/100
    prob = make_problem("quadratic", 2, 1.0, NoiseSpec.gaussian(sigma_f=1.0), seed=0)
    x = np.array([0.5, 0.5])
    rng = np.random.default_rng(21)
    means = np.array([minibatch_value(prob, x, 100, rng) for _ in range(10_000)])
    assert means.var(ddof=1) == pytest.approx(0.01, rel=0.2)


def test_minibatch_rejects_zero_batch():
    prob = make_problem("quadratic", 2, 1.0)
    with pytest.raises(InvalidParameterError):
        minibatch_value(prob, prob.x0, 0, np.random.default_rng(0))


def test_storm_batch_sizes_worked_values():
    spec = StormOracleSpec(kappa_ef=1.0, delta0=0.1, kappa_eg=1.0, delta1=0.1, sigma_f=1.0, sigma_g=1.0)
    oc0, oc1 = storm_batch_sizes(0.5, spec)
    assert (oc0, oc1) == (160, 40)


def test_storm_batch_sizes_noiseless_floor():
    spec = StormOracleSpec(sigma_f=0.0, sigma_g=0.0)
    assert storm_batch_sizes(0.5, spec) == (1, 1)


def test_storm_batch_sizes_rejects_degenerate():
    with pytest.raises(InvalidParameterError):
        storm_batch_sizes(0.5, StormOracleSpec(sigma_f=1.0, delta0=0.0))
    with pytest.raises(InvalidParameterError):
        storm_batch_sizes(0.5, StormOracleSpec(sigma_f=1.0, kappa_ef=0.0))
    with pytest.raises(InvalidParameterError):
        storm_batch_sizes(0.0, StormOracleSpec())


def test_storm_spec_requires_reliable_pair():
    with pytest.raises(InvalidParameterError):
        StormOracleSpec(delta0=0.3, delta1=0.2)


def test_sass_batch_sizes_worked_values():
    spec = SassOracleSpec(kappa=1.0, tau=10.0)
    noise = NoiseSpec.gaussian(sigma_f=1.0)
    oc0, _ = sass_batch_sizes(0.5, 0.1, spec, noise, "nonconvex")
    assert oc0 == 10**4
    noise2 = NoiseSpec.gaussian(m_c=0.0, m_v=1.0)
    _, oc1 = sass_batch_sizes(0.5, 0.1, spec, noise2, "nonconvex")
    assert oc1 == 4


def test_sass_batch_sizes_tau_saturation():
    spec = SassOracleSpec(kappa=1.0, tau=2.0)
    noise = NoiseSpec.gaussian(m_c=0.0, m_v=1.0)
    at_tau = sass_batch_sizes(2.0, 0.1, spec, noise, "nonconvex")[1]
    beyond = sass_batch_sizes(100.0, 0.1, spec, noise, "nonconvex")[1]
    assert at_tau == beyond


def test_sass_batch_sizes_strongly_convex_scaling():
    spec = SassOracleSpec()
    noise = NoiseSpec.gaussian(sigma_f=1.0, m_c=1.0)
    oc0, oc1 = sass_batch_sizes(1.0, 0.01, spec, noise, "strongly_convex")
    assert oc0 == math.ceil(1.0 / 0.01**2)
    assert oc1 >= math.ceil(1.0 / 0.01)


def test_sass_batch_sizes_rejects_zero_epsilon():
    with pytest.raises(InvalidParameterError):
        sass_batch_sizes(1.0, 0.0, SassOracleSpec(), NoiseSpec.none(), "nonconvex")


def test_cost_models_monotone_on_log_grid():
    storm = storm_cost_models(StormOracleSpec(sigma_f=1.0, sigma_g=1.0))
    sass = sass_cost_models(
        SassOracleSpec(kappa=1.0, tau=5.0), NoiseSpec.gaussian(sigma_f=1.0, m_c=1.0, m_v=1.0),
        0.1, "nonconvex",
    )
    grid = np.logspace(-3, 1, 40)
    for model in (*storm, *sass):
        costs = [model.cost(a) for a in grid]
        assert all(c1 >= c2 for c1, c2 in zip(costs, costs[1:]))


def test_cost_model_underflow_is_inf_not_error():
    value, _ = storm_cost_models(StormOracleSpec(sigma_f=1.0, sigma_g=1.0))
    assert value.cost(1e-200) == math.inf
    with pytest.raises(InvalidParameterError):
        value.batch(1e-200)


def test_summed_cost_adds_components():
    value, grad = storm_cost_models(StormOracleSpec(sigma_f=1.0, sigma_g=1.0))
    total = SummedCost(components=(value, grad))
    assert total.cost(0.5) == value.cost(0.5) + grad.cost(0.5)
    # per-iteration value cost counts both function estimates
    assert value.cost(0.5) == 2 * value.per_call(0.5)


def test_cost_table_rows_schema():
    value, grad = storm_cost_models(StormOracleSpec(sigma_f=1.0, sigma_g=1.0))
    rows = cost_table_rows([1.0, 0.5], value, grad)
    assert rows == [(1.0, 10, 10), (0.5, 160, 40)]


def test_corruption_oracle_failure_rate():
    noise = NoiseSpec.corruption(delta0=0.2, delta1=0.2)
    prob = make_problem("quadratic", 2, 1.0, noise, seed=0)
    x = np.array([1.0, 1.0])
    rate = empirical_oracle_failure_rate(CorruptionValueOracle(), prob, x, 1.0, 4000, 5)
    assert abs(rate - 0.2) <= 2.5758 * math.sqrt(0.2 * 0.8 / 4000) + 1e-9
    rate_g = empirical_oracle_failure_rate(CorruptionGradOracle(), prob, x, 1.0, 4000, 6)
    assert abs(rate_g - 0.2) <= 2.5758 * math.sqrt(0.2 * 0.8 / 4000) + 1e-9


def test_storm_oracle_contract_failure_below_delta():
    noise = NoiseSpec.gaussian(sigma_f=0.2, m_c=0.04)
    prob = make_problem("quadratic", 2, 1.0, noise, seed=0)
    spec = StormOracleSpec(kappa_ef=1.0, delta0=0.1, kappa_eg=1.0, delta1=0.1, sigma_f=0.2, sigma_g=0.2)
    x = np.array([1.0, -0.5])
    for alpha in (0.5, 1.0):
        rate_v = empirical_oracle_failure_rate(StormValueOracle(spec), prob, x, alpha, 2000, 7)
        rate_g = empirical_oracle_failure_rate(StormGradOracle(spec), prob, x, alpha, 2000, 8)
        ci = 2.5758 * math.sqrt(0.1 * 0.9 / 2000)
        assert rate_v <= 0.1 + ci
        assert rate_g <= 0.1 + ci


def test_sass_grad_oracle_relative_contract():
    # interpolation-style noise: batch C/(kappa*alpha)^2 keeps the relative
    # error below min(tau, kappa*alpha) with failure rate well under delta1
    from adastoc.oracles import SassGradOracle

    noise = NoiseSpec.gaussian(m_c=0.0, m_v=1.0)
    prob = make_problem("quadratic", 2, 1.0, noise, seed=0)
    spec = SassOracleSpec(kappa=1.0, tau=10.0, delta1=0.1)
    oracle = SassGradOracle(spec, epsilon=0.1, case="nonconvex", batch_scale=9.0)
    x = np.array([1.0, -0.5])
    for alpha in (0.3, 1.0):
        rate = empirical_oracle_failure_rate(oracle, prob, x, alpha, 2000, 44)
        assert rate <= spec.delta1 + 2.5758 * math.sqrt(0.1 * 0.9 / 2000)


def test_zero_noise_oracle_never_fails():
    prob = make_problem("quadratic", 2, 1.0, NoiseSpec.none(), seed=0)
    spec = StormOracleSpec(sigma_f=0.0, sigma_g=0.0)
    rate = empirical_oracle_failure_rate(StormValueOracle(spec), prob, prob.x0, 0.5, 100, 0)
    assert rate == 0.0


def test_minibatch_suite_rejects_unbounded_gradient_noise():
    prob = make_problem("quadratic", 2, 1.0, NoiseSpec.gaussian(m_c=1.0, m_v=1.0), seed=0)
    suite = StormMinibatchOracles(StormOracleSpec(sigma_f=1.0, sigma_g=1.0))
    with pytest.raises(ConfigurationError):
        suite.validate(prob)


def test_sass_recommended_r():
    spec = SassOracleSpec(eps_f=0.1, lam=2.0)
    assert spec.recommended_r() == pytest.approx(0.2 + math.log(4.0))
