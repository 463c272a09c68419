import math

import numpy as np
import pytest

from minimax_wald.analytics import DesignParams, solve_equilibrium
from minimax_wald.engine import (
    ConjugatePrior,
    DiscreteConfig,
    EngineState,
    ForcedExploration,
    KnownVariance,
    OutcomeModel,
    estimate_discrete_regret,
    forced_exploration_estimate,
    neyman_tracking_arm,
    run_experiment,
    run_replications,
    should_stop,
    threshold_from_sds,
    update_rho,
)
from minimax_wald.errors import ConfigurationError, ParameterError
from minimax_wald.rng import CounterStream, stream_keys

MODES = [KnownVariance(), ForcedExploration(min_sd=1e-3), ConjugatePrior()]


@pytest.mark.parametrize("mode", MODES, ids=["known", "forced", "conjugate"])
@pytest.mark.parametrize("model", [OutcomeModel.bernoulli(0.4, 1.2),
                                   OutcomeModel.gaussian(1.0, -0.5, 1.0, 2.0)],
                         ids=["bernoulli", "gaussian"])
def test_python_engine_matches_kernel(mode, model):
    cfg = DiscreteConfig(n=400, variance_mode=mode, batch_size=3)
    keys = stream_keys(4, 25)
    out = run_replications(cfg, model, keys)
    for i, k in enumerate(keys):
        r = run_experiment(cfg, model, CounterStream(int(k)))
        assert r.n_used == out["n_used"][i]
        assert r.chose_one == out["chose_one"][i]
        assert r.regret == out["regret"][i]
        assert r.gamma == out["gamma"][i]


def test_threshold_scales_with_sds():
    g = threshold_from_sds(1.0, 1.0, 1.0)
    assert g == pytest.approx(solve_equilibrium(DesignParams()).gamma_star, rel=1e-12)
    p = DesignParams(2.0, 0.3, 0.7)
    assert threshold_from_sds(2.0, 0.3, 0.7) == pytest.approx(solve_equilibrium(p).gamma_star, rel=1e-6)


def test_tracking_keeps_fine_balance():
    st = EngineState(n=100, sigma_hat1=1.0, sigma_hat0=3.0)
    share = 0.25
    for _ in range(1000):
        arm = neyman_tracking_arm(st)
        update_rho(st, arm, 0.0)
        assert abs(st.count1 - st.periods * share) <= 1.0


def test_fine_balance_over_campaign():
    cfg = DiscreteConfig(n=500)
    out = run_replications(cfg, OutcomeModel.gaussian(0.5, 0.0, 0.5, 1.5), stream_keys(3, 1000))
    assert np.all(out["fine_balance"] <= 1.0)


def test_batching_stops_on_multiples():
    cfg = DiscreteConfig(n=300, batch_size=7)
    out = run_replications(cfg, OutcomeModel.bernoulli(0.5, 1.0), stream_keys(8, 500))
    assert np.all(out["n_used"] % 7 == 0)


def test_should_stop_respects_batch_and_horizon():
    cfg = DiscreteConfig(n=10, batch_size=4, horizon_T=1.0)
    st = EngineState(n=10, sigma_hat1=1.0, sigma_hat0=1.0)
    for _ in range(3):
        update_rho(st, 1, 50.0)
    assert should_stop(st, cfg, gamma=0.1) == "continue"
    update_rho(st, 0, 0.0)
    assert should_stop(st, cfg, gamma=0.1) == "stop"
    st2 = EngineState(n=10, sigma_hat1=1.0, sigma_hat0=1.0, count1=5, count0=5)
    assert should_stop(st2, cfg, gamma=100.0) == "stop"


def test_forced_exploration_size_and_estimate():
    assert ForcedExploration().size(1000) == 50
    assert ForcedExploration().size(10000) == 500
    assert ForcedExploration(exponent=0.6, floor=4).size(10000) == math.ceil(10000 ** 0.6)
    cfg = DiscreteConfig(n=20000, variance_mode=ForcedExploration())
    s1, s0, used = forced_exploration_estimate(cfg, OutcomeModel.gaussian(0, 0, 2.0, 0.5),
                                               CounterStream(5))
    assert used == 1000
    assert s1 == pytest.approx(2.0, rel=0.1) and s0 == pytest.approx(0.5, rel=0.1)


def test_forced_exploration_uses_at_least_exploration_periods():
    cfg = DiscreteConfig(n=1000, variance_mode=ForcedExploration(min_sd=1e-3))
    out = run_replications(cfg, OutcomeModel.bernoulli(0.4, 3.0), stream_keys(1, 300))
    assert out["n_used"].min() >= 50


def test_degenerate_sd_is_reported():
    cfg = DiscreteConfig(n=100, variance_mode=ForcedExploration(floor=4, fraction=0.0))
    model = OutcomeModel.bernoulli(0.001, 0.0)
    with pytest.raises(ConfigurationError):
        run_replications(cfg, model, stream_keys(0, 200))


def test_conjugate_prior_validation():
    with pytest.raises(ConfigurationError):
        DiscreteConfig(n=10, variance_mode=ConjugatePrior(shape0=1.0))


def test_bernoulli_probability_out_of_range():
    with pytest.raises(ParameterError):
        OutcomeModel.bernoulli(0.9, 5.0).outcome_means(10)
    with pytest.raises(ParameterError):
        OutcomeModel.bernoulli(1.2, 0.0)


def test_custom_model_and_influence_fallback():
    def sampler(arm, uniform):
        return (0.3 if arm == 1 else 0.0) + (uniform() - 0.5) * math.sqrt(12)

    model = OutcomeModel.custom(sampler, means=(0.0, 0.3), sds=(1.0, 1.0))
    cfg = DiscreteConfig(n=100, influence=lambda arm, y: y)
    out = run_replications(cfg, model, stream_keys(2, 20))
    r = run_experiment(cfg, model, CounterStream(int(stream_keys(2, 20)[5])))
    assert r.n_used == out["n_used"][5]


def test_gaussian_known_variance_close_to_limit():
    cfg = DiscreteConfig(n=200)
    s = estimate_discrete_regret(cfg, OutcomeModel.gaussian_gap(2.0), 20000, 6, threads=4)
    v = solve_equilibrium(DesignParams()).value
    assert abs(s.mean_regret - v) < 3 * s.std_error + 0.05 * v


def test_replications_deterministic_across_threads():
    cfg = DiscreteConfig(n=1000, variance_mode=ForcedExploration(min_sd=1e-3))
    m = OutcomeModel.bernoulli(0.4, 1.5)
    base = estimate_discrete_regret(cfg, m, 2000, 77, threads=1)
    assert estimate_discrete_regret(cfg, m, 2000, 77, threads=8) == base


def test_config_validation():
    for kw in (dict(n=0), dict(n=10, c=0.0), dict(n=10, batch_size=0), dict(n=10, gamma=-1.0),
               dict(n=10, horizon_T=0.0)):
        with pytest.raises(ConfigurationError):
            DiscreteConfig(**kw)
