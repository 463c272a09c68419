import math

import numpy as np
import pytest

from minimax_wald.analytics import DesignParams, closed_form_regret, expected_stopping_time, solve_equilibrium
from minimax_wald.diffusion import (
    DiffusionSpec,
    estimate_regret,
    misidentified,
    simulate_path,
    simulate_paths,
)
from minimax_wald.errors import ParameterError
from minimax_wald.rng import CounterStream, stream_keys

P = DesignParams()
G = solve_equilibrium(P).gamma_star


@pytest.mark.parametrize("bridge", [False, True])
def test_python_path_matches_kernel(bridge):
    spec = DiffusionSpec(P, mu1=1.3, mu0=0.2, gamma=G, dt=1e-3, bridge=bridge)
    keys = stream_keys(11, 40)
    out = simulate_paths(spec, keys)
    for i, k in enumerate(keys):
        r = simulate_path(spec, CounterStream(int(k)))
        assert r.tau == out["tau"][i]
        assert r.chose_one == out["chose_one"][i]
        assert r.regret == out["regret"][i]


def test_thread_count_does_not_change_results():
    spec = DiffusionSpec(P, mu1=2.0, mu0=0.0, gamma=G)
    base = estimate_regret(spec, 3000, 5, threads=1)
    for t in (2, 8):
        assert estimate_regret(spec, 3000, 5, threads=t) == base


def test_zero_threshold_stops_immediately():
    r = simulate_path(DiffusionSpec(P, 1.0, 0.0, gamma=0.0), CounterStream(1))
    assert r.tau == 0.0 and r.chose_one == 1 and r.regret == 0.0


def test_zero_gap_has_only_sampling_regret():
    spec = DiffusionSpec(P, 0.0, 0.0, gamma=G, bridge=True)
    s = estimate_regret(spec, 20000, 3, threads=4)
    assert s.misid_rate == 0.0
    assert s.mean_regret == s.mean_tau
    assert abs(s.mean_regret - G * G) < 3 * s.std_error + 0.01 * G * G


def test_bridge_reduces_discretization_bias():
    spec = DiffusionSpec(P, 2.196, 0.0, gamma=G, dt=1e-3)
    exact = expected_stopping_time(G, P.standardize(2.196))
    grid = estimate_regret(spec, 20000, 9, threads=4).mean_tau
    bridged = estimate_regret(DiffusionSpec(P, 2.196, 0.0, gamma=G, dt=1e-3, bridge=True),
                              20000, 9, threads=4).mean_tau
    assert abs(bridged - exact) < abs(grid - exact)
    assert grid > exact  # grid-only detection overshoots


def test_regret_matches_closed_form_small_run():
    spec = DiffusionSpec(P, 1.5, 0.0, gamma=0.7, bridge=True)
    s = estimate_regret(spec, 40000, 2, threads=4)
    cf = closed_form_regret(P, 0.7, 1.5)
    assert abs(s.mean_regret - cf) < 3 * s.std_error + 0.02 * cf


def test_horizon_caps_paths():
    spec = DiffusionSpec(P, 0.0, 0.0, gamma=10.0, horizon=0.5, dt=1e-2)
    s = estimate_regret(spec, 200, 1)
    assert s.max_tau <= 0.5 + 1e-12
    assert s.capped_fraction > 0.9


def test_misidentified_convention():
    gaps = np.array([1.0, 1.0, -1.0, 0.0, 0.0])
    chose = np.array([1, 0, 1, 0, 1])
    assert misidentified(gaps, chose).tolist() == [False, True, True, False, False]


@pytest.mark.parametrize("kw", [dict(dt=0.0), dict(dt=math.nan), dict(gamma=-1.0),
                                dict(mu1=math.inf), dict(horizon=0.3333, dt=0.1),
                                dict(gamma=math.inf)])
def test_spec_validation(kw):
    args = dict(params=P, mu1=1.0, mu0=0.0, gamma=0.5)
    args.update(kw)
    with pytest.raises(ParameterError):
        DiffusionSpec(**args)


def test_reps_must_be_positive():
    with pytest.raises(ParameterError):
        estimate_regret(DiffusionSpec(P, 1.0, 0.0, 0.5), 0, 1)
