import math

import numpy as np
import pytest

from minimax_wald.analytics import (
    DesignParams,
    closed_form_regret,
    expected_stopping_time,
    solve_equilibrium,
)
from minimax_wald.costs import (
    CostFunction,
    expected_cost,
    general_objective,
    simulate_cost_paths,
    solve_general_equilibrium,
    zeta,
    zeta_constant,
)
from minimax_wald.errors import ConfigurationError, ParameterError


@pytest.mark.parametrize("method", ["collapsed", "nested"])
def test_zeta_constant_identity(method):
    cost = CostFunction.constant(1.7)
    for d in (0.3, 1.0, 2.19613, 5.0):
        for x in (-2.0, -0.4, 0.1, 0.53, 3.0):
            exact = zeta_constant(1.7, d, x)
            assert zeta(cost, d, x, method) == pytest.approx(exact, rel=1e-8)


def test_zeta_solves_the_ode():
    cost = CostFunction.polynomial([1.0, 0.5, 2.0])
    d, x, h = 1.7, 0.8, 1e-3
    z = lambda y: zeta(cost, d, y, rtol=1e-10)
    second = (z(x + h) - 2 * z(x) + z(x - h)) / h ** 2
    first = (z(x + h) - z(x - h)) / (2 * h)
    assert 0.5 * second + 0.5 * d * first == pytest.approx(float(cost(x)), rel=1e-4)


def test_expected_cost_constant_is_c_times_tau():
    cost = CostFunction.constant(2.5)
    for g, d in ((0.5, 2.0), (1.2, 0.4)):
        assert expected_cost(cost, g, d) == pytest.approx(2.5 * expected_stopping_time(g, d), rel=1e-9)


def test_objective_reduces_to_closed_form():
    p = DesignParams(c=1.3, sigma1=0.8, sigma0=1.4)
    cost = CostFunction.constant(1.3)
    for g, d in ((0.4, 1.0), (0.9, 3.0)):
        assert general_objective(cost, 0.8, 1.4, g, d) == pytest.approx(
            closed_form_regret(p, g, p.raw_gap(d)), rel=1e-9)


def test_general_equilibrium_constant_cost():
    sol = solve_general_equilibrium(CostFunction.constant(1.0))
    ref = solve_equilibrium(DesignParams())
    assert abs(sol.gamma_star - ref.gamma_star) < 1e-5
    assert abs(sol.delta_star - ref.delta_star) < 1e-5


def test_increasing_cost_lowers_threshold():
    sol = solve_general_equilibrium(CostFunction.polynomial([1.0, 0.0, 1.0]))
    assert sol.gamma_star < solve_equilibrium(DesignParams()).gamma_star
    assert sol.residual < 1e-5


def test_monte_carlo_expected_cost():
    cost = CostFunction.polynomial([1.0, 0.0, 1.0])
    acc = simulate_cost_paths(cost, 0.6, 2.0, 20000, seed=2)
    se = acc.std(ddof=1) / math.sqrt(acc.size)
    exact = expected_cost(cost, 0.6, 2.0)
    assert abs(acc.mean() - exact) < 3 * se + 0.01 * exact


def test_table_cost_matches_constant():
    t = CostFunction.table([0.0, 1.0, 2.0], [1.0, 1.0, 1.0])
    assert zeta(t, 2.0, 0.7) == pytest.approx(zeta_constant(1.0, 2.0, 0.7), rel=1e-8)
    assert t(5.0) == pytest.approx(1.0)


def test_cost_validation():
    with pytest.raises(ConfigurationError):
        CostFunction(lambda z: 1.0 + 0.1 * np.asarray(z), c_lower=0.5)  # asymmetric
    with pytest.raises(ConfigurationError):
        CostFunction(lambda z: 0.1 + 0 * np.asarray(z), c_lower=1.0)  # below bound
    with pytest.raises(ConfigurationError):
        CostFunction.polynomial([0.0, 1.0])
    with pytest.raises(ParameterError):
        zeta(CostFunction.constant(1.0), -1.0, 0.3)


def test_scalar_only_evaluator_is_vectorized():
    c = CostFunction(lambda z: 1.0 + math.cos(z) ** 2, c_lower=1.0)
    assert np.allclose(c(np.array([0.0, math.pi / 2])), [2.0, 1.0])
