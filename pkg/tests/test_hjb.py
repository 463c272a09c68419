import math

import numpy as np
import pytest

from minimax_wald.analytics import DesignParams, solve_equilibrium
from minimax_wald.errors import ConfigurationError
from minimax_wald.hjb import HjbGrid, belief, obstacle, simulate_stopping_value, solve_hjb

EQ = solve_equilibrium(DesignParams())


@pytest.fixture(scope="module")
def sol():
    return solve_hjb(HjbGrid.symmetric(d_rho=5e-3, T=6.0))


def test_belief_examples():
    assert belief(0.0, 2.0) == 0.5
    assert belief(math.log(3) / 2.0, 2.0) == pytest.approx(0.75)
    r = np.linspace(-500, 500, 1001)
    m = belief(r, 3.0)
    assert np.all(np.isfinite(m)) and np.all(np.diff(m) >= 0)


def test_obstacle_examples():
    d = EQ.delta_star
    assert obstacle(0.0, d, 2.0) == pytest.approx(2.0 * d / 4)
    assert obstacle(1e3, d, 2.0) == 0.0
    r = np.linspace(-3, 3, 301)
    assert np.array_equal(obstacle(r, d, 2.0), obstacle(-r, d, 2.0))


def test_value_and_boundary(sol):
    assert abs(sol.value0 - EQ.value) < 0.02 * EQ.value
    assert abs(sol.boundary0 - EQ.gamma_star) < 2 * sol.grid.d_rho


def test_obstacle_condition_and_terminal(sol):
    assert np.all(sol.values <= sol.obstacle[None, :] + 1e-12)
    assert np.array_equal(sol.values[-1], sol.obstacle)
    assert sol.times[0] == 0.0 and sol.times[-1] == pytest.approx(6.0)


def test_symmetry(sol):
    assert np.max(np.abs(sol.values - sol.values[:, ::-1])) < 1e-10


def test_stationary_far_from_horizon(sol):
    assert sol.dvdt0 < 1e-3


def test_refinement_converges():
    vals = [solve_hjb(HjbGrid.symmetric(d_rho=h, T=4.0)).value0 for h in (0.02, 0.01, 0.005)]
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])
    errs = [abs(v - EQ.value) for v in vals]
    assert errs[0] > errs[1] > errs[2]


def test_truncation_insensitive():
    a = solve_hjb(HjbGrid.symmetric(d_rho=0.01, T=4.0)).value0
    b = solve_hjb(HjbGrid.symmetric(d_rho=0.01, T=4.0, rho_max=8 * EQ.gamma_star)).value0
    assert abs(a - b) < 1e-8


@pytest.mark.parametrize("rho0", [0.0, 0.2, 0.4])
def test_matches_stopping_monte_carlo(sol, rho0):
    mean, se = simulate_stopping_value(rho0, EQ.gamma_star, EQ.delta_star, 2.0, 1.0, 20000,
                                       seed=int(rho0 * 10))
    v = sol.value_at(rho0)
    assert abs(mean - v) < 3 * se + 0.02 * v


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        HjbGrid(-1, 1, 201, T=1.0, delta_star=2.0, n_t=10)  # dt far above the bound
    with pytest.raises(ConfigurationError):
        HjbGrid.symmetric(d_rho=0.01, rho_max=1.0)  # boundary too close to the edge
    with pytest.raises(ConfigurationError):
        HjbGrid(1, -1, 201, T=1.0, delta_star=2.0)
