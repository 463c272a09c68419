"""
State-dependent sampling costs
==============================

With a flow cost c(rho) the expected sampling cost of a threshold rule is
E[zeta(rho_tau)], where zeta solves a second-order ODE.  A constant cost
recovers the basic game.
"""

# %%
import math

from minimax_wald.analytics import DesignParams, solve_equilibrium
from minimax_wald.costs import (
    CostFunction,
    expected_cost,
    simulate_cost_paths,
    solve_general_equilibrium,
    zeta,
    zeta_constant,
)

flat = CostFunction.constant(1.0)
print("zeta, quadrature vs closed form:", zeta(flat, 2.0, 0.5), zeta_constant(1.0, 2.0, 0.5))

# %%
base = solve_equilibrium(DesignParams())
for cost in (flat, CostFunction.polynomial([1.0, 0.0, 1.0]),
             CostFunction.table([0.0, 0.5, 1.0], [1.0, 1.5, 3.0])):
    sol = solve_general_equilibrium(cost)
    print(f"{cost.name:28} gamma*={sol.gamma_star:.5f} delta*={sol.delta_star:.5f} "
          f"value={sol.value:.5f}")
print(f"{'basic game':28} gamma*={base.gamma_star:.5f} delta*={base.delta_star:.5f}")

# %%
# Monte Carlo check of the expected cost
q = CostFunction.polynomial([1.0, 0.0, 1.0])
acc = simulate_cost_paths(q, 0.6, 2.0, 20_000, seed=2)
print(f"MC {acc.mean():.4f} +- {acc.std() / math.sqrt(acc.size):.4f}  vs  {expected_cost(q, 0.6, 2.0):.4f}")
