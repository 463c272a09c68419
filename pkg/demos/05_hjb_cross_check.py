"""
HJB variational inequality
==========================

Solve the optimal stopping problem under the least favorable prior on a
grid and compare with the game solution: V(0,0) should equal V* and the
stopping boundary should sit at gamma*.
"""

# %%
import numpy as np

from minimax_wald.analytics import DesignParams, solve_equilibrium
from minimax_wald.hjb import HjbGrid, simulate_stopping_value, solve_hjb

eq = solve_equilibrium(DesignParams())
grid = HjbGrid.symmetric(d_rho=5e-3, T=6.0)
print(f"{grid.n_rho} space points, {grid.steps} time steps (dt = {grid.dt:.2e})")
sol = solve_hjb(grid)
print(f"V(0,0) = {sol.value0:.5f}   V* = {eq.value:.5f}")
print(f"boundary at t=0: {sol.boundary0:.4f}   gamma* = {eq.gamma_star:.4f}")

# %%
# Far from the horizon the boundary is flat; it collapses only near T
for t, b in list(zip(sol.times, sol.boundary_curve))[::40] + [(sol.times[-1], sol.boundary_curve[-1])]:
    print(f"t={t:5.2f}  boundary {b:.4f}")

# %%
# Stopping-value Monte Carlo at a few starting points
for r0 in (0.0, 0.25, 0.5):
    m, se = simulate_stopping_value(r0, eq.gamma_star, eq.delta_star, 2.0, 1.0, 20_000, seed=1)
    print(f"rho0={r0:.2f}  PDE {sol.value_at(r0):.4f}  MC {m:.4f}+-{se:.4f}")

# %%
for h in (0.02, 0.01, 0.005):
    v = solve_hjb(HjbGrid.symmetric(d_rho=h, T=4.0)).value0
    print(f"d_rho={h:<6} V(0,0)={v:.5f}  error {abs(v - eq.value):.2e}")
