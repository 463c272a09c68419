"""
Equilibrium of the costly-sampling game
=======================================

The decision maker picks a stopping threshold gamma for the standardized
score difference rho; nature picks the gap.  At the saddle point the
threshold is gamma* and nature's least favorable gap is delta*.
"""

# %%
import numpy as np

from minimax_wald.analytics import (
    DesignParams,
    closed_form_regret,
    efficiency_ratio,
    nonadaptive_duration,
    solve_bai_equilibrium,
    solve_equilibrium,
    universal_constants,
)

p = DesignParams(c=1.0, sigma1=1.0, sigma0=1.0)
sol = solve_equilibrium(p)
print(f"gamma* = {sol.gamma_star:.6f}")
print(f"delta* = {sol.delta_star:.6f}")
print(f"V*     = {sol.value:.6f}")
print(f"alpha* = {sol.alpha:.6f}  (chance of implementing the worse arm)")

# %%
# Everything scales with eta = (2c / (sigma1 + sigma0))^(1/3); alpha* does not move.
for c, s1, s0 in [(0.1, 1, 1), (4, 1, 1), (1, 0.3, 2.5), (10, 5, 0.2)]:
    q = DesignParams(c, s1, s0)
    e = solve_equilibrium(q)
    print(f"c={c:<5} sd=({s1}, {s0})  eta*gamma={q.eta * e.gamma_star:.6f}  "
          f"delta/eta={e.delta_star / q.eta:.6f}  alpha={e.alpha:.6f}")

# %%
# The regret curve of gamma* over the true gap peaks at the least favorable gap
gaps = np.linspace(0, 5, 11)
curve = [closed_form_regret(p, sol.gamma_star, g) for g in gaps]
for g, r in zip(gaps, curve):
    print(f"gap {g:4.1f}  regret {r:.4f}" + ("  <- peak" if r == max(curve) else ""))

# %%
# Fixed-horizon comparison: how long would a non-adaptive design need?
t_fixed = nonadaptive_duration(p)
e_tau = sol.value - sol.alpha * p.raw_gap(sol.delta_star)
print(f"fixed horizon needed: {t_fixed:.4f}; adaptive E[tau*] = {e_tau / p.c:.4f}")
print(f"efficiency ratio: {efficiency_ratio():.4f}")

bai = solve_bai_equilibrium()
print(f"unit-horizon BAI: worst gap {bai.delta_bar:.5f}, regret {bai.value:.5f}")
print(universal_constants())
