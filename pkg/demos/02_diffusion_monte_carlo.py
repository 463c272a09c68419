"""
Simulating the diffusion
========================

Euler paths of rho with drift gap/(sigma1+sigma0), stopped at |rho| >= gamma.
Grid-only detection overshoots the barrier; the Brownian-bridge test removes
most of that bias.
"""

# %%
from minimax_wald.analytics import DesignParams, closed_form_regret, expected_stopping_time, solve_equilibrium
from minimax_wald.diffusion import DiffusionSpec, estimate_regret

p = DesignParams()
eq = solve_equilibrium(p)
gap = p.raw_gap(eq.delta_star)

# %%
exact_tau = expected_stopping_time(eq.gamma_star, eq.delta_star)
for dt in (1e-2, 1e-3):
    for bridge in (False, True):
        s = estimate_regret(DiffusionSpec(p, gap, 0.0, eq.gamma_star, dt=dt, bridge=bridge),
                            50_000, master_seed=1, threads=4)
        print(f"dt={dt:g} bridge={bridge!s:5}  E[tau]={s.mean_tau:.4f} (exact {exact_tau:.4f})  "
              f"regret={s.mean_regret:.4f}+-{s.std_error:.4f}")

# %%
# Same seed, any thread count: identical summaries
a = estimate_regret(DiffusionSpec(p, gap, 0.0, eq.gamma_star), 20_000, 7, threads=1)
b = estimate_regret(DiffusionSpec(p, gap, 0.0, eq.gamma_star), 20_000, 7, threads=8)
print("identical across threads:", a == b)

# %%
# Regret against the closed form over a few thresholds
for g in (0.3, eq.gamma_star, 0.9):
    s = estimate_regret(DiffusionSpec(p, gap, 0.0, g, bridge=True), 50_000, 2, threads=4)
    print(f"gamma={g:.3f}  MC {s.mean_regret:.4f}+-{s.std_error:.4f}   closed form "
          f"{closed_form_regret(p, g, gap):.4f}")
