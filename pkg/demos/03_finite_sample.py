"""
The finite-sample experiment
============================

Outcomes arrive one at a time; arms are tracked to their Neyman shares and
the experiment stops once |rho_n| crosses the threshold.  Variances can be
known, estimated in a forced-exploration phase, or updated with conjugate
priors.  Stopping checks can be batched.
"""

# %%
import numpy as np

from minimax_wald.engine import (
    ConjugatePrior,
    DiscreteConfig,
    ForcedExploration,
    KnownVariance,
    OutcomeModel,
    estimate_discrete_regret,
    run_replications,
)
from minimax_wald.rng import stream_keys
from minimax_wald.harness import CampaignSpec, regret_profile

# %%
# Bernoulli arms with p0 = 0.4 at n = 1000; the regret profile over the local gap
spec = CampaignSpec("discrete", tuple(np.arange(0, 5.01, 0.5)), 10_000, master_seed=1,
                    config=DiscreteConfig(n=1000, variance_mode=ForcedExploration(min_sd=1e-3)),
                    model=OutcomeModel.bernoulli(0.4, 0.0), threads=4)
res = regret_profile(spec)
for (g, s), ref in zip(res.rows, res.reference):
    print(f"gap {g:3.1f}  regret {s.mean_regret:.4f} (IQR {s.quantiles[1]:.3f}-{s.quantiles[3]:.3f})"
          f"  diffusion {ref:.4f}")
print(f"V* = {res.v_star:.4f}, least favorable gap {res.gap_star:.3f}")

# %%
# The three variance modes at the least favorable gap
model = OutcomeModel.bernoulli(0.4, res.gap_star)
for mode in (KnownVariance(), ForcedExploration(min_sd=1e-3), ConjugatePrior()):
    s = estimate_discrete_regret(DiscreteConfig(n=1000, variance_mode=mode), model, 10_000, 3, threads=4)
    print(f"{type(mode).__name__:18} regret {s.mean_regret:.4f}+-{s.std_error:.4f}  mean N {s.mean_n_used:.0f}")

# %%
# Batching: stop checks every b observations
for b in (1, 10, 50):
    s = estimate_discrete_regret(DiscreteConfig(n=1000, batch_size=b), model, 10_000, 4, threads=4)
    print(f"batch {b:3}  regret {s.mean_regret:.4f}  mean N {s.mean_n_used:.1f}")

# %%
# Neyman tracking stays within one observation of the target share
out = run_replications(DiscreteConfig(n=500), OutcomeModel.gaussian(1.0, 0.0, 0.5, 2.0),
                       stream_keys(0, 1000))
print("max |q1 - N sigma1/(sigma1+sigma0)| over all paths:", out["fine_balance"].max())
