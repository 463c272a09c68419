"""Monte Carlo aggregation and the thread-pool runner shared by the simulators."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

QUANTILE_LEVELS = (0.025, 0.25, 0.5, 0.75, 0.975)


@dataclass(frozen=True)
class RegretSummary:
    mean_regret: float
    std_error: float
    quantiles: tuple
    mean_tau: float
    max_tau: float
    mean_n_used: float
    misid_rate: float
    capped_fraction: float
    reps: int
    extras: dict = field(default_factory=dict, compare=False)


def exact_mean(x):
    # fsum is correctly rounded, hence independent of summation order
    x = np.asarray(x, dtype=float)
    return math.fsum(x.tolist()) / x.size if x.size else math.nan


def standard_error(x):
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return 0.0
    m = exact_mean(x)
    var = math.fsum(((x - m) ** 2).tolist()) / (x.size - 1)
    return math.sqrt(var / x.size)


def summarize(regret, tau, n_used, misid, capped, extras=None):
    """Reduce per-replication arrays to a :class:`RegretSummary`."""
    regret = np.asarray(regret, dtype=float)
    q = tuple(float(v) for v in np.quantile(np.sort(regret), QUANTILE_LEVELS))
    return RegretSummary(
        mean_regret=exact_mean(regret),
        std_error=standard_error(regret),
        quantiles=q,
        mean_tau=exact_mean(tau),
        max_tau=float(np.max(tau)),
        mean_n_used=exact_mean(n_used),
        misid_rate=exact_mean(np.asarray(misid, dtype=float)),
        capped_fraction=exact_mean(np.asarray(capped, dtype=float)),
        reps=int(regret.size),
        extras=dict(extras or {}),
    )


def run_chunked(work, n, threads=1):
    """Call ``work(lo, hi)`` over a partition of ``range(n)``.

    ``work`` must write its results into caller-owned arrays at ``[lo, hi)``
    and release the GIL (numba ``nogil`` kernels do).  Results therefore do
    not depend on ``threads``.
    """
    threads = max(1, int(threads))
    if threads == 1 or n < 2:
        work(0, n)
        return
    bounds = np.linspace(0, n, min(threads, n) + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(work, int(lo), int(hi))
                   for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        for f in futures:
            f.result()
