"""Euler-Maruyama Monte Carlo for the continuous-time threshold rule.

Under Neyman allocation the standardized score difference is a Brownian
motion with drift ``(mu1 - mu0) / (sigma1 + sigma0)``.  Paths are stepped on
a grid of width ``dt`` and stopped at the first grid time where
``|rho| >= gamma``.  Grid-only detection overshoots the barrier and biases
the stopping time upward by O(sqrt(dt)); ``bridge=True`` adds the
Brownian-bridge crossing test between grid points (one extra uniform per
step) and reports the crossing time as the midpoint of the step in which it
was detected, which reduces the bias to O(dt).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .analytics import DesignParams
from .errors import ParameterError
from .rng import CounterStream, nb_normal_pair, nb_uniform, stream_key, stream_keys
from .summary import run_chunked, summarize

DEFAULT_DT = 1e-3
_NO_HORIZON_STEPS = 2 ** 62


@dataclass(frozen=True)
class DiffusionSpec:
    params: DesignParams
    mu1: float
    mu0: float
    gamma: float
    horizon: Optional[float] = None
    dt: float = DEFAULT_DT
    bridge: bool = False

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ParameterError(f"dt must be a positive finite number, got {self.dt!r}")
        if not (self.gamma >= 0):
            raise ParameterError(f"gamma must be >= 0, got {self.gamma!r}")
        for name in ("mu1", "mu0"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.horizon is not None:
            steps = self.horizon / self.dt
            if not (self.horizon > 0 and abs(steps - round(steps)) < 1e-9 * max(1.0, steps)):
                raise ParameterError("horizon must be a positive multiple of dt")
        elif math.isinf(self.gamma):
            raise ParameterError("an infinite threshold needs a finite horizon")

    @property
    def gap(self):
        return self.mu1 - self.mu0

    @property
    def drift(self):
        return self.gap / self.params.sigma_sum

    @property
    def max_steps(self):
        if self.horizon is None:
            return _NO_HORIZON_STEPS
        return int(round(self.horizon / self.dt))


@dataclass(frozen=True)
class PathOutcome:
    tau: float
    chose_one: int
    hit_boundary: bool
    regret: float


def realized_regret(gap, chose_one, cost_rate, tau):
    """``max(gap, 0) - gap * delta + c * tau``."""
    return max(gap, 0.0) - gap * chose_one + cost_rate * tau


def simulate_path(spec, rng_stream):
    """One path of the threshold rule, stepped in pure Python.

    ``rng_stream`` is a :class:`~minimax_wald.rng.CounterStream` (or an int
    key).  The result is bit-identical to the vectorized engine on the same
    stream.
    """
    if not isinstance(rng_stream, CounterStream):
        rng_stream = CounterStream(rng_stream)
    gamma, dt = spec.gamma, spec.dt
    drift_dt = spec.drift * dt
    sqdt = math.sqrt(dt)
    max_steps = spec.max_steps
    rho, k, hit, tau = 0.0, 0, False, 0.0
    if gamma <= 0.0:
        hit = True
    while not hit and k < max_steps:
        rho_prev = rho
        rho = rho + drift_dt + sqdt * rng_stream.normal()
        k += 1
        if abs(rho) >= gamma:
            hit = True
        elif spec.bridge:
            p_up = math.exp(-2.0 * (gamma - rho_prev) * (gamma - rho) / dt)
            p_dn = math.exp(-2.0 * (gamma + rho_prev) * (gamma + rho) / dt)
            u = rng_stream.uniform()
            if u < p_up:
                hit, rho = True, gamma
            elif u < p_up + p_dn:
                hit, rho = True, -gamma
    if hit and spec.bridge and k > 0:
        tau = (k - 0.5) * dt
    else:
        tau = k * dt
    chose = 1 if rho >= 0.0 else 0
    return PathOutcome(tau=tau, chose_one=chose, hit_boundary=hit,
                       regret=realized_regret(spec.gap, chose, spec.params.c, tau))


@numba.njit(nogil=True, cache=True)
def _paths_kernel(keys, drifts, gamma, dt, max_steps, bridge, tau_out, chose_out, hit_out):
    sqdt = math.sqrt(dt)
    for i in range(keys.shape[0]):
        key = keys[i]
        counter = np.uint64(0)
        drift_dt = drifts[i] * dt
        rho = 0.0
        k = 0
        hit = gamma <= 0.0
        have_spare = False
        spare = 0.0
        while not hit and k < max_steps:
            if have_spare:
                z = spare
                have_spare = False
            else:
                z, spare, counter = nb_normal_pair(key, counter)
                have_spare = True
            rho_prev = rho
            rho = rho + drift_dt + sqdt * z
            k += 1
            if abs(rho) >= gamma:
                hit = True
            elif bridge:
                p_up = math.exp(-2.0 * (gamma - rho_prev) * (gamma - rho) / dt)
                p_dn = math.exp(-2.0 * (gamma + rho_prev) * (gamma + rho) / dt)
                u, counter = nb_uniform(key, counter)
                if u < p_up:
                    hit = True
                    rho = gamma
                elif u < p_up + p_dn:
                    hit = True
                    rho = -gamma
        if hit and bridge and k > 0:
            tau_out[i] = (k - 0.5) * dt
        else:
            tau_out[i] = k * dt
        chose_out[i] = 1 if rho >= 0.0 else 0
        hit_out[i] = hit


def simulate_paths(spec, keys, gaps=None, threads=1):
    """Run one path per stream key; ``gaps`` optionally overrides ``mu1 - mu0`` per path.

    Returns a dict of per-path arrays: ``tau``, ``chose_one``, ``hit``,
    ``gap`` and ``regret``.
    """
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    n = keys.shape[0]
    if gaps is None:
        gaps = np.full(n, spec.gap)
    gaps = np.ascontiguousarray(gaps, dtype=float)
    drifts = gaps / spec.params.sigma_sum
    tau = np.empty(n)
    chose = np.empty(n, dtype=np.int8)
    hit = np.empty(n, dtype=np.bool_)
    gamma = float(spec.gamma)

    def work(lo, hi):
        _paths_kernel(keys[lo:hi], drifts[lo:hi], gamma, spec.dt, spec.max_steps,
                      spec.bridge, tau[lo:hi], chose[lo:hi], hit[lo:hi])

    run_chunked(work, n, threads)
    regret = np.maximum(gaps, 0.0) - gaps * chose + spec.params.c * tau
    return {"tau": tau, "chose_one": chose, "hit": hit, "gap": gaps, "regret": regret}


def misidentified(gaps, chose_one):
    """True where the inferior arm was implemented (never at a zero gap)."""
    gaps = np.asarray(gaps)
    chose_one = np.asarray(chose_one)
    return ((gaps > 0) & (chose_one == 0)) | ((gaps < 0) & (chose_one == 1))


def summarize_paths(out):
    capped = ~out["hit"]
    return summarize(out["regret"], out["tau"], out["tau"],
                     misidentified(out["gap"], out["chose_one"]), capped)


def estimate_regret(spec, reps, master_seed, threads=1):
    """Monte Carlo :class:`RegretSummary` for ``spec`` over ``reps`` paths.

    Path ``i`` uses ``stream_key(master_seed, i)``; the summary is
    bit-identical for any ``threads``.  ``mean_n_used`` is reported in time
    units for the diffusion.
    """
    if reps < 1:
        raise ParameterError("reps must be >= 1")
    return summarize_paths(simulate_paths(spec, stream_keys(master_seed, reps), threads=threads))


def derived_stream(master_seed, index):
    return CounterStream(stream_key(master_seed, index))
