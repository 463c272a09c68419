"""Finite-difference solution of the optimal-stopping variational inequality.

Under the least favorable prior the posterior that arm 1 is best is
``m(rho) = logistic(delta* rho)``.  Stopping at ``rho`` costs the posterior
regret ``obstacle(rho) = ((sigma1 + sigma0) delta* / 2) min(m, 1 - m)`` and
continuing costs ``c`` per unit time while ``rho`` diffuses with drift
``(delta*/2)(2 m - 1)``.  The value ``V(rho, t)`` on ``[0, T]`` solves

    min{ obstacle - V,  c + V_t + (delta*/2)(2m - 1) V_rho + V_rhorho / 2 } = 0,
    V(rho, T) = obstacle(rho).

We march backward in time with an explicit monotone scheme (upwind first
derivative, central second derivative) and project onto the obstacle after
every step.  The scheme is monotone iff ``dt <= drho**2 / (1 + |b| drho)``
where ``b`` bounds the drift; the default time step is 0.9 of that bound.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .analytics import DesignParams, solve_equilibrium
from .errors import ConfigurationError, NumericalError, ParameterError

STABILITY_FRACTION = 0.9


def belief(rho, delta_star):
    """Logistic posterior ``exp(d rho) / (1 + exp(d rho))``, overflow-free."""
    x = delta_star * np.asarray(rho, dtype=float)
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return out if out.ndim else float(out)


def obstacle(rho, delta_star, sigma_sum):
    """Posterior regret of stopping now at ``rho``."""
    x = delta_star * np.abs(np.asarray(rho, dtype=float))
    # min(m, 1 - m) = exp(-|x|) / (1 + exp(-|x|))
    e = np.exp(-x)
    out = 0.5 * sigma_sum * delta_star * e / (1.0 + e)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class HjbGrid:
    """Space-time grid and problem constants.

    ``n_t=None`` picks the largest stable step (times ``STABILITY_FRACTION``)
    that divides ``T`` evenly.  Only every ``save_every``-th time layer is
    kept, plus ``t = 0`` and ``t = T``.
    """

    rho_min: float
    rho_max: float
    n_rho: int
    T: float
    delta_star: float
    c: float = 1.0
    sigma_sum: float = 2.0
    n_t: Optional[int] = None
    save_every: int = 1000
    gamma_ref: Optional[float] = None

    def __post_init__(self):
        if not (self.rho_max > self.rho_min):
            raise ConfigurationError("rho_max must exceed rho_min")
        if self.n_rho < 5:
            raise ConfigurationError("n_rho must be >= 5")
        if not (self.T > 0 and self.delta_star > 0 and self.c > 0 and self.sigma_sum > 0):
            raise ConfigurationError("T, delta_star, c and sigma_sum must be > 0")
        if self.n_t is not None and self.dt > self.stability_bound * (1 + 1e-12):
            raise ConfigurationError(
                f"time step {self.dt:.3e} exceeds the monotonicity bound {self.stability_bound:.3e}")
        if self.gamma_ref is not None:
            reach = min(self.rho_max, -self.rho_min)
            if reach < 3.0 * self.gamma_ref:
                raise ConfigurationError(
                    f"grid reaches only {reach:.3g}; need at least 3 * gamma = {3 * self.gamma_ref:.3g}")

    @classmethod
    def symmetric(cls, d_rho=5e-3, T=6.0, params=None, rho_max=None, **kw):
        """Symmetric grid around 0 with spacing ``d_rho``; ``rho_max`` defaults to 4 gamma*."""
        params = params or DesignParams()
        eq = solve_equilibrium(params)
        if rho_max is None:
            rho_max = 4.0 * eq.gamma_star
        half = int(math.ceil(rho_max / d_rho))
        return cls(rho_min=-half * d_rho, rho_max=half * d_rho, n_rho=2 * half + 1, T=T,
                   delta_star=eq.delta_star, c=params.c, sigma_sum=params.sigma_sum,
                   gamma_ref=eq.gamma_star, **kw)

    @property
    def d_rho(self):
        return (self.rho_max - self.rho_min) / (self.n_rho - 1)

    @property
    def rho(self):
        return np.linspace(self.rho_min, self.rho_max, self.n_rho)

    @property
    def max_drift(self):
        return 0.5 * self.delta_star

    @property
    def stability_bound(self):
        h = self.d_rho
        return h * h / (1.0 + self.max_drift * h)

    @property
    def steps(self):
        if self.n_t is not None:
            return int(self.n_t)
        return int(math.ceil(self.T / (STABILITY_FRACTION * self.stability_bound)))

    @property
    def dt(self):
        return self.T / self.steps


@dataclass(frozen=True)
class HjbSolution:
    """``values[j]`` is ``V(rho, times[j])``; rows run from ``t = 0`` to ``t = T``."""

    values: np.ndarray
    times: np.ndarray
    rho: np.ndarray
    stop_region: np.ndarray
    boundary_curve: np.ndarray
    obstacle: np.ndarray
    dvdt0: float
    grid: HjbGrid

    def value_at(self, rho0=0.0, time_index=0):
        return float(np.interp(rho0, self.rho, self.values[time_index]))

    @property
    def value0(self):
        return self.value_at(0.0, 0)

    @property
    def boundary0(self):
        return float(self.boundary_curve[0])


@numba.njit(nogil=True, cache=True)
def _march(obst, drift, c, dt, h, steps, save_every, saved, last_diff):
    n = obst.shape[0]
    v = obst.copy()
    w = np.empty(n)
    k_save = saved.shape[0] - 1
    saved[k_save, :] = v
    k_save -= 1
    a = 0.5 * dt / (h * h)
    r = dt / h
    for s in range(steps):
        w[0] = obst[0]
        w[n - 1] = obst[n - 1]
        for i in range(1, n - 1):
            b = drift[i]
            if b >= 0.0:
                adv = b * (v[i + 1] - v[i])
            else:
                adv = b * (v[i] - v[i - 1])
            cand = v[i] + dt * c + r * adv + a * (v[i + 1] - 2.0 * v[i] + v[i - 1])
            w[i] = cand if cand < obst[i] else obst[i]
        if s == steps - 1:
            diff = 0.0
            for i in range(n):
                d = abs(w[i] - v[i])
                if d > diff:
                    diff = d
            last_diff[0] = diff / dt
        for i in range(n):
            v[i] = w[i]
        remaining = steps - 1 - s
        if remaining % save_every == 0 and k_save >= 0:
            saved[k_save, :] = v
            k_save -= 1
            if not math.isfinite(v[n // 2]):
                return False
    return True


def _boundary(rho, gap_row, tol):
    """Smallest ``rho > 0`` where ``obstacle - V`` first drops to ``tol``."""
    pos = np.flatnonzero(rho > 0)
    g = gap_row[pos]
    r = rho[pos]
    hits = np.flatnonzero(g <= tol)
    if hits.size == 0:
        return math.nan
    j = hits[0]
    if j == 0:
        return float(r[0])
    # linear interpolation of the sign change of gap - tol
    g0, g1 = g[j - 1] - tol, g[j] - tol
    return float(r[j - 1] + (r[j] - r[j - 1]) * g0 / (g0 - g1))


def solve_hjb(grid, stop_tol=1e-12):
    """Backward explicit march from ``V(., T) = obstacle``; see the module docstring."""
    if grid.dt > grid.stability_bound * (1 + 1e-12):
        raise ConfigurationError("time step violates the monotonicity bound")
    rho = grid.rho
    obst = np.asarray(obstacle(rho, grid.delta_star, grid.sigma_sum), dtype=float)
    drift = 0.5 * grid.delta_star * (2.0 * belief(rho, grid.delta_star) - 1.0)
    steps = grid.steps
    save_every = max(1, min(int(grid.save_every), steps))
    n_saved = (steps - 1) // save_every + 2
    saved = np.full((n_saved, rho.size), np.nan)
    last_diff = np.zeros(1)
    ok = _march(obst, drift, grid.c, grid.dt, grid.d_rho, steps, save_every, saved, last_diff)
    # layer j is t = j * save_every * dt; the last layer is t = T
    times = grid.dt * np.concatenate([np.arange(0, steps, save_every), [steps]]).astype(float)
    if not ok or not np.all(np.isfinite(saved)):
        raise NumericalError("NaN or overflow in the HJB march", achieved=math.nan)
    gap = obst[None, :] - saved
    stop = gap <= stop_tol
    curve = np.array([_boundary(rho, gap[j], stop_tol) for j in range(saved.shape[0])])
    return HjbSolution(values=saved, times=times, rho=rho, stop_region=stop,
                       boundary_curve=curve, obstacle=obst, dvdt0=float(last_diff[0]), grid=grid)


def simulate_stopping_value(rho0, gamma, delta_star, sigma_sum, c, reps, seed, dt=1e-3,
                            max_time=50.0):
    """Monte Carlo of ``E[obstacle(rho_tau) + c tau]`` for the ``|rho| >= gamma`` rule.

    ``rho`` follows ``d rho = (delta*/2)(2 m(rho) - 1) dt + dW`` from ``rho0``.
    Returns ``(mean, standard error)``.
    """
    if reps < 2:
        raise ParameterError("reps must be >= 2")
    rng = np.random.default_rng(seed)
    rho = np.full(reps, float(rho0))
    tau = np.zeros(reps)
    alive = np.abs(rho) < gamma
    sq = math.sqrt(dt)
    t = 0.0
    while alive.any() and t < max_time:
        idx = np.flatnonzero(alive)
        r0 = rho[idx]
        b = 0.5 * delta_star * (2.0 * belief(r0, delta_star) - 1.0)
        r = r0 + b * dt + sq * rng.standard_normal(idx.size)
        u = rng.random(idx.size)
        p_up = np.exp(-2.0 * np.maximum(gamma - r0, 0.0) * np.maximum(gamma - r, 0.0) / dt)
        p_dn = np.exp(-2.0 * np.maximum(gamma + r0, 0.0) * np.maximum(gamma + r, 0.0) / dt)
        crossed = np.abs(r) >= gamma
        bridged = ~crossed & (u < p_up + p_dn)
        r = np.where(bridged, np.where(u < p_up, gamma, -gamma), r)
        done = crossed | bridged
        tau[idx] += np.where(done, 0.5 * dt, dt)
        rho[idx] = np.clip(r, -gamma, gamma)
        alive[idx[done]] = False
        t += dt
    payoff = obstacle(rho, delta_star, sigma_sum) + c * tau
    return float(payoff.mean()), float(payoff.std(ddof=1) / math.sqrt(reps))
