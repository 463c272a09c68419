"""State-dependent flow costs ``c(rho)`` and the resulting minimax problem.

For a symmetric cost bounded away from zero, the expected accumulated cost
of the threshold rule is ``E[zeta(rho_tau)]`` where ``zeta`` solves

    zeta''/2 + (delta/2) zeta' = c,   zeta(0) = zeta'(0) = 0,

i.e. ``zeta(x) = 2 int_0^x int_0^y exp(delta (z - y)) c(z) dz dy``.
Swapping the order of integration collapses this to the single integral
``(2/delta) int_0^x c(z) (1 - exp(delta (z - x))) dz`` used by default.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.stats import qmc

from .analytics import (
    expand_bracket_max,
    golden_section_max,
    misid_prob,
    universal_constants,
)
from .errors import ConfigurationError, NumericalError, ParameterError, SolverError

_SYMMETRY_POINTS = 64
_SYMMETRY_RANGE = 20.0


@dataclass(frozen=True)
class CostFunction:
    """Flow cost ``z -> c(z)``; must be symmetric and at least ``c_lower > 0``.

    Symmetry and the lower bound are spot-checked at construction on 64
    scrambled-Sobol points in ``[0, 20]``.  ``evaluator`` should accept
    numpy arrays; scalar-only callables are vectorized automatically.
    """

    evaluator: Callable
    c_lower: float
    symmetric: bool = True
    name: str = "custom"
    spec: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.c_lower > 0:
            raise ConfigurationError("c_lower must be > 0")
        if not self.symmetric:
            raise ConfigurationError("only symmetric cost functions are supported")
        pts = qmc.Sobol(d=1, scramble=True, seed=20240611).random(_SYMMETRY_POINTS)[:, 0]
        z = _SYMMETRY_RANGE * pts
        plus = self(z)
        minus = self(-z)
        if not np.allclose(plus, minus, rtol=1e-12, atol=1e-12):
            raise ConfigurationError(f"cost {self.name!r} is not symmetric")
        if np.any(plus < self.c_lower * (1 - 1e-12)):
            raise ConfigurationError(f"cost {self.name!r} falls below c_lower={self.c_lower}")

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        try:
            out = np.asarray(self.evaluator(z), dtype=float)
            if out.shape != z.shape:
                out = np.broadcast_to(out, z.shape).astype(float)
        except TypeError:
            out = np.vectorize(lambda v: float(self.evaluator(float(v))))(z)
        return out if out.ndim else float(out)

    def scaled(self, k):
        return CostFunction(lambda z: k * np.asarray(self.evaluator(z), dtype=float),
                            c_lower=k * self.c_lower, name=f"{k}*{self.name}")

    @classmethod
    def constant(cls, c):
        if not c > 0:
            raise ParameterError("constant cost must be > 0")
        return cls(lambda z: np.full(np.shape(z), float(c)), c_lower=float(c),
                   name=f"constant({c})", spec={"kind": "constant", "c": float(c)})

    @classmethod
    def polynomial(cls, coeffs):
        """``c(z) = sum_k coeffs[k] * |z| ** k``; coefficients must be non-negative."""
        coeffs = [float(a) for a in coeffs]
        if not coeffs or coeffs[0] <= 0 or any(a < 0 for a in coeffs):
            raise ConfigurationError("polynomial cost needs coeffs[0] > 0 and all coeffs >= 0")

        def ev(z):
            az = np.abs(np.asarray(z, dtype=float))
            out = np.zeros_like(az)
            for a in reversed(coeffs):
                out = out * az + a
            return out

        return cls(ev, c_lower=coeffs[0], name=f"poly{tuple(coeffs)}",
                   spec={"kind": "polynomial", "coeffs": coeffs})

    @classmethod
    def table(cls, z_nodes, c_nodes):
        """Monotone-cubic interpolation in ``|z|``, held flat outside the table."""
        z_nodes = np.asarray(z_nodes, dtype=float)
        c_nodes = np.asarray(c_nodes, dtype=float)
        if z_nodes.ndim != 1 or z_nodes.size < 2 or np.any(np.diff(z_nodes) <= 0) or z_nodes[0] < 0:
            raise ConfigurationError("table nodes must be increasing and non-negative")
        if np.any(c_nodes <= 0):
            raise ConfigurationError("table costs must be > 0")
        interp = PchipInterpolator(z_nodes, c_nodes, extrapolate=False)
        lo, hi = z_nodes[0], z_nodes[-1]

        def ev(z):
            az = np.clip(np.abs(np.asarray(z, dtype=float)), lo, hi)
            return interp(az)

        return cls(ev, c_lower=float(np.min(c_nodes)), name="table",
                   spec={"kind": "table", "z": z_nodes.tolist(), "c": c_nodes.tolist()})


@dataclass(frozen=True)
class GeneralEquilibrium:
    gamma_star: float
    delta_star: float
    value: float
    residual: float
    starts: tuple = ()


def _quad(f, a, b, rtol):
    val, err = quad(f, a, b, epsabs=0.0, epsrel=min(rtol, 1e-10), limit=200)
    if not math.isfinite(val) or err > rtol * max(abs(val), 1e-300):
        raise NumericalError(f"quadrature did not reach rtol={rtol} (error estimate {err:.3e})",
                             achieved=err / max(abs(val), 1e-300))
    return val


def zeta(cost, delta, x, method="collapsed", rtol=1e-8):
    """Particular solution of the cost ODE at ``x`` (either sign)."""
    if not delta > 0:
        raise ParameterError(f"delta must be > 0, got {delta!r}")
    if not math.isfinite(x):
        raise ParameterError("x must be finite")
    if x == 0.0:
        return 0.0
    if method == "collapsed":
        return 2.0 / delta * _quad(
            lambda z: cost(z) * -math.expm1(delta * (z - x)), 0.0, x, rtol)
    if method == "nested":
        def inner(y):
            if y == 0.0:
                return 0.0
            return _quad(lambda z: math.exp(delta * (z - y)) * cost(z), 0.0, y, rtol * 1e-2)
        return 2.0 * _quad(inner, 0.0, x, rtol)
    raise ParameterError(f"unknown method {method!r}")


def zeta_constant(c, delta, x):
    """Closed form of ``zeta`` for a constant cost ``c``."""
    return 2.0 * c / delta * (x + math.expm1(-delta * x) / delta)


def expected_cost(cost, gamma, delta, method="collapsed"):
    """``E[int_0^tau c(rho_t) dt]`` for exit from ``(-gamma, gamma)`` with drift ``delta/2``.

    Exit through ``+gamma`` has probability ``1 - a`` and through
    ``-gamma`` probability ``a = 1 / (1 + exp(delta gamma))``.
    """
    a = misid_prob(gamma, delta)
    return (1.0 - a) * zeta(cost, delta, gamma, method) + a * zeta(cost, delta, -gamma, method)


def general_objective(cost, sigma1, sigma0, gamma, delta, method="collapsed"):
    """Regret of the threshold ``gamma`` at standardized gap ``delta`` under flow cost ``cost``."""
    if not gamma > 0:
        raise ParameterError(f"gamma must be > 0, got {gamma!r}")
    if not delta > 0:
        raise ParameterError(f"delta must be > 0, got {delta!r}")
    impl = 0.5 * (sigma1 + sigma0) * delta * misid_prob(gamma, delta)
    return impl + expected_cost(cost, gamma, delta, method)


def _inner_max(cost, sigma1, sigma0, gamma):
    f = lambda d: general_objective(cost, sigma1, sigma0, gamma, d) if d > 0 else 0.0
    lo, hi = expand_bracket_max(f, 1.0 / gamma)
    d, v, _ = golden_section_max(f, lo, hi, tol=1e-10)
    return d, v


def _outer_min(cost, sigma1, sigma0, lo, hi, tol):
    def neg_max(g):
        return -_inner_max(cost, sigma1, sigma0, g)[1]

    # grow the bracket until the interior beats both ends
    for _ in range(40):
        mid = math.sqrt(lo * hi)
        f_lo, f_mid, f_hi = neg_max(lo), neg_max(mid), neg_max(hi)
        if f_mid >= f_lo and f_mid >= f_hi:
            break
        if f_lo > f_hi:
            lo /= 2.0
        else:
            hi *= 2.0
    else:
        raise SolverError("could not bracket the minimizing threshold")
    g, _, _ = golden_section_max(neg_max, lo, hi, tol=tol)
    return g


def solve_general_equilibrium(cost, sigma1=1.0, sigma0=1.0, tol=1e-10, starts=2):
    """Saddle point of :func:`general_objective`: min over gamma of max over delta.

    ``starts`` independent outer brackets are searched; their spread is
    reported as ``residual`` (agreement, not a certificate of global
    optimality).
    """
    if not (sigma1 > 0 and sigma0 > 0):
        raise ParameterError("SDs must be > 0")
    c_ref = float(cost(0.0))
    eta = (2.0 * c_ref / (sigma1 + sigma0)) ** (1.0 / 3.0)
    guess = universal_constants().gamma0 / eta
    brackets = [(guess / 4.0, guess * 4.0), (guess / 10.0, guess * 2.5), (guess / 2.0, guess * 8.0)]
    found = []
    for lo, hi in brackets[:max(1, starts)]:
        found.append(_outer_min(cost, sigma1, sigma0, lo, hi, tol))
    g = found[0]
    d, v = _inner_max(cost, sigma1, sigma0, g)
    spread = max(found) - min(found)
    if spread > 1e-5 * max(1.0, g):
        raise SolverError(f"multi-start thresholds disagree by {spread:.3e}", residual=spread)
    return GeneralEquilibrium(gamma_star=g, delta_star=d, value=v, residual=spread,
                              starts=tuple(found))


def simulate_cost_paths(cost, gamma, delta, reps, seed, dt=1e-3, max_steps=10 ** 7):
    """Monte Carlo ``int_0^tau c(rho_t) dt`` with drift ``delta/2``, exit at ``|rho| >= gamma``.

    Euler grid with the Brownian-bridge crossing test between grid points;
    the step in which the exit is detected contributes half its cost.
    Returns the per-path array.
    """
    rng = np.random.default_rng(seed)
    rho = np.zeros(reps)
    acc = np.zeros(reps)
    alive = np.ones(reps, dtype=bool)
    sq = math.sqrt(dt)
    step = 0
    while alive.any() and step < max_steps:
        idx = np.flatnonzero(alive)
        r0 = rho[idx]
        inc = cost(r0) * dt
        r = r0 + 0.5 * delta * dt + sq * rng.standard_normal(idx.size)
        u = rng.random(idx.size)
        p_up = np.exp(-2.0 * np.maximum(gamma - r0, 0.0) * np.maximum(gamma - r, 0.0) / dt)
        p_dn = np.exp(-2.0 * np.maximum(gamma + r0, 0.0) * np.maximum(gamma + r, 0.0) / dt)
        done = (np.abs(r) >= gamma) | (u < p_up + p_dn)
        acc[idx] += np.where(done, 0.5 * inc, inc)
        rho[idx] = r
        alive[idx[done]] = False
        step += 1
    return acc
