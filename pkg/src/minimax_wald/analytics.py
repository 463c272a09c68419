"""Closed-form regret formulas and equilibrium solvers for the diffusion game.

Notation used throughout the package:

* ``c`` is the flow cost of sampling, ``sigma1``/``sigma0`` the outcome
  standard deviations and ``eta = (2 c / (sigma1 + sigma0)) ** (1/3)``.
* ``gamma`` is a stopping threshold for the standardized score difference
  ``rho(t) = x1(t)/sigma1 - x0(t)/sigma0``.
* ``delta`` is the standardized gap ``2 |mu1 - mu0| / (sigma1 + sigma0)``.

The threshold rule that stops when ``|rho| >= gamma`` and picks arm 1 iff
``rho >= 0`` mis-identifies the better arm with probability
``1 / (1 + exp(delta * gamma))`` and stops after ``(2 gamma / delta) *
tanh(delta * gamma / 2)`` time units on average.  These are algebraically
identical to the ratio-of-exponentials forms but do not cancel near zero.
"""

import functools
import math
from dataclasses import dataclass

from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from .errors import ParameterError, SolverError

_SERIES_CUTOFF = 1e-6
_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _check_finite(name, value):
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")


def _check_nonneg(name, value):
    _check_finite(name, value)
    if value < 0:
        raise ParameterError(f"{name} must be >= 0, got {value!r}")


def norm_cdf(x):
    return float(ndtr(x))


def norm_pdf(x):
    return math.exp(-0.5 * x * x) / _SQRT_2PI


def norm_ppf(p):
    return float(ndtri(p))


@dataclass(frozen=True)
class DesignParams:
    """Problem primitives: sampling cost ``c`` and outcome SDs."""

    c: float = 1.0
    sigma1: float = 1.0
    sigma0: float = 1.0

    def __post_init__(self):
        for name in ("c", "sigma1", "sigma0"):
            v = getattr(self, name)
            _check_finite(name, v)
            if v <= 0:
                raise ParameterError(f"{name} must be > 0, got {v!r}")

    @property
    def sigma_sum(self):
        return self.sigma1 + self.sigma0

    @property
    def eta(self):
        return (2.0 * self.c / (self.sigma1 + self.sigma0)) ** (1.0 / 3.0)

    def standardize(self, abs_gap):
        """Raw gap |mu1 - mu0| -> standardized gap."""
        return 2.0 * abs_gap / self.sigma_sum

    def raw_gap(self, delta):
        """Standardized gap -> raw gap |mu1 - mu0|."""
        return 0.5 * self.sigma_sum * delta


@dataclass(frozen=True)
class UniversalConstants:
    gamma0: float
    delta0: float
    alpha_star: float


@dataclass(frozen=True)
class EquilibriumSolution:
    gamma_star: float
    delta_star: float
    value: float
    alpha: float
    residual: float = 0.0
    iterations: int = 0


@dataclass(frozen=True)
class BaiSolution:
    delta_bar: float
    value: float
    delta_half: float
    residual: float


def misid_prob(gamma, delta):
    """Probability that the threshold rule implements the worse arm."""
    _check_nonneg("gamma", gamma)
    _check_nonneg("delta", delta)
    x = delta * gamma
    if x == 0.0:
        return 0.5
    if x > 700.0:
        return math.exp(-x)
    return 1.0 / (1.0 + math.exp(x))


def expected_stopping_time(gamma, delta):
    """Mean exit time of ``|rho|`` through ``gamma`` when the drift is ``delta / 2``."""
    _check_nonneg("gamma", gamma)
    _check_nonneg("delta", delta)
    x = delta * gamma
    if x < _SERIES_CUTOFF:
        # tanh(x/2) = x/2 - x^3/24 + O(x^5)
        return gamma * gamma * (1.0 - x * x / 12.0)
    return 2.0 * gamma / delta * math.tanh(0.5 * x)


def scaled_regret(gamma, delta, eta=1.0):
    """Dimensionless objective ``R(gamma, delta)``.

    The frequentist regret of the threshold rule equals
    ``(sigma1 + sigma0) / 2 * scaled_regret(gamma, delta, eta)``.
    """
    return delta * misid_prob(gamma, delta) + eta ** 3 * expected_stopping_time(gamma, delta)


def _scaled_regret_ddelta(gamma, delta, eta3):
    x = delta * gamma
    m = misid_prob(gamma, delta)
    impl = m - x * m * (1.0 - m)
    th = math.tanh(0.5 * x)
    cost = 2.0 * gamma * (0.5 * gamma * (1.0 - th * th) / delta - th / (delta * delta))
    return impl + eta3 * cost


def closed_form_regret(params, gamma, abs_gap):
    """Frequentist regret of the threshold rule at true gap ``abs_gap``.

    Implementation regret ``abs_gap * P(wrong arm)`` plus the expected
    sampling cost ``c * E[tau]``.
    """
    _check_nonneg("gamma", gamma)
    _check_nonneg("abs_gap", abs_gap)
    delta = params.standardize(abs_gap)
    if delta == 0.0:
        return params.c * gamma * gamma
    if gamma == 0.0:
        return 0.5 * abs_gap
    return abs_gap * misid_prob(gamma, delta) + params.c * expected_stopping_time(gamma, delta)


# best responses ---------------------------------------------------------------

def _alpha_response(delta, half_sum, c):
    """Minimizer over alpha in (0, 1/2) of the posterior-split objective."""
    k = 2.0 * c / (delta * delta)

    def slope(a):
        log_odds = math.log1p(-a) - math.log(a)
        return half_sum * delta - k * (2.0 * log_odds + (1.0 - 2.0 * a) / (a * (1.0 - a)))

    lo = 0.25
    while slope(lo) >= 0.0:
        lo *= 0.5
        if lo < 1e-300:
            raise SolverError(f"cannot bracket alpha response at delta={delta!r}")
    return brentq(slope, lo, 0.5, xtol=1e-300, rtol=1e-15, maxiter=500)


def gamma_best_response(params, delta):
    """Bayes-optimal threshold against the two-point prior with gap ``delta``."""
    _check_finite("delta", delta)
    if delta <= 0:
        raise ParameterError(f"delta must be > 0, got {delta!r}")
    alpha = _alpha_response(delta, 0.5 * params.sigma_sum, params.c)
    return (math.log1p(-alpha) - math.log(alpha)) / delta


def golden_section_max(f, lo, hi, tol=1e-10, max_iter=500):
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x), (a, b))``.

    ``tol`` is relative to ``max(1, |x|)``.  The final bracket is returned so
    callers can polish the result with a derivative root find.
    """
    a, b = lo, hi
    x1 = b - _INV_GOLDEN * (b - a)
    x2 = a + _INV_GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(x1)):
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_GOLDEN * (b - a)
            f1 = f(x1)
    if f1 >= f2:
        return x1, f1, (a, b)
    return x2, f2, (a, b)


def expand_bracket_max(f, start, max_doublings=80, limit=1e12):
    """Double ``hi`` from ``start`` until ``f`` stops increasing.

    Returns ``(lo, hi)`` with the maximizer of a unimodal ``f`` on
    ``(0, inf)`` inside.  Raises :class:`SolverError` when the bracket keeps
    growing past ``limit`` (no interior maximum).
    """
    lo, mid = 0.0, start
    f_mid = f(mid)
    for _ in range(max_doublings):
        hi = 2.0 * mid
        if hi > limit:
            break
        f_hi = f(hi)
        if f_hi < f_mid:
            return lo, hi
        lo, mid, f_mid = mid, hi, f_hi
    raise SolverError(f"maximizer bracket diverged beyond {mid!r}", residual=mid)


def delta_best_response(params, gamma):
    """Least-favorable standardized gap against the threshold ``gamma``."""
    _check_finite("gamma", gamma)
    if gamma <= 0:
        raise ParameterError(f"gamma must be > 0, got {gamma!r}")
    eta = params.eta
    eta3 = eta ** 3

    def objective(d):
        return scaled_regret(gamma, d, eta) if d > 0 else eta3 * gamma * gamma

    lo, hi = expand_bracket_max(objective, 1.0 / gamma)
    x, _, (a, b) = golden_section_max(objective, lo, hi, tol=1e-10)
    # golden section is limited to ~sqrt(eps); polish on the analytic slope
    a = max(a, 1e-300)
    da = _scaled_regret_ddelta(gamma, a, eta3)
    db = _scaled_regret_ddelta(gamma, b, eta3)
    if da > 0.0 > db:
        x = brentq(lambda d: _scaled_regret_ddelta(gamma, d, eta3), a, b,
                   xtol=1e-300, rtol=1e-15)
    return x


# equilibrium --------------------------------------------------------------------

def _saddle_by_nested_search(params):
    """Outer golden-section min over gamma of the inner max over delta."""
    eta = params.eta

    def inner(g):
        d = delta_best_response(params, g)
        return -scaled_regret(g, d, eta)

    g, _, _ = golden_section_max(inner, 1e-3 / eta, 10.0 / eta, tol=1e-12)
    return g, delta_best_response(params, g)


def _fixed_point(params, tol=1e-8, max_iter=500, damping=0.5):
    eta = params.eta
    gamma, delta = 1.0 / eta, 2.0 * eta
    best = math.inf
    stalled = 0
    for it in range(1, max_iter + 1):
        g_new = gamma_best_response(params, delta)
        d_new = delta_best_response(params, g_new)
        residual = abs(gamma_best_response(params, d_new) - g_new) * eta
        gamma = (1.0 - damping) * gamma + damping * g_new
        delta = (1.0 - damping) * delta + damping * d_new
        if residual < tol:
            return g_new, d_new, residual, it
        if residual < best * 0.999:
            best, stalled = residual, 0
        else:
            stalled += 1
        if stalled >= 25:
            break
    # oscillation or slow progress: fall back to the direct saddle search
    g, d = _saddle_by_nested_search(params)
    residual = abs(gamma_best_response(params, d) - g) * eta
    if residual >= tol:
        raise SolverError(f"equilibrium did not converge (residual {residual:.3e})",
                          residual=residual)
    return g, d, residual, max_iter


@functools.lru_cache(maxsize=1)
def universal_constants():
    """Equilibrium at ``eta = 1`` computed by the solver (cached)."""
    unit = DesignParams(c=1.0, sigma1=1.0, sigma0=1.0)
    g0, d0, _, _ = _fixed_point(unit)
    return UniversalConstants(gamma0=g0, delta0=d0, alpha_star=misid_prob(g0, d0))


def solve_equilibrium(params, tol=1e-8, max_iter=500):
    """Nash equilibrium ``(gamma*, delta*)`` of the threshold-vs-two-point-prior game."""
    g, d, residual, iterations = _fixed_point(params, tol=tol, max_iter=max_iter)
    uc = universal_constants()
    eta = params.eta
    scale_err = max(abs(g * eta - uc.gamma0), abs(d / eta - uc.delta0))
    if scale_err > 1e-6:
        raise SolverError(f"equilibrium deviates from eta scaling by {scale_err:.3e}",
                          residual=scale_err)
    value = closed_form_regret(params, g, params.raw_gap(d))
    return EquilibriumSolution(gamma_star=g, delta_star=d, value=value,
                               alpha=misid_prob(g, d), residual=residual,
                               iterations=iterations)


def minimax_value(params):
    return solve_equilibrium(params).value


# best-arm identification ------------------------------------------------------------

def bai_regret(params, abs_gap):
    """Regret of Neyman allocation with a unit fixed horizon."""
    _check_nonneg("abs_gap", abs_gap)
    delta = params.standardize(abs_gap)
    return abs_gap * norm_cdf(-0.5 * delta)


def _bai_stationarity(d):
    return norm_cdf(-d) - d * norm_pdf(d)


def solve_bai_equilibrium():
    d = brentq(_bai_stationarity, 0.1, 3.0, xtol=1e-15, rtol=1e-15)
    delta_bar = 2.0 * d
    return BaiSolution(delta_bar=delta_bar, value=delta_bar * norm_cdf(-d),
                       delta_half=d, residual=abs(_bai_stationarity(d)))


# adaptivity gain ---------------------------------------------------------------

def efficiency_ratio(alpha=None):
    """Expected adaptive duration over the equally-informative fixed duration."""
    if alpha is None:
        alpha = universal_constants().alpha_star
    if not 0.0 < alpha < 0.5:
        raise ParameterError(f"alpha must lie in (0, 1/2), got {alpha!r}")
    z = norm_ppf(1.0 - alpha)
    return (1.0 - 2.0 * alpha) / (2.0 * z * z) * (math.log1p(-alpha) - math.log(alpha))


def nonadaptive_duration(params):
    """Fixed horizon reaching the equilibrium regret net of sampling cost."""
    sol = solve_equilibrium(params)
    z = norm_ppf(1.0 - sol.alpha)
    return 4.0 * z * z / sol.delta_star ** 2
