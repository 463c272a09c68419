"""Finite-sample sequential experiment with Neyman tracking and threshold stopping.

Time is measured in units of ``n`` observations: after ``N`` pulls the clock
reads ``t = N / n``.  Outcome means are local alternatives, so regret is
reported on the ``sqrt(n)`` scale: with local gap ``g = sqrt(n) (m1 - m0)``
the realized regret is ``max(g, 0) - g * delta + c * N / n``.

The score statistic is

    rho = (S1 - q1 * m) / (sqrt(n) * s1) - (S0 - q0 * m) / (sqrt(n) * s0)

where ``S_a`` are raw outcome sums, ``q_a`` pull counts, ``s_a`` the working
standard deviations and ``m`` a single centering constant shared by both
arms (the known reference mean, the prior mean, or the pooled mean of the
forced-exploration sample).  Under exact Neyman shares the common centering
cancels; the residual from the tracking rule is at most one observation.

Two execution paths share these definitions: :func:`run_experiment` steps
an :class:`EngineState` in Python (and accepts custom samplers and influence
transforms), while :func:`run_replications` drives a numba kernel over many
counter-based streams.  Both consume the random stream identically and give
bit-identical results for built-in models.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Union

import numba
import numpy as np

from .analytics import universal_constants
from .errors import ConfigurationError, EstimationError, ParameterError
from .rng import CounterStream, nb_normal_pair, nb_uniform, stream_keys
from .summary import run_chunked, summarize

Decision = Literal["continue", "stop"]

DEFAULT_MAX_PERIODS = 10 ** 8


# outcome models ------------------------------------------------------------------

@dataclass(frozen=True)
class OutcomeModel:
    """Outcome distribution for the two arms, parametrized by local means.

    ``kind`` is ``"bernoulli"``, ``"gaussian"`` or ``"custom"``.  Use the
    constructors :meth:`bernoulli`, :meth:`gaussian` and :meth:`custom`.

    For a custom model, ``sampler(arm, uniform)`` must return one real
    outcome for ``arm`` in {0, 1}, drawing randomness only by calling
    ``uniform()`` (which returns a float in (0, 1)).  ``means`` and ``sds``
    are the per-observation means and SDs used for regret accounting and
    known-variance runs.
    """

    kind: str
    p0: float = 0.0
    gap: float = 0.0
    mu1: float = 0.0
    mu0: float = 0.0
    sigma1: float = 1.0
    sigma0: float = 1.0
    sampler: Optional[Callable] = field(default=None, compare=False)
    means: tuple = (0.0, 0.0)
    sds: tuple = (1.0, 1.0)

    @classmethod
    def bernoulli(cls, p0, gap):
        """``p1 = p0 + gap / sqrt(n)``."""
        if not 0.0 < p0 < 1.0:
            raise ParameterError(f"p0 must lie in (0, 1), got {p0!r}")
        return cls(kind="bernoulli", p0=float(p0), gap=float(gap))

    @classmethod
    def gaussian(cls, mu1, mu0, sigma1=1.0, sigma0=1.0):
        """``Y(a) ~ N(mu_a / sqrt(n), sigma_a^2)``."""
        if not (sigma1 > 0 and sigma0 > 0):
            raise ParameterError("Gaussian SDs must be > 0")
        return cls(kind="gaussian", mu1=float(mu1), mu0=float(mu0),
                   sigma1=float(sigma1), sigma0=float(sigma0), gap=float(mu1 - mu0))

    @classmethod
    def gaussian_gap(cls, gap, sigma1=1.0, sigma0=1.0):
        """Gaussian model with local means ``+gap/2`` and ``-gap/2``."""
        return cls.gaussian(0.5 * gap, -0.5 * gap, sigma1, sigma0)

    @classmethod
    def custom(cls, sampler, means, sds):
        if not callable(sampler):
            raise ParameterError("sampler must be callable")
        if not (sds[0] > 0 and sds[1] > 0):
            raise ParameterError("custom model SDs must be > 0")
        return cls(kind="custom", sampler=sampler, means=tuple(map(float, means)),
                   sds=tuple(map(float, sds)))

    def outcome_means(self, n):
        """Per-observation means ``(m1, m0)`` at scale ``n``."""
        if self.kind == "bernoulli":
            p1 = self.p0 + self.gap / math.sqrt(n)
            if not 0.0 < p1 < 1.0:
                raise ParameterError(f"p1 = {p1!r} leaves (0, 1); increase n or shrink the gap")
            return p1, self.p0
        if self.kind == "gaussian":
            rn = math.sqrt(n)
            return self.mu1 / rn, self.mu0 / rn
        return self.means[1], self.means[0]

    def outcome_sds(self, n):
        """True per-observation SDs ``(s1, s0)`` at scale ``n``."""
        if self.kind == "bernoulli":
            p1, p0 = self.outcome_means(n)
            return math.sqrt(p1 * (1.0 - p1)), math.sqrt(p0 * (1.0 - p0))
        if self.kind == "gaussian":
            return self.sigma1, self.sigma0
        return self.sds[1], self.sds[0]

    def reference_mean(self, n):
        """Centering used in known-variance mode."""
        if self.kind == "bernoulli":
            return self.p0
        if self.kind == "gaussian":
            return 0.0
        return 0.5 * (self.means[0] + self.means[1])

    def local_gap(self, n):
        m1, m0 = self.outcome_means(n)
        return math.sqrt(n) * (m1 - m0)

    def with_gap(self, gap):
        """Same family with a different local gap (custom models are returned unchanged)."""
        if self.kind == "bernoulli":
            return OutcomeModel.bernoulli(self.p0, gap)
        if self.kind == "gaussian":
            mid = 0.5 * (self.mu1 + self.mu0)
            return OutcomeModel.gaussian(mid + 0.5 * gap, mid - 0.5 * gap, self.sigma1, self.sigma0)
        return self

    def draw(self, arm, n, stream):
        if self.kind == "bernoulli":
            p = self.outcome_means(n)[1 - arm]
            return 1.0 if stream.uniform() < p else 0.0
        if self.kind == "gaussian":
            m1, m0 = self.outcome_means(n)
            s = self.sigma1 if arm == 1 else self.sigma0
            return (m1 if arm == 1 else m0) + s * stream.normal()
        return float(self.sampler(arm, stream.uniform))


# variance modes and configuration ------------------------------------------------------

@dataclass(frozen=True)
class KnownVariance:
    """Use the given SDs (defaults: the model's true SDs) and centering."""

    sigma1: Optional[float] = None
    sigma0: Optional[float] = None
    center: Optional[float] = None


@dataclass(frozen=True)
class ForcedExploration:
    """Alternate arms for ``nbar`` pulls, then plug in sample SDs.

    ``nbar = max(floor, ceil(fraction * n))``, or ``max(floor, ceil(n **
    exponent))`` when ``exponent`` is set.  Estimated SDs below ``min_sd``
    are raised to it; with the default ``min_sd = 0`` a zero estimate is a
    configuration error.
    """

    fraction: float = 0.05
    floor: int = 50
    exponent: Optional[float] = None
    min_sd: float = 0.0

    def size(self, n):
        if self.exponent is not None:
            raw = math.ceil(n ** self.exponent)
        else:
            raw = math.ceil(self.fraction * n - 1e-9)
        return max(int(self.floor), int(raw))


@dataclass(frozen=True)
class ConjugatePrior:
    """Continuously refreshed posterior-mean SDs.

    Bernoulli outcomes use independent Beta(alpha0, beta0) priors on each
    arm's success probability.  Other outcomes are treated as Gaussian with
    known mean ``center`` and an inverse-gamma(shape0, scale0) prior on the
    variance.
    """

    alpha0: float = 2.0
    beta0: float = 3.0
    shape0: float = 2.0
    scale0: float = 1.0
    center: Optional[float] = None

    def validate(self):
        if not (self.alpha0 > 0 and self.beta0 > 0):
            raise ConfigurationError("Beta prior parameters must be > 0")
        if not (self.shape0 > 1 and self.scale0 > 0):
            raise ConfigurationError("inverse-gamma prior needs shape0 > 1 and scale0 > 0")


VarianceMode = Union[KnownVariance, ForcedExploration, ConjugatePrior]


@dataclass(frozen=True)
class DiscreteConfig:
    n: int
    c: float = 1.0
    horizon_T: Optional[float] = None
    gamma: Optional[float] = None
    variance_mode: VarianceMode = field(default_factory=KnownVariance)
    batch_size: int = 1
    max_periods: int = DEFAULT_MAX_PERIODS
    influence: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")
        if not self.c > 0:
            raise ConfigurationError("c must be > 0")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.gamma is not None and not self.gamma >= 0:
            raise ConfigurationError("gamma must be >= 0")
        if self.horizon_T is not None and not self.horizon_T > 0:
            raise ConfigurationError("horizon_T must be > 0")
        if self.max_periods < 1:
            raise ConfigurationError("max_periods must be >= 1")
        if isinstance(self.variance_mode, ConjugatePrior):
            self.variance_mode.validate()
        if isinstance(self.variance_mode, ForcedExploration) and self.variance_mode.size(self.n) < 4:
            raise ConfigurationError("forced exploration needs at least 2 pulls per arm")

    @property
    def period_cost(self):
        """Per-observation cost ``c / n ** 1.5``."""
        return self.c / self.n ** 1.5

    @property
    def horizon_periods(self):
        if self.horizon_T is None:
            return self.max_periods
        return min(self.max_periods, int(math.floor(self.horizon_T * self.n + 1e-9)))

    def threshold_for(self, sigma1, sigma0):
        """Threshold in use for working SDs ``sigma1, sigma0``."""
        if self.gamma is not None:
            return self.gamma
        return threshold_from_sds(self.c, sigma1, sigma0)


def threshold_from_sds(c, sigma1, sigma0):
    """Equilibrium threshold ``gamma0 / eta`` for the given cost and SDs."""
    return universal_constants().gamma0 * ((sigma1 + sigma0) / (2.0 * c)) ** (1.0 / 3.0)


# engine state and single-step operations ---------------------------------------------------

@dataclass
class EngineState:
    n: int
    sigma_hat1: float
    sigma_hat0: float
    center: float = 0.0
    count1: int = 0
    count0: int = 0
    sum1: float = 0.0
    sum0: float = 0.0
    sumsq1: float = 0.0
    sumsq0: float = 0.0
    prior: Optional[ConjugatePrior] = None
    prior_kind: str = "beta"

    @property
    def periods(self):
        return self.count1 + self.count0

    @property
    def t(self):
        return self.periods / self.n

    @property
    def rho(self):
        rn = math.sqrt(self.n)
        return ((self.sum1 - self.count1 * self.center) / (rn * self.sigma_hat1)
                - (self.sum0 - self.count0 * self.center) / (rn * self.sigma_hat0))

    @property
    def q1_frac(self):
        return self.count1 / self.periods if self.periods else 0.0


def neyman_tracking_arm(state):
    """Arm 1 iff its count is at most its Neyman share of the pulls so far."""
    s1, s0 = state.sigma_hat1, state.sigma_hat0
    if not (s1 > 0 or s0 > 0):
        raise ConfigurationError("both working SDs are zero; allocation undefined")
    return 1 if state.count1 <= state.periods * (s1 / (s1 + s0)) else 0


def update_rho(state, arm, outcome):
    """Record one outcome; ``state.rho`` reflects it afterwards."""
    if arm == 1:
        state.count1 += 1
        state.sum1 += outcome
        state.sumsq1 += outcome * outcome
    else:
        state.count0 += 1
        state.sum0 += outcome
        state.sumsq0 += outcome * outcome
    return state


def should_stop(state, config, gamma=None, min_periods=0):
    """``"stop"`` iff ``|rho| >= gamma`` or the horizon is reached, at epoch boundaries only."""
    periods = state.periods
    if periods >= config.horizon_periods:
        return "stop"
    if periods < min_periods or periods % config.batch_size:
        return "continue"
    if gamma is None:
        gamma = config.threshold_for(state.sigma_hat1, state.sigma_hat0)
    return "stop" if abs(state.rho) >= gamma else "continue"


def _beta_sd(alpha0, beta0, successes, trials):
    p = (alpha0 + successes) / (alpha0 + beta0 + trials)
    return math.sqrt(p * (1.0 - p))


def _ig_sd(shape0, scale0, center, count, total, sumsq):
    # posterior (shape0 + m/2, scale0 + sum (y - center)^2 / 2); mean = scale / (shape - 1)
    ss = sumsq - 2.0 * center * total + count * center * center
    shape = shape0 + 0.5 * count
    scale = scale0 + 0.5 * ss
    return math.sqrt(scale / (shape - 1.0))


def conjugate_prior_update(state, arm, outcome):
    """Record one outcome and refresh that arm's posterior-mean SD."""
    prior = state.prior
    if prior is None:
        raise ConfigurationError("state has no prior configured")
    update_rho(state, arm, outcome)
    if arm == 1:
        count, total, sumsq = state.count1, state.sum1, state.sumsq1
    else:
        count, total, sumsq = state.count0, state.sum0, state.sumsq0
    if state.prior_kind == "beta":
        sd = _beta_sd(prior.alpha0, prior.beta0, total, count)
    else:
        sd = _ig_sd(prior.shape0, prior.scale0, state.center, count, total, sumsq)
    if arm == 1:
        state.sigma_hat1 = sd
    else:
        state.sigma_hat0 = sd
    return state


def _sample_sd(count, total, sumsq):
    mean = total / count
    var = (sumsq - count * mean * mean) / (count - 1)
    return math.sqrt(var) if var > 0.0 else 0.0


def _explore(config, model, stream):
    """Alternating exploration phase; returns the populated state."""
    mode = config.variance_mode
    nbar = mode.size(config.n)
    state = EngineState(n=config.n, sigma_hat1=1.0, sigma_hat0=1.0)
    for j in range(nbar):
        arm = 1 if j % 2 == 0 else 0
        update_rho(state, arm, _observe(config, model, arm, stream))
    if state.count1 < 2 or state.count0 < 2:
        raise EstimationError("forced exploration needs >= 2 observations per arm")
    s1 = max(_sample_sd(state.count1, state.sum1, state.sumsq1), mode.min_sd)
    s0 = max(_sample_sd(state.count0, state.sum0, state.sumsq0), mode.min_sd)
    state.sigma_hat1, state.sigma_hat0 = s1, s0
    state.center = (state.sum1 + state.sum0) / state.periods
    return state


def forced_exploration_estimate(config, model, rng_stream):
    """Sample SDs from the alternating phase: ``(sigma_hat1, sigma_hat0, consumed)``."""
    if not isinstance(config.variance_mode, ForcedExploration):
        raise ConfigurationError("config does not use forced exploration")
    stream = _as_stream(rng_stream)
    state = _explore(config, model, stream)
    return state.sigma_hat1, state.sigma_hat0, state.periods


def _observe(config, model, arm, stream):
    y = model.draw(arm, config.n, stream)
    if config.influence is not None:
        y = float(config.influence(arm, y))
    return y


def _as_stream(rng_stream):
    return rng_stream if isinstance(rng_stream, CounterStream) else CounterStream(rng_stream)


@dataclass(frozen=True)
class ExperimentResult:
    tau: float
    n_used: int
    chose_one: int
    q1_frac: float
    q0_frac: float
    regret_impl: float
    regret_cost: float
    capped: bool
    hit: bool
    sigma_hat1: float
    sigma_hat0: float
    gamma: float

    @property
    def regret(self):
        return self.regret_impl + self.regret_cost


def initial_state(config, model):
    """State before any observation for the non-exploration modes."""
    mode = config.variance_mode
    n = config.n
    if isinstance(mode, KnownVariance):
        true1, true0 = model.outcome_sds(n)
        s1 = true1 if mode.sigma1 is None else mode.sigma1
        s0 = true0 if mode.sigma0 is None else mode.sigma0
        center = model.reference_mean(n) if mode.center is None else mode.center
        if not (s1 > 0 and s0 > 0):
            raise ConfigurationError("known SDs must be > 0")
        return EngineState(n=n, sigma_hat1=s1, sigma_hat0=s0, center=center)
    if isinstance(mode, ConjugatePrior):
        if model.kind == "bernoulli":
            p = mode.alpha0 / (mode.alpha0 + mode.beta0)
            sd = math.sqrt(p * (1.0 - p))
            center = p if mode.center is None else mode.center
            kind = "beta"
        else:
            center = (model.reference_mean(n) if mode.center is None else mode.center)
            sd = math.sqrt(mode.scale0 / (mode.shape0 - 1.0))
            kind = "invgamma"
        return EngineState(n=n, sigma_hat1=sd, sigma_hat0=sd, center=center,
                           prior=mode, prior_kind=kind)
    raise ConfigurationError(f"unsupported variance mode {mode!r}")


def run_experiment(config, model, rng_stream):
    """Run one experiment to its stopping time.

    Forced exploration (if configured) runs first and its pulls count
    toward time and cost; stopping is only checked afterwards.  The
    implementation decision is arm 1 iff ``rho >= 0`` at the stopping time.
    """
    stream = _as_stream(rng_stream)
    mode = config.variance_mode
    if isinstance(mode, ForcedExploration):
        state = _explore(config, model, stream)
        if not (state.sigma_hat1 > 0 and state.sigma_hat0 > 0):
            raise ConfigurationError("estimated SD is zero; stopping rule undefined")
        min_periods = state.periods
    else:
        state = initial_state(config, model)
        min_periods = 0
    refresh = isinstance(mode, ConjugatePrior)
    gamma = config.threshold_for(state.sigma_hat1, state.sigma_hat0)
    horizon = config.horizon_periods
    hit = False
    while True:
        if state.periods >= min_periods and state.periods % config.batch_size == 0:
            if abs(state.rho) >= gamma:
                hit = True
                break
        if state.periods >= horizon:
            break
        arm = neyman_tracking_arm(state)
        y = _observe(config, model, arm, stream)
        if refresh:
            conjugate_prior_update(state, arm, y)
            gamma = config.threshold_for(state.sigma_hat1, state.sigma_hat0)
        else:
            update_rho(state, arm, y)
    return _result(config, model, state, hit, gamma)


def _result(config, model, state, hit, gamma):
    n = config.n
    chose = 1 if state.rho >= 0.0 else 0
    g = model.local_gap(n)
    periods = state.periods
    capped = (not hit) and config.horizon_T is None
    return ExperimentResult(
        tau=periods / n, n_used=periods, chose_one=chose,
        q1_frac=state.count1 / periods if periods else 0.0,
        q0_frac=state.count0 / periods if periods else 0.0,
        regret_impl=max(g, 0.0) - g * chose,
        regret_cost=config.c * periods / n,
        capped=capped, hit=hit,
        sigma_hat1=state.sigma_hat1, sigma_hat0=state.sigma_hat0, gamma=gamma)


# vectorized replications -------------------------------------------------------------------

_KIND_CODES = {"bernoulli": 0, "gaussian": 1}
MODE_KNOWN, MODE_FORCED, MODE_BETA, MODE_INVGAMMA = 0, 1, 2, 3
STATUS_OK, STATUS_DEGENERATE = 0, 1


@numba.njit(inline="always", cache=True)
def _draw(kind, p_or_mean, sd, key, counter, have_spare, spare):
    if kind == 0:
        u, counter = nb_uniform(key, counter)
        return (1.0 if u < p_or_mean else 0.0), counter, have_spare, spare
    if have_spare:
        return p_or_mean + sd * spare, counter, False, spare
    z, spare, counter = nb_normal_pair(key, counter)
    return p_or_mean + sd * z, counter, True, spare


@numba.njit(inline="always", cache=True)
def _rho(s1, s0, q1, q0, center, rn, sig1, sig0):
    return (s1 - q1 * center) / (rn * sig1) - (s0 - q0 * center) / (rn * sig0)


@numba.njit(nogil=True, cache=True)
def _experiment_kernel(keys, mean1, mean0, kind, sd1, sd0, n, c, gamma_fixed, gamma0,
                       mode, known_sig1, known_sig0, known_center, nbar, min_sd,
                       prior_a, prior_b, prior_center, batch, horizon, max_periods,
                       periods_out, chose_out, hit_out, status_out, fb_out,
                       sig1_out, sig0_out, gamma_out):
    rn = math.sqrt(n)
    for i in range(keys.shape[0]):
        key = keys[i]
        counter = np.uint64(0)
        have_spare = False
        spare = 0.0
        m1 = mean1[i]
        m0 = mean0[i]
        q1 = 0
        q0 = 0
        s1 = 0.0
        s0 = 0.0
        ss1 = 0.0
        ss0 = 0.0
        status = 0
        fb = 0.0
        min_periods = 0
        if mode == 1:
            for j in range(nbar):
                if j % 2 == 0:
                    y, counter, have_spare, spare = _draw(kind, m1, sd1, key, counter, have_spare, spare)
                    q1 += 1
                    s1 += y
                    ss1 += y * y
                else:
                    y, counter, have_spare, spare = _draw(kind, m0, sd0, key, counter, have_spare, spare)
                    q0 += 1
                    s0 += y
                    ss0 += y * y
            mu = s1 / q1
            var = (ss1 - q1 * mu * mu) / (q1 - 1)
            sig1 = math.sqrt(var) if var > 0.0 else 0.0
            mu = s0 / q0
            var = (ss0 - q0 * mu * mu) / (q0 - 1)
            sig0 = math.sqrt(var) if var > 0.0 else 0.0
            sig1 = max(sig1, min_sd)
            sig0 = max(sig0, min_sd)
            center = (s1 + s0) / (q1 + q0)
            min_periods = q1 + q0
            if not (sig1 > 0.0 and sig0 > 0.0):
                status = 1
        elif mode == 0:
            sig1 = known_sig1
            sig0 = known_sig0
            center = known_center
        elif mode == 2:
            p = prior_a / (prior_a + prior_b)
            sig1 = math.sqrt(p * (1.0 - p))
            sig0 = sig1
            center = prior_center
        else:
            sig1 = math.sqrt(prior_b / (prior_a - 1.0))
            sig0 = sig1
            center = prior_center
        if gamma_fixed >= 0.0:
            gamma = gamma_fixed
        else:
            gamma = gamma0 * ((sig1 + sig0) / (2.0 * c)) ** (1.0 / 3.0)
        hit = False
        if status == 0:
            share = sig1 / (sig1 + sig0)
            while True:
                periods = q1 + q0
                if periods >= min_periods and periods % batch == 0:
                    if abs(_rho(s1, s0, q1, q0, center, rn, sig1, sig0)) >= gamma:
                        hit = True
                        break
                if periods >= horizon:
                    break
                if q1 <= periods * (sig1 / (sig1 + sig0)):
                    y, counter, have_spare, spare = _draw(kind, m1, sd1, key, counter, have_spare, spare)
                    q1 += 1
                    s1 += y
                    ss1 += y * y
                    arm = 1
                else:
                    y, counter, have_spare, spare = _draw(kind, m0, sd0, key, counter, have_spare, spare)
                    q0 += 1
                    s0 += y
                    ss0 += y * y
                    arm = 0
                if mode == 0:
                    dev = abs(q1 - (q1 + q0) * share)
                    if dev > fb:
                        fb = dev
                elif mode == 2:
                    if arm == 1:
                        p = (prior_a + s1) / (prior_a + prior_b + q1)
                        sig1 = math.sqrt(p * (1.0 - p))
                    else:
                        p = (prior_a + s0) / (prior_a + prior_b + q0)
                        sig0 = math.sqrt(p * (1.0 - p))
                elif mode == 3:
                    if arm == 1:
                        ssc = ss1 - 2.0 * center * s1 + q1 * center * center
                        sig1 = math.sqrt((prior_b + 0.5 * ssc) / (prior_a + 0.5 * q1 - 1.0))
                    else:
                        ssc = ss0 - 2.0 * center * s0 + q0 * center * center
                        sig0 = math.sqrt((prior_b + 0.5 * ssc) / (prior_a + 0.5 * q0 - 1.0))
                if mode >= 2 and gamma_fixed < 0.0:
                    gamma = gamma0 * ((sig1 + sig0) / (2.0 * c)) ** (1.0 / 3.0)
            rho = _rho(s1, s0, q1, q0, center, rn, sig1, sig0)
            chose_out[i] = 1 if rho >= 0.0 else 0
        else:
            chose_out[i] = 1
        periods_out[i] = q1 + q0
        hit_out[i] = hit
        status_out[i] = status
        fb_out[i] = fb
        sig1_out[i] = sig1
        sig0_out[i] = sig0
        gamma_out[i] = gamma


def supports_kernel(config, model):
    return model.kind in _KIND_CODES and config.influence is None


def run_replications(config, model, keys, gaps=None, threads=1):
    """Run one experiment per stream key and return per-replication arrays.

    ``gaps`` optionally overrides the model's local gap per replication
    (used for two-point priors).  Custom samplers and influence transforms
    fall back to the Python engine.  Keys of ``n_used``, ``chose_one``,
    ``hit``, ``capped``, ``gap``, ``regret_impl``, ``regret_cost``,
    ``regret``, ``tau``, ``fine_balance`` (max ``|q1 - N s|`` over the path,
    known-variance mode only), ``sigma_hat1``, ``sigma_hat0``, ``gamma``.
    """
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    reps = keys.shape[0]
    n = config.n
    if gaps is None:
        gaps = np.full(reps, model.local_gap(n))
    gaps = np.asarray(gaps, dtype=float)
    if not supports_kernel(config, model):
        return _python_replications(config, model, keys, gaps)

    mean1 = np.empty(reps)
    mean0 = np.empty(reps)
    uniq = {}
    for idx, g in enumerate(gaps):
        if g not in uniq:
            uniq[g] = model.with_gap(g).outcome_means(n)
        mean1[idx], mean0[idx] = uniq[g]
    sd1, sd0 = (model.sigma1, model.sigma0) if model.kind == "gaussian" else (0.0, 0.0)

    mode = config.variance_mode
    known_sig1 = known_sig0 = 1.0
    known_center = prior_center = 0.0
    nbar, min_sd, prior_a, prior_b = 0, 0.0, 1.0, 1.0
    if isinstance(mode, KnownVariance):
        code = MODE_KNOWN
        st = initial_state(config, model)
        known_sig1, known_sig0, known_center = st.sigma_hat1, st.sigma_hat0, st.center
    elif isinstance(mode, ForcedExploration):
        code = MODE_FORCED
        nbar, min_sd = mode.size(n), float(mode.min_sd)
    elif isinstance(mode, ConjugatePrior):
        st = initial_state(config, model)
        prior_center = st.center
        if st.prior_kind == "beta":
            code, prior_a, prior_b = MODE_BETA, mode.alpha0, mode.beta0
        else:
            code, prior_a, prior_b = MODE_INVGAMMA, mode.shape0, mode.scale0
    else:
        raise ConfigurationError(f"unsupported variance mode {mode!r}")

    gamma_fixed = -1.0 if config.gamma is None else float(config.gamma)
    gamma0 = universal_constants().gamma0
    periods = np.empty(reps, dtype=np.int64)
    chose = np.empty(reps, dtype=np.int8)
    hit = np.empty(reps, dtype=np.bool_)
    status = np.empty(reps, dtype=np.int8)
    fb = np.empty(reps)
    sig1 = np.empty(reps)
    sig0 = np.empty(reps)
    gam = np.empty(reps)
    kind = _KIND_CODES[model.kind]
    horizon = config.horizon_periods

    def work(lo, hi):
        s = slice(lo, hi)
        _experiment_kernel(keys[s], mean1[s], mean0[s], kind, sd1, sd0, float(n), config.c,
                           gamma_fixed, gamma0, code, known_sig1, known_sig0, known_center,
                           nbar, min_sd, prior_a, prior_b, prior_center,
                           config.batch_size, horizon, config.max_periods,
                           periods[s], chose[s], hit[s], status[s], fb[s],
                           sig1[s], sig0[s], gam[s])

    run_chunked(work, reps, threads)
    if np.any(status == STATUS_DEGENERATE):
        bad = int(np.argmax(status == STATUS_DEGENERATE))
        raise ConfigurationError(
            f"replication {bad}: estimated SD is zero; stopping rule undefined "
            "(set ForcedExploration.min_sd to floor the estimate)")
    return _pack(config, gaps, periods, chose, hit, fb, sig1, sig0, gam)


def _pack(config, gaps, periods, chose, hit, fb, sig1, sig0, gam):
    n = config.n
    tau = periods / n
    impl = np.maximum(gaps, 0.0) - gaps * chose
    cost = config.c * tau
    capped = (~hit) & (config.horizon_T is None)
    return {"n_used": periods, "tau": tau, "chose_one": chose, "hit": hit,
            "capped": capped, "gap": gaps, "regret_impl": impl, "regret_cost": cost,
            "regret": impl + cost, "fine_balance": fb, "sigma_hat1": sig1,
            "sigma_hat0": sig0, "gamma": gam}


def _python_replications(config, model, keys, gaps):
    reps = keys.shape[0]
    periods = np.empty(reps, dtype=np.int64)
    chose = np.empty(reps, dtype=np.int8)
    hit = np.empty(reps, dtype=np.bool_)
    fb = np.full(reps, np.nan)
    sig1 = np.empty(reps)
    sig0 = np.empty(reps)
    gam = np.empty(reps)
    for i in range(reps):
        res = run_experiment(config, model.with_gap(gaps[i]), CounterStream(int(keys[i])))
        periods[i], chose[i], hit[i] = res.n_used, res.chose_one, res.hit
        sig1[i], sig0[i], gam[i] = res.sigma_hat1, res.sigma_hat0, res.gamma
    return _pack(config, gaps, periods, chose, hit, fb, sig1, sig0, gam)


def summarize_replications(out):
    from .diffusion import misidentified

    return summarize(out["regret"], out["tau"], out["n_used"],
                     misidentified(out["gap"], out["chose_one"]), out["capped"],
                     extras={"mean_regret_impl": float(np.mean(out["regret_impl"])),
                             "mean_regret_cost": float(np.mean(out["regret_cost"]))})


def estimate_discrete_regret(config, model, reps, master_seed, threads=1):
    """Monte Carlo summary of ``reps`` independent experiments."""
    if reps < 1:
        raise ParameterError("reps must be >= 1")
    return summarize_replications(
        run_replications(config, model, stream_keys(master_seed, reps), threads=threads))
