"""Monte Carlo campaigns, reference overlays and CSV/JSON output.

A campaign sweeps a grid of raw local gaps ``mu1 - mu0`` and runs
``reps`` replications per grid point, either in the diffusion limit or with
the discrete experiment engine.  Grid point ``j`` uses replications
``j * reps ... (j + 1) * reps - 1`` of the master seed's stream family, so
every number in the output is a pure function of the spec and the seed.
"""

import configparser
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, is_dataclass
from typing import Optional

import numpy as np

from . import __version__
from .analytics import (
    DesignParams,
    closed_form_regret,
    efficiency_ratio,
    expected_stopping_time,
    nonadaptive_duration,
    solve_bai_equilibrium,
    solve_equilibrium,
)
from .diffusion import DiffusionSpec, misidentified, simulate_paths, summarize_paths
from .engine import DiscreteConfig, OutcomeModel, run_replications, summarize_replications
from .errors import ConfigurationError
from .rng import GOLDEN, SALT_STATE, _mix64_array, stream_keys
from .summary import exact_mean, standard_error, summarize

CSV_COLUMNS = ("gap", "mean_regret", "se", "q025", "q25", "q50", "q75", "q975",
               "mean_tau", "misid_rate", "capped_fraction")


@dataclass(frozen=True)
class CampaignSpec:
    """What to simulate.

    ``gaps`` are raw local gaps.  In ``"diffusion"`` mode ``params`` and
    ``gamma`` (default: the equilibrium threshold) define the rule.  In
    ``"discrete"`` mode ``config`` and ``model`` do; the model's gap is
    replaced by each grid value.
    """

    mode: str
    gaps: tuple
    reps: int
    master_seed: int = 0
    params: DesignParams = field(default_factory=DesignParams)
    gamma: Optional[float] = None
    dt: float = 1e-3
    bridge: bool = False
    config: Optional[DiscreteConfig] = None
    model: Optional[OutcomeModel] = None
    threads: int = 1

    def __post_init__(self):
        if self.mode not in ("diffusion", "discrete"):
            raise ConfigurationError(f"mode must be 'diffusion' or 'discrete', got {self.mode!r}")
        g = np.asarray(self.gaps, dtype=float)
        if g.ndim != 1 or not np.all(np.isfinite(g)):
            raise ConfigurationError("gaps must be a finite 1-d grid")
        if g.size > 1 and np.any(np.diff(g) <= 0):
            raise ConfigurationError("gap grid must be strictly increasing")
        if self.reps < 1:
            raise ConfigurationError("reps must be >= 1")
        if self.master_seed < 0 or self.master_seed >= 2 ** 64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if self.mode == "discrete" and (self.config is None or self.model is None):
            raise ConfigurationError("discrete mode needs both config and model")

    def design(self):
        """``DesignParams`` of the limit problem (discrete: SDs of the model at zero gap)."""
        if self.mode == "diffusion":
            return self.params
        s1, s0 = self.model.with_gap(0.0).outcome_sds(self.config.n)
        return DesignParams(c=self.config.c, sigma1=s1, sigma0=s0)

    def threshold(self):
        if self.mode == "discrete":
            return self.config.gamma
        return self.gamma if self.gamma is not None else solve_equilibrium(self.params).gamma_star

    def echo(self):
        """JSON-friendly description of the spec, for output metadata.

        ``threads`` is left out: it cannot change any result.
        """
        out = {"mode": self.mode, "gaps": [float(g) for g in self.gaps], "reps": self.reps,
               "master_seed": self.master_seed}
        if self.mode == "diffusion":
            out.update(params=asdict(self.params), gamma=self.threshold(), dt=self.dt,
                       bridge=self.bridge)
        else:
            cfg = {k: v for k, v in asdict(self.config).items() if k not in ("influence",)}
            cfg["variance_mode"] = {"type": type(self.config.variance_mode).__name__,
                                    **asdict(self.config.variance_mode)}
            m = {k: v for k, v in asdict(self.model).items() if k != "sampler"}
            out.update(config=cfg, model=m)
        return _jsonable(out)


@dataclass(frozen=True)
class ProfileResult:
    rows: list
    reference: list
    v_star: float
    gap_star: float
    spec: CampaignSpec

    def means(self):
        return np.array([s.mean_regret for _, s in self.rows])

    def argmax_gap(self):
        return float(self.rows[int(np.argmax(self.means()))][0]) if self.rows else math.nan


@dataclass(frozen=True)
class LfpResult:
    summary: object
    state_means: tuple
    state_se: tuple
    state_counts: tuple
    v_star: float
    gap_star: float


@dataclass(frozen=True)
class GainReport:
    mc_mean_tau: float
    mc_se: float
    formula_mean_tau: float
    t_fixed: float
    ratio: float
    mc_ratio: float
    reference: float = 0.6


def _jsonable(obj):
    if is_dataclass(obj):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _campaign_keys(spec):
    return stream_keys(spec.master_seed, spec.reps * len(spec.gaps))


def _run_point(spec, keys, gap):
    if spec.mode == "diffusion":
        dspec = DiffusionSpec(spec.params, mu1=gap, mu0=0.0, gamma=spec.threshold(),
                              dt=spec.dt, bridge=spec.bridge)
        return summarize_paths(simulate_paths(dspec, keys, threads=spec.threads))
    model = spec.model.with_gap(gap)
    return summarize_replications(run_replications(spec.config, model, keys,
                                                   threads=spec.threads))


def _reference_threshold(spec):
    gamma = spec.threshold()
    return gamma if gamma is not None else solve_equilibrium(spec.design()).gamma_star


def regret_profile(spec, progress=None):
    """One :class:`RegretSummary` per grid gap plus closed-form overlays.

    ``reference[j]`` is the diffusion closed form at ``|gaps[j]|`` for the
    threshold in use; ``v_star`` and ``gap_star`` (raw gap of the least
    favorable prior) are recomputed from the analytics every call.
    """
    keys = _campaign_keys(spec)
    design = spec.design()
    eq = solve_equilibrium(design)
    gamma = _reference_threshold(spec)
    rows, ref = [], []
    for j, gap in enumerate(spec.gaps):
        s = _run_point(spec, keys[j * spec.reps:(j + 1) * spec.reps], float(gap))
        rows.append((float(gap), s))
        ref.append(closed_form_regret(design, gamma, abs(float(gap))))
        if progress:
            progress(f"gap {gap:g}: mean regret {s.mean_regret:.5f} (se {s.std_error:.5f})")
    return ProfileResult(rows=rows, reference=ref, v_star=eq.value,
                         gap_star=design.raw_gap(eq.delta_star), spec=spec)


def _state_signs(master_seed, reps):
    """+1 / -1 per replication, from a salted stream family independent of the paths."""
    keys = stream_keys(master_seed, reps, salt=SALT_STATE)
    with np.errstate(over="ignore"):
        x = _mix64_array(keys + np.uint64(GOLDEN))
    u = ((x >> np.uint64(11)).astype(float) + 0.5) * 2.0 ** -53
    return np.where(u < 0.5, 1.0, -1.0)


def lfp_bayes_regret(spec):
    """Bayes regret under the least favorable two-point prior.

    Each replication draws the sign of the gap with probability 1/2; the
    gap magnitude is the raw equilibrium gap.  ``spec.gaps`` is ignored.
    """
    design = spec.design()
    eq = solve_equilibrium(design)
    g_star = design.raw_gap(eq.delta_star)
    signs = _state_signs(spec.master_seed, spec.reps)
    gaps = signs * g_star
    keys = stream_keys(spec.master_seed, spec.reps)
    if spec.mode == "diffusion":
        dspec = DiffusionSpec(spec.params, mu1=g_star, mu0=0.0, gamma=spec.threshold(),
                              dt=spec.dt, bridge=spec.bridge)
        out = simulate_paths(dspec, keys, gaps=gaps, threads=spec.threads)
        summary = summarize_paths(out)
    else:
        out = run_replications(spec.config, spec.model, keys, gaps=gaps, threads=spec.threads)
        summary = summarize_replications(out)
    means, ses, counts = [], [], []
    for sgn in (1.0, -1.0):
        r = out["regret"][signs == sgn]
        means.append(exact_mean(r) if r.size else math.nan)
        ses.append(standard_error(r))
        counts.append(int(r.size))
    return LfpResult(summary=summary, state_means=tuple(means), state_se=tuple(ses),
                     state_counts=tuple(counts), v_star=eq.value, gap_star=g_star)


def adaptivity_gain_report(params, reps, master_seed=0, dt=1e-3, threads=1, bridge=True):
    """Simulated and formula ``E[tau*]`` next to the equally-informative fixed horizon."""
    eq = solve_equilibrium(params)
    g_star = params.raw_gap(eq.delta_star)
    dspec = DiffusionSpec(params, mu1=g_star, mu0=0.0, gamma=eq.gamma_star, dt=dt, bridge=bridge)
    out = simulate_paths(dspec, stream_keys(master_seed, reps), threads=threads)
    t_fixed = nonadaptive_duration(params)
    mc = exact_mean(out["tau"])
    return GainReport(mc_mean_tau=mc, mc_se=standard_error(out["tau"]),
                      formula_mean_tau=expected_stopping_time(eq.gamma_star, eq.delta_star),
                      t_fixed=t_fixed, ratio=efficiency_ratio(), mc_ratio=mc / t_fixed)


def bai_profile(params, gaps, reps, master_seed=0, threads=1):
    """Fixed unit-horizon Neyman design: implementation regret per raw gap.

    With the threshold at infinity and ``dt = 1`` the diffusion is sampled
    exactly at the horizon, so there is no discretization error.
    """
    keys = stream_keys(master_seed, reps * len(gaps))
    rows = []
    for j, gap in enumerate(gaps):
        dspec = DiffusionSpec(params, mu1=float(gap), mu0=0.0, gamma=math.inf, horizon=1.0, dt=1.0)
        out = simulate_paths(dspec, keys[j * reps:(j + 1) * reps], threads=threads)
        impl = out["regret"] - params.c * out["tau"]
        rows.append((float(gap), summarize(impl, out["tau"], out["tau"],
                                           misidentified(out["gap"], out["chose_one"]),
                                           np.zeros(reps, dtype=bool))))
    sol = solve_bai_equilibrium()
    return rows, sol, params.raw_gap(sol.delta_bar)


# output ---------------------------------------------------------------------------

def _fmt(x):
    return format(float(x), ".17g")


def summary_row(gap, s):
    q = s.quantiles
    return (gap, s.mean_regret, s.std_error, q[0], q[1], q[2], q[3], q[4],
            s.mean_tau, s.misid_rate, s.capped_fraction)


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    try:
        return open(path, "w", newline="", encoding="utf-8"), True
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_table(columns, rows, fmt="csv", path=None, metadata=None, extra=None):
    """Write ``rows`` (sequences aligned with ``columns``) as CSV or JSON.

    CSV numbers use 17 significant digits and ``.`` as decimal point.  JSON
    stores the same rows as objects under ``"rows"`` next to a
    ``"metadata"`` block; ``extra`` adds further top-level keys.
    Returns the text written.
    """
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, int, np.floating, np.integer))
                        and not isinstance(v, bool) else v for v in r])
        text = buf.getvalue()
    elif fmt == "json":
        doc = {"metadata": _jsonable(metadata or {}), "columns": list(columns),
               "rows": [dict(zip(columns, _jsonable(list(r)))) for r in rows]}
        if extra:
            doc.update(_jsonable(extra))
        text = json.dumps(doc, indent=2, allow_nan=True) + "\n"
    else:
        raise ConfigurationError(f"unknown format {fmt!r}")
    fh, close = _open_out(path)
    try:
        fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    finally:
        if close:
            fh.close()
    return text


def emit(results, fmt="csv", path=None, metadata=None):
    """Emit a :class:`ProfileResult` (or a list of ``(gap, summary)`` pairs).

    The JSON form also carries the closed-form reference curve and ``V*``.
    """
    extra = None
    if isinstance(results, ProfileResult):
        meta = {"seed": results.spec.master_seed, "version": __version__,
                "spec": results.spec.echo()}
        meta.update(metadata or {})
        extra = {"reference": {"closed_form": list(results.reference),
                               "v_star": results.v_star, "gap_star": results.gap_star}}
        rows = results.rows
    else:
        meta = {"version": __version__, **(metadata or {})}
        rows = results
    return emit_table(CSV_COLUMNS, [summary_row(g, s) for g, s in rows], fmt, path, meta, extra)


def reference_sidecar(result, fmt="csv", path=None):
    """Closed-form overlay for a profile: ``gap, closed_form, v_star``."""
    rows = [(g, ref, result.v_star) for (g, _), ref in zip(result.rows, result.reference)]
    return emit_table(("gap", "closed_form", "v_star"), rows, fmt, path,
                      {"version": __version__, "gap_star": result.gap_star})


# configuration --------------------------------------------------------------------

def load_config(path):
    """Read an INI-style file into ``{section: {key: value}}``.

    Keys are ``key = value`` lines under ``[section]`` headers; ``#`` and
    ``;`` start comments.  Values stay strings; callers convert them.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    return {s: dict(parser.items(s)) for s in parser.sections()}
