"""Command-line entry point: ``minimax-wald <subcommand> [flags]``.

Settings come from built-in defaults, then an optional INI config file
(``--config``), then command-line flags, later sources winning.  Data goes
to ``--out`` (standard output by default); progress goes to standard error.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 I/O error.
"""

import argparse
import math
import sys
import time

from . import __version__
from .analytics import DesignParams, solve_equilibrium
from .costs import CostFunction, solve_general_equilibrium
from .engine import (
    ConjugatePrior,
    DiscreteConfig,
    ForcedExploration,
    KnownVariance,
    OutcomeModel,
)
from .errors import ConfigurationError, NumericalError, ParameterError, SolverError
from .harness import (
    CSV_COLUMNS,
    CampaignSpec,
    adaptivity_gain_report,
    bai_profile,
    emit,
    emit_table,
    lfp_bayes_regret,
    load_config,
    regret_profile,
    summary_row,
)
from .hjb import HjbGrid, solve_hjb

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

DEFAULTS = {
    "design": {"c": "1", "sigma1": "1", "sigma0": "1"},
    "campaign": {"mode": "diffusion", "gaps": "0:5:0.5", "reps": "10000", "seed": "0",
                 "threads": "1", "dt": "0.001", "bridge": "false", "gamma": ""},
    "discrete": {"n": "1000", "model": "bernoulli", "p0": "0.4", "variance": "known",
                 "batch_size": "1", "horizon_t": "", "min_sd": "0.001",
                 "explore_fraction": "0.05", "explore_floor": "50"},
    "hjb": {"d_rho": "0.005", "t": "6", "rho_max": "", "save_every": "1000"},
    "cost": {"kind": "polynomial", "coeffs": "1,0,1", "starts": "2"},
}

# flag name -> (section, key)
FLAG_KEYS = {"seed": ("campaign", "seed"), "reps": ("campaign", "reps"),
             "n": ("discrete", "n"), "dt": ("campaign", "dt"), "gamma": ("campaign", "gamma"),
             "threads": ("campaign", "threads")}


class Settings:
    def __init__(self, layers):
        self.data = {s: dict(v) for s, v in DEFAULTS.items()}
        for layer in layers:
            for sec, items in layer.items():
                self.data.setdefault(sec, {}).update({k.lower(): v for k, v in items.items()})

    def get(self, sec, key):
        return self.data.get(sec, {}).get(key, "")

    def num(self, sec, key, typ=float, optional=False):
        raw = self.get(sec, key).strip()
        if raw == "" and optional:
            return None
        try:
            return typ(raw)
        except ValueError:
            raise ConfigurationError(f"[{sec}] {key} = {raw!r} is not a valid {typ.__name__}")

    def flag(self, sec, key):
        return self.get(sec, key).strip().lower() in ("1", "true", "yes", "on")


def parse_grid(text):
    """``"a:b:step"`` (inclusive of ``b``) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        try:
            a, b, h = (float(p) for p in text.split(":"))
        except ValueError:
            raise ConfigurationError(f"bad grid {text!r}; use start:stop:step")
        if not h > 0 or b < a:
            raise ConfigurationError(f"bad grid {text!r}")
        k = int(math.floor((b - a) / h + 1e-9))
        return tuple(float(round(a + i * h, 12)) for i in range(k + 1))
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigurationError(f"bad grid {text!r}")


def _design(st):
    return DesignParams(c=st.num("design", "c"), sigma1=st.num("design", "sigma1"),
                        sigma0=st.num("design", "sigma0"))


def _variance_mode(st):
    kind = st.get("discrete", "variance").strip().lower()
    if kind == "known":
        return KnownVariance()
    if kind == "forced":
        return ForcedExploration(fraction=st.num("discrete", "explore_fraction"),
                                 floor=st.num("discrete", "explore_floor", int),
                                 min_sd=st.num("discrete", "min_sd"))
    if kind == "conjugate":
        return ConjugatePrior()
    raise ConfigurationError(f"[discrete] variance must be known, forced or conjugate, got {kind!r}")


def _campaign(st):
    mode = st.get("campaign", "mode").strip().lower()
    common = dict(gaps=parse_grid(st.get("campaign", "gaps")), reps=st.num("campaign", "reps", int),
                  master_seed=st.num("campaign", "seed", int),
                  threads=st.num("campaign", "threads", int))
    gamma = st.num("campaign", "gamma", optional=True)
    if mode == "diffusion":
        return CampaignSpec("diffusion", params=_design(st), gamma=gamma,
                            dt=st.num("campaign", "dt"), bridge=st.flag("campaign", "bridge"),
                            **common)
    if mode == "discrete":
        d = _design(st)
        cfg = DiscreteConfig(n=st.num("discrete", "n", int), c=d.c,
                             horizon_T=st.num("discrete", "horizon_t", optional=True),
                             gamma=gamma, variance_mode=_variance_mode(st),
                             batch_size=st.num("discrete", "batch_size", int))
        kind = st.get("discrete", "model").strip().lower()
        if kind == "bernoulli":
            model = OutcomeModel.bernoulli(st.num("discrete", "p0"), 0.0)
        elif kind == "gaussian":
            model = OutcomeModel.gaussian_gap(0.0, d.sigma1, d.sigma0)
        else:
            raise ConfigurationError(f"[discrete] model must be bernoulli or gaussian, got {kind!r}")
        return CampaignSpec("discrete", config=cfg, model=model, **common)
    raise ConfigurationError(f"[campaign] mode must be diffusion or discrete, got {mode!r}")


def _cost(st):
    kind = st.get("cost", "kind").strip().lower()
    values = [float(v) for v in st.get("cost", "coeffs").split(",") if v.strip()]
    if kind == "constant":
        return CostFunction.constant(values[0] if values else _design(st).c)
    if kind == "polynomial":
        return CostFunction.polynomial(values)
    raise ConfigurationError(f"[cost] kind must be constant or polynomial, got {kind!r}")


def _log(msg):
    print(msg, file=sys.stderr, flush=True)


# subcommands ------------------------------------------------------------------------

def cmd_equilibrium(st, args):
    p = _design(st)
    sol = solve_equilibrium(p)
    cols = ("c", "sigma1", "sigma0", "eta", "gamma_star", "delta_star", "value", "alpha",
            "raw_gap_star")
    emit_table(cols, [(p.c, p.sigma1, p.sigma0, p.eta, sol.gamma_star, sol.delta_star,
                       sol.value, sol.alpha, p.raw_gap(sol.delta_star))],
               args.format, args.out, {"version": __version__})


def cmd_bai(st, args):
    p = _design(st)
    gaps = parse_grid(st.get("campaign", "gaps"))
    reps = st.num("campaign", "reps", int)
    rows, sol, g_bar = bai_profile(p, gaps, reps, st.num("campaign", "seed", int),
                                   st.num("campaign", "threads", int))
    _log(f"delta_bar = {sol.delta_bar:.10f} (raw gap {g_bar:.6f}), BAI value {sol.value:.10f}, "
         f"stationarity residual {sol.residual:.2e}")
    emit(rows, args.format, args.out,
         {"seed": st.num("campaign", "seed", int), "delta_bar": sol.delta_bar,
          "raw_gap_bar": g_bar, "bai_value": sol.value})


def cmd_profile(st, args):
    spec = _campaign(st)
    t0 = time.perf_counter()
    res = regret_profile(spec, progress=_log)
    _log(f"V* = {res.v_star:.6f}; argmax gap {res.argmax_gap():g} "
         f"(least favorable gap {res.gap_star:.4f}); {time.perf_counter() - t0:.1f}s")
    emit(res, args.format, args.out)


def cmd_lfp(st, args):
    spec = _campaign(st)
    r = lfp_bayes_regret(spec)
    s = r.summary
    _log(f"Bayes regret {s.mean_regret:.6f} (se {s.std_error:.6f}) vs V* {r.v_star:.6f}")
    cols = CSV_COLUMNS + ("v_star", "mean_plus", "se_plus", "mean_minus", "se_minus")
    row = summary_row(r.gap_star, s) + (r.v_star, r.state_means[0], r.state_se[0],
                                        r.state_means[1], r.state_se[1])
    emit_table(cols, [row], args.format, args.out,
               {"version": __version__, "seed": spec.master_seed, "spec": spec.echo()})


def cmd_gain(st, args):
    p = _design(st)
    g = adaptivity_gain_report(p, st.num("campaign", "reps", int), st.num("campaign", "seed", int),
                               dt=st.num("campaign", "dt"),
                               threads=st.num("campaign", "threads", int))
    cols = ("mc_mean_tau", "mc_se", "formula_mean_tau", "t_fixed", "ratio", "mc_ratio", "reference")
    emit_table(cols, [(g.mc_mean_tau, g.mc_se, g.formula_mean_tau, g.t_fixed, g.ratio,
                       g.mc_ratio, g.reference)], args.format, args.out,
               {"version": __version__, "seed": st.num("campaign", "seed", int)})


def cmd_hjb(st, args):
    p = _design(st)
    grid = HjbGrid.symmetric(d_rho=st.num("hjb", "d_rho"), T=st.num("hjb", "t"), params=p,
                             rho_max=st.num("hjb", "rho_max", optional=True),
                             save_every=st.num("hjb", "save_every", int))
    t0 = time.perf_counter()
    sol = solve_hjb(grid)
    eq = solve_equilibrium(p)
    _log(f"V(0,0) = {sol.value0:.6f} (closed form {eq.value:.6f}); boundary {sol.boundary0:.5f} "
         f"(gamma* {eq.gamma_star:.5f}); {grid.steps} steps, {time.perf_counter() - t0:.1f}s")
    rows = [(t, b, sol.value_at(0.0, j)) for j, (t, b) in enumerate(zip(sol.times, sol.boundary_curve))]
    emit_table(("t", "boundary", "value_at_0"), rows, args.format, args.out,
               {"version": __version__, "d_rho": grid.d_rho, "dt": grid.dt, "T": grid.T,
                "rho_max": grid.rho_max, "v_star": eq.value, "gamma_star": eq.gamma_star})


def cmd_general_cost(st, args):
    p = _design(st)
    cost = _cost(st)
    sol = solve_general_equilibrium(cost, p.sigma1, p.sigma0, starts=st.num("cost", "starts", int))
    emit_table(("gamma_star", "delta_star", "value", "residual"),
               [(sol.gamma_star, sol.delta_star, sol.value, sol.residual)], args.format, args.out,
               {"version": __version__, "cost": cost.spec})


COMMANDS = {"equilibrium": cmd_equilibrium, "bai": cmd_bai, "profile": cmd_profile,
            "lfp": cmd_lfp, "gain": cmd_gain, "hjb": cmd_hjb, "general-cost": cmd_general_cost}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI config file")
    common.add_argument("--seed", type=int, metavar="U64")
    common.add_argument("--reps", type=int, metavar="N")
    common.add_argument("--n", type=int, metavar="N", help="population scale (discrete mode)")
    common.add_argument("--dt", type=float, metavar="F")
    common.add_argument("--gamma", type=float, metavar="F", help="override the threshold")
    common.add_argument("--threads", type=int, metavar="N")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override any config entry")
    parser = argparse.ArgumentParser(prog="minimax-wald", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _flag_layer(args):
    layer = {}
    for name, (sec, key) in FLAG_KEYS.items():
        v = getattr(args, name)
        if v is not None:
            layer.setdefault(sec, {})[key] = repr(v) if isinstance(v, float) else str(v)
    for item in args.set:
        lhs, sep, value = item.partition("=")
        sec, dot, key = lhs.partition(".")
        if not (sep and dot and sec and key):
            raise ConfigurationError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        layer.setdefault(sec.strip(), {})[key.strip().lower()] = value.strip()
    return layer


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        layers = [load_config(args.config)] if args.config else []
        layers.append(_flag_layer(args))
        COMMANDS[args.command](Settings(layers), args)
    except (ConfigurationError, ParameterError) as exc:
        _log(f"configuration error: {exc}")
        return EXIT_CONFIG
    except (SolverError, NumericalError) as exc:
        _log(f"solver error: {exc}")
        return EXIT_SOLVER
    except OSError as exc:
        _log(f"I/O error: {exc}")
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
