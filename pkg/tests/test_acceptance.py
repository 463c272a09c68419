"""End-to-end acceptance checks, one test per criterion."""

import math
import time

import numpy as np
import pytest

from minimax_wald import analytics
from minimax_wald.analytics import (
    DesignParams,
    closed_form_regret,
    efficiency_ratio,
    expected_stopping_time,
    misid_prob,
    norm_cdf,
    norm_pdf,
    solve_bai_equilibrium,
    solve_equilibrium,
)
from minimax_wald.cli import main
from minimax_wald.costs import CostFunction, solve_general_equilibrium, zeta, zeta_constant
from minimax_wald.diffusion import DiffusionSpec, estimate_regret, simulate_paths
from minimax_wald.engine import (
    DiscreteConfig,
    ForcedExploration,
    KnownVariance,
    OutcomeModel,
    run_replications,
)
from minimax_wald.harness import CampaignSpec, bai_profile, emit, regret_profile
from minimax_wald.hjb import HjbGrid, solve_hjb
from minimax_wald.rng import stream_keys
from minimax_wald.summary import exact_mean, standard_error

UNIT = DesignParams(1.0, 1.0, 1.0)
GAP_GRID = tuple(np.arange(0.0, 5.01, 0.5))


def test_01_equilibrium_constants(report, tmp_path):
    analytics.universal_constants.cache_clear()
    t0 = time.perf_counter()
    out = tmp_path / "eq.csv"
    assert main(["equilibrium", "--out", str(out)]) == 0
    elapsed = time.perf_counter() - t0
    header, row = out.read_text().splitlines()
    vals = dict(zip(header.split(","), map(float, row.split(","))))
    g, d = vals["gamma_star"], vals["delta_star"]
    ok = abs(g - 0.536357) <= 1e-4 and abs(d - 2.19613) <= 1e-3 and elapsed < 1.0
    report("1 equilibrium constants", ok,
           f"gamma*={g:.7f} delta*={d:.6f} V*={vals['value']:.6f} alpha*={vals['alpha']:.6f} "
           f"({elapsed:.3f}s)")
    assert ok


def test_02_misidentification_constant(report):
    sol = solve_equilibrium(UNIT)
    a = misid_prob(sol.gamma_star, sol.delta_star)
    rng = np.random.default_rng(2024)
    alphas = []
    for _ in range(20):
        c, s1, s0 = np.exp(rng.uniform(-2, 2, size=3))
        e = solve_equilibrium(DesignParams(c, s1, s0))
        alphas.append(misid_prob(e.gamma_star, e.delta_star))
    spread = max(alphas) - min(alphas)
    ok = abs(a - 0.2354) <= 1e-3 and spread < 1e-6
    report("2 mis-identification constant", ok, f"alpha*={a:.7f}, spread over 20 triples {spread:.2e}")
    assert ok


def test_03_adaptivity_gain(report):
    t0 = time.perf_counter()
    ratio = efficiency_ratio()
    sol = solve_equilibrium(UNIT)
    spec = DiffusionSpec(UNIT, mu1=UNIT.raw_gap(sol.delta_star), mu0=0.0, gamma=sol.gamma_star,
                         dt=1e-3, bridge=True)
    out = simulate_paths(spec, stream_keys(3, 100_000), threads=8)
    mc, se = exact_mean(out["tau"]), standard_error(out["tau"])
    exact = expected_stopping_time(sol.gamma_star, sol.delta_star)
    elapsed = time.perf_counter() - t0
    ok = abs(ratio - 0.6) <= 0.005 and abs(mc - exact) <= 3 * se and elapsed < 30
    report("3 adaptivity gain", ok,
           f"ratio={ratio:.5f}; MC E[tau*]={mc:.5f}+-{se:.5f} vs {exact:.5f} ({elapsed:.1f}s)")
    assert ok


def test_04_diffusion_oracle(report):
    t0 = time.perf_counter()
    worst, fails = 0.0, []
    for g in (0.25, 0.4, 0.55, 0.75, 1.0):
        for d in (0.5, 1.0, 2.0, 3.0, 4.5):
            gap = UNIT.raw_gap(d)
            s = estimate_regret(DiffusionSpec(UNIT, gap, 0.0, g, dt=1e-3, bridge=True),
                                100_000, 4, threads=8)
            cf = closed_form_regret(UNIT, g, gap)
            tol = 3 * s.std_error + 0.02 * cf
            worst = max(worst, abs(s.mean_regret - cf) / tol)
            if abs(s.mean_regret - cf) > tol:
                fails.append((g, d))
    elapsed = time.perf_counter() - t0
    ok = not fails and elapsed < 300
    report("4 diffusion oracle (5x5)", ok,
           f"worst |MC-closed|/tolerance = {worst:.3f}, failures {fails} ({elapsed:.1f}s)")
    assert ok


def _attainment(label, report, spec, tolerance, elapsed_limit=None):
    t0 = time.perf_counter()
    res = regret_profile(spec)
    elapsed = time.perf_counter() - t0
    means = res.means()
    peak = float(means.max())
    arg = res.argmax_gap()
    step = spec.gaps[1] - spec.gaps[0]
    ok = abs(peak - res.v_star) <= tolerance * res.v_star and abs(arg - res.gap_star) <= step
    if elapsed_limit is not None:
        ok = ok and elapsed < elapsed_limit
    report(label, ok, f"max mean regret {peak:.4f} vs V*={res.v_star:.4f} "
           f"({100 * (peak / res.v_star - 1):+.2f}%), argmax {arg:g} vs {res.gap_star:.4f} "
           f"({elapsed:.1f}s)")
    return ok


def test_05_bernoulli_attainment(report):
    spec = CampaignSpec("discrete", GAP_GRID, 10_000, master_seed=5,
                        config=DiscreteConfig(n=1000, c=1.0,
                                              variance_mode=ForcedExploration(min_sd=1e-3)),
                        model=OutcomeModel.bernoulli(0.4, 0.0), threads=8)
    assert _attainment("5 Bernoulli n=1000 attainment", report, spec, 0.10, 600)


def test_06_gaussian_attainment(report):
    spec = CampaignSpec("discrete", GAP_GRID, 10_000, master_seed=6,
                        config=DiscreteConfig(n=200, c=1.0, variance_mode=KnownVariance()),
                        model=OutcomeModel.gaussian_gap(0.0), threads=8)
    assert _attainment("6 Gaussian n=200 attainment", report, spec, 0.10)


def test_07_fine_balance(report):
    cfg = DiscreteConfig(n=1000, c=1.0)
    model = OutcomeModel.gaussian(1.0, 0.0, sigma1=0.7, sigma0=1.9)
    out = run_replications(cfg, model, stream_keys(7, 1000), threads=4)
    # |q1/t' - s| <= 1/(n t) with t' = N pulls and t = N/n is |q1 - N s| <= 1
    violations = int(np.sum(out["fine_balance"] > 1.0))
    ok = violations == 0
    report("7 fine balance", ok,
           f"{violations} violations over 1000 paths, max |q1 - N s| = {out['fine_balance'].max():.4f}")
    assert ok


def test_08_general_cost_reduction(report):
    ref = solve_equilibrium(UNIT)
    gen = solve_general_equilibrium(CostFunction.constant(1.0))
    err = max(abs(gen.gamma_star - ref.gamma_star), abs(gen.delta_star - ref.delta_star))
    cost = CostFunction.constant(1.0)
    worst = 0.0
    for d in np.linspace(0.25, 6.0, 8):
        for x in np.linspace(-3.0, 3.0, 13):
            if x == 0:
                continue
            exact = zeta_constant(1.0, d, x)
            worst = max(worst, abs(zeta(cost, d, x) - exact) / abs(exact))
    ok = err < 1e-5 and worst < 1e-8
    report("8 general-cost reduction", ok,
           f"max |(gamma,delta) diff| = {err:.2e}, max zeta rel. error {worst:.2e}")
    assert ok


def test_09_hjb(report):
    t0 = time.perf_counter()
    sol = solve_hjb(HjbGrid.symmetric(d_rho=5e-3, T=6.0, params=UNIT))
    elapsed = time.perf_counter() - t0
    eq = solve_equilibrium(UNIT)
    rel = abs(sol.value0 - eq.value) / eq.value
    berr = abs(sol.boundary0 - eq.gamma_star)
    ok = rel < 0.02 and berr < 2 * 5e-3 and elapsed < 120
    report("9 HJB cross-validation", ok,
           f"V(0,0)={sol.value0:.5f} ({100 * rel:.3f}% off), boundary {sol.boundary0:.4f} vs "
           f"{eq.gamma_star:.4f} ({elapsed:.1f}s)")
    assert ok


def test_10_bai(report):
    s = solve_bai_equilibrium()
    d = s.delta_half
    resid = abs(norm_cdf(-d) - d * norm_pdf(d))
    gaps = tuple(np.arange(0.5, 3.01, 0.25))
    rows, _, g_bar = bai_profile(UNIT, gaps, 1_000_000, master_seed=10, threads=8)
    means = [r.mean_regret for _, r in rows]
    arg = gaps[int(np.argmax(means))]
    ok = resid < 1e-10 and abs(arg - g_bar) <= 0.25
    v = solve_equilibrium(UNIT).value
    report("10 BAI stationarity", ok,
           f"residual {resid:.1e}, simulated peak at {arg:g} vs 2 delta* = {s.delta_bar:.5f}; "
           f"annotation: BAI value / V* = {s.value / v:.4f}")
    assert ok


def test_11_determinism(report, tmp_path):
    specs = {
        "diffusion": dict(mode="diffusion", gaps=(0.0, 1.0, 2.0, 3.0), reps=5000, bridge=True),
        "discrete": dict(mode="discrete", gaps=(0.0, 1.0, 2.0), reps=3000,
                         config=DiscreteConfig(n=1000, variance_mode=ForcedExploration(min_sd=1e-3)),
                         model=OutcomeModel.bernoulli(0.4, 0.0)),
    }
    same = True
    for name, kw in specs.items():
        for fmt in ("csv", "json"):
            blobs = []
            for threads in (1, 2, 8, 1):
                path = tmp_path / f"{name}-{threads}-{len(blobs)}.{fmt}"
                spec = CampaignSpec(master_seed=11, threads=threads, **kw)
                emit(regret_profile(spec), fmt, path)
                blobs.append(path.read_bytes())
            same &= len(set(blobs)) == 1
    # the CLI path as well
    cli = []
    for threads in ("1", "2", "8"):
        out = tmp_path / f"cli{threads}.csv"
        assert main(["profile", "--reps", "2000", "--seed", "11", "--threads", threads,
                     "--out", str(out)]) == 0
        cli.append(out.read_bytes())
    same &= len(set(cli)) == 1
    report("11 determinism", same, "byte-identical CSV/JSON across 1, 2 and 8 threads" if same
           else "outputs differ across thread counts")
    assert same
