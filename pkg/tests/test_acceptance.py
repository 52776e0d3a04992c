"""Acceptance criteria 1-11; each test prints one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
from scipy import stats

from panelrisk import report, simulation
from panelrisk.descriptive import std_dev
from panelrisk.diagnostics import cross_section_dependence, dw_statistic, hausman, jarque_bera
from panelrisk.estimation import ModelSpec, Weighting, egls_cross_section_sur, fixed_effects
from panelrisk.panel import pct_change, write_csv
from panelrisk.pipeline import PipelineConfig, run_pipeline
from panelrisk.simulation import DGPSpec, simulate_critical_values, size_power
from panelrisk.unitroot import fisher_combine

from conftest import RISK_FORMULA, country_panel, random_panel
from test_diagnostics import corr_pair, stub_fit
from test_pipeline import VALIDATION_ROWS

ALPHA = 0.05
REPS = 1000
SIZE_BAND = (0.02, 0.09)


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail

    return emit


def test_criterion_01_hand_oracles(verdict):
    t0 = time.perf_counter()
    checks = {
        "std_dev": (std_dev([1, 2, 3]), 1.0),
        "pct_change": (pct_change([(2000, 100.0), (2001, 106.65)])[0][1], 6.65),
        "dw": (dw_statistic(np.array([1.0, -1.0] * 5)), 3.6),
        "jb": (jarque_bera(np.array([1.0, -1.0] * 5)).statistic, 10 / 6),
        "hausman": (hausman(stub_fit([3.0], [[4.0]]), stub_fit([1.0], [[1.0]])).statistic, 4 / 3),
        "lm": (cross_section_dependence(corr_pair(10, 0.5), "breusch_pagan_lm").statistic, 2.5),
        "cd": (cross_section_dependence(corr_pair(10, 0.5), "pesaran_cd").statistic, math.sqrt(10) / 2),
        "fisher": (fisher_combine([0.05, 0.10]).statistic, -2 * (math.log(0.05) + math.log(0.10))),
    }
    elapsed = time.perf_counter() - t0
    bad = {k: v for k, v in checks.items() if abs(v[0] - v[1]) > 1e-9}
    fisher_rounded = abs(checks["fisher"][0] - 10.596) < 1e-3  # [PAPER] rounded value
    ok = not bad and fisher_rounded and elapsed < 1.0
    verdict(1, ok, f"{len(checks) - len(bad)}/{len(checks)} hand values to 1e-9, {elapsed:.3f}s")


def test_criterion_02_brute_force_gls(verdict):
    ds = random_panel(5, n_entities=2, n_periods=3, k=1)
    spec = ModelSpec("y", (("x1", 0),), weighting=Weighting.CROSS_SECTION_SUR)
    sigma = np.array([[2.0, 0.6], [0.6, 1.0]])
    res = egls_cross_section_sur(ds, spec, sigma=sigma)
    y, x = ds.values("y").ravel(), ds.values("x1").ravel()
    X = np.column_stack([x, np.kron(np.eye(2), np.ones((3, 1)))])
    w = np.linalg.inv(np.kron(sigma, np.eye(3)))
    b = np.linalg.solve(X.T @ w @ X, X.T @ w @ y)
    err = max(abs(res.slope_params[0] - b[0]), abs(res["C"].estimate - b[1:].mean()))
    verdict(2, err < 1e-8, f"max |EGLS - explicit GLS| = {err:.2e}")


def test_criterion_03_identity_weighting(verdict):
    spec = ModelSpec("y", (("x1", 0), ("x2", 0)), weighting=Weighting.CROSS_SECTION_SUR)
    worst = 0.0
    for seed in range(100):
        ds = random_panel(seed, n_entities=4, n_periods=7)
        a = egls_cross_section_sur(ds, spec, sigma=np.eye(4))
        b = fixed_effects(ds, ModelSpec("y", spec.regressors))
        worst = max(worst, np.max(np.abs(a.params - b.params)), np.max(np.abs(a.covariance - b.covariance)))
    verdict(3, worst < 1e-8, f"100 panels, max deviation {worst:.2e}")


def test_criterion_04_within_equals_dummies(verdict):
    spec = ModelSpec("y", (("x1", 0), ("x2", 0)))
    worst = 0.0
    for seed in range(100):
        ds = random_panel(1000 + seed, n_entities=2 + seed % 6, n_periods=4 + seed % 6)
        a = fixed_effects(ds, spec, method="within")
        b = fixed_effects(ds, spec, method="dummies")
        for u, v in ((a.slope_params, b.slope_params), (a.slope_covariance, b.slope_covariance),
                     (a.residuals, b.residuals)):
            worst = max(worst, float(np.max(np.abs(u - v))))
    verdict(4, worst < 1e-8, f"100 panels, max deviation {worst:.2e}")


def test_criterion_05_sample_adjustment(verdict):
    t0 = time.perf_counter()
    res = fixed_effects(country_panel(), ModelSpec.from_formula(RISK_FORMULA))
    elapsed = time.perf_counter() - t0
    ok = res.observations == 285 and res.periods == 19 and (res.years[0], res.years[-1]) == (1996, 2014)
    verdict(5, ok and elapsed < 1.0, f"{res.observations} obs, {res.periods} periods, {res.years[0]}-{res.years[-1]}")


# --- Monte Carlo ---------------------------------------------------------------

PANEL_NULL = DGPSpec(15, 20, {}, unit_root=True, seed=11)
PANEL_ALT = DGPSpec(15, 20, {}, ar_coef=0.5, seed=12)
SERIES_NULL = DGPSpec(1, 200, {}, unit_root=True, seed=1)
SERIES_ALT = DGPSpec(1, 200, {}, seed=2)
PANEL_CASES = [
    ("llc", "constant_only"), ("llc", "trend_and_constant"),
    ("breitung", "trend_and_constant"), ("breitung", "constant_only"),
    ("ips", "constant_only"), ("ips", "trend_and_constant"),
    ("fisher_adf", "constant_only"), ("fisher_adf", "trend_and_constant"),
    ("fisher_pp", "constant_only"), ("fisher_pp", "trend_and_constant"),
]
X = {"x1": 1.0, "x2": -0.5}
RESIDUAL_CASES = {
    # null DGP, alternative DGP
    "hausman": (DGPSpec(15, 20, X, entity_effect_sd=1.0, seed=3),
                DGPSpec(15, 20, X, entity_effect_sd=1.0, effect_regressor_corr=1.0, seed=4)),
    "redundant_fe": (DGPSpec(15, 20, X, seed=5), DGPSpec(15, 20, X, entity_effect_sd=1.0, seed=6)),
    "jarque_bera": (DGPSpec(15, 20, X, entity_effect_sd=1.0, seed=7), DGPSpec(15, 20, X, hetero_power=1.0, seed=8)),
    "bp_lm": (DGPSpec(15, 20, X, entity_effect_sd=1.0, seed=9), DGPSpec(15, 20, X, cross_section_corr=0.4, seed=10)),
    "pesaran_cd": (DGPSpec(15, 20, X, entity_effect_sd=1.0, seed=9), DGPSpec(15, 20, X, cross_section_corr=0.4, seed=10)),
    "white": (DGPSpec(15, 20, X, seed=13), DGPSpec(15, 20, X, hetero_power=1.0, seed=14)),
}


@pytest.fixture(scope="module")
def monte_carlo():
    t0 = time.perf_counter()
    out = {}
    for tid in ("adf", "pp"):
        out[(tid, "constant_only")] = size_power(tid, SERIES_NULL, SERIES_ALT, REPS, ALPHA)
    for tid, det in PANEL_CASES:
        out[(tid, det)] = size_power(tid, PANEL_NULL, PANEL_ALT, REPS, ALPHA, det=det)
    for tid, (null, alt) in RESIDUAL_CASES.items():
        out[(tid, None)] = size_power(tid, null, alt, REPS, ALPHA)
    return out, time.perf_counter() - t0


def _fmt(key):
    return key[0] if key[1] is None else f"{key[0]}[{key[1]}]"


def test_criterion_06_size(verdict, monte_carlo):
    results, elapsed = monte_carlo
    lo, hi = SIZE_BAND
    keys = [k for k in results if k[0] != "white"]
    bad = [f"{_fmt(k)}={results[k].size:.3f}" for k in keys if not lo <= results[k].size <= hi]
    fails = sum(results[k].failures_null for k in keys)
    sizes = ", ".join(f"{_fmt(k)} {results[k].size:.3f}" for k in keys)
    ok = not bad and fails == 0 and elapsed < 600
    verdict(6, ok, f"{len(keys)} tests in [{lo}, {hi}] over {REPS} reps, {elapsed:.0f}s; {sizes}"
            + (f"; out of band: {bad}" if bad else ""))


def test_criterion_07_power(verdict, monte_carlo):
    results, _ = monte_carlo
    need = {("adf", "constant_only"): 0.9, ("pp", "constant_only"): 0.9, ("white", None): 0.9}
    need.update({k: 0.8 for k in PANEL_CASES})
    bad = [f"{_fmt(k)}={results[k].power:.3f}<{v}" for k, v in need.items() if results[k].power < v]
    shown = ", ".join(f"{_fmt(k)} {results[k].power:.3f}" for k in need)
    verdict(7, not bad, shown + (f"; below threshold: {bad}" if bad else ""))


def test_criterion_08_fixed_effects_consistency(verdict):
    slopes = {f"x{j + 1}": b for j, b in enumerate((0.5, 0.3, -0.2, 0.5, -0.4, 0.2, 0.3, 0.6))}
    dgp = DGPSpec(15, 200, slopes, entity_effect_sd=2.0, effect_regressor_corr=0.8, seed=31)
    spec = ModelSpec("y", tuple((k, 0) for k in slopes))
    truth = np.array(list(slopes.values()))
    R = 500
    est = np.empty((R, truth.size))
    cover = np.empty((R, truth.size), dtype=bool)
    for r in range(R):
        fit = fixed_effects(simulation.generate_panel(dgp, r), spec)
        se = np.sqrt(np.diag(fit.slope_covariance))
        crit = stats.t.ppf(0.975, fit.stats.df_resid)
        est[r] = fit.slope_params
        cover[r] = np.abs(fit.slope_params - truth) <= crit * se
    bias = np.abs(est.mean(axis=0) - truth)
    coverage = cover.mean(axis=0)
    ok = bias.max() < 0.02 and coverage.min() >= 0.92 and coverage.max() <= 0.98
    verdict(8, ok, f"max |bias| {bias.max():.4f}, coverage {coverage.min():.3f}-{coverage.max():.3f} over {R} reps")


def test_criterion_09_adf_critical_value(verdict):
    table = simulate_critical_values("adf", 1, 100, "constant_only", 20000)
    q = table.quantiles["0.05"]
    # published Dickey-Fuller 5% value for T=100 with a constant
    verdict(9, abs(q - (-2.89)) <= 0.1, f"simulated 5% quantile {q:.4f} vs -2.89")


def test_criterion_10_determinism(verdict, tmp_path, monkeypatch):
    write_csv(country_panel(), tmp_path / "data.csv")
    outputs = []
    for run in ("a", "b"):
        cache = tmp_path / f"cache_{run}"
        monkeypatch.setenv(simulation.CACHE_ENV, str(cache))
        simulation.clear_memory_cache()
        cfg = PipelineConfig(formula=RISK_FORMULA, annual_path=tmp_path / "data.csv", replications=1000, seed=42)
        rep = run_pipeline(cfg)
        files = {p.name: p.read_bytes() for p in sorted(cache.glob("*.json"))}
        outputs.append((report.to_json(rep).encode(), files))
    simulation.clear_memory_cache()
    (ja, ca), (jb, cb) = outputs
    ok = ja == jb and ca == cb and len(ca) > 0
    verdict(10, ok, f"report JSON identical: {ja == jb}; {len(ca)} cache files identical: {ca == cb}")


def test_criterion_11_pipeline_decision(verdict, tmp_path):
    write_csv(country_panel(), tmp_path / "data.csv")
    cfg = PipelineConfig(formula=RISK_FORMULA, annual_path=tmp_path / "data.csv", replications=1000)
    rep = run_pipeline(cfg)
    ms = rep.method_selection
    rows = {(r.hypothesis, r.test): r for r in rep.hypothesis_table}
    populated = [k for k in VALIDATION_ROWS if k in rows and rows[k].result is not None and rows[k].accepted is not None]
    ok = (ms["hausman"].p_value < ALPHA and ms["redundant_fe"].p_value < ALPHA and ms["chosen"] == "fixed"
          and len(populated) == len(VALIDATION_ROWS))
    verdict(11, ok, f"Hausman p {ms['hausman'].p_value:.4g}, LR p {ms['redundant_fe'].p_value:.4g}, "
                    f"chosen {ms['chosen']}, {len(populated)}/6 hypothesis rows populated")
