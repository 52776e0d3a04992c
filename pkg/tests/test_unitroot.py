import math

import numpy as np
import pytest
import statsmodels.api as sm
from hypothesis import given, settings
from hypothesis import strategies as st
from statsmodels.tsa.stattools import acf as sm_acf
from statsmodels.tsa.stattools import adfuller

from panelrisk import unitroot
from panelrisk.errors import ConfigurationError, DomainError, InsufficientDataError
from panelrisk.simulation import DGPSpec, generate_panel
from panelrisk.unitroot import (
    DeterministicSpec,
    acf,
    adf_batch,
    adf_test,
    breitung_batch,
    default_max_lag,
    fisher_combine,
    llc_components,
    panel_max_lag,
    panel_unit_root,
    pp_batch,
    pp_test,
    summary_battery,
)

from conftest import panel_from

SM_REGRESSION = {"none": "n", "constant_only": "c", "trend_and_constant": "ct"}


def test_lag_rules():
    assert default_max_lag(100, "constant_only") == 12
    assert default_max_lag(200, "constant_only") == 14
    assert default_max_lag(20, "constant_only") == 8
    assert default_max_lag(12, "trend_and_constant") == 3
    assert panel_max_lag(20, "constant_only") == 2
    assert unitroot.pp_bandwidth(100) == 4


@pytest.mark.parametrize("det", ["none", "constant_only", "trend_and_constant"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_adf_matches_statsmodels_bic(det, seed):
    rng = np.random.default_rng(seed)
    x = np.cumsum(rng.normal(size=120)) + 0.3 * rng.normal(size=120)
    res = adf_batch(x[None, :], det, 8)
    ref = adfuller(x, maxlag=8, regression=SM_REGRESSION[det], autolag="BIC")
    assert res.lags[0] == ref[2]
    assert res.tstat[0] == pytest.approx(ref[0], abs=1e-8)
    assert res.nobs[0] == ref[3]


def pp_oracle(x, det, bw):
    """Z-tau from a statsmodels OLS fit and a hand Newey-West long-run variance."""
    dy = np.diff(x)
    n = dy.size
    cols = [x[:-1]]
    if det != "none":
        cols.append(np.ones(n))
    if det == "trend_and_constant":
        cols.append(np.arange(1, n + 1, dtype=float))
    r = sm.OLS(dy, np.column_stack(cols)).fit()
    u = r.resid
    g0 = u @ u / n
    lam2 = g0 + 2 * sum((1 - j / (bw + 1)) * (u[j:] @ u[:-j]) / n for j in range(1, bw + 1))
    s = math.sqrt(r.scale)
    se = r.bse[0]
    return math.sqrt(g0 / lam2) * r.tvalues[0] - 0.5 * (lam2 - g0) / math.sqrt(lam2) * n * se / s


@pytest.mark.parametrize("det", ["none", "constant_only", "trend_and_constant"])
def test_pp_matches_hand_oracle(det):
    x = np.cumsum(np.random.default_rng(5).normal(size=150))
    assert pp_batch(x[None, :], det, 4)[0] == pytest.approx(pp_oracle(x, det, 4), abs=1e-9)


def test_adf_and_pp_outcomes():
    x = np.random.default_rng(1).normal(size=200)
    out = adf_test(x, "constant_only", replications=2000, seed=3)
    assert out.test_name == "ADF" and out.rejects(0.05)
    assert out.extra["max_lag"] == default_max_lag(200, "constant_only")
    assert pp_test(x, "constant_only", replications=2000, seed=3).rejects(0.05)
    walk = np.cumsum(np.random.default_rng(4).normal(size=200))
    assert not adf_test(walk, replications=2000, seed=3).rejects(0.05)


def test_series_input_as_year_pairs():
    pairs = [(2000 + i, float(v)) for i, v in enumerate(np.random.default_rng(0).normal(size=60))]
    a = adf_test(pairs, replications=1000, seed=1)
    b = adf_test([v for _, v in pairs], replications=1000, seed=1)
    assert a.statistic == b.statistic


def test_adf_too_short():
    with pytest.raises(InsufficientDataError):
        adf_test(np.arange(6.0), max_lag=4)


def test_fisher_hand_value():
    out = fisher_combine([0.05, 0.10])
    assert out.statistic == pytest.approx(-2 * (math.log(0.05) + math.log(0.10)), abs=1e-12)
    assert out.statistic == pytest.approx(10.596, abs=1e-3)  # [PAPER]
    assert out.dof == 4


def test_fisher_is_order_independent():
    p = [0.3, 0.01, 0.7, 0.2]
    assert fisher_combine(p).statistic == fisher_combine(p[::-1]).statistic


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), scale=st.floats(0.1, 50.0))
def test_llc_and_breitung_invariant_to_entity_scale(seed, scale):
    Y = np.cumsum(np.random.default_rng(seed).normal(size=(1, 5, 25)), axis=2)
    Z = Y.copy()
    Z[0, 2] *= scale
    t1, s1 = llc_components(Y, "constant_only", 2)
    t2, s2 = llc_components(Z, "constant_only", 2)
    assert t1[0] == pytest.approx(t2[0], rel=1e-7, abs=1e-9)
    assert s1[0] == pytest.approx(s2[0], rel=1e-7)
    b1 = breitung_batch(Y, "trend_and_constant", 2)[0]
    b2 = breitung_batch(Z, "trend_and_constant", 2)[0]
    assert b1 == pytest.approx(b2, rel=1e-7, abs=1e-9)


def test_llc_invariant_to_entity_order():
    Y = np.cumsum(np.random.default_rng(9).normal(size=(1, 6, 20)), axis=2)
    a = llc_components(Y, "constant_only", 2)
    b = llc_components(Y[:, ::-1], "constant_only", 2)
    assert a[0][0] == pytest.approx(b[0][0], rel=1e-12)


def test_breitung_rejects_none():
    with pytest.raises(ConfigurationError):
        breitung_batch(np.zeros((1, 3, 20)), "none")


def test_panel_tests_white_noise_vs_random_walk():
    wn = generate_panel(DGPSpec(8, 25, {}, seed=4))
    rw = generate_panel(DGPSpec(8, 25, {}, unit_root=True, seed=4))
    for method in ("LLC", "IPS", "FisherADF", "FisherPP", "Breitung"):
        det = "trend_and_constant" if method == "Breitung" else "constant_only"
        assert panel_unit_root(wn, "y", method, det, replications=1000, seed=1).p_value < 0.05
        assert panel_unit_root(rw, "y", method, det, replications=1000, seed=1).p_value > 0.05


def test_ips_uses_simulated_moments():
    from panelrisk import simulation

    ds = generate_panel(DGPSpec(5, 25, {}, seed=8))
    out = panel_unit_root(ds, "y", "IPS", "constant_only", replications=1000, seed=2)
    table = simulation.null_table("adf", 1, 25, "constant_only", replications=1000, seed=2, max_lag=out.extra["max_lag"])
    t = adf_batch(ds.values("y"), "constant_only", out.extra["max_lag"]).tstat
    w = math.sqrt(5) * (t.mean() - table.mean) / math.sqrt(table.var)
    assert out.statistic == pytest.approx(w, abs=1e-12)


def test_panel_errors():
    ds = generate_panel(DGPSpec(3, 20, {}, seed=1))
    with pytest.raises(ConfigurationError):
        panel_unit_root(ds, "y", "IPS", "none")
    y = np.array(ds.values("y"))
    y[0, 0] = np.nan
    with pytest.raises(DomainError):
        panel_unit_root(panel_from({"y": y}), "y", "LLC", replications=1000)


def test_acf_matches_statsmodels():
    x = np.random.default_rng(0).normal(size=80)
    c = acf(x, 12)
    np.testing.assert_allclose(c.autocorrelations, sm_acf(x, nlags=12, fft=False)[1:], atol=1e-12)


def test_acf_trend_flag():
    assert acf(np.arange(1.0, 41.0), 12).trend_flag
    with pytest.raises(InsufficientDataError):
        acf(np.arange(5.0), 12)


def test_acf_white_noise_band():
    rng = np.random.default_rng(17)
    inside = flags = 0
    for _ in range(100):
        c = acf(rng.normal(size=500), 12)
        inside += all(abs(r) < 2 / math.sqrt(500) for r in c.autocorrelations[:1])
        flags += c.trend_flag
    assert inside >= 90
    assert flags == 0


def test_battery_verdicts():
    ds = generate_panel(DGPSpec(6, 25, {"x1": 0.0}, seed=2))
    rw = generate_panel(DGPSpec(6, 25, {}, unit_root=True, seed=2))
    ds = ds.with_column("w", rw.values("y"))
    rep = summary_battery(ds, ["y", "w"], replications=1000, seed=5)
    assert rep.verdict["y"] == "stationary"
    assert rep.verdict["w"] == "unit_root"
    assert len(rep.grid["y"]) == 12
    rows = rep.csv_rows()
    assert rows[0]["variable"] == "y" and "LLC|none" in rows[0]


def test_battery_records_cell_errors():
    ds = generate_panel(DGPSpec(1, 25, {}, seed=2))
    rep = summary_battery(ds, ["y"], replications=1000)
    assert all(isinstance(v, str) and v.startswith("error") for v in rep.grid["y"].values())
    assert rep.verdict["y"] == "unit_root"


def test_mixed_verdict_resolved_by_correlogram(monkeypatch):
    # Force an exact 6/6 split: the five trend cells and LLC without
    # deterministics reject, the constant-only cells do not.
    def fake(dataset, var, method, det, *a, **k):
        from panelrisk.outcome import TestOutcome

        trend = det == DeterministicSpec.TREND_AND_CONSTANT
        llc_none = method == unitroot.PanelMethod.LLC and det == DeterministicSpec.NONE
        p = 0.01 if trend or llc_none else 0.5
        return TestOutcome(str(method), 0.0, "normal", p)

    monkeypatch.setattr(unitroot, "panel_unit_root", fake)
    trend = np.tile(np.arange(30.0), (4, 1)) + np.random.default_rng(0).normal(size=(4, 30)) * 0.1
    rep = summary_battery(panel_from({"y": trend}), ["y"])
    assert rep.correlogram["y"].trend_flag
    assert rep.verdict["y"] == "stationary"
    assert "correlogram" in rep.notes["y"]
