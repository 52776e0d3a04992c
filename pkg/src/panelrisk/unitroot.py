"""Series-level and panel unit-root tests.

The statistic kernels work on batches of equal-length series, shape
``(R, T)``, so that Monte Carlo null distributions run through the exact
code path used on data. P-values for ADF and PP, the IPS moments and the
LLC mean/variance adjustments come from :mod:`panelrisk.simulation`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import (
    ConfigurationError,
    DegenerateError,
    DomainError,
    InsufficientDataError,
    PanelTooSmallError,
    UnknownVariableError,
)
from .outcome import TestOutcome
from .panel import PanelDataset

logger = logging.getLogger(__name__)


class DeterministicSpec(str, Enum):
    TREND_AND_CONSTANT = "trend_and_constant"
    CONSTANT_ONLY = "constant_only"
    NONE = "none"

    @property
    def n_terms(self) -> int:
        return {"trend_and_constant": 2, "constant_only": 1, "none": 0}[self.value]

    @property
    def short(self) -> str:
        return {"trend_and_constant": "ct", "constant_only": "c", "none": "n"}[self.value]


class PanelMethod(str, Enum):
    LLC = "LLC"
    BREITUNG = "Breitung"
    IPS = "IPS"
    FISHER_ADF = "FisherADF"
    FISHER_PP = "FisherPP"


# Deterministic configurations run for each panel test in the battery.
TABLE1_COVERAGE = {
    PanelMethod.LLC: tuple(DeterministicSpec),
    PanelMethod.BREITUNG: (DeterministicSpec.TREND_AND_CONSTANT,),
    PanelMethod.IPS: (DeterministicSpec.TREND_AND_CONSTANT, DeterministicSpec.CONSTANT_ONLY),
    PanelMethod.FISHER_ADF: tuple(DeterministicSpec),
    PanelMethod.FISHER_PP: tuple(DeterministicSpec),
}

_SUPPORTED = {
    PanelMethod.LLC: set(DeterministicSpec),
    PanelMethod.BREITUNG: {DeterministicSpec.TREND_AND_CONSTANT, DeterministicSpec.CONSTANT_ONLY},
    PanelMethod.IPS: {DeterministicSpec.TREND_AND_CONSTANT, DeterministicSpec.CONSTANT_ONLY},
    PanelMethod.FISHER_ADF: set(DeterministicSpec),
    PanelMethod.FISHER_PP: set(DeterministicSpec),
}

UNIT_ROOT = "reject_unit_root"


def schwert_max_lag(T: int) -> int:
    return int(math.floor(12.0 * (T / 100.0) ** 0.25))


def default_max_lag(T: int, det: DeterministicSpec) -> int:
    """Schwert bound, capped so the longest augmented regression keeps half the sample."""
    det = DeterministicSpec(det)
    return max(0, min(schwert_max_lag(T), T // 2 - det.n_terms - 1))


def panel_max_lag(T: int, det: DeterministicSpec) -> int:
    """Short Schwert bound ``floor(4 (T/100)^(1/4))`` used for per-entity lags in panel tests.

    The long bound over-fits badly in the short spans typical of annual
    panels and wrecks the moment-based standardizations.
    """
    det = DeterministicSpec(det)
    return max(0, min(int(math.floor(4.0 * (T / 100.0) ** 0.25)), T // 2 - det.n_terms - 1))


def pp_bandwidth(T: int) -> int:
    return int(math.floor(4.0 * (T / 100.0) ** (2.0 / 9.0)))


def llc_bandwidth(T: int) -> int:
    return int(math.floor(3.21 * T ** (1.0 / 3.0)))


def _det_block(R: int, n: int, det: DeterministicSpec) -> np.ndarray:
    cols = []
    if det is not DeterministicSpec.NONE:
        cols.append(np.ones(n))
    if det is DeterministicSpec.TREND_AND_CONSTANT:
        cols.append(np.arange(1, n + 1) / n)
    if not cols:
        return np.empty((R, n, 0))
    return np.broadcast_to(np.column_stack(cols), (R, n, len(cols)))


def _lag_block(dy: np.ndarray, start: int, p: int) -> np.ndarray:
    """Lagged differences for observations ``t = start .. T-1``; ``dy[:, t-1] = y_t - y_{t-1}``."""
    T1 = dy.shape[1]
    if p == 0:
        return np.empty((dy.shape[0], T1 - start + 1, 0))
    return np.stack([dy[:, start - 1 - j : T1 - j] for j in range(1, p + 1)], axis=2)


def _batch_ls(X: np.ndarray, y: np.ndarray):
    """Batched least squares: (beta, resid, diag of inv(X'X))."""
    q, r = np.linalg.qr(X)
    qty = np.einsum("rnk,rn->rk", q, y)
    rinv = np.linalg.inv(r)
    beta = np.einsum("rkl,rl->rk", rinv, qty)
    resid = y - np.einsum("rnk,rk->rn", X, beta)
    xtx_inv_diag = np.einsum("rkl,rkl->rk", rinv, rinv)
    return beta, resid, xtx_inv_diag


@dataclass
class ADFBatch:
    tstat: np.ndarray
    lags: np.ndarray
    sigma2: np.ndarray
    nobs: np.ndarray


def _check_length(T: int, max_lag: int, det: DeterministicSpec) -> None:
    if T < max_lag + 4:
        raise InsufficientDataError(f"series of length {T} too short for max_lag={max_lag}")
    n_common = T - 1 - max_lag
    if n_common <= 1 + max_lag + det.n_terms:
        raise InsufficientDataError(f"series of length {T} leaves no degrees of freedom at max_lag={max_lag}")


def adf_batch(Y: np.ndarray, det: DeterministicSpec, max_lag: int | None = None) -> ADFBatch:
    """ADF t-statistics for each row of ``Y`` with SIC lag choice on a common sample."""
    det = DeterministicSpec(det)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    R, T = Y.shape
    pmax = default_max_lag(T, det) if max_lag is None else int(max_lag)
    _check_length(T, pmax, det)
    dy = np.diff(Y, axis=1)
    nd = det.n_terms

    # One QR on the widest design gives the SSR of every nested lag order.
    s = pmax + 1
    n_c = T - s
    lhs = dy[:, s - 1 :]
    X = np.concatenate([Y[:, s - 1 : T - 1, None], _det_block(R, n_c, det), _lag_block(dy, s, pmax)], axis=2)
    q, _ = np.linalg.qr(X)
    qty = np.einsum("rnk,rn->rk", q, lhs)
    yy = np.einsum("rn,rn->r", lhs, lhs)
    explained = np.cumsum(qty**2, axis=1)
    sic = np.empty((R, pmax + 1))
    for p in range(pmax + 1):
        k = 1 + nd + p
        ssr = np.maximum(yy - explained[:, k - 1], 1e-300)
        sic[:, p] = np.log(ssr / n_c) + k * math.log(n_c) / n_c
    lags = np.argmin(sic, axis=1)

    tstat = np.empty(R)
    sigma2 = np.empty(R)
    nobs = np.empty(R, dtype=int)
    for p in np.unique(lags):
        idx = np.flatnonzero(lags == p)
        s = p + 1
        n = T - s
        Xp = np.concatenate(
            [Y[idx, s - 1 : T - 1, None], _det_block(idx.size, n, det), _lag_block(dy[idx], s, p)], axis=2
        )
        beta, resid, diag = _batch_ls(Xp, dy[idx, s - 1 :])
        k = Xp.shape[2]
        s2 = np.einsum("rn,rn->r", resid, resid) / (n - k)
        tstat[idx] = beta[:, 0] / np.sqrt(s2 * diag[:, 0])
        sigma2[idx] = s2
        nobs[idx] = n
    return ADFBatch(tstat, lags, sigma2, nobs)


def _bartlett_lrv(u: np.ndarray, bandwidth: int) -> np.ndarray:
    n = u.shape[1]
    lrv = np.einsum("rn,rn->r", u, u) / n
    for j in range(1, min(bandwidth, n - 1) + 1):
        w = 1.0 - j / (bandwidth + 1.0)
        lrv = lrv + 2.0 * w * np.einsum("rn,rn->r", u[:, j:], u[:, :-j]) / n
    return lrv


def pp_batch(Y: np.ndarray, det: DeterministicSpec, bandwidth: int | None = None) -> np.ndarray:
    """Phillips-Perron Z-tau for each row of ``Y``."""
    det = DeterministicSpec(det)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    R, T = Y.shape
    if T < 8:
        raise InsufficientDataError(f"Phillips-Perron needs at least 8 observations, got {T}")
    l = pp_bandwidth(T) if bandwidth is None else int(bandwidth)
    n = T - 1
    X = np.concatenate([Y[:, :-1, None], _det_block(R, n, det)], axis=2)
    k = X.shape[2]
    beta, u, diag = _batch_ls(X, np.diff(Y, axis=1))
    s2 = np.einsum("rn,rn->r", u, u) / (n - k)
    se = np.sqrt(s2 * diag[:, 0])
    gamma0 = s2 * (n - k) / n
    lam2 = _bartlett_lrv(u, l)
    lam = np.sqrt(lam2)
    return np.sqrt(gamma0 / lam2) * (beta[:, 0] / se) - 0.5 * ((lam2 - gamma0) / lam) * (n * se / np.sqrt(s2))


def _as_array(series) -> np.ndarray:
    if isinstance(series, np.ndarray):
        x = series.astype(float)
    else:
        items = list(series)
        if items and isinstance(items[0], (tuple, list)):
            items = [v for _, v in sorted(items)]
        x = np.asarray(items, dtype=float)
    if np.isnan(x).any():
        raise InsufficientDataError("series contains missing values")
    return x


def adf_test(
    series, det="constant_only", max_lag: int | None = None, replications: int | None = None, seed: int | None = None
) -> TestOutcome:
    """Augmented Dickey-Fuller test with a simulated p-value."""
    from . import simulation

    det = DeterministicSpec(det)
    x = _as_array(series)
    T = x.size
    pmax = default_max_lag(T, det) if max_lag is None else int(max_lag)
    res = adf_batch(x[None, :], det, pmax)
    table = simulation.null_table("adf", 1, T, det, replications=replications, seed=seed, max_lag=pmax)
    stat = float(res.tstat[0])
    return TestOutcome(
        "ADF", stat, "simulated", table.p_value(stat), None, UNIT_ROOT,
        extra={"lags": int(res.lags[0]), "max_lag": pmax, "nobs": int(res.nobs[0]), "deterministic": det.value},
    )


def pp_test(
    series, det="constant_only", bandwidth: int | None = None, replications: int | None = None, seed: int | None = None
) -> TestOutcome:
    """Phillips-Perron Z-tau test with a simulated p-value."""
    from . import simulation

    det = DeterministicSpec(det)
    x = _as_array(series)
    T = x.size
    bw = pp_bandwidth(T) if bandwidth is None else int(bandwidth)
    stat = float(pp_batch(x[None, :], det, bw)[0])
    table = simulation.null_table("pp", 1, T, det, replications=replications, seed=seed, max_lag=bw)
    return TestOutcome(
        "PP", stat, "simulated", table.p_value(stat), None, UNIT_ROOT,
        extra={"bandwidth": bw, "deterministic": det.value},
    )


def fisher_combine(p_values: Sequence[float], name: str = "Fisher") -> TestOutcome:
    """Fisher's combination ``-2 sum(ln p_i)`` against chi-squared with 2N dof."""
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        raise PanelTooSmallError("no p-values to combine")
    if ((p < 0) | (p > 1)).any():
        raise DomainError("p-values must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        stat = float(-2.0 * np.sum(np.log(np.sort(p))))
    stat = max(stat, 0.0)
    dof = 2 * p.size
    return TestOutcome(name, stat, "chi_squared", float(stats.chi2.sf(stat, dof)), dof, UNIT_ROOT)


# --- panel statistics -------------------------------------------------------


def llc_components(Y: np.ndarray, det: DeterministicSpec, max_lag: int | None = None):
    """Per-panel LLC pieces for a batch of balanced panels, shape ``(R, N, T)``.

    Returns ``(t_delta, adjustment_scale)``; the adjusted statistic is
    ``(t_delta - scale * mu_star) / sigma_star``.
    """
    det = DeterministicSpec(det)
    R, N, T = Y.shape
    flat = Y.reshape(R * N, T)
    adf = adf_batch(flat, det, panel_max_lag(T, det) if max_lag is None else max_lag)
    dy = np.diff(flat, axis=1)
    nd = det.n_terms
    see = np.empty(R * N)
    sev = np.empty(R * N)
    svv = np.empty(R * N)
    for p in np.unique(adf.lags):
        idx = np.flatnonzero(adf.lags == p)
        s = p + 1
        n = T - s
        Z = np.concatenate([_det_block(idx.size, n, det), _lag_block(dy[idx], s, p)], axis=2)
        if Z.shape[2]:
            _, e_hat, _ = _batch_ls(Z, dy[idx, s - 1 :])
            _, v_hat, _ = _batch_ls(Z, flat[idx, s - 1 : T - 1])
        else:
            e_hat, v_hat = dy[idx, s - 1 :], flat[idx, s - 1 : T - 1]
        sig2 = adf.sigma2[idx]
        see[idx] = np.einsum("rn,rn->r", e_hat, e_hat) / sig2
        sev[idx] = np.einsum("rn,rn->r", e_hat, v_hat) / sig2
        svv[idx] = np.einsum("rn,rn->r", v_hat, v_hat) / sig2
    d = dy - dy.mean(axis=1, keepdims=True) if det is not DeterministicSpec.NONE else dy
    lrv = _bartlett_lrv(d, llc_bandwidth(T))
    s_ratio = np.sqrt(np.maximum(lrv, 1e-300) / adf.sigma2)
    see, sev, svv, s_ratio = (a.reshape(R, N) for a in (see, sev, svv, s_ratio))
    p_bar = adf.lags.reshape(R, N).mean(axis=1)
    t_tilde = T - p_bar - 1
    Svv, Sev, See = svv.sum(axis=1), sev.sum(axis=1), see.sum(axis=1)
    delta = Sev / Svv
    sig_e2 = (See - 2 * delta * Sev + delta**2 * Svv) / (N * t_tilde)
    std_delta = np.sqrt(sig_e2 / Svv)
    t_delta = delta / std_delta
    scale = N * t_tilde * s_ratio.mean(axis=1) * std_delta / sig_e2
    return t_delta, scale


def breitung_batch(Y: np.ndarray, det: DeterministicSpec, max_lag: int | None = None) -> np.ndarray:
    """Breitung's pooled t-statistic for a batch of balanced panels ``(R, N, T)``."""
    det = DeterministicSpec(det)
    if det is DeterministicSpec.NONE:
        raise ConfigurationError("Breitung requires constant_only or trend_and_constant")
    R, N, T = Y.shape
    flat = Y.reshape(R * N, T)
    adf = adf_batch(flat, det, panel_max_lag(T, det) if max_lag is None else max_lag)
    dy = np.diff(flat, axis=1)
    sxy = np.zeros(R * N)
    sxx = np.zeros(R * N)
    syy = np.zeros(R * N)
    cnt = np.zeros(R * N)
    for p in np.unique(adf.lags):
        idx = np.flatnonzero(adf.lags == p)
        s = p + 1
        n = T - s
        lhs, lev = dy[idx, s - 1 :], flat[idx, s - 1 : T - 1]
        if p:
            Z = _lag_block(dy[idx], s, p)
            _, lhs, _ = _batch_ls(Z, lhs)
            _, lev, _ = _batch_ls(Z, lev)
        sd = np.sqrt(adf.sigma2[idx])[:, None]
        D, L = lhs / sd, lev / sd
        if det is DeterministicSpec.TREND_AND_CONSTANT:
            tau = np.arange(1, n)
            fwd = (np.cumsum(D[:, ::-1], axis=1)[:, ::-1][:, 1:]) / (n - tau)
            e = np.sqrt((n - tau) / (n - tau + 1.0)) * (D[:, :-1] - fwd)
            last = L[:, -1:] + D[:, -1:]
            v = L[:, :-1] - L[:, :1] - ((tau - 1) / n) * (last - L[:, :1])
        else:
            e = D
            v = L - L[:, :1]
        sxy[idx] = np.einsum("rn,rn->r", e, v)
        sxx[idx] = np.einsum("rn,rn->r", v, v)
        syy[idx] = np.einsum("rn,rn->r", e, e)
        cnt[idx] = e.shape[1]
    sxy, sxx, syy, cnt = (a.reshape(R, N).sum(axis=1) for a in (sxy, sxx, syy, cnt))
    rho = sxy / sxx
    s2 = (syy - 2 * rho * sxy + rho**2 * sxx) / (cnt - 1)
    return rho / np.sqrt(s2 / sxx)


def _panel_matrix(dataset: PanelDataset, variable: str) -> tuple[np.ndarray, list[str]]:
    """Entity series trimmed of leading/trailing gaps; balanced result required."""
    if variable not in dataset.columns:
        raise UnknownVariableError(f"unknown variable {variable!r}")
    vals = dataset.values(variable)
    rows, lengths, names = [], [], []
    for i, ent in enumerate(dataset.entities):
        present = np.flatnonzero(~np.isnan(vals[i]))
        if present.size == 0:
            continue
        seg = vals[i, present[0] : present[-1] + 1]
        if np.isnan(seg).any():
            raise InsufficientDataError(f"{variable}: interior gap in entity {ent!r}")
        rows.append(seg)
        lengths.append((present[0], present[-1]))
        names.append(ent)
    if len(rows) < 2:
        raise PanelTooSmallError(f"{variable}: panel tests need at least 2 entities, got {len(rows)}")
    if len(set(lengths)) != 1:
        raise DomainError(f"{variable}: panel unit-root tests require a balanced span")
    return np.vstack(rows), names


def panel_unit_root(
    dataset: PanelDataset,
    variable: str,
    method: str,
    det="constant_only",
    max_lag: int | None = None,
    replications: int | None = None,
    seed: int | None = None,
) -> TestOutcome:
    """One panel unit-root test; the null is a unit root in every entity."""
    Y, names = _panel_matrix(dataset, variable)
    return panel_unit_root_matrix(Y, method, det, max_lag, replications, seed, names)


def panel_unit_root_matrix(
    Y: np.ndarray,
    method: str,
    det="constant_only",
    max_lag: int | None = None,
    replications: int | None = None,
    seed: int | None = None,
    names: Sequence[str] | None = None,
) -> TestOutcome:
    from . import simulation

    method = PanelMethod(method)
    det = DeterministicSpec(det)
    if det not in _SUPPORTED[method]:
        raise ConfigurationError(f"{method.value} does not support {det.value}")
    Y = np.asarray(Y, dtype=float)
    N, T = Y.shape
    if N < 2:
        raise PanelTooSmallError("panel tests need at least 2 entities")
    pmax = panel_max_lag(T, det) if max_lag is None else int(max_lag)
    info = {"entities": N, "periods": T, "max_lag": pmax, "deterministic": det.value}

    if method in (PanelMethod.FISHER_ADF, PanelMethod.FISHER_PP):
        if method is PanelMethod.FISHER_ADF:
            stat_i = adf_batch(Y, det, pmax).tstat
            table = simulation.null_table("adf", 1, T, det, replications=replications, seed=seed, max_lag=pmax)
        else:
            bw = pp_bandwidth(T)
            stat_i = pp_batch(Y, det, bw)
            table = simulation.null_table("pp", 1, T, det, replications=replications, seed=seed, max_lag=bw)
        floor = 0.5 / table.replications
        p_i = [max(table.p_value(s), floor) for s in stat_i]
        # Sorted reduction keeps the sum independent of entity order.
        out = fisher_combine(p_i, name="ADF-Fisher" if method is PanelMethod.FISHER_ADF else "PP-Fisher")
        order = np.argsort(names) if names is not None else np.arange(N)
        info["entity_p_values"] = {(names[i] if names else str(i)): float(p_i[i]) for i in order}
        return TestOutcome(out.test_name, out.statistic, out.distribution, out.p_value, out.dof, UNIT_ROOT, info)

    if method is PanelMethod.IPS:
        t_i = adf_batch(Y, det, pmax).tstat
        table = simulation.null_table("adf", 1, T, det, replications=replications, seed=seed, max_lag=pmax)
        t_bar = float(np.mean(np.sort(t_i)))
        w = math.sqrt(N) * (t_bar - table.mean) / math.sqrt(table.var)
        info.update(t_bar=t_bar, e_t=table.mean, var_t=table.var)
        return TestOutcome("Im-Pesaran-Shin W-stat", w, "normal", float(stats.norm.cdf(w)), None, UNIT_ROOT, info)

    if method is PanelMethod.LLC:
        t_delta, scale = llc_components(Y[None], det, pmax)
        table = simulation.null_table("llc", N, T, det, replications=replications, seed=seed, max_lag=pmax)
        mu, sigma = table.extra["mu_star"], table.extra["sigma_star"]
        t_star = float((t_delta[0] - scale[0] * mu) / sigma)
        info.update(t_delta=float(t_delta[0]), mu_star=mu, sigma_star=sigma)
        return TestOutcome("Levin-Lin-Chu t*", t_star, "normal", float(stats.norm.cdf(t_star)), None, UNIT_ROOT, info)

    # The normal limit is badly sized at short T once lags are prewhitened,
    # so the p-value comes from the simulated null at the same (N, T).
    stat = float(breitung_batch(Y[None], det, pmax)[0])
    table = simulation.null_table("breitung", N, T, det, replications=replications, seed=seed, max_lag=pmax)
    info["normal_p_value"] = float(stats.norm.cdf(stat))
    return TestOutcome("Breitung t-stat", stat, "simulated", table.p_value(stat), None, UNIT_ROOT, info)


# --- correlogram ------------------------------------------------------------


@dataclass(frozen=True)
class Correlogram:
    autocorrelations: tuple[float, ...]
    trend_flag: bool
    slope: float

    def to_dict(self) -> dict:
        return {"autocorrelations": list(self.autocorrelations), "trend_flag": self.trend_flag, "slope": self.slope}


def acf(series, max_lag: int = 12) -> Correlogram:
    """Sample autocorrelations r_1..r_max_lag and a declining-correlogram flag.

    The flag is set when r_1 > 0.5 and the least-squares slope of r_k on k
    is negative.
    """
    x = _as_array(series)
    n = x.size
    if n <= max_lag:
        raise InsufficientDataError(f"acf needs more than {max_lag} observations, got {n}")
    d = x - x.mean()
    denom = float(d @ d)
    if denom == 0:
        raise DegenerateError("series has zero variance")
    r = np.array([float(d[k:] @ d[:-k]) / denom for k in range(1, max_lag + 1)])
    lags = np.arange(1, max_lag + 1)
    slope = float(np.polyfit(lags, r, 1)[0]) if max_lag > 1 else 0.0
    return Correlogram(tuple(float(v) for v in r), bool(r[0] > 0.5 and slope < 0), slope)


# --- battery ----------------------------------------------------------------


@dataclass
class StationarityReport:
    grid: dict[str, dict[tuple[str, str], float | str]]
    verdict: dict[str, str]
    alpha: float = 0.05
    correlogram: dict[str, Correlogram] = field(default_factory=dict)
    notes: dict[str, str] = field(default_factory=dict)

    @staticmethod
    def column_key(method: str, det: str) -> str:
        return f"{method}|{det}"

    def columns(self) -> list[str]:
        return [self.column_key(m.value, d.value) for m, dets in TABLE1_COVERAGE.items() for d in dets]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "columns": self.columns(),
            "grid": {
                var: {self.column_key(m, d): v for (m, d), v in cells.items()} for var, cells in self.grid.items()
            },
            "verdict": self.verdict,
            "correlogram": {v: c.to_dict() for v, c in self.correlogram.items()},
            "notes": self.notes,
        }

    def csv_rows(self) -> list[dict]:
        rows = []
        for var, cells in self.grid.items():
            row = {"variable": var}
            for col in self.columns():
                m, d = col.split("|")
                row[col] = cells.get((m, d), "")
            row["verdict"] = self.verdict[var]
            rows.append(row)
        return rows


def _verdict(p_values: list[float], alpha: float) -> str:
    if not p_values:
        return "unit_root"
    rejects = sum(p < alpha for p in p_values)
    if 2 * rejects > len(p_values):
        return "stationary"
    if 2 * rejects == len(p_values):
        return "mixed"
    return "unit_root"


def summary_battery(
    dataset: PanelDataset,
    variables: Sequence[str],
    specs: Mapping[str, Sequence[str]] | None = None,
    alpha: float = 0.05,
    max_lag: int | None = None,
    replications: int | None = None,
    seed: int | None = None,
) -> StationarityReport:
    """Run every panel test under each requested deterministic configuration.

    A variable is ``stationary`` when most computed cells reject the unit
    root at ``alpha``, ``unit_root`` when most do not, and ``mixed`` on an
    exact split. A mixed variable gets a correlogram of its cross-entity
    mean; when the correlogram shows a declining trend the verdict is taken
    from the trend-and-constant cells alone. Cell errors are recorded as
    ``"error: ..."`` strings and never abort the grid.
    """
    grid: dict[str, dict[tuple[str, str], float | str]] = {}
    verdict: dict[str, str] = {}
    report = StationarityReport(grid, verdict, alpha)
    for var in variables:
        if var not in dataset.columns:
            raise UnknownVariableError(f"unknown variable {var!r}")
        wanted = {DeterministicSpec(d) for d in (specs or {}).get(var, tuple(DeterministicSpec))}
        cells: dict[tuple[str, str], float | str] = {}
        for method, dets in TABLE1_COVERAGE.items():
            for det in dets:
                if det not in wanted:
                    continue
                try:
                    out = panel_unit_root(dataset, var, method, det, max_lag, replications, seed)
                    cells[(method.value, det.value)] = out.p_value
                except Exception as exc:  # recorded per cell
                    logger.warning("%s %s %s failed: %s", var, method.value, det.value, exc)
                    cells[(method.value, det.value)] = f"error: {exc}"
        grid[var] = cells
        numeric = [v for v in cells.values() if isinstance(v, float)]
        v = _verdict(numeric, alpha)
        if v == "mixed":
            v = _correlogram_step(dataset, var, cells, alpha, report)
        verdict[var] = v
    return report


def _correlogram_step(dataset, var, cells, alpha, report) -> str:
    mean_series = np.nanmean(dataset.values(var), axis=0)
    mean_series = mean_series[~np.isnan(mean_series)]
    try:
        corr = acf(mean_series, min(12, mean_series.size - 1))
    except Exception as exc:
        report.notes[var] = f"correlogram failed: {exc}"
        return "mixed"
    report.correlogram[var] = corr
    if not corr.trend_flag:
        report.notes[var] = "split decision; correlogram shows no declining trend"
        return "mixed"
    ct = [
        v for (m, d), v in cells.items()
        if d == DeterministicSpec.TREND_AND_CONSTANT.value and isinstance(v, float)
    ]
    decided = _verdict(ct, alpha)
    report.notes[var] = f"split decision resolved by correlogram trend: trend_and_constant cells say {decided}"
    return decided
