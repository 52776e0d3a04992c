"""Specification tests and residual diagnostics for fitted panel models."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, stats

from .descriptive import CorrelationMatrix
from .errors import (
    ComparabilityError,
    DegenerateError,
    DomainError,
    InsufficientDataError,
    UndefinedCorrelationError,
)
from .estimation import FitResult
from .outcome import TestOutcome

# Largest sample size for which bounds come from the exact bounding
# distributions; beyond it the normal approximation is used.
DW_EXACT_MAX_N = 200


def hausman(fe: FitResult, re: FitResult) -> TestOutcome:
    """Hausman contrast of fixed- and random-effects slopes.

    When ``V_FE - V_RE`` is not positive semidefinite the Moore-Penrose
    inverse is used and ``extra["nonpsd"]`` is set.
    """
    if tuple(fe.slope_names) != tuple(re.slope_names):
        raise ComparabilityError(f"slope sets differ: {fe.slope_names} vs {re.slope_names}")
    if fe.observations != re.observations:
        raise ComparabilityError("fits use different samples")
    k = len(fe.slope_names)
    if k == 0:
        raise ComparabilityError("no common slope coefficients")
    q = fe.slope_params - re.slope_params
    vd = fe.slope_covariance - re.slope_covariance
    vd = (vd + vd.T) / 2
    eig = np.linalg.eigvalsh(vd)
    tol = 1e-12 * max(1.0, np.abs(eig).max())
    nonpsd = bool(eig.min() < -tol)
    singular = bool(np.abs(eig).min() <= tol)
    inv = np.linalg.pinv(vd) if nonpsd or singular else np.linalg.inv(vd)
    h = float(q @ inv @ q)
    p = float(stats.chi2.sf(max(h, 0.0), k))
    return TestOutcome(
        "Correlated Random Effects - Hausman Test", h, "chi_squared", p, k,
        extra={"nonpsd": nonpsd, "pseudo_inverse": nonpsd or singular},
    )


def redundant_fe_lr(pooled: FitResult, fe: FitResult) -> TestOutcome:
    """Likelihood-ratio test that all entity effects are zero.

    The companion F statistic is reported in ``extra``.
    """
    if tuple(pooled.slope_names) != tuple(fe.slope_names) or pooled.observations != fe.observations:
        raise ComparabilityError("pooled fit is not the restriction of the fixed-effects fit")
    n, k, N = fe.observations, len(fe.slope_names), fe.cross_sections
    ssr_r = float(pooled.residuals @ pooled.residuals)
    ssr_u = float(fe.residuals @ fe.residuals)
    if ssr_u <= 0:
        raise DegenerateError("fixed-effects fit has zero residual sum of squares")
    lr = n * math.log(ssr_r / ssr_u)
    df2 = n - N - k
    f = ((ssr_r - ssr_u) / (N - 1)) / (ssr_u / df2)
    return TestOutcome(
        "Redundant Fixed Effects - Likelihood Ratio", lr, "chi_squared",
        float(stats.chi2.sf(lr, N - 1)), N - 1,
        extra={"f_statistic": f, "f_dof": [N - 1, df2], "f_p_value": float(stats.f.sf(f, N - 1, df2))},
    )


def jarque_bera(residuals) -> TestOutcome:
    e = np.asarray(residuals, dtype=float)
    e = e[~np.isnan(e)]
    n = e.size
    if n < 4:
        raise InsufficientDataError(f"Jarque-Bera needs n >= 4, got {n}")
    d = e - e.mean()
    m2 = np.mean(d**2)
    if m2 <= 0:
        raise DegenerateError("residuals have zero variance")
    skew = np.mean(d**3) / m2**1.5
    kurt = np.mean(d**4) / m2**2
    jb = n / 6.0 * (skew**2 + (kurt - 3.0) ** 2 / 4.0)
    return TestOutcome(
        "Jarque-Bera", float(jb), "chi_squared", float(stats.chi2.sf(jb, 2)), 2,
        extra={"skewness": float(skew), "kurtosis": float(kurt)},
    )


# --- Durbin-Watson -------------------------------------------------------


def _bounding_eigenvalues(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalue sets of the lower and upper bounding DW distributions.

    ``k`` counts regressors excluding the constant.
    """
    m = n - k - 1
    nu = 2.0 * (1.0 - np.cos(np.pi * np.arange(1, n) / n))
    return nu[:m], nu[k : k + m]


def _imhof_cdf(lam: np.ndarray, c: float) -> float:
    """P(sum(lam_i z_i^2) / sum(z_i^2) <= c) by Imhof's inversion formula."""
    w = lam - c

    def integrand(u):
        if u == 0:
            return 0.5 * np.sum(w)
        theta = 0.5 * np.sum(np.arctan(w * u))
        rho = np.exp(0.25 * np.sum(np.log1p((w * u) ** 2)))
        return math.sin(theta) / (u * rho)

    val, _ = integrate.quad(integrand, 0, np.inf, limit=400)
    return 0.5 - val / math.pi


def _exact_quantile(lam: np.ndarray, alpha: float) -> float:
    return optimize.brentq(lambda c: _imhof_cdf(lam, c) - alpha, lam.min() + 1e-9, lam.max() - 1e-9, xtol=1e-7)


def _normal_quantile(lam: np.ndarray, alpha: float) -> float:
    m = lam.size
    mean = lam.mean()
    var = 2.0 * np.sum((lam - mean) ** 2) / (m * (m + 2))
    return float(mean + stats.norm.ppf(alpha) * math.sqrt(var))


@lru_cache(maxsize=256)
def dw_bounds(n: int, k: int, alpha: float = 0.05, source: str = "auto") -> tuple[float, float, str]:
    """Lower and upper DW critical bounds ``(dL, dU, source)``.

    ``k`` is the number of regressors excluding the constant. ``source`` is
    ``exact`` (Imhof inversion of the bounding distributions), ``normal``
    (moment-matched normal approximation) or ``auto`` (exact up to
    ``DW_EXACT_MAX_N`` observations).
    """
    if n < k + 3:
        raise InsufficientDataError(f"DW bounds need n >= k + 3 (n={n}, k={k})")
    if source == "auto":
        source = "exact" if n <= DW_EXACT_MAX_N else "normal"
    lo, hi = _bounding_eigenvalues(n, k)
    if source == "exact":
        return _exact_quantile(lo, alpha), _exact_quantile(hi, alpha), "exact"
    if source == "normal":
        return _normal_quantile(lo, alpha), _normal_quantile(hi, alpha), "normal"
    raise DomainError(f"unknown DW bounds source {source!r}")


def dw_region(d: float, dl: float, du: float) -> str:
    if d < dl:
        return "positive_autocorr"
    if d < du:
        return "inconclusive_low"
    if d <= 4 - du:
        return "no_autocorr"
    if d <= 4 - dl:
        return "inconclusive_high"
    return "negative_autocorr"


@dataclass(frozen=True)
class DWOutcome:
    statistic: float
    bounds: tuple[float, float]
    region: str
    bounds_source: str
    mode: str = "within"

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "bounds": list(self.bounds),
            "region": self.region,
            "bounds_source": self.bounds_source,
            "mode": self.mode,
        }


def dw_statistic(residuals, groups=None, mode: str = "within") -> float:
    e = np.asarray(residuals, dtype=float)
    if mode == "naive_stacked" or groups is None:
        diffs = np.diff(e)
    elif mode == "within":
        g = np.asarray(groups)
        same = g[1:] == g[:-1]
        if not same.any():
            raise InsufficientDataError("no entity has 2 or more residuals")
        diffs = np.diff(e)[same]
    else:
        raise DomainError(f"unknown DW mode {mode!r}")
    denom = float(e @ e)
    if denom == 0:
        raise DegenerateError("all residuals are zero")
    return float(diffs @ diffs) / denom


def durbin_watson(
    residuals, k: int, groups=None, mode: str = "within", alpha: float = 0.05, n: int | None = None,
    bounds_source: str = "auto",
) -> DWOutcome:
    """Durbin-Watson statistic with its bounds-test region.

    ``residuals`` are ordered entity-major; ``groups`` labels each residual's
    entity so differences never cross an entity boundary (``mode="within"``).
    """
    e = np.asarray(residuals, dtype=float)
    n = e.size if n is None else n
    if n < k + 2:
        raise InsufficientDataError(f"DW needs n >= k + 2 (n={n}, k={k})")
    d = dw_statistic(e, groups, mode)
    dl, du, src = dw_bounds(n, k, alpha, bounds_source) if n >= k + 3 else (math.nan, math.nan, "none")
    return DWOutcome(d, (dl, du), dw_region(d, dl, du), src, mode)


# --- cross-section dependence -------------------------------------------


def _pairwise_correlations(panel: np.ndarray):
    panel = np.asarray(panel, dtype=float)
    N = panel.shape[0]
    if N < 2:
        raise InsufficientDataError("cross-section dependence needs N >= 2")
    present = ~np.isnan(panel)
    for i in range(N):
        row = panel[i, present[i]]
        if row.size and np.ptp(row) == 0:
            raise UndefinedCorrelationError(f"entity {i} has zero-variance residuals")
    out = []
    for i, j in itertools.combinations(range(N), 2):
        both = present[i] & present[j]
        t = int(both.sum())
        if t < 3:
            raise InsufficientDataError(f"entities {i} and {j} share {t} periods, need 3")
        a, b = panel[i, both], panel[j, both]
        a, b = a - a.mean(), b - b.mean()
        den = math.sqrt((a @ a) * (b @ b))
        if den == 0:
            raise UndefinedCorrelationError(f"zero variance on the common sample of entities {i} and {j}")
        out.append((float(a @ b) / den, t))
    return N, out


def cross_section_dependence(residual_panel, method: str = "pesaran_cd") -> TestOutcome:
    """Breusch-Pagan LM or Pesaran CD test on an ``(entities, periods)`` array."""
    N, pairs = _pairwise_correlations(residual_panel)
    if method == "breusch_pagan_lm":
        lm = sum(t * r * r for r, t in pairs)
        dof = N * (N - 1) // 2
        return TestOutcome("Breusch-Pagan LM", lm, "chi_squared", float(stats.chi2.sf(lm, dof)), dof)
    if method == "pesaran_cd":
        cd = math.sqrt(2.0 / (N * (N - 1))) * sum(math.sqrt(t) * r for r, t in pairs)
        return TestOutcome("Pesaran CD", cd, "normal", float(2 * stats.norm.sf(abs(cd))))
    raise DomainError(f"unknown cross-section dependence method {method!r}")


# --- White -------------------------------------------------------------------


@dataclass(frozen=True)
class HomoscedasticityOutcome:
    n_times_r2: float
    critical: float
    dof: int
    homoscedastic: bool
    standard_dof: int
    standard_critical: float
    standard_p_value: float
    standard_homoscedastic: bool
    dropped_terms: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "n_times_r2": self.n_times_r2,
            "critical": self.critical,
            "dof": self.dof,
            "homoscedastic": self.homoscedastic,
            "standard_dof": self.standard_dof,
            "standard_critical": self.standard_critical,
            "standard_p_value": self.standard_p_value,
            "standard_homoscedastic": self.standard_homoscedastic,
            "dropped_terms": list(self.dropped_terms),
        }


def _white_design(X: np.ndarray, names):
    cols, labels = [np.ones(X.shape[0])], ["C"]
    for j, a in enumerate(names):
        cols.append(X[:, j])
        labels.append(a)
    for i, j in itertools.combinations_with_replacement(range(X.shape[1]), 2):
        cols.append(X[:, i] * X[:, j])
        labels.append(f"{names[i]}*{names[j]}")
    Z = np.column_stack(cols)
    keep, dropped = [], []
    norms = np.linalg.norm(Z, axis=0)
    Zn = Z / np.where(norms == 0, 1.0, norms)
    for c in range(Z.shape[1]):
        if norms[c] > 0 and np.linalg.matrix_rank(Zn[:, keep + [c]]) == len(keep) + 1:
            keep.append(c)
        else:
            dropped.append(labels[c])
    return Z[:, keep], tuple(dropped)


def white_paper_variant(
    fit: FitResult,
    n: int | None = None,
    k_regressors: int | None = None,
    k_dummies: int | None = None,
    alpha: float = 0.05,
) -> HomoscedasticityOutcome:
    """White's n·R² statistic from the auxiliary regression of squared residuals.

    The auxiliary regressors are the slope regressors, their squares and
    cross-products. Two critical values are reported: chi-squared at
    ``n - k_regressors - k_dummies - 1`` degrees of freedom (``critical``)
    and the usual one at the auxiliary-term count (``standard_*``).
    Collinear auxiliary terms are dropped and listed.
    """
    e = fit.weighted_residuals if fit.weighted_residuals is not None else fit.residuals
    X = fit.regressors
    n = fit.observations if n is None else n
    k_regressors = len(fit.coefficients) if k_regressors is None else k_regressors
    if k_dummies is None:
        k_dummies = fit.cross_sections - 1 if fit.fixed_effect_terms is not None else 0
    Z, dropped = _white_design(X, list(fit.slope_names))
    u = e**2
    if Z.shape[0] <= Z.shape[1]:
        raise InsufficientDataError("auxiliary regression has no degrees of freedom")
    coef, *_ = np.linalg.lstsq(Z, u, rcond=None)
    resid = u - Z @ coef
    tss = float(((u - u.mean()) ** 2).sum())
    if tss == 0:
        raise DegenerateError("squared residuals are constant")
    r2 = 1.0 - float(resid @ resid) / tss
    stat = e.size * r2
    dof = n - k_regressors - k_dummies - 1
    if dof < 1:
        raise InsufficientDataError(f"paper-convention dof {dof} < 1")
    crit = float(stats.chi2.ppf(1 - alpha, dof))
    sdof = Z.shape[1] - 1
    scrit = float(stats.chi2.ppf(1 - alpha, sdof))
    sp = float(stats.chi2.sf(stat, sdof))
    return HomoscedasticityOutcome(stat, crit, dof, stat < crit, sdof, scrit, sp, stat < scrit, dropped)


# --- Klein ---------------------------------------------------------------------


@dataclass(frozen=True)
class MulticollinearityOutcome:
    r_squared: float
    max_pair: tuple[str, str, float]
    present: bool

    def to_dict(self) -> dict:
        return {"r_squared": self.r_squared, "max_pair": list(self.max_pair), "present": self.present}


def klein_criterion(corr: CorrelationMatrix, r_squared: float) -> MulticollinearityOutcome:
    """Multicollinearity is present when some |pairwise correlation| exceeds R²."""
    if not 0.0 <= r_squared <= 1.0:
        raise DomainError(f"R-squared {r_squared} outside [0, 1]")
    k = len(corr.variables)
    if k < 2:
        raise DomainError("Klein's criterion needs at least two regressors")
    best = (corr.variables[0], corr.variables[1], float(corr.entries[0, 1]))
    for i, j in itertools.combinations(range(k), 2):
        r = float(corr.entries[i, j])
        if abs(r) > abs(best[2]):
            best = (corr.variables[i], corr.variables[j], r)
    return MulticollinearityOutcome(float(r_squared), best, abs(best[2]) > r_squared)
