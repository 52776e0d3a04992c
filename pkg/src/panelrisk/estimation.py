"""Linear panel estimators.

Pooled OLS, fixed effects (within transform or explicit entity dummies),
Swamy-Arora random effects, and two-step feasible GLS with cross-section
SUR weighting. All estimators share :class:`FitResult`; the reported fit
statistics are computed on the (possibly transformed) estimation sample.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import linalg, stats

from .errors import (
    CollinearEffectsError,
    ConfigurationError,
    DegenerateError,
    DomainError,
    InsufficientDataError,
    SingularDesignError,
    UnknownVariableError,
    ValidationError,
)
from .panel import PanelDataset, balance, lag, lag_name

SIGMA_COND_LIMIT = 1e12


class Effects(str, Enum):
    NONE = "none"
    FIXED = "fixed"
    RANDOM = "random"


class Weighting(str, Enum):
    NONE = "none"
    CROSS_SECTION_SUR = "cross_section_sur"


_TERM = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_.]*)\s*(?:\(\s*-\s*(\d+)\s*\))?\s*$")


def _parse_term(term: str) -> tuple[str, int]:
    m = _TERM.match(term)
    if not m:
        raise ValidationError(f"cannot parse formula term {term!r}")
    return m.group(1), int(m.group(2) or 0)


@dataclass(frozen=True)
class ModelSpec:
    dependent: str
    regressors: tuple[tuple[str, int], ...]
    include_constant: bool = True
    effects: Effects = Effects.FIXED
    weighting: Weighting = Weighting.NONE
    sample: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "regressors", tuple((str(n), int(k)) for n, k in self.regressors))
        object.__setattr__(self, "effects", Effects(self.effects))
        object.__setattr__(self, "weighting", Weighting(self.weighting))
        names = self.regressor_names
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate regressors in {names}")
        if (self.dependent, 0) in self.regressors:
            raise ValidationError(f"dependent variable {self.dependent!r} appears as a regressor at lag 0")
        if any(k < 0 for _, k in self.regressors):
            raise ValidationError("lags must be non-negative")

    @property
    def regressor_names(self) -> list[str]:
        return [n if k == 0 else lag_name(n, k) for n, k in self.regressors]

    @property
    def formula(self) -> str:
        return f"{self.dependent} ~ " + " + ".join(self.regressor_names)

    @classmethod
    def from_formula(cls, formula: str, **kwargs) -> ModelSpec:
        """Parse ``y ~ y(-1) + imp + budget(-1)``."""
        if formula.count("~") != 1:
            raise ValidationError(f"formula needs exactly one '~': {formula!r}")
        lhs, rhs = formula.split("~")
        dep, dep_lag = _parse_term(lhs)
        if dep_lag:
            raise ValidationError("the dependent variable cannot be lagged")
        terms = [t for t in rhs.split("+")]
        if not rhs.strip() or any(not t.strip() for t in terms):
            raise ValidationError(f"empty term in formula {formula!r}")
        return cls(dep, tuple(_parse_term(t) for t in terms), **kwargs)


@dataclass(frozen=True)
class Coefficient:
    name: str
    estimate: float
    std_error: float
    t_statistic: float
    p_value: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "t_statistic": self.t_statistic,
            "p_value": self.p_value,
        }


@dataclass(frozen=True)
class WeightedStats:
    r_squared: float
    adjusted_r_squared: float
    se_of_regression: float
    sum_squared_resid: float
    f_statistic: float
    prob_f: float
    durbin_watson: float
    mean_dep_var: float
    sd_dep_var: float
    df_resid: int
    n_terms: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True, eq=False)
class FitResult:
    coefficients: tuple[Coefficient, ...]
    covariance: np.ndarray
    residuals: np.ndarray
    stats: WeightedStats
    method_tag: str
    observations: int
    periods: int
    cross_sections: int
    entity_index: np.ndarray
    period_index: np.ndarray
    entities: tuple[str, ...]
    years: tuple[int, ...]
    fixed_effect_terms: dict[str, float] | None = None
    weighted_residuals: np.ndarray | None = None
    regressors: np.ndarray | None = None
    slope_names: tuple[str, ...] = ()
    dependent: str = ""
    flags: dict = field(default_factory=dict)
    sigma: np.ndarray | None = None

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.coefficients]

    @property
    def params(self) -> np.ndarray:
        return np.array([c.estimate for c in self.coefficients])

    def __getitem__(self, name: str) -> Coefficient:
        for c in self.coefficients:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def slope_params(self) -> np.ndarray:
        return self.params[: len(self.slope_names)]

    @property
    def slope_covariance(self) -> np.ndarray:
        k = len(self.slope_names)
        return self.covariance[:k, :k]

    def residual_panel(self, weighted: bool = False) -> np.ndarray:
        """Residuals as an ``(entities, years)`` array, NaN outside the sample."""
        e = self.weighted_residuals if weighted and self.weighted_residuals is not None else self.residuals
        out = np.full((len(self.entities), len(self.years)), np.nan)
        out[self.entity_index, self.period_index] = e
        return out

    def to_dict(self) -> dict:
        return {
            "dependent": self.dependent,
            "method": self.method_tag,
            "sample": [self.years[0], self.years[-1]] if self.years else None,
            "observations": self.observations,
            "periods": self.periods,
            "cross_sections": self.cross_sections,
            "coefficients": [c.to_dict() for c in self.coefficients],
            "covariance": self.covariance.tolist(),
            "fixed_effects": self.fixed_effect_terms,
            "weighted_statistics": self.stats.to_dict(),
            "flags": self.flags,
        }


@dataclass
class _Design:
    y: np.ndarray
    X: np.ndarray
    names: list[str]
    codes: np.ndarray
    tidx: np.ndarray
    entities: tuple[str, ...]
    years: tuple[int, ...]
    dependent: str

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def periods(self) -> int:
        return int(np.unique(self.tidx).size)

    @property
    def balanced(self) -> bool:
        return self.n == self.n_entities * self.periods

    def to_panel(self, v: np.ndarray) -> np.ndarray:
        out = np.full((self.n_entities, len(self.years)), np.nan)
        out[self.codes, self.tidx] = v
        return out


def _resolve(dataset: PanelDataset, name: str, k: int) -> PanelDataset:
    col = name if k == 0 else lag_name(name, k)
    if col in dataset.columns:
        return dataset
    if name not in dataset.columns:
        raise UnknownVariableError(f"unknown variable {name!r}")
    return lag(dataset, name, k)


def build_design(dataset: PanelDataset, spec: ModelSpec) -> _Design:
    """Stack the model variables entity-major after listwise balancing."""
    ds = _resolve(dataset, spec.dependent, 0)
    for name, k in spec.regressors:
        ds = _resolve(ds, name, k)
    if spec.sample is not None:
        ds = ds.restrict_years(*spec.sample)
    cols = [spec.dependent, *spec.regressor_names]
    ds, _ = balance(ds, cols)
    codes, tidx = np.nonzero(ds.mask)
    y = ds.columns[spec.dependent][codes, tidx]
    X = np.column_stack([ds.columns[c][codes, tidx] for c in spec.regressor_names]) if spec.regressors else np.empty((y.size, 0))
    return _Design(y, X, spec.regressor_names, codes, tidx, ds.entities, ds.years, spec.dependent)


def _dependent_columns(X: np.ndarray, names: Sequence[str]) -> list[str]:
    bad, kept = [], []
    for j in range(X.shape[1]):
        trial = X[:, kept + [j]]
        if not np.any(trial[:, -1]) or np.linalg.matrix_rank(trial) <= len(kept):
            bad.append(names[j])
        else:
            kept.append(j)
    return bad


def _lstsq(y: np.ndarray, X: np.ndarray, names: Sequence[str]):
    """QR least squares; returns (beta, residuals, (X'X)^-1)."""
    n, k = X.shape
    if n <= k:
        raise InsufficientDataError(f"{n} observations for {k} parameters")
    if k == 0:
        return np.empty(0), y.copy(), np.empty((0, 0))
    norms = np.linalg.norm(X, axis=0)
    if (norms == 0).any() or np.linalg.matrix_rank(X / np.where(norms == 0, 1, norms)) < k:
        Xn = X / np.where(norms == 0, 1, norms)
        raise SingularDesignError(f"design is rank deficient; dependent columns: {_dependent_columns(Xn, names)}")
    q, r = np.linalg.qr(X)
    beta = linalg.solve_triangular(r, q.T @ y)
    rinv = linalg.solve_triangular(r, np.eye(k))
    return beta, y - X @ beta, rinv @ rinv.T


def _coefficients(names, beta, cov, df: int) -> tuple[Coefficient, ...]:
    out = []
    for name, b, v in zip(names, beta, np.diag(cov)):
        se = math.sqrt(v) if v > 0 else 0.0
        t = b / se if se > 0 else math.nan
        p = float(2 * stats.t.sf(abs(t), df)) if se > 0 else math.nan
        out.append(Coefficient(name, float(b), se, float(t), p))
    return tuple(out)


def fit_statistics(
    y: np.ndarray, resid: np.ndarray, n_terms: int, has_constant: bool = True
) -> WeightedStats:
    """Fit statistics on the estimation sample (transformed data for GLS).

    ``n_terms`` counts every non-constant term, entity dummies included; the
    residual degrees of freedom are ``n - n_terms - has_constant``. The
    Durbin-Watson statistic is taken on the stacked residual vector.
    """
    y = np.asarray(y, dtype=float)
    resid = np.asarray(resid, dtype=float)
    n = y.size
    df = n - n_terms - int(has_constant)
    if df <= 0:
        raise InsufficientDataError(f"no residual degrees of freedom (n={n}, terms={n_terms})")
    ybar = y.mean()
    tss = float(((y - ybar) ** 2).sum())
    if tss <= 0:
        raise DegenerateError("dependent variable has zero total sum of squares")
    ssr = float(resid @ resid)
    r2 = 1.0 - ssr / tss
    adj = 1.0 - (1.0 - r2) * (n - 1) / df
    if n_terms > 0:
        f = (r2 / n_terms) / ((1.0 - r2) / df) if r2 < 1 else math.inf
        prob_f = float(stats.f.sf(f, n_terms, df)) if math.isfinite(f) else 0.0
    else:
        f, prob_f = math.nan, math.nan
    dw = float(np.sum(np.diff(resid) ** 2) / ssr) if ssr > 0 else 0.0
    return WeightedStats(
        r_squared=r2,
        adjusted_r_squared=adj,
        se_of_regression=math.sqrt(ssr / df),
        sum_squared_resid=ssr,
        f_statistic=f,
        prob_f=prob_f,
        durbin_watson=dw,
        mean_dep_var=float(ybar),
        sd_dep_var=float(y.std(ddof=1)) if n > 1 else math.nan,
        df_resid=df,
        n_terms=n_terms,
    )


def _result(d: _Design, names, beta, cov, resid, st: WeightedStats, tag: str, **extra) -> FitResult:
    cov = (cov + cov.T) / 2
    return FitResult(
        coefficients=_coefficients(names, beta, cov, st.df_resid),
        covariance=cov,
        residuals=resid,
        stats=st,
        method_tag=tag,
        observations=d.n,
        periods=d.periods,
        cross_sections=d.n_entities,
        entity_index=d.codes,
        period_index=d.tidx,
        entities=d.entities,
        years=d.years,
        regressors=d.X,
        slope_names=tuple(d.names),
        dependent=d.dependent,
        **extra,
    )


def ols(y, X, include_constant: bool = True, names: Sequence[str] | None = None) -> FitResult:
    """Classical least squares on a plain design matrix."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    names = list(names) if names is not None else [f"x{j + 1}" for j in range(X.shape[1])]
    d = _Design(y, X, names, np.zeros(y.size, dtype=int), np.arange(y.size), ("all",), tuple(range(y.size)), "y")
    return _pooled(d, include_constant)


def _pooled(d: _Design, include_constant: bool) -> FitResult:
    Z = np.column_stack([d.X, np.ones(d.n)]) if include_constant else d.X
    names = d.names + (["C"] if include_constant else [])
    beta, resid, xtx_inv = _lstsq(d.y, Z, names)
    st = fit_statistics(d.y, resid, d.X.shape[1], include_constant)
    cov = st.se_of_regression**2 * xtx_inv
    return _result(d, names, beta, cov, resid, st, "Pooled Least Squares", weighted_residuals=resid)


def pooled_ols(dataset: PanelDataset, spec: ModelSpec) -> FitResult:
    return _pooled(build_design(dataset, spec), spec.include_constant)


def _entity_means(v: np.ndarray, codes: np.ndarray, n_entities: int) -> np.ndarray:
    counts = np.bincount(codes, minlength=n_entities).astype(float)
    if v.ndim == 1:
        return np.bincount(codes, weights=v, minlength=n_entities) / counts
    return np.column_stack([np.bincount(codes, weights=v[:, j], minlength=n_entities) for j in range(v.shape[1])]) / counts[:, None]


def _check_within_variation(d: _Design, Xw: np.ndarray) -> None:
    scale = np.maximum(np.abs(d.X).max(axis=0), 1.0) if d.X.size else np.empty(0)
    for j, name in enumerate(d.names):
        if np.abs(Xw[:, j]).max() <= 1e-12 * scale[j]:
            raise CollinearEffectsError(f"regressor {name!r} has no within-entity variation; collinear with the fixed effects")


def _lsdv_solve(yt, Xt, Dt, names, include_constant):
    """Least squares on ``[X, D]`` with one dummy per entity.

    Returns slopes followed by the mean effect ``C`` (when requested), the
    matching covariance scaling matrix, residuals, and the raw effects.
    """
    k, n_ent = Xt.shape[1], Dt.shape[1]
    full = np.column_stack([Xt, Dt])
    beta, resid, xtx_inv = _lstsq(yt, full, names + [f"_effect{i}" for i in range(n_ent)])
    slopes, alphas = beta[:k], beta[k:]
    if include_constant:
        A = np.zeros((k + 1, k + n_ent))
        A[:k, :k] = np.eye(k)
        A[k, k:] = 1.0 / n_ent
        est = np.append(slopes, alphas.mean())
    else:
        A = np.zeros((k, k + n_ent))
        A[:, :k] = np.eye(k)
        est = slopes
    return est, A @ xtx_inv @ A.T, resid, alphas


def _effects_dict(d: _Design, alphas: np.ndarray, centre: bool) -> dict[str, float]:
    c = alphas.mean() if centre else 0.0
    return {e: float(a - c) for e, a in zip(d.entities, alphas)}


def _fixed(d: _Design, include_constant: bool, method: str) -> FitResult:
    n, k, N = d.n, d.X.shape[1], d.n_entities
    if N < 2:
        raise InsufficientDataError("fixed effects need at least 2 entities")
    xbar_i = _entity_means(d.X, d.codes, N)
    Xw = d.X - xbar_i[d.codes]
    _check_within_variation(d, Xw)
    names = d.names + (["C"] if include_constant else [])
    n_terms = k + N - 1
    if method == "dummies":
        D = np.zeros((n, N))
        D[np.arange(n), d.codes] = 1.0
        est, scale, resid, alphas = _lsdv_solve(d.y, d.X, D, d.names, include_constant)
        st = fit_statistics(d.y, resid, n_terms, True)
        cov = st.se_of_regression**2 * scale
    elif method == "within":
        ybar_i = _entity_means(d.y, d.codes, N)
        yw = d.y - ybar_i[d.codes]
        beta, resid, xtx_inv = _lstsq(yw, Xw, d.names)
        st = fit_statistics(d.y, resid, n_terms, True)
        s2 = st.se_of_regression**2
        V = s2 * xtx_inv
        alphas = ybar_i - xbar_i @ beta
        if include_constant:
            counts = np.bincount(d.codes, minlength=N)
            xm = xbar_i.mean(axis=0)
            var_c = s2 * np.sum(1.0 / counts) / N**2 + xm @ V @ xm
            cov = np.zeros((k + 1, k + 1))
            cov[:k, :k] = V
            cov[:k, k] = cov[k, :k] = -V @ xm
            cov[k, k] = var_c
            est = np.append(beta, alphas.mean())
        else:
            cov, est = V, beta
    else:
        raise ConfigurationError(f"unknown fixed-effects method {method!r}")
    tag = "Panel Least Squares (cross-section fixed effects)"
    return _result(
        d, names, est, cov, resid, st, tag,
        fixed_effect_terms=_effects_dict(d, alphas, include_constant),
        weighted_residuals=resid,
        flags={"fe_method": method},
    )


def fixed_effects(dataset: PanelDataset, spec: ModelSpec, method: str = "within") -> FitResult:
    """Entity fixed effects; ``method`` is ``within`` or ``dummies``.

    ``C`` is the average entity intercept and the reported effects are
    deviations from it.
    """
    return _fixed(build_design(dataset, spec), spec.include_constant, method)


def _random(d: _Design) -> FitResult:
    n, k, N = d.n, d.X.shape[1], d.n_entities
    if N - k - 1 <= 0:
        raise InsufficientDataError(f"between regression needs more than {k + 1} entities, got {N}")
    fe = _fixed(d, True, "within")
    sigma_e2 = fe.stats.sum_squared_resid / (n - N - k)
    ybar_i = _entity_means(d.y, d.codes, N)
    xbar_i = _entity_means(d.X, d.codes, N)
    between = np.column_stack([xbar_i, np.ones(N)])
    _, resid_b, _ = _lstsq(ybar_i, between, d.names + ["C"])
    s2_b = float(resid_b @ resid_b) / (N - k - 1)
    counts = np.bincount(d.codes, minlength=N).astype(float)
    t_bar = N / np.sum(1.0 / counts)
    sigma_a2 = s2_b - sigma_e2 / t_bar
    floored = sigma_a2 < 0
    if floored:
        warnings.warn("negative between-entity variance floored at zero", RuntimeWarning, stacklevel=3)
        sigma_a2 = 0.0
    theta_i = 1.0 - np.sqrt(sigma_e2 / (sigma_e2 + counts * sigma_a2))
    th = theta_i[d.codes]
    ys = d.y - th * ybar_i[d.codes]
    Xs = np.column_stack([d.X - th[:, None] * xbar_i[d.codes], 1.0 - th])
    names = d.names + ["C"]
    beta, resid_s, xtx_inv = _lstsq(ys, Xs, names)
    st = fit_statistics(ys, resid_s, k, True)
    cov = st.se_of_regression**2 * xtx_inv
    composite = d.y - np.column_stack([d.X, np.ones(n)]) @ beta
    flags = {
        "sigma_e2": float(sigma_e2),
        "sigma_alpha2": float(sigma_a2),
        "theta": float(theta_i.mean()),
        "between_variance_floored": bool(floored),
    }
    return _result(
        d, names, beta, cov, composite, st, "Panel EGLS (Cross-section random effects)",
        weighted_residuals=resid_s, flags=flags,
    )


def random_effects(dataset: PanelDataset, spec: ModelSpec) -> FitResult:
    """Swamy-Arora random effects (GLS by quasi-demeaning)."""
    return _random(build_design(dataset, spec))


def estimate_sigma(resid_panel: np.ndarray) -> np.ndarray:
    """Contemporaneous cross-section covariance, pairwise over common periods.

    ``resid_panel`` is ``(entities, periods)`` with NaN for absent cells; the
    divisor is the count of common periods for each pair.
    """
    present = ~np.isnan(resid_panel)
    e = np.where(present, resid_panel, 0.0)
    common = present.astype(float) @ present.T.astype(float)
    if (common == 0).any():
        raise InsufficientDataError("some entity pair shares no period")
    return (e @ e.T) / common


def condition_sigma(sigma: np.ndarray, policy: str = "shrinkage") -> tuple[np.ndarray, str]:
    """Return a usable covariance and a tag describing any fallback."""
    diag = np.diag(np.diag(sigma))
    if np.any(np.diag(sigma) <= 0):
        raise DegenerateError("cross-section covariance has a non-positive variance")

    def ok(m):
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            return False
        return np.linalg.cond(m) <= SIGMA_COND_LIMIT

    if ok(sigma):
        return sigma, "none"
    if policy == "diagonal":
        return diag, "diagonal"
    if policy == "shrinkage":
        for step in range(1, 11):
            lam = step / 10
            m = (1 - lam) * sigma + lam * diag
            if ok(m):
                return m, f"shrinkage({lam:.1f})"
        return diag, "diagonal"
    raise ConfigurationError(f"unknown conditioning policy {policy!r}")


def _sur_transform(d: _Design, sigma: np.ndarray, with_dummies: bool, include_constant: bool):
    L = np.linalg.cholesky(sigma)
    P = linalg.solve_triangular(L, np.eye(d.n_entities), lower=True)
    T = len(d.years)

    def tr(v):
        return (P @ d.to_panel(v))[d.codes, d.tidx]

    yt = tr(d.y)
    Xt = np.column_stack([tr(d.X[:, j]) for j in range(d.X.shape[1])]) if d.X.size else np.empty((d.n, 0))
    if with_dummies:
        Dt = P[d.codes, :]
    elif include_constant:
        Dt = (P @ np.ones((d.n_entities, T)))[d.codes, d.tidx][:, None]
    else:
        Dt = np.empty((d.n, 0))
    return yt, Xt, Dt


def _egls(
    d: _Design,
    with_dummies: bool,
    include_constant: bool,
    sigma=None,
    policy: str = "shrinkage",
    iterate: bool = False,
    max_iter: int = 200,
    tol: float = 1e-10,
) -> FitResult:
    N, k = d.n_entities, d.X.shape[1]
    if not d.balanced:
        raise DomainError("cross-section SUR weighting requires a balanced sample")
    if with_dummies:
        first = _fixed(d, include_constant, "dummies")
    else:
        first = _pooled(d, include_constant)
    supplied = sigma is not None
    prev = first.params
    iterations = 0
    while True:
        if supplied:
            sig = np.asarray(sigma, dtype=float)
            if sig.shape != (N, N):
                raise DomainError(f"sigma must be {N}x{N}")
            sig_used, cond_tag = sig, "none"
        else:
            raw = estimate_sigma(d.to_panel(first.residuals))
            sig_used, cond_tag = condition_sigma(raw, policy)
        yt, Xt, Dt = _sur_transform(d, sig_used, with_dummies, include_constant)
        names = d.names + (["C"] if include_constant else [])
        if with_dummies:
            est, scale, resid_w, alphas = _lsdv_solve(yt, Xt, Dt, d.names, include_constant)
            structural = d.y - d.X @ est[:k] - alphas[d.codes]
            n_terms = k + N - 1
        else:
            beta, resid_w, scale = _lstsq(yt, np.column_stack([Xt, Dt]), names)
            est, alphas = beta, None
            structural = d.y - d.X @ beta[:k] - (beta[k] if include_constant else 0.0)
            n_terms = k
        iterations += 1
        if supplied or not iterate:
            break
        delta = np.max(np.abs(est - prev)) if prev.size else 0.0
        prev = est
        first = _result(d, names, est, np.eye(len(est)), structural, first.stats, "")
        if delta < tol or iterations >= max_iter:
            break
    st = fit_statistics(yt, resid_w, n_terms, True)
    cov = st.se_of_regression**2 * scale
    tag = "Panel EGLS (Cross-section SUR)"
    tag += "; sigma=supplied" if supplied else "; sigma=estimated"
    tag += f"; conditioning={cond_tag}"
    if iterate and not supplied:
        tag += f"; iterated({iterations})"
    return _result(
        d, names, est, cov, structural, st, tag,
        fixed_effect_terms=_effects_dict(d, alphas, include_constant) if with_dummies else None,
        weighted_residuals=resid_w,
        flags={"conditioning": cond_tag, "sigma_supplied": supplied, "iterations": iterations},
        sigma=sig_used,
    )


def egls_cross_section_sur(
    dataset: PanelDataset,
    spec: ModelSpec,
    sigma=None,
    policy: str = "shrinkage",
    iterate: bool = False,
) -> FitResult:
    """Feasible GLS with cross-section SUR weights.

    Step one fits the unweighted model (entity dummies when
    ``spec.effects`` is fixed); step two estimates the N x N contemporaneous
    residual covariance and re-estimates with weight ``inv(Sigma) (x) I_T``.
    Passing ``sigma`` pins the weighting matrix. An ill-conditioned estimate
    falls back to ``policy`` (``shrinkage`` or ``diagonal``); the choice is
    recorded in ``method_tag``.
    """
    if spec.effects is Effects.RANDOM:
        raise ConfigurationError("SUR weighting is not available with random effects")
    d = build_design(dataset, spec)
    return _egls(d, spec.effects is Effects.FIXED, spec.include_constant, sigma, policy, iterate)


def fit(dataset: PanelDataset, spec: ModelSpec, **kwargs) -> FitResult:
    """Dispatch on ``spec.effects`` and ``spec.weighting``."""
    if spec.weighting is Weighting.CROSS_SECTION_SUR:
        return egls_cross_section_sur(dataset, spec, **kwargs)
    if spec.effects is Effects.FIXED:
        return fixed_effects(dataset, spec, **kwargs)
    if spec.effects is Effects.RANDOM:
        return random_effects(dataset, spec)
    return pooled_ols(dataset, spec)
