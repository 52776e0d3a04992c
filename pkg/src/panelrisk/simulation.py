"""Seeded Monte Carlo engine.

Synthetic panel DGPs, simulated null distributions (critical values,
moments, p-value grids) for the unit-root tests, and size/power
experiments. Replication ``r`` of a run seeded with ``seed`` always draws
from ``SeedSequence(seed, spawn_key=(r,))``, so results do not depend on
batch order or chunking.
"""

from __future__ import annotations

import json
import logging
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import unitroot
from .errors import ConfigurationError, DomainError
from .panel import PanelDataset
from .unitroot import DeterministicSpec

logger = logging.getLogger(__name__)

GENERATOR_ID = "numpy-pcg64-seedsequence-v1"
CACHE_ENV = "PANELRISK_CACHE_DIR"
DEFAULT_SEED = 20141995
DEFAULT_REPLICATIONS = 10000
QUANTILE_LEVELS = (0.01, 0.05, 0.10)
GRID_SIZE = 2001
_CHUNK = 500


def rng_for(seed: int, replication: int | None = None) -> np.random.Generator:
    key = () if replication is None else (int(replication),)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "panelrisk")


# --- DGPs ---------------------------------------------------------------


@dataclass(frozen=True)
class DGPSpec:
    """Synthetic panel ``y_it = a_i + sum_k b_k x_kit + u_it``.

    ``u_it = ar_coef * u_i,t-1 + e_it`` (``ar_coef`` is forced to 1 when
    ``unit_root``); the ``e_t`` vector is equicorrelated across entities
    with sd ``error_sd``, scaled by ``|x_1|**hetero_power``. Regressors are
    i.i.d. standard normal plus ``effect_regressor_corr * a_i``, which makes
    them correlated with the entity effects.
    """

    n_entities: int
    n_periods: int
    slopes: Mapping[str, float] = field(default_factory=dict)
    entity_effect_sd: float = 0.0
    error_sd: float = 1.0
    cross_section_corr: float = 0.0
    unit_root: bool = False
    hetero_power: float = 0.0
    seed: int = 0
    ar_coef: float = 0.0
    effect_regressor_corr: float = 0.0
    burn_in: int = 50
    start_year: int = 1995

    def __post_init__(self):
        if self.n_entities < 1 or self.n_periods < 1:
            raise DomainError("DGP needs at least one entity and one period")
        if self.entity_effect_sd < 0 or self.error_sd < 0 or self.hetero_power < 0:
            raise DomainError("standard deviations and hetero_power must be non-negative")
        object.__setattr__(self, "slopes", dict(self.slopes))
        self.correlation_matrix()

    def correlation_matrix(self) -> np.ndarray:
        n, rho = self.n_entities, self.cross_section_corr
        if n > 1 and not -1.0 / (n - 1) < rho < 1.0 and rho != 0:
            raise DomainError(f"equicorrelation {rho} is not positive definite for N={n}")
        m = np.full((n, n), rho)
        np.fill_diagonal(m, 1.0)
        return m

    def with_seed(self, seed: int) -> DGPSpec:
        return DGPSpec(**{**self.__dict__, "seed": seed})


def generate_panel(dgp: DGPSpec, replication: int | None = None) -> PanelDataset:
    """Draw one dataset; identical ``(dgp, replication)`` give identical cells."""
    rng = rng_for(dgp.seed, replication)
    N, T = dgp.n_entities, dgp.n_periods
    alpha = rng.standard_normal(N) * dgp.entity_effect_sd
    names = list(dgp.slopes)
    xs = {}
    for name in names:
        xs[name] = rng.standard_normal((N, T)) + dgp.effect_regressor_corr * alpha[:, None]
    burn = 0 if dgp.unit_root or dgp.ar_coef == 0 else dgp.burn_in
    chol = np.linalg.cholesky(dgp.correlation_matrix())
    z = rng.standard_normal((T + burn, N))
    eps = (z @ chol.T).T * dgp.error_sd
    if dgp.hetero_power and names:
        eps[:, burn:] *= np.abs(xs[names[0]]) ** dgp.hetero_power
    phi = 1.0 if dgp.unit_root else dgp.ar_coef
    if phi == 0:
        u = eps
    else:
        u = np.empty_like(eps)
        prev = np.zeros(N)
        for t in range(T + burn):
            prev = phi * prev + eps[:, t]
            u[:, t] = prev
    u = u[:, burn:]
    y = alpha[:, None] + u
    for name in names:
        y = y + dgp.slopes[name] * xs[name]
    columns = {"y": y, **xs}
    entities = tuple(f"E{i + 1:02d}" for i in range(N))
    years = tuple(range(dgp.start_year, dgp.start_year + T))
    return PanelDataset(entities, years, columns, balanced=True)


def _null_draws(seed: int, start: int, stop: int, N: int, T: int) -> np.ndarray:
    """Random-walk panels for replications ``start..stop-1``, shape ``(R, N, T)``."""
    out = np.empty((stop - start, N, T))
    for j, r in enumerate(range(start, stop)):
        out[j] = np.cumsum(rng_for(seed, r).standard_normal((N, T)), axis=1)
    return out


# --- critical value tables ------------------------------------------------


@dataclass(frozen=True)
class CriticalValueTable:
    test_id: str
    n: int
    t: int
    det: str
    quantiles: dict[str, float]
    replications: int
    seed: int
    max_lag: int | None
    grid: tuple[float, ...]
    mean: float
    var: float
    extra: dict = field(default_factory=dict)
    generator: str = GENERATOR_ID

    def p_value(self, stat: float, tail: str = "left") -> float:
        """Empirical CDF (left tail) or survival (right tail) from the quantile grid."""
        g = np.asarray(self.grid)
        probs = np.linspace(0.0, 1.0, g.size)
        if stat <= g[0]:
            cdf = 0.0
        elif stat >= g[-1]:
            cdf = 1.0
        else:
            hi = int(np.searchsorted(g, stat, side="right"))
            lo = int(np.searchsorted(g, stat, side="left"))
            if hi > lo:
                cdf = float(probs[lo:hi].mean())
            else:
                cdf = float(np.interp(stat, g, probs))
        return cdf if tail == "left" else 1.0 - cdf

    def to_dict(self) -> dict:
        return {
            "test_id": self.test_id,
            "n": self.n,
            "t": self.t,
            "det": self.det,
            "quantiles": self.quantiles,
            "replications": self.replications,
            "seed": self.seed,
            "max_lag": self.max_lag,
            "generator": self.generator,
            "mean": self.mean,
            "var": self.var,
            "extra": self.extra,
            "grid": list(self.grid),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> CriticalValueTable:
        return cls(
            d["test_id"], d["n"], d["t"], d["det"], dict(d["quantiles"]), d["replications"], d["seed"],
            d["max_lag"], tuple(d["grid"]), d["mean"], d["var"], dict(d.get("extra", {})), d["generator"],
        )


def _stat_adf(Y, det, max_lag, **_):
    return unitroot.adf_batch(Y[:, 0, :], det, max_lag).tstat


def _stat_pp(Y, det, max_lag, **_):
    return unitroot.pp_batch(Y[:, 0, :], det, max_lag)


def _stat_breitung(Y, det, max_lag, **_):
    return unitroot.breitung_batch(Y, det, max_lag)


def _stat_llc_raw(Y, det, max_lag, **_):
    t_delta, scale = unitroot.llc_components(Y, det, max_lag)
    return np.column_stack([t_delta, scale])


def _stat_ips(Y, det, max_lag, moments, **_):
    R, N, T = Y.shape
    t = unitroot.adf_batch(Y.reshape(R * N, T), det, max_lag).tstat.reshape(R, N)
    return math.sqrt(N) * (np.sort(t, axis=1).mean(axis=1) - moments[0]) / math.sqrt(moments[1])


def _stat_fisher(kind):
    def fn(Y, det, max_lag, table, **_):
        R, N, T = Y.shape
        flat = Y.reshape(R * N, T)
        stat = unitroot.adf_batch(flat, det, max_lag).tstat if kind == "adf" else unitroot.pp_batch(flat, det, max_lag)
        p = np.array([max(table.p_value(s), 0.5 / table.replications) for s in stat]).reshape(R, N)
        return -2.0 * np.log(np.sort(p, axis=1)).sum(axis=1)

    return fn


_STATISTICS: dict[str, Callable] = {
    "adf": _stat_adf,
    "pp": _stat_pp,
    "breitung": _stat_breitung,
    "llc": _stat_llc_raw,
    "ips": _stat_ips,
    "fisher_adf": _stat_fisher("adf"),
    "fisher_pp": _stat_fisher("pp"),
}
SUPPORTED_TESTS = tuple(_STATISTICS)
_SERIES_TESTS = {"adf", "pp"}

_memory: dict[tuple, CriticalValueTable] = {}


def _cache_path(key: tuple) -> Path:
    test_id, n, t, det, reps, seed, max_lag = key
    return cache_dir() / f"{test_id}_N{n}_T{t}_{det}_L{max_lag}_R{reps}_S{seed}.json"


def _default_lag(test_id: str, T: int, det: DeterministicSpec) -> int:
    if test_id in ("pp", "fisher_pp"):
        return unitroot.pp_bandwidth(T)
    if test_id == "adf":
        return unitroot.default_max_lag(T, det)
    return unitroot.panel_max_lag(T, det)


def simulate_critical_values(
    test_id: str,
    N: int,
    T: int,
    det="constant_only",
    replications: int = DEFAULT_REPLICATIONS,
    seed: int = DEFAULT_SEED,
    max_lag: int | None = None,
    use_cache: bool = True,
) -> CriticalValueTable:
    """Empirical null quantiles of a unit-root statistic under i.i.d. random walks.

    ``max_lag`` is the ADF lag bound (PP bandwidth for the PP-based tests).
    Tables are cached in memory and as JSON under :func:`cache_dir`.
    """
    if test_id not in _STATISTICS:
        raise ConfigurationError(f"unsupported test id {test_id!r}; choose from {', '.join(SUPPORTED_TESTS)}")
    if replications < 1000:
        raise DomainError("simulate_critical_values needs at least 1000 replications")
    det = DeterministicSpec(det)
    if test_id in _SERIES_TESTS:
        N = 1
    lag_arg = _default_lag(test_id, T, det) if max_lag is None else int(max_lag)
    key = (test_id, int(N), int(T), det.value, int(replications), int(seed), lag_arg)
    if key in _memory:
        return _memory[key]
    path = _cache_path(key)
    if use_cache and path.exists():
        try:
            table = CriticalValueTable.from_dict(json.loads(path.read_text()))
            if table.generator == GENERATOR_ID:
                _memory[key] = table
                return table
        except (ValueError, KeyError):
            logger.warning("ignoring unreadable cache file %s", path)

    kwargs = {}
    if test_id == "ips":
        base = simulate_critical_values("adf", 1, T, det, replications, seed, lag_arg, use_cache)
        kwargs["moments"] = (base.mean, base.var)
    elif test_id in ("fisher_adf", "fisher_pp"):
        kwargs["table"] = simulate_critical_values(test_id.split("_")[1], 1, T, det, replications, seed, lag_arg, use_cache)

    fn = _STATISTICS[test_id]
    chunks = []
    for start in range(0, replications, _CHUNK):
        stop = min(start + _CHUNK, replications)
        chunks.append(fn(_null_draws(seed, start, stop, N, T), det, lag_arg, **kwargs))
    stat = np.concatenate(chunks)

    extra = {}
    if test_id == "llc":
        a, b = stat[:, 0], stat[:, 1]
        mu = float(np.mean(a) / np.mean(b))
        sigma = float(np.std(a - mu * b, ddof=1))
        extra = {"mu_star": mu, "sigma_star": sigma}
        stat = (a - mu * b) / sigma
    stat = np.asarray(stat, dtype=float)
    srt = np.sort(stat)
    grid = np.quantile(srt, np.linspace(0.0, 1.0, GRID_SIZE))
    quantiles = {f"{q:.2f}": float(np.quantile(srt, q)) for q in QUANTILE_LEVELS}
    table = CriticalValueTable(
        test_id, int(N), int(T), det.value, quantiles, int(replications), int(seed), lag_arg,
        tuple(float(v) for v in grid), float(np.mean(srt)), float(np.var(srt, ddof=1)), extra,
    )
    _memory[key] = table
    if use_cache:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(table.to_json())
            tmp.replace(path)
        except OSError as exc:
            logger.warning("could not write cache %s: %s", path, exc)
    return table


def null_table(test_id, N, T, det, replications=None, seed=None, max_lag=None) -> CriticalValueTable:
    return simulate_critical_values(
        test_id, N, T, det,
        DEFAULT_REPLICATIONS if replications is None else replications,
        DEFAULT_SEED if seed is None else seed,
        max_lag,
    )


def clear_memory_cache() -> None:
    _memory.clear()


# --- size and power -----------------------------------------------------------


def _fe_models(ds: PanelDataset):
    from .estimation import ModelSpec

    slopes = tuple((v, 0) for v in ds.variables if v != "y")
    return ModelSpec("y", slopes)


def _p_hausman(ds, **_):
    from .diagnostics import hausman
    from .estimation import fixed_effects, random_effects

    spec = _fe_models(ds)
    with warnings.catch_warnings():
        # the variance-component floor is routine across many replications
        warnings.simplefilter("ignore", RuntimeWarning)
        re = random_effects(ds, spec)
    return hausman(fixed_effects(ds, spec), re).p_value


def _p_redundant(ds, **_):
    from .diagnostics import redundant_fe_lr
    from .estimation import fixed_effects, pooled_ols

    spec = _fe_models(ds)
    return redundant_fe_lr(pooled_ols(ds, spec), fixed_effects(ds, spec)).p_value


def _p_jb(ds, **_):
    from .diagnostics import jarque_bera
    from .estimation import fixed_effects

    return jarque_bera(fixed_effects(ds, _fe_models(ds)).residuals).p_value


def _p_csd(method):
    def fn(ds, **_):
        from .diagnostics import cross_section_dependence
        from .estimation import fixed_effects

        return cross_section_dependence(fixed_effects(ds, _fe_models(ds)).residual_panel(), method).p_value

    return fn


def _p_white(ds, **_):
    from .diagnostics import white_paper_variant
    from .estimation import pooled_ols

    return white_paper_variant(pooled_ols(ds, _fe_models(ds))).standard_p_value


def _p_series(kind):
    def fn(ds, det="constant_only", max_lag=None, **_):
        x = ds.values("y")[0]
        out = unitroot.adf_test(x, det, max_lag) if kind == "adf" else unitroot.pp_test(x, det, max_lag)
        return out.p_value

    return fn


def _p_panel(method):
    def fn(ds, det="constant_only", max_lag=None, **_):
        return unitroot.panel_unit_root(ds, "y", method, det, max_lag).p_value

    return fn


TEST_REGISTRY: dict[str, Callable] = {
    "adf": _p_series("adf"),
    "pp": _p_series("pp"),
    "llc": _p_panel("LLC"),
    "breitung": _p_panel("Breitung"),
    "ips": _p_panel("IPS"),
    "fisher_adf": _p_panel("FisherADF"),
    "fisher_pp": _p_panel("FisherPP"),
    "hausman": _p_hausman,
    "redundant_fe": _p_redundant,
    "jarque_bera": _p_jb,
    "bp_lm": _p_csd("breusch_pagan_lm"),
    "pesaran_cd": _p_csd("pesaran_cd"),
    "white": _p_white,
}


@dataclass(frozen=True)
class SizePowerReport:
    test_id: str
    alpha: float
    replications: int
    size: float
    size_se: float
    power: float
    power_se: float
    failures_null: int
    failures_alt: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def rejection_rate(test_id: str, dgp: DGPSpec, replications: int, alpha: float = 0.05, **options):
    """Rejection frequency over seeded replications, plus the failure count."""
    if test_id not in TEST_REGISTRY:
        raise ConfigurationError(f"unknown test id {test_id!r}")
    fn = TEST_REGISTRY[test_id]
    rejections = failures = 0
    for r in range(replications):
        try:
            p = fn(generate_panel(dgp, r), **options)
        except Exception as exc:  # counted, never aborts the batch
            logger.debug("replication %d failed: %s", r, exc)
            failures += 1
            continue
        rejections += p < alpha
    ok = replications - failures
    return (rejections / ok if ok else math.nan), failures


def size_power(
    test_id: str, null_dgp: DGPSpec, alt_dgp: DGPSpec, replications: int = 500, alpha: float = 0.05, **options
) -> SizePowerReport:
    if replications < 200:
        raise DomainError("size_power needs at least 200 replications")
    size, f0 = rejection_rate(test_id, null_dgp, replications, alpha, **options)
    power, f1 = rejection_rate(test_id, alt_dgp, replications, alpha, **options)

    def se(p, fails):
        m = replications - fails
        return math.sqrt(p * (1 - p) / m) if m else math.nan

    return SizePowerReport(test_id, alpha, replications, size, se(size, f0), power, se(power, f1), f0, f1)
