"""End-to-end estimation workflow and the risk analytics report.

``run_pipeline`` goes ingest -> annualize -> lag -> balance -> stationarity
battery -> specification tests -> method choice -> estimation ->
diagnostics -> verdict. ``risk_report`` covers the descriptive side:
yearly means, sub-period changes, rankings and volatility.
"""

from __future__ import annotations

import configparser
import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import descriptive, diagnostics, estimation, unitroot
from .descriptive import CorrelationMatrix
from .diagnostics import MulticollinearityOutcome
from .errors import ConfigurationError, MetadataError, PanelRiskError, UnknownVariableError, ValidationError
from .estimation import Effects, FitResult, ModelSpec, Weighting
from .outcome import TestOutcome
from .panel import (
    AdjustmentLog,
    PanelDataset,
    ScaleDirection,
    VariableMeta,
    annualize_panel,
    balance,
    lag,
    lag_name,
    load_csv,
)
from .unitroot import StationarityReport

logger = logging.getLogger(__name__)

TEST_TOGGLES = (
    "stationarity",
    "hausman",
    "redundant_fe",
    "jarque_bera",
    "durbin_watson",
    "bp_lm",
    "pesaran_cd",
    "white",
    "klein",
    "f_test",
)
FORMATS = ("json", "text", "csv")
STAGES = ("ingest", "annualize", "lag", "balance", "stationarity", "specification", "estimation", "diagnostics")


def _bool(text: str, key: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"{key}: expected a boolean, got {text!r}")


@dataclass(frozen=True)
class PipelineConfig:
    """Validated pipeline settings; see the README for the INI grammar."""

    formula: str
    annual_path: Path | None = None
    monthly_path: Path | None = None
    annualize_policy: str = "require_complete"
    effects: str = "auto"
    weighting: Weighting = Weighting.CROSS_SECTION_SUR
    sample: tuple[int, int] | None = None
    sigma_policy: str = "shrinkage"
    iterate: bool = False
    alpha: float = 0.05
    tests: dict[str, bool] = field(default_factory=lambda: dict.fromkeys(TEST_TOGGLES, True))
    white_convention: str = "paper"
    white_dummies: int | None = None
    dw_mode: str = "within"
    replications: int | None = None
    seed: int = 20141995
    out_dir: Path = Path("out")
    formats: tuple[str, ...] = ("json",)

    def __post_init__(self):
        if self.annual_path is None and self.monthly_path is None:
            raise ConfigurationError("[data] needs at least one of 'annual' or 'monthly'")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.effects not in ("auto", "fixed", "random", "none"):
            raise ConfigurationError(f"effects must be auto, fixed, random or none, got {self.effects!r}")
        object.__setattr__(self, "weighting", Weighting(self.weighting))
        if self.sigma_policy not in ("shrinkage", "diagonal"):
            raise ConfigurationError(f"sigma_policy must be shrinkage or diagonal, got {self.sigma_policy!r}")
        if self.white_convention not in ("paper", "standard"):
            raise ConfigurationError("white_convention must be paper or standard")
        if self.dw_mode not in ("within", "naive_stacked"):
            raise ConfigurationError("dw_mode must be within or naive_stacked")
        unknown = set(self.tests) - set(TEST_TOGGLES)
        if unknown:
            raise ConfigurationError(f"unknown test toggle(s): {', '.join(sorted(unknown))}")
        object.__setattr__(self, "tests", {k: bool(self.tests.get(k, True)) for k in TEST_TOGGLES})
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ConfigurationError(f"unknown output format(s): {', '.join(bad)}")
        if self.replications is not None and self.replications < 1000:
            raise ConfigurationError("replications must be at least 1000")
        self.model_spec()  # parse errors surface here

    def model_spec(self, effects: Effects | None = None, weighting: Weighting | None = None) -> ModelSpec:
        eff = effects or (Effects.FIXED if self.effects == "auto" else Effects(self.effects))
        return ModelSpec.from_formula(
            self.formula, effects=eff, weighting=weighting or Weighting.NONE, sample=self.sample
        )

    @property
    def base_variables(self) -> list[str]:
        spec = self.model_spec()
        names = [spec.dependent] + [n for n, _ in spec.regressors]
        return list(dict.fromkeys(names))

    def check_variables(self, available: Sequence[str]) -> None:
        missing = [v for v in self.base_variables if v not in available]
        if missing:
            raise ValidationError(f"formula references unknown variable(s): {', '.join(missing)}")

    def to_dict(self) -> dict:
        return {
            "formula": self.formula,
            "annual": str(self.annual_path) if self.annual_path else None,
            "monthly": str(self.monthly_path) if self.monthly_path else None,
            "annualize": self.annualize_policy,
            "effects": self.effects,
            "weighting": self.weighting.value,
            "sample": list(self.sample) if self.sample else None,
            "sigma_policy": self.sigma_policy,
            "iterate": self.iterate,
            "alpha": self.alpha,
            "tests": self.tests,
            "white_convention": self.white_convention,
            "white_dummies": self.white_dummies,
            "dw_mode": self.dw_mode,
            "replications": self.replications,
            "seed": self.seed,
        }

    @classmethod
    def from_ini(cls, path, **overrides) -> PipelineConfig:
        path = Path(path)
        parser = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc
        return cls.from_parser(parser, base_dir=path.parent, **overrides)

    @classmethod
    def from_parser(cls, parser: configparser.ConfigParser, base_dir: Path = Path("."), **overrides) -> PipelineConfig:
        known = {"data", "model", "tests", "output"}
        extra = set(parser.sections()) - known
        if extra:
            raise ConfigurationError(f"unknown config section(s): {', '.join(sorted(extra))}")
        data = parser["data"] if parser.has_section("data") else {}
        model = parser["model"] if parser.has_section("model") else {}
        tests = parser["tests"] if parser.has_section("tests") else {}
        output = parser["output"] if parser.has_section("output") else {}
        if "formula" not in model:
            raise ConfigurationError("[model] formula is required")

        def path_of(v):
            p = Path(v)
            return p if p.is_absolute() else base_dir / p

        kw: dict[str, Any] = {"formula": model["formula"]}
        if data.get("annual"):
            kw["annual_path"] = path_of(data["annual"])
        if data.get("monthly"):
            kw["monthly_path"] = path_of(data["monthly"])
        if "annualize" in data:
            kw["annualize_policy"] = data["annualize"]
        for key in ("effects", "weighting", "sigma_policy"):
            if key in model:
                kw[key] = model[key]
        if "iterate" in model:
            kw["iterate"] = _bool(model["iterate"], "iterate")
        if model.get("sample"):
            try:
                lo, hi = (int(p) for p in model["sample"].replace(" ", "").split("-"))
            except ValueError as exc:
                raise ConfigurationError(f"sample must look like 1996-2014, got {model['sample']!r}") from exc
            kw["sample"] = (lo, hi)
        toggles = {}
        for key, value in tests.items():
            if key == "alpha":
                kw["alpha"] = _float(value, key)
            elif key in ("seed", "replications", "white_dummies"):
                kw[key] = _int(value, key)
            elif key in ("white_convention", "dw_mode"):
                kw[key] = value.strip()
            else:
                toggles[key] = _bool(value, key)
        kw["tests"] = toggles
        kw["out_dir"] = path_of(output.get("dir") or "out")
        if output.get("formats"):
            kw["formats"] = tuple(f.strip() for f in output["formats"].split(",") if f.strip())
        kw.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**kw)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc


def _float(text, key):
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigurationError(f"{key}: expected a number, got {text!r}") from exc


def _int(text, key):
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigurationError(f"{key}: expected an integer, got {text!r}") from exc


# --- report types ---------------------------------------------------------------


@dataclass(frozen=True)
class HypothesisRow:
    hypothesis: str
    test: str
    result: float | None
    result_kind: str
    accepted: bool | None
    required: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis,
            "test": self.test,
            "result": self.result,
            "result_kind": self.result_kind,
            "accepted": None if self.accepted is None else ("YES" if self.accepted else "NO"),
            "required": self.required,
            "note": self.note,
        }


class PipelineStageError(PanelRiskError):
    """A stage failed; ``partial`` holds everything computed before it."""

    def __init__(self, stage: str, cause: Exception, partial: PipelineReport):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
        self.partial = partial
        self.exit_code = getattr(cause, "exit_code", 3)


@dataclass
class PipelineReport:
    config: dict
    sample: dict = field(default_factory=dict)
    stationarity: StationarityReport | None = None
    method_selection: dict = field(default_factory=dict)
    candidates: dict[str, FitResult] = field(default_factory=dict)
    estimation: FitResult | None = None
    diagnostics: dict = field(default_factory=dict)
    hypothesis_table: list[HypothesisRow] = field(default_factory=list)
    correlation: CorrelationMatrix | None = None
    multicollinearity: MulticollinearityOutcome | None = None
    verdict: str | None = None
    reasons: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    failed_stage: str | None = None

    kind = "pipeline"

    def to_dict(self) -> dict:
        ms = {}
        for key, value in self.method_selection.items():
            ms[key] = value.to_dict() if isinstance(value, TestOutcome) else value
        return {
            "config": self.config,
            "sample": self.sample,
            "stationarity": self.stationarity.to_dict() if self.stationarity else None,
            "method_selection": ms,
            "candidates": {k: _fit_summary(f) for k, f in self.candidates.items()},
            "estimation": self.estimation.to_dict() if self.estimation else None,
            "diagnostics": self.diagnostics,
            "hypothesis_table": [r.to_dict() for r in self.hypothesis_table],
            "correlation": {
                "matrix": self.correlation.to_dict() if self.correlation else None,
                "klein": self.multicollinearity.to_dict() if self.multicollinearity else None,
            },
            "verdict": {"status": self.verdict, "reasons": self.reasons},
            "warnings": self.warnings,
            "failed_stage": self.failed_stage,
        }

    def csv_tables(self) -> dict[str, list[dict]]:
        tables: dict[str, list[dict]] = {}
        if self.estimation is not None:
            tables["coefficients"] = [c.to_dict() for c in self.estimation.coefficients]
            if self.estimation.fixed_effect_terms:
                tables["fixed_effects"] = [
                    {"entity": e, "effect": v} for e, v in self.estimation.fixed_effect_terms.items()
                ]
        if self.hypothesis_table:
            tables["hypothesis_table"] = [r.to_dict() for r in self.hypothesis_table]
        if self.stationarity is not None:
            tables["stationarity"] = [
                {"variable": var, "method": m, "deterministic": d, "p_value": v}
                for var, cells in self.stationarity.grid.items()
                for (m, d), v in cells.items()
            ]
        if self.correlation is not None:
            tables["correlation"] = self.correlation.csv_rows()
        return tables


def _fit_summary(fit: FitResult) -> dict:
    return {
        "method": fit.method_tag,
        "coefficients": [c.to_dict() for c in fit.coefficients],
        "r_squared": fit.stats.r_squared,
        "sum_squared_resid": fit.stats.sum_squared_resid,
    }


# --- pipeline -----------------------------------------------------------------------


def _ingest(cfg: PipelineConfig):
    annual = load_csv(cfg.annual_path, "annual_long") if cfg.annual_path else None
    monthly = load_csv(cfg.monthly_path, "monthly_long") if cfg.monthly_path else None
    return annual, monthly


def choose_method(hausman: TestOutcome | None, redundant: TestOutcome | None, alpha: float) -> tuple[str, str]:
    """Estimator implied by the specification tests, with the rule applied."""
    if hausman is None or redundant is None:
        return "fixed", "specification tests disabled; fixed effects by default"
    if hausman.p_value >= alpha:
        return "random", f"Hausman p={hausman.p_value:.6f} >= {alpha}: random effects not rejected"
    if redundant.p_value < alpha:
        return "fixed", (
            f"Hausman p={hausman.p_value:.6f} < {alpha} and redundant-FE p={redundant.p_value:.6f} < {alpha}: "
            "fixed effects"
        )
    return "pooled", (
        f"Hausman p={hausman.p_value:.6f} < {alpha} but redundant-FE p={redundant.p_value:.6f} >= {alpha}: "
        "effects redundant, pooled OLS"
    )


def run_pipeline(cfg: PipelineConfig) -> PipelineReport:
    report = PipelineReport(config=cfg.to_dict())
    stage = "ingest"
    try:
        annual, monthly = _ingest(cfg)

        stage = "annualize"
        ds = annualize_panel(monthly, cfg.annualize_policy, annual) if monthly else annual
        cfg.check_variables(ds.variables)

        stage = "lag"
        spec = cfg.model_spec()
        for name, k in spec.regressors:
            if k and lag_name(name, k) not in ds.columns:
                ds = lag(ds, name, k)

        stage = "balance"
        work = ds.restrict_years(*cfg.sample) if cfg.sample else ds
        cols = [spec.dependent, *spec.regressor_names]
        balanced, adj = balance(work, cols)
        report.sample = _sample_dict(balanced, adj)

        stage = "stationarity"
        if cfg.tests["stationarity"]:
            report.stationarity = unitroot.summary_battery(
                ds, cfg.base_variables, alpha=cfg.alpha, replications=cfg.replications, seed=cfg.seed
            )
            for var, v in report.stationarity.verdict.items():
                if v != "stationary":
                    report.warnings.append(f"stationarity: {var} verdict {v}; estimation proceeds")

        stage = "specification"
        chosen, rule = _specification(cfg, balanced, report)

        stage = "estimation"
        final = _estimate(cfg, balanced, chosen, report)
        report.estimation = final

        stage = "diagnostics"
        _diagnose(cfg, balanced, final, report)
    except PanelRiskError as exc:
        report.failed_stage = stage
        raise PipelineStageError(stage, exc, report) from exc
    except (ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
        report.failed_stage = stage
        raise PipelineStageError(stage, exc, report) from exc
    return report


def _sample_dict(ds: PanelDataset, adj: AdjustmentLog) -> dict:
    return {
        "years": [ds.years[0], ds.years[-1]] if ds.years else None,
        "periods": len(ds.years),
        "cross_sections": len(ds.entities),
        "observations": ds.n_rows,
        "balanced": ds.balanced,
        "adjustment": adj.to_dict(),
    }


def _capture(report: PipelineReport, fn, *args, **kwargs):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = fn(*args, **kwargs)
    for w in caught:
        report.warnings.append(f"{fn.__name__}: {w.message}")
    return out


def _specification(cfg: PipelineConfig, ds: PanelDataset, report: PipelineReport) -> tuple[str, str]:
    fe_spec = cfg.model_spec(Effects.FIXED)
    pooled = estimation.pooled_ols(ds, cfg.model_spec(Effects.NONE))
    fe = estimation.fixed_effects(ds, fe_spec)
    re_ = _capture(report, estimation.random_effects, ds, cfg.model_spec(Effects.RANDOM))
    report.candidates = {"pooled": pooled, "fixed": fe, "random": re_}
    h = diagnostics.hausman(fe, re_) if cfg.tests["hausman"] else None
    lr = diagnostics.redundant_fe_lr(pooled, fe) if cfg.tests["redundant_fe"] else None
    if cfg.effects == "auto":
        chosen, rule = choose_method(h, lr, cfg.alpha)
    else:
        chosen, rule = cfg.effects if cfg.effects != "none" else "pooled", "configured"
    report.method_selection = {"hausman": h, "redundant_fe": lr, "chosen": chosen, "rule": rule}
    return chosen, rule


def _estimate(cfg: PipelineConfig, ds: PanelDataset, chosen: str, report: PipelineReport) -> FitResult:
    if chosen == "random":
        if cfg.weighting is Weighting.CROSS_SECTION_SUR:
            report.warnings.append("estimation: SUR weighting does not apply to random effects; unweighted RE used")
        return report.candidates["random"]
    effects = Effects.FIXED if chosen == "fixed" else Effects.NONE
    if cfg.weighting is Weighting.CROSS_SECTION_SUR:
        spec = cfg.model_spec(effects, Weighting.CROSS_SECTION_SUR)
        return estimation.egls_cross_section_sur(ds, spec, policy=cfg.sigma_policy, iterate=cfg.iterate)
    return report.candidates["fixed" if chosen == "fixed" else "pooled"]


def _diagnose(cfg: PipelineConfig, ds: PanelDataset, fit: FitResult, report: PipelineReport) -> None:
    alpha, on = cfg.alpha, cfg.tests
    resid = fit.weighted_residuals if fit.weighted_residuals is not None else fit.residuals
    diag: dict[str, Any] = {"residuals": "weighted" if fit.weighted_residuals is not None else "unweighted"}
    rows: list[HypothesisRow] = []
    ms = report.method_selection
    chosen = ms["chosen"]

    h, lr = ms.get("hausman"), ms.get("redundant_fe")
    rows.append(_row(
        "Compatibility with random effect model", "Correlated Random Effects - Hausman Test",
        h, lambda o: o.p_value >= alpha, chosen == "random",
    ))
    rows.append(_row(
        "Compatibility with fixed effect model", "Redundant Fixed Effects - Likelihood Ratio",
        lr, lambda o: o.p_value < alpha, chosen == "fixed",
    ))

    jb = diagnostics.jarque_bera(resid) if on["jarque_bera"] else None
    diag["jarque_bera"] = jb.to_dict() if jb else None
    rows.append(_row("Normal distribution of the residuals", "Jarque-Bera", jb, lambda o: o.p_value >= alpha, True))

    if on["durbin_watson"]:
        dw = diagnostics.durbin_watson(
            resid, len(fit.slope_names), fit.entity_index, cfg.dw_mode, alpha, bounds_source="auto"
        )
        diag["durbin_watson"] = dw.to_dict()

    panel = fit.residual_panel(weighted=True)
    for key, method, label in (("bp_lm", "breusch_pagan_lm", "Breusch-Pagan LM"), ("pesaran_cd", "pesaran_cd", "Pesaran CD")):
        out = diagnostics.cross_section_dependence(panel, method) if on[key] else None
        diag[key] = out.to_dict() if out else None
        rows.append(_row("Absence of residuals dependence", label, out, lambda o: o.p_value >= alpha, True))

    if on["white"]:
        k_dum = cfg.white_dummies
        if k_dum is None:
            k_dum = fit.cross_sections - 1 if fit.fixed_effect_terms is not None else 0
        w = diagnostics.white_paper_variant(fit, k_dummies=k_dum, alpha=alpha)
        diag["white"] = w.to_dict()
        ok = w.homoscedastic if cfg.white_convention == "paper" else w.standard_homoscedastic
        crit, dof = (w.critical, w.dof) if cfg.white_convention == "paper" else (w.standard_critical, w.standard_dof)
        rows.append(HypothesisRow(
            "Homoscedasticity", "White", w.n_times_r2, "statistic", ok, True,
            f"n*R2 vs chi-squared({dof}) critical {crit:.6f} ({cfg.white_convention} dof)",
        ))
    else:
        rows.append(HypothesisRow("Homoscedasticity", "White", None, "statistic", None, False, "disabled"))

    if on["klein"] and len(fit.slope_names) >= 2:
        corr = descriptive.pearson_corr_matrix(_estimation_frame(ds, fit), list(fit.slope_names))
        klein = diagnostics.klein_criterion(corr, min(1.0, max(0.0, fit.stats.r_squared)))
        report.correlation, report.multicollinearity = corr, klein
        a, b, r = klein.max_pair
        rows.append(HypothesisRow(
            "Absence of multicollinearity", "Klein's criterion", abs(r), "max |correlation|", not klein.present, True,
            f"max |r| = {abs(r):.6f} ({a}, {b}) vs R-squared {klein.r_squared:.6f}",
        ))
    else:
        rows.append(HypothesisRow("Absence of multicollinearity", "Klein's criterion", None, "max |correlation|", None, False, "disabled"))

    if on["f_test"] and not math.isnan(fit.stats.prob_f):
        rows.append(HypothesisRow(
            "Overall significance of the model", "F-statistic", fit.stats.prob_f, "probability",
            fit.stats.prob_f < alpha, True, f"F = {fit.stats.f_statistic:.6f}",
        ))
    else:
        rows.append(HypothesisRow("Overall significance of the model", "F-statistic", None, "probability", None, False, "disabled"))

    report.diagnostics = diag
    report.hypothesis_table = rows
    failed = [r for r in rows if r.required and not r.accepted]
    report.verdict = "invalid" if failed else "valid"
    report.reasons = [
        f"{r.test}: {r.hypothesis.lower()} not accepted (result {_fmt(r.result)})" if r.accepted is False
        else f"{r.test}: not computed" for r in failed
    ]


def _fmt(v):
    return "n/a" if v is None else f"{v:.6f}"


def _row(hypothesis, test, outcome, accept, required) -> HypothesisRow:
    if outcome is None:
        return HypothesisRow(hypothesis, test, None, "probability", None, False, "disabled")
    return HypothesisRow(hypothesis, test, outcome.p_value, "probability", bool(accept(outcome)), required)


def _estimation_frame(ds: PanelDataset, fit: FitResult) -> PanelDataset:
    """Regressor columns restricted to the estimation rows."""
    cols = {}
    ent = {e: i for i, e in enumerate(ds.entities)}
    yr = {y: t for t, y in enumerate(ds.years)}
    rows = np.array([ent[fit.entities[i]] for i in fit.entity_index])
    tcol = np.array([yr[fit.years[t]] for t in fit.period_index])
    for j, name in enumerate(fit.slope_names):
        arr = np.full(ds.shape, np.nan)
        arr[rows, tcol] = fit.regressors[:, j]
        cols[name] = arr
    return PanelDataset(ds.entities, ds.years, cols)


# --- risk report ---------------------------------------------------------------------


@dataclass
class RiskAnalysisReport:
    split_year: int
    components: list[str]
    per_year_means: dict[str, dict[int, float]]
    subperiods: dict[str, descriptive.SubperiodSummary]
    rankings: dict[str, dict[str, dict[str, list[str]]]]
    volatility: dict[str, dict[str, float]]
    direction: dict[str, str]

    kind = "risk_report"

    def to_dict(self) -> dict:
        return {
            "split_year": self.split_year,
            "components": self.components,
            "per_year_means": {v: {str(y): m for y, m in d.items()} for v, d in self.per_year_means.items()},
            "subperiods": {v: s.to_dict() for v, s in self.subperiods.items()},
            "rankings": self.rankings,
            "volatility": self.volatility,
            "risk_direction": self.direction,
        }

    def csv_tables(self) -> dict[str, list[dict]]:
        return {
            "per_year_means": [
                {"variable": v, "year": y, "mean": m} for v, d in self.per_year_means.items() for y, m in d.items()
            ],
            "subperiods": [row for s in self.subperiods.values() for row in s.csv_rows()],
            "rankings": [
                {"variable": v, "period": p, "direction": dirn, "rank": i + 1, "entity": e}
                for v, per in self.rankings.items()
                for p, d in per.items()
                for dirn, ents in d.items()
                for i, e in enumerate(ents)
            ],
            "volatility": [{"variable": v, "measure": k, "value": x} for v, d in self.volatility.items() for k, x in d.items()],
        }


def load_meta(path) -> dict[str, VariableMeta]:
    """Variable metadata CSV with columns ``variable,scale_direction,index_max[,unit,source]``."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"variable", "scale_direction", "index_max"} <= set(reader.fieldnames):
            raise MetadataError(f"{path}: header must contain variable, scale_direction, index_max")
        for row in reader:
            name = row["variable"].strip()
            imax = row["index_max"].strip()
            try:
                out[name] = VariableMeta(
                    name,
                    unit=(row.get("unit") or "").strip(),
                    source=(row.get("source") or "").strip(),
                    scale_direction=ScaleDirection(row["scale_direction"].strip()),
                    index_max=float(imax) if imax else None,
                )
            except ValueError as exc:
                raise MetadataError(f"{path}: bad metadata for {name!r}: {exc}") from exc
    return out


def _direction_label(change: float, scale: ScaleDirection) -> str:
    if change == 0 or math.isnan(change):
        return "unchanged"
    if scale is ScaleDirection.NEUTRAL:
        return "index_increase" if change > 0 else "index_decrease"
    risk_up = change < 0 if scale is ScaleDirection.HIGHER_IS_BETTER else change > 0
    return "risk_increase" if risk_up else "risk_decrease"


def risk_report(
    dataset: PanelDataset,
    split_year: int,
    components: Sequence[str] | None = None,
    meta: dict[str, VariableMeta] | None = None,
    top_k: int = 3,
) -> RiskAnalysisReport:
    """Descriptive risk analytics for index variables."""
    if meta:
        for m in meta.values():
            if m.name in dataset.columns:
                dataset = dataset.with_meta(m)
    if components is None:
        components = [v for v in dataset.variables if dataset.meta[v].index_max is not None]
        if not components:
            raise MetadataError("no variable in the data carries index_max metadata")
    for v in components:
        if v not in dataset.columns:
            raise UnknownVariableError(f"unknown variable {v!r}")
        if dataset.meta[v].index_max is None:
            raise MetadataError(f"{v}: index_max metadata missing")
    means, subs, ranks, vols, dirn = {}, {}, {}, {}, {}
    for v in components:
        vals = dataset.values(v)
        present = ~np.isnan(vals).all(axis=0)
        means[v] = {y: float(np.nanmean(vals[:, t])) for t, y in enumerate(dataset.years) if present[t]}
        s = descriptive.subperiod_compare(dataset, v, split_year)
        subs[v] = s
        scale = dataset.meta[v].scale_direction
        k = min(top_k, len(s.per_entity))
        ranks[v] = {
            f"period{p}": {
                "best": descriptive.rank_entities(s, k, "best", scale, p),
                "worst": descriptive.rank_entities(s, k, "worst", scale, p),
            }
            for p in (1, 2)
        }
        (a1, b1), (a2, b2) = s.split
        vols[v] = {
            "aggregate_first": descriptive.volatility(dataset, v, "aggregate_first"),
            "pooled": descriptive.volatility(dataset, v, "pooled"),
            "period1_aggregate_first": descriptive.volatility(dataset, v, "aggregate_first", (a1, b1)),
            "period2_aggregate_first": descriptive.volatility(dataset, v, "aggregate_first", (a2, b2)),
            "period1_pooled": descriptive.volatility(dataset, v, "pooled", (a1, b1)),
            "period2_pooled": descriptive.volatility(dataset, v, "pooled", (a2, b2)),
        }
        dirn[v] = _direction_label(s.aggregate.delta, scale)
    return RiskAnalysisReport(split_year, list(components), means, subs, ranks, vols, dirn)
