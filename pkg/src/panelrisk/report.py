"""Serialization of reports to JSON, plain-text tables and long-format CSV."""

from __future__ import annotations

import csv
import io
import json
import math
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ValidationError

FORMATS = ("json", "text", "csv")
DECIMALS = 6


def clean(obj):
    """JSON-ready copy: floats rounded to 6 decimals, NaN/inf to ``None``."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        x = round(x, DECIMALS)
        return 0.0 if x == 0 else x
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    return obj


def to_json(report) -> str:
    data = report if isinstance(report, dict) else report.to_dict()
    return json.dumps(clean(data), sort_keys=True, indent=2, allow_nan=False) + "\n"


def num(x, width: int = 0) -> str:
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        s = "NA"
    elif isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        s = str(int(x))
    else:
        s = f"{float(x):.{DECIMALS}f}"
        if s.startswith("-") and float(s) == 0:
            s = s[1:]
    return s.rjust(width) if width else s


def _table(headers, rows, left: int = 1) -> list[str]:
    """Fixed-width table; the first ``left`` columns are left-aligned."""
    cells = [[str(h) for h in headers]] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[j]) for r in cells) for j in range(len(headers))]
    out = []
    for i, r in enumerate(cells):
        out.append("  ".join(c.ljust(widths[j]) if j < left else c.rjust(widths[j]) for j, c in enumerate(r)).rstrip())
        if i == 0:
            out.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    return out


def _fit_text(fit: dict) -> list[str]:
    lines = [
        f"Dependent Variable: {fit['dependent'].upper()}",
        f"Method: {fit['method']}",
    ]
    if fit["sample"]:
        lines.append(f"Sample (adjusted): {fit['sample'][0]} {fit['sample'][1]}")
    lines += [
        f"Periods included: {fit['periods']}",
        f"Cross-sections included: {fit['cross_sections']}",
        f"Total panel observations: {fit['observations']}",
        "",
    ]
    rows = [
        (c["name"].upper() if c["name"] != "C" else "C", num(c["estimate"]), num(c["std_error"]),
         num(c["t_statistic"]), num(c["p_value"]))
        for c in fit["coefficients"]
    ]
    lines += _table(("Variable", "Coefficient", "Std. Error", "t-Statistic", "Prob."), rows)
    if fit.get("fixed_effects"):
        lines += ["", "Fixed effects (cross-section)"]
        lines += _table(("Entity", "Effect"), [(e, num(v)) for e, v in fit["fixed_effects"].items()])
    ws = fit["weighted_statistics"]
    labels = (
        ("R-squared", "r_squared"), ("Adjusted R-squared", "adjusted_r_squared"),
        ("S.E. of regression", "se_of_regression"), ("Sum squared resid", "sum_squared_resid"),
        ("F-statistic", "f_statistic"), ("Prob(F-statistic)", "prob_f"),
        ("Durbin-Watson stat", "durbin_watson"), ("Mean dependent var", "mean_dep_var"),
        ("S.D. dependent var", "sd_dep_var"),
    )
    lines += ["", "Weighted Statistics"]
    lines += _table(("Statistic", "Value"), [(lab, num(ws.get(key))) for lab, key in labels])
    return lines


def _pipeline_text(d: dict) -> str:
    lines = ["PANEL ESTIMATION REPORT", "=" * 23, ""]
    s = d["sample"]
    if s:
        lines += [
            f"Sample: {s['years'][0]} {s['years'][1]}" if s.get("years") else "Sample: empty",
            f"Periods: {s['periods']}  Cross-sections: {s['cross_sections']}  Observations: {s['observations']}",
            f"Rows dropped in balancing: {s['adjustment']['dropped_rows']}",
            "",
        ]
    st = d.get("stationarity")
    if st:
        lines += ["Stationarity (p-values)"]
        cols = st["columns"]
        rows = [[var] + [_cell(st["grid"][var].get(c)) for c in cols] + [st["verdict"][var]] for var in st["grid"]]
        lines += _table(["Variable"] + cols + ["Verdict"], rows)
        for var, note in st["notes"].items():
            lines.append(f"  {var}: {note}")
        lines.append("")
    ms = d.get("method_selection") or {}
    if ms:
        lines.append("Method selection")
        for key in ("hausman", "redundant_fe"):
            o = ms.get(key)
            if o:
                dof = o["dof"] if o["dof"] is not None else ""
                lines.append(f"  {o['test']}: statistic {num(o['statistic'])}  dof {dof}  p {num(o['p_value'])}")
        lines += [f"  chosen: {ms.get('chosen')}", f"  rule: {ms.get('rule')}", ""]
    if d.get("estimation"):
        lines += _fit_text(d["estimation"]) + [""]
    if d.get("hypothesis_table"):
        lines.append("Checking the hypotheses for model validation")
        rows = [
            (r["hypothesis"], r["test"], num(r["result"]), r["accepted"] or "NA", "yes" if r["required"] else "no")
            for r in d["hypothesis_table"]
        ]
        lines += _table(("Hypothesis tested", "Test", "Probability / Result", "Accepted", "Required"), rows, left=2)
        notes = [f"  {r['test']}: {r['note']}" for r in d["hypothesis_table"] if r["note"]]
        lines += notes + [""]
    diag = d.get("diagnostics") or {}
    if diag.get("durbin_watson"):
        dw = diag["durbin_watson"]
        lines += [
            f"Durbin-Watson: {num(dw['statistic'])}  dL {num(dw['bounds'][0])}  dU {num(dw['bounds'][1])}  "
            f"region {dw['region']} ({dw['bounds_source']} bounds, {dw['mode']})",
            "",
        ]
    if diag.get("white"):
        w = diag["white"]
        lines += [
            f"White: n*R2 {num(w['n_times_r2'])}; reduced dof {w['dof']} critical {num(w['critical'])}; "
            f"standard dof {w['standard_dof']} critical {num(w['standard_critical'])} p {num(w['standard_p_value'])}",
            "",
        ]
    corr = (d.get("correlation") or {}).get("matrix")
    if corr:
        lines.append("Correlation matrix")
        vs = corr["variables"]
        lines += _table([""] + [v.upper() for v in vs], [[a.upper()] + [num(x) for x in row] for a, row in zip(vs, corr["entries"])])
        lines.append("")
    v = d.get("verdict") or {}
    lines.append(f"Verdict: {v.get('status')}")
    lines += [f"  - {r}" for r in v.get("reasons", [])]
    if d.get("warnings"):
        lines += ["", "Warnings"] + [f"  - {w}" for w in d["warnings"]]
    if d.get("failed_stage"):
        lines += ["", f"FAILED at stage: {d['failed_stage']}"]
    return "\n".join(lines) + "\n"


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return "error"
    return num(v)


def _risk_text(d: dict) -> str:
    lines = ["RISK ANALYSIS REPORT", "=" * 20, "", f"Split year: {d['split_year']}", ""]
    for var in d["components"]:
        lines.append(f"[{var}]  aggregate change: {d['risk_direction'][var]}")
        sub = d["subperiods"][var]
        (a1, b1), (a2, b2) = sub["split"]
        agg = sub["aggregate"]
        lines.append(
            f"  mean {a1}-{b1}: {num(agg['mean1'])}  mean {a2}-{b2}: {num(agg['mean2'])}  "
            f"delta {num(agg['delta'])}  pct {num(agg['pct'])}"
        )
        vol = d["volatility"][var]
        lines += ["  Volatility"] + ["    " + r for r in _table(("Measure", "SD"), [(k, num(x)) for k, x in vol.items()])]
        rows = [(e, num(c["mean1"]), num(c["mean2"]), num(c["delta"]), num(c["pct"])) for e, c in sub["per_entity"].items()]
        lines += ["  Entities"] + ["    " + r for r in _table(("Entity", "Mean 1", "Mean 2", "Delta", "Pct"), rows)]
        for p, dd in d["rankings"][var].items():
            lines.append(f"  {p}: best {', '.join(dd['best'])}; worst {', '.join(dd['worst'])}")
        years = d["per_year_means"][var]
        lines += ["  Yearly means"] + ["    " + r for r in _table(("Year", "Mean"), [(y, num(m)) for y, m in years.items()])]
        lines.append("")
    return "\n".join(lines)


def _table_text(d: dict) -> str:
    lines = [f"Critical values: {d['test_id']} N={d['n']} T={d['t']} {d['det']}"]
    lines += _table(("Level", "Quantile"), [(k, num(v)) for k, v in sorted(d["quantiles"].items())])
    lines += [
        f"replications {d['replications']}  seed {d['seed']}  max_lag {d['max_lag']}  generator {d['generator']}",
        f"mean {num(d['mean'])}  var {num(d['var'])}",
    ]
    for k, v in sorted(d.get("extra", {}).items()):
        lines.append(f"{k} {num(v)}")
    return "\n".join(lines) + "\n"


def to_text(report) -> str:
    d = clean(report.to_dict())
    kind = getattr(report, "kind", None)
    if kind == "pipeline":
        return _pipeline_text(d)
    if kind == "risk_report":
        return _risk_text(d)
    if "quantiles" in d:
        return _table_text(d)
    return json.dumps(d, sort_keys=True, indent=2) + "\n"


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    fields: list[str] = []
    for r in rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _csv_value(v) for k, v in clean(r).items()})
    return buf.getvalue()


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return num(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    return v


def csv_tables(report) -> dict[str, list[dict]]:
    if hasattr(report, "csv_tables"):
        return report.csv_tables()
    d = report.to_dict()
    return {"quantiles": [{"level": k, "quantile": v} for k, v in sorted(d["quantiles"].items())]}


def emit(report, formats, out_dir, stem: str | None = None) -> list[Path]:
    """Write ``report`` in each requested format; returns the written paths."""
    if isinstance(formats, str):
        formats = (formats,)
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise ValidationError(f"unknown format(s) {', '.join(bad)}; choose from {', '.join(FORMATS)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or getattr(report, "kind", None) or "critical_values"
    written = []
    for fmt in formats:
        if fmt == "json":
            p = out / f"{stem}.json"
            p.write_text(to_json(report), encoding="utf-8")
            written.append(p)
        elif fmt == "text":
            p = out / f"{stem}.txt"
            p.write_text(to_text(report), encoding="utf-8")
            written.append(p)
        else:
            for name, rows in csv_tables(report).items():
                p = out / f"{stem}_{name}.csv"
                p.write_text(_csv_text(rows), encoding="utf-8")
                written.append(p)
    return written
