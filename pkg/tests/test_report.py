import json
import math
import re

import numpy as np
import pytest

from panelrisk import report
from panelrisk.errors import ValidationError
from panelrisk.panel import write_csv
from panelrisk.pipeline import PipelineConfig, risk_report, run_pipeline
from panelrisk.simulation import simulate_critical_values

from conftest import RISK_FORMULA, panel_from, country_panel


@pytest.fixture(scope="module")
def pipeline_report(tmp_path_factory):
    d = tmp_path_factory.mktemp("rep")
    write_csv(country_panel(seed=3), d / "data.csv")
    cfg = PipelineConfig(formula=RISK_FORMULA, annual_path=d / "data.csv", replications=1000, seed=5)
    return run_pipeline(cfg)


def json_numbers(obj, out=None):
    out = set() if out is None else out
    if isinstance(obj, dict):
        for v in obj.values():
            json_numbers(v, out)
    elif isinstance(obj, list):
        for v in obj:
            json_numbers(v, out)
    elif isinstance(obj, float):
        out.add(f"{obj:.6f}")
    return out


def test_num_formatting():
    assert report.num(0.5361029) == "0.536103"
    assert report.num(-1e-9) == "0.000000"
    assert report.num(float("nan")) == "NA"
    assert report.num(None) == "NA"
    assert report.num(7) == "7"
    assert report.num(2.0, 10) == "  2.000000"


def test_clean_rounds_and_nulls():
    d = report.clean({"a": 1.23456789, "b": float("nan"), "c": [np.float64(-0.0000001), np.int64(3)], "d": np.bool_(True)})
    assert d == {"a": 1.234568, "b": None, "c": [0.0, 3], "d": True}
    json.dumps(d, allow_nan=False)


def test_json_is_byte_identical(pipeline_report):
    assert report.to_json(pipeline_report) == report.to_json(pipeline_report)
    text = report.to_json(pipeline_report)
    assert json.loads(text)["method_selection"]["chosen"] == "fixed"
    assert "NaN" not in text


def test_text_numbers_come_from_json(pipeline_report):
    data = json.loads(report.to_json(pipeline_report))
    allowed = json_numbers(data)
    shown = set(re.findall(r"-?\d+\.\d{6}\b", report.to_text(pipeline_report)))
    assert shown
    assert shown <= allowed, sorted(shown - allowed)[:5]


def test_text_has_regression_output_sections(pipeline_report):
    text = report.to_text(pipeline_report)
    for heading in ("Dependent Variable: Y", "Weighted Statistics", "Checking the hypotheses for model validation",
                    "Verdict:"):
        assert heading in text


def test_emit_writes_all_formats(tmp_path, pipeline_report):
    paths = report.emit(pipeline_report, ("json", "text", "csv"), tmp_path)
    names = {p.name for p in paths}
    assert {"pipeline.json", "pipeline.txt", "pipeline_coefficients.csv", "pipeline_hypothesis_table.csv"} <= names
    header = (tmp_path / "pipeline_coefficients.csv").read_text().splitlines()[0]
    assert "estimate" in header


def test_emit_rejects_unknown_format(tmp_path, pipeline_report):
    with pytest.raises(ValidationError):
        report.emit(pipeline_report, ("xml",), tmp_path)
    assert not list(tmp_path.iterdir())


def test_risk_report_outputs(tmp_path):
    ds = panel_from({"finrisk": [[40, 40, 42, 42], [30, 30, 27, 27]]}, entities=("A", "B"), years=(2000, 2001, 2002, 2003))
    rep = risk_report(ds, 2001)
    text = report.to_text(rep)
    assert "aggregate change: risk_increase" in text
    assert "34.500000" in text
    paths = report.emit(rep, ("json", "csv"), tmp_path)
    assert json.loads(paths[0].read_text())["risk_direction"] == {"finrisk": "risk_increase"}
    assert any(p.name == "risk_report_volatility.csv" for p in paths)


def test_critical_value_table_text():
    t = simulate_critical_values("adf", 1, 30, replications=1000, seed=4)
    text = report.to_text(t)
    assert text.startswith("Critical values: adf N=1 T=30 constant_only")
    assert report.num(t.quantiles["0.05"]) in text
    assert math.isfinite(json.loads(report.to_json(t))["mean"])
