import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from panelrisk.errors import (
    DuplicateKeyError,
    EmptySampleError,
    IncompleteYearError,
    SchemaError,
    UnknownVariableError,
    ZeroBaseError,
)
from panelrisk.panel import (
    MonthlySeries,
    PanelDataset,
    annualize,
    annualize_panel,
    balance,
    lag,
    lag_name,
    load_csv,
    pct_change,
    write_csv,
)

from conftest import panel_from


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_annual_long(tmp_path):
    p = write(tmp_path, "entity,year,variable,value\nAUT,2000,finrisk,40\nAUT,2001,finrisk,41.5\nBEL,2000,finrisk,38\n")
    ds = load_csv(p)
    assert ds.entities == ("AUT", "BEL")
    assert ds.years == (2000, 2001)
    assert ds.values("finrisk")[0].tolist() == [40.0, 41.5]
    assert math.isnan(ds.values("finrisk")[1, 1])
    assert not ds.balanced


def test_complete_file_is_balanced(tmp_path):
    rows = ["entity,year,variable,value"]
    for e in ("A", "B"):
        for y in (2000, 2001, 2002):
            rows.append(f"{e},{y},x,{y - 1999}")
    ds = load_csv(write(tmp_path, "\n".join(rows) + "\n"))
    assert ds.balanced
    assert ds.n_rows == 6


def test_duplicate_cell_is_named(tmp_path):
    p = write(tmp_path, "entity,year,variable,value\nAUT,2000,finrisk,1\nAUT,2000,finrisk,2\n")
    with pytest.raises(DuplicateKeyError, match="AUT.*2000.*finrisk"):
        load_csv(p)


def test_bad_header(tmp_path):
    with pytest.raises(SchemaError):
        load_csv(write(tmp_path, "country,year,variable,value\nA,2000,x,1\n"))


def test_unparseable_value_is_missing(tmp_path, caplog):
    ds = load_csv(write(tmp_path, "entity,year,variable,value\nA,2000,x,abc\nA,2001,x,2\n"))
    assert math.isnan(ds.values("x")[0, 0])
    assert "unparseable" in caplog.text


def test_empty_file_gives_empty_panel(tmp_path):
    ds = load_csv(write(tmp_path, "entity,year,variable,value\n"))
    assert ds.entities == ()


def test_csv_round_trip(tmp_path):
    ds = panel_from({"x": np.arange(6.0).reshape(2, 3) / 7, "y": np.ones((2, 3))})
    p = tmp_path / "rt.csv"
    write_csv(ds, p)
    back = load_csv(p)
    assert np.array_equal(back.values("x"), ds.values("x"))


def test_annualize_require_complete():
    s = MonthlySeries("A", "x", tuple((2000, m, float(m)) for m in range(1, 13)))
    assert annualize(s) == [(2000, 6.5)]
    short = MonthlySeries("A", "x", tuple((2000, m, 1.0) for m in range(1, 12)))
    with pytest.raises(IncompleteYearError):
        annualize(short)
    assert annualize(short, "mean_of_present") == [(2000, 1.0)]


def test_annualize_panel_merges_into_base():
    base = panel_from({"y": [[1.0, 2.0]]}, entities=("A",), years=(2000, 2001))
    s = MonthlySeries("A", "m", tuple((2001, k, 3.0) for k in range(1, 13)))
    ds = annualize_panel([s], base=base)
    assert ds.values("m")[0, 1] == 3.0
    assert math.isnan(ds.values("m")[0, 0])


def test_lag_hand_shift():
    ds = panel_from({"x": [[3.0, 5.0]]}, years=(2000, 2001))
    out = lag(ds, "x", 1).values(lag_name("x", 1))
    assert math.isnan(out[0, 0]) and out[0, 1] == 3.0


def test_lag_unknown_variable():
    with pytest.raises(UnknownVariableError):
        lag(panel_from({"x": [[1.0, 2.0]]}), "z", 1)


@settings(max_examples=30, deadline=None)
@given(a=st.integers(0, 3), b=st.integers(0, 3), seed=st.integers(0, 10_000))
def test_lag_composes(a, b, seed):
    x = np.random.default_rng(seed).normal(size=(3, 8))
    ds = panel_from({"x": x})
    twice = lag(lag(ds, "x", a), lag_name("x", a), b).values(lag_name(lag_name("x", a), b))
    once = lag(ds, "x", a + b).values(lag_name("x", a + b))
    both = ~np.isnan(twice) & ~np.isnan(once)
    assert np.array_equal(np.isnan(twice), np.isnan(once))
    assert np.array_equal(twice[both], once[both])


def test_pct_change():
    # Hand computation: 100 * (106.65 - 100) / 100.
    assert pct_change([(2000, 100.0), (2001, 106.65)]) == [(2001, pytest.approx(6.65, abs=1e-9))]
    with pytest.raises(ZeroBaseError):
        pct_change([(2000, 0.0), (2001, 1.0)])


def test_balance_after_one_year_lag_gives_285_rows():
    x = np.random.default_rng(0).normal(size=(15, 20))
    ds = lag(PanelDataset(tuple(f"E{i}" for i in range(15)), tuple(range(1995, 2015)), {"x": x, "y": x}), "x", 1)
    out, log = balance(ds, ["y", "x(-1)"])
    assert out.n_rows == 285
    assert out.years == tuple(range(1996, 2015))
    assert out.balanced
    assert log.dropped_rows == 15


def test_balance_drops_entity_without_data():
    x = np.ones((3, 4))
    z = x.copy()
    z[1] = np.nan
    out, log = balance(panel_from({"x": x, "z": z}), ["x", "z"])
    assert out.entities == ("E0", "E2")
    assert log.per_entity == {"E1": 4}


def test_balance_flags_ragged_panel():
    x = np.ones((2, 4))
    x[0, 1] = np.nan
    out, _ = balance(panel_from({"x": x}), ["x"])
    assert not out.balanced
    assert out.n_rows == 7


def test_balance_empty_sample():
    with pytest.raises(EmptySampleError):
        balance(panel_from({"x": np.full((2, 3), np.nan)}), ["x"])


def test_dataset_is_immutable():
    ds = panel_from({"x": np.zeros((2, 2))})
    with pytest.raises(ValueError):
        ds.columns["x"][0, 0] = 1.0
