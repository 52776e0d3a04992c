"""Panel dataset model, CSV ingestion and temporal transforms.

A :class:`PanelDataset` stores every variable as an ``(entities, years)``
float array with ``NaN`` as the missing marker, plus a boolean row mask
that records which entity-years survive sample adjustments. Datasets are
never mutated; every transform returns a new instance.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DomainError,
    DuplicateKeyError,
    EmptySampleError,
    IncompleteYearError,
    InsufficientDataError,
    SchemaError,
    UnknownVariableError,
    ZeroBaseError,
)

logger = logging.getLogger(__name__)

ANNUAL_HEADER = ("entity", "year", "variable", "value")
MONTHLY_HEADER = ("entity", "year", "month", "variable", "value")


class ScaleDirection(str, Enum):
    HIGHER_IS_BETTER = "higher_is_better"
    HIGHER_IS_WORSE = "higher_is_worse"
    NEUTRAL = "neutral"


class AnnualizePolicy(str, Enum):
    REQUIRE_COMPLETE = "require_complete"
    MEAN_OF_PRESENT = "mean_of_present"


@dataclass(frozen=True)
class VariableMeta:
    name: str
    unit: str = ""
    source: str = ""
    scale_direction: ScaleDirection = ScaleDirection.NEUTRAL
    index_max: float | None = None


# PRS Group risk ratings: 0 is the highest risk, index_max the lowest.
PRS_INDEX_MAX = {
    "finrisk": 50.0,
    "current_account": 15.0,
    "debt_service": 10.0,
    "exchange_rate": 10.0,
    "external_debt": 10.0,
    "liquidity": 5.0,
}


def default_meta(name: str) -> VariableMeta:
    if name in PRS_INDEX_MAX:
        return VariableMeta(
            name,
            unit="index (risk rating)",
            source="PRS Group",
            scale_direction=ScaleDirection.HIGHER_IS_BETTER,
            index_max=PRS_INDEX_MAX[name],
        )
    if name == "yrisk":
        return VariableMeta(
            name,
            unit="index (risk rating)",
            source="PRS Group",
            scale_direction=ScaleDirection.HIGHER_IS_BETTER,
        )
    return VariableMeta(name)


def lag_name(variable: str, k: int) -> str:
    """Display name of a lagged column, ``y(-1)`` style."""
    return f"{variable}(-{k})"


@dataclass(frozen=True)
class MonthlySeries:
    entity: str
    variable: str
    observations: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        seen = set()
        for year, month, _ in self.observations:
            if not 1 <= month <= 12:
                raise DomainError(f"month {month} outside 1..12 ({self.entity}, {self.variable}, {year})")
            if (year, month) in seen:
                raise DuplicateKeyError(
                    f"duplicate monthly observation ({self.entity!r}, {year}, {month}, {self.variable!r})"
                )
            seen.add((year, month))


@dataclass(frozen=True)
class AdjustmentLog:
    dropped_rows: int = 0
    per_entity: Mapping[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"dropped_rows": int(self.dropped_rows), "per_entity": dict(sorted(self.per_entity.items()))}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PanelDataset:
    entities: tuple[str, ...]
    years: tuple[int, ...]
    columns: Mapping[str, np.ndarray]
    meta: Mapping[str, VariableMeta] = field(default_factory=dict)
    mask: np.ndarray | None = None
    balanced: bool = False

    def __post_init__(self):
        entities = tuple(str(e) for e in self.entities)
        years = tuple(int(y) for y in self.years)
        if len(set(entities)) != len(entities):
            raise SchemaError("entity identifiers must be unique")
        if any(b - a != 1 for a, b in zip(years, years[1:])):
            raise SchemaError("years must be strictly increasing and contiguous")
        shape = (len(entities), len(years))
        cols = {}
        for name, values in self.columns.items():
            values = np.asarray(values, dtype=float)
            if values.shape != shape:
                raise SchemaError(f"column {name!r} has shape {values.shape}, expected {shape}")
            cols[name] = _frozen(values)
        mask = np.ones(shape, dtype=bool) if self.mask is None else np.array(self.mask, dtype=bool)
        if mask.shape != shape:
            raise SchemaError("row mask shape does not match the panel")
        mask.setflags(write=False)
        meta = {name: self.meta.get(name, default_meta(name)) for name in cols}
        object.__setattr__(self, "entities", entities)
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "meta", meta)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entities), len(self.years)

    @property
    def variables(self) -> list[str]:
        return list(self.columns)

    @property
    def n_rows(self) -> int:
        return int(self.mask.sum())

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    def values(self, name: str) -> np.ndarray:
        """The ``(entities, years)`` array of ``name``; excluded rows read as NaN."""
        if name not in self.columns:
            raise UnknownVariableError(f"unknown variable {name!r}")
        return np.where(self.mask, self.columns[name], np.nan)

    def series(self, entity: str, name: str) -> list[tuple[int, float]]:
        i = self.entities.index(entity)
        row = self.values(name)[i]
        return [(y, float(v)) for y, v in zip(self.years, row) if not math.isnan(v)]

    def with_column(self, name: str, values, meta: VariableMeta | None = None) -> PanelDataset:
        cols = dict(self.columns)
        cols[name] = values
        metas = dict(self.meta)
        metas[name] = meta or default_meta(name)
        return replace(self, columns=cols, meta=metas, balanced=False)

    def with_meta(self, meta: VariableMeta) -> PanelDataset:
        metas = dict(self.meta)
        metas[meta.name] = meta
        return replace(self, meta=metas)

    def restrict_years(self, start: int, end: int) -> PanelDataset:
        if start > end or end < self.years[0] or start > self.years[-1]:
            raise DomainError(f"sample {start}-{end} does not overlap {self.years[0]}-{self.years[-1]}")
        lo = max(start, self.years[0]) - self.years[0]
        hi = min(end, self.years[-1]) - self.years[0] + 1
        return PanelDataset(
            self.entities,
            self.years[lo:hi],
            {k: v[:, lo:hi] for k, v in self.columns.items()},
            self.meta,
            self.mask[:, lo:hi],
            self.balanced,
        )

    def long_rows(self) -> Iterable[tuple[str, int, str, float]]:
        for name in self.columns:
            vals = self.values(name)
            for i, ent in enumerate(self.entities):
                for t, year in enumerate(self.years):
                    if self.mask[i, t]:
                        yield ent, year, name, float(vals[i, t])


def _parse_float(text: str) -> tuple[float, bool]:
    """Return (value, parsed_ok); empty text is a clean missing marker."""
    text = text.strip()
    if text == "":
        return math.nan, True
    try:
        return float(text), True
    except ValueError:
        return math.nan, False


def _read_rows(path: Path, header: Sequence[str]) -> list[list[str]]:
    if not path.exists():
        raise SchemaError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {','.join(header)}") from None
        got = tuple(c.strip().lstrip("﻿") for c in first)
        if got != tuple(header):
            raise SchemaError(f"{path}: header {','.join(got)!r} does not match {','.join(header)!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(c.strip() == "" for c in row):
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append([lineno, *row])
        return rows


def _parse_int(text: str, what: str, path: Path, lineno: int) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise SchemaError(f"{path}:{lineno}: {what} {text!r} is not an integer") from None


def load_csv(path, layout: str = "annual_long"):
    """Load a long-format CSV.

    ``annual_long`` returns a :class:`PanelDataset`; ``monthly_long`` returns
    a list of :class:`MonthlySeries`, one per (entity, variable).
    """
    path = Path(path)
    if layout == "annual_long":
        return _load_annual(path)
    if layout == "monthly_long":
        return _load_monthly(path)
    raise SchemaError(f"unknown CSV layout {layout!r}")


def _load_annual(path: Path) -> PanelDataset:
    rows = _read_rows(path, ANNUAL_HEADER)
    cells: dict[tuple[str, int, str], float] = {}
    entities: dict[str, None] = {}
    variables: dict[str, None] = {}
    bad = 0
    for lineno, ent, year_txt, var, val_txt in rows:
        ent, var = ent.strip(), var.strip()
        year = _parse_int(year_txt, "year", path, lineno)
        key = (ent, year, var)
        if key in cells:
            raise DuplicateKeyError(f"{path}:{lineno}: duplicate cell (entity={ent!r}, year={year}, variable={var!r})")
        value, ok = _parse_float(val_txt)
        bad += not ok
        cells[key] = value
        entities.setdefault(ent)
        variables.setdefault(var)
    if bad:
        logger.warning("%s: %d unparseable numeric field(s) stored as missing", path, bad)
    if not cells:
        return PanelDataset((), (), {}, balanced=True)
    all_years = [k[1] for k in cells]
    years = tuple(range(min(all_years), max(all_years) + 1))
    ent_idx = {e: i for i, e in enumerate(entities)}
    shape = (len(entities), len(years))
    columns = {v: np.full(shape, np.nan) for v in variables}
    for (ent, year, var), value in cells.items():
        columns[var][ent_idx[ent], year - years[0]] = value
    complete = all(not np.isnan(c).any() for c in columns.values())
    return PanelDataset(tuple(entities), years, columns, balanced=complete)


def _load_monthly(path: Path) -> list[MonthlySeries]:
    rows = _read_rows(path, MONTHLY_HEADER)
    grouped: dict[tuple[str, str], dict[tuple[int, int], float]] = {}
    bad = 0
    for lineno, ent, year_txt, month_txt, var, val_txt in rows:
        ent, var = ent.strip(), var.strip()
        year = _parse_int(year_txt, "year", path, lineno)
        month = _parse_int(month_txt, "month", path, lineno)
        if not 1 <= month <= 12:
            raise SchemaError(f"{path}:{lineno}: month {month} outside 1..12")
        value, ok = _parse_float(val_txt)
        bad += not ok
        obs = grouped.setdefault((ent, var), {})
        if (year, month) in obs:
            raise DuplicateKeyError(
                f"{path}:{lineno}: duplicate cell (entity={ent!r}, year={year}, month={month}, variable={var!r})"
            )
        obs[(year, month)] = value
    if bad:
        logger.warning("%s: %d unparseable numeric field(s) stored as missing", path, bad)
    out = []
    for (ent, var), obs in grouped.items():
        present = tuple((y, m, v) for (y, m), v in sorted(obs.items()) if not math.isnan(v))
        out.append(MonthlySeries(ent, var, present))
    return out


def write_csv(dataset: PanelDataset, path) -> None:
    """Write ``dataset`` as annual_long CSV; every cell is emitted, missing as empty."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ANNUAL_HEADER)
        for name in dataset.columns:
            vals = dataset.values(name)
            for i, ent in enumerate(dataset.entities):
                for t, year in enumerate(dataset.years):
                    v = vals[i, t]
                    w.writerow([ent, year, name, "" if math.isnan(v) else repr(float(v))])


def annualize(series: MonthlySeries, policy: str = "require_complete") -> list[tuple[int, float]]:
    policy = AnnualizePolicy(policy)
    by_year: dict[int, list[float]] = {}
    for year, _, value in series.observations:
        by_year.setdefault(year, []).append(value)
    out = []
    for year in sorted(by_year):
        vals = by_year[year]
        if policy is AnnualizePolicy.REQUIRE_COMPLETE and len(vals) < 12:
            raise IncompleteYearError(
                f"{series.entity}/{series.variable}: year {year} has {len(vals)} of 12 months"
            )
        out.append((year, math.fsum(vals) / len(vals)))
    return out


def annualize_panel(
    monthly: Sequence[MonthlySeries], policy: str = "require_complete", base: PanelDataset | None = None
) -> PanelDataset:
    """Annualize every monthly series and merge the results into ``base``."""
    annual = {(s.entity, s.variable): dict(annualize(s, policy)) for s in monthly}
    entities = list(base.entities) if base is not None else []
    for ent, _ in annual:
        if ent not in entities:
            entities.append(ent)
    years_seen = [y for d in annual.values() for y in d]
    if base is not None:
        years_seen += list(base.years)
    if not years_seen:
        return base if base is not None else PanelDataset((), (), {})
    years = tuple(range(min(years_seen), max(years_seen) + 1))
    shape = (len(entities), len(years))
    columns: dict[str, np.ndarray] = {}
    if base is not None:
        i_off = 0
        t_off = base.years[0] - years[0] if base.years else 0
        for name, vals in base.columns.items():
            arr = np.full(shape, np.nan)
            arr[i_off : i_off + len(base.entities), t_off : t_off + len(base.years)] = vals
            columns[name] = arr
    for (ent, var), yearly in annual.items():
        if var in columns and base is not None and var in base.columns:
            logger.warning("monthly variable %r overrides annual column", var)
        arr = columns.setdefault(var, np.full(shape, np.nan))
        i = entities.index(ent)
        for year, value in yearly.items():
            arr[i, year - years[0]] = value
    meta = dict(base.meta) if base is not None else {}
    return PanelDataset(tuple(entities), years, columns, meta)


def lag(dataset: PanelDataset, variable: str, k: int) -> PanelDataset:
    if variable not in dataset.columns:
        raise UnknownVariableError(f"unknown variable {variable!r}")
    if k < 0 or k > len(dataset.years) - 1:
        raise DomainError(f"lag {k} outside 0..{len(dataset.years) - 1}")
    src = dataset.columns[variable]
    out = np.full(src.shape, np.nan)
    out[:, k:] = src[:, : src.shape[1] - k]
    base = dataset.meta[variable]
    return dataset.with_column(lag_name(variable, k), out, replace(base, name=lag_name(variable, k)))


def pct_change(series: Sequence[tuple[int, float]]) -> list[tuple[int, float]]:
    """Year-on-year percentage change; the first year has no output."""
    series = sorted(series)
    if len(series) < 2:
        raise InsufficientDataError("pct_change needs at least 2 observations")
    out = []
    for (_, prev), (year, cur) in zip(series, series[1:]):
        if prev == 0:
            raise ZeroBaseError(f"zero base value in the year before {year}")
        out.append((year, 100.0 * (cur - prev) / prev))
    return out


def balance(dataset: PanelDataset, variables: Sequence[str]) -> tuple[PanelDataset, AdjustmentLog]:
    """Drop entity-years with a missing value in any of ``variables``.

    Entities left without rows are removed and empty leading/trailing years
    are trimmed. The result is flagged balanced when every remaining entity
    covers the same years.
    """
    for v in variables:
        if v not in dataset.columns:
            raise UnknownVariableError(f"unknown variable {v!r}")
    ok = dataset.mask.copy()
    for v in variables:
        ok &= ~np.isnan(dataset.columns[v])
    dropped = dataset.mask & ~ok
    per_entity = {
        ent: int(dropped[i].sum()) for i, ent in enumerate(dataset.entities) if dropped[i].any()
    }
    if dataset.entities and not ok.any():
        raise EmptySampleError(f"no complete rows remain for {', '.join(variables)}")
    keep_e = ok.any(axis=1)
    keep_t = np.flatnonzero(ok.any(axis=0))
    lo, hi = (int(keep_t[0]), int(keep_t[-1]) + 1) if keep_t.size else (0, 0)
    new_mask = ok[keep_e][:, lo:hi]
    balanced = bool(new_mask.size == 0 or (new_mask == new_mask[:1]).all())
    result = PanelDataset(
        tuple(e for e, k in zip(dataset.entities, keep_e) if k),
        dataset.years[lo:hi],
        {name: vals[keep_e][:, lo:hi] for name, vals in dataset.columns.items()},
        dataset.meta,
        new_mask,
        balanced,
    )
    return result, AdjustmentLog(int(dropped.sum()), per_entity)
