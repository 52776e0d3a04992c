"""Risk volatility, sub-period comparison, rankings and correlation matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, InsufficientDataError, UndefinedCorrelationError, UnknownVariableError
from .panel import PanelDataset, ScaleDirection


def std_dev(values: Sequence[float]) -> float:
    """Sample standard deviation with the ``n - 1`` divisor."""
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise InsufficientDataError(f"std_dev needs n >= 2, got {x.size}")
    dev = x - x.mean()
    return math.sqrt(math.fsum(dev * dev) / (x.size - 1))


def volatility(dataset: PanelDataset, variable: str, mode: str = "aggregate_first", years=None) -> float:
    """Standard deviation of ``variable``.

    ``aggregate_first`` takes the cross-entity mean of each year and then the
    SD over years; ``pooled`` uses every entity-year observation.
    """
    vals = dataset.values(variable)
    if years is not None:
        lo, hi = years
        cols = [t for t, y in enumerate(dataset.years) if lo <= y <= hi]
        vals = vals[:, cols]
    if mode == "aggregate_first":
        present = ~np.isnan(vals).all(axis=0)
        return std_dev(np.nanmean(vals[:, present], axis=0))
    if mode == "pooled":
        return std_dev(vals[~np.isnan(vals)])
    raise DomainError(f"unknown volatility mode {mode!r}")


@dataclass(frozen=True)
class PeriodChange:
    mean1: float
    mean2: float
    delta: float
    pct: float

    def to_dict(self) -> dict:
        return {"mean1": self.mean1, "mean2": self.mean2, "delta": self.delta, "pct": self.pct}


def _change(m1: float, m2: float) -> PeriodChange:
    pct = 100.0 * (m2 - m1) / m1 if m1 != 0 else math.nan
    return PeriodChange(m1, m2, m2 - m1, pct)


@dataclass(frozen=True)
class SubperiodSummary:
    variable: str
    split: tuple[tuple[int, int], tuple[int, int]]
    per_entity: Mapping[str, PeriodChange]
    aggregate: PeriodChange
    weighting: str = "entity"

    def to_dict(self) -> dict:
        return {
            "variable": self.variable,
            "split": [list(self.split[0]), list(self.split[1])],
            "weighting": self.weighting,
            "per_entity": {e: c.to_dict() for e, c in self.per_entity.items()},
            "aggregate": self.aggregate.to_dict(),
        }

    def csv_rows(self) -> list[dict]:
        rows = [{"variable": self.variable, "entity": e, **c.to_dict()} for e, c in self.per_entity.items()]
        rows.append({"variable": self.variable, "entity": "__aggregate__", **self.aggregate.to_dict()})
        return rows


def subperiod_compare(
    dataset: PanelDataset, variable: str, split_year: int, weighting: str = "entity"
) -> SubperiodSummary:
    """Compare means over ``[start, split_year]`` and ``(split_year, end]``.

    The aggregate is the mean of entity means (``weighting="entity"``) or the
    pooled mean over all observations (``weighting="observation"``).
    """
    years = dataset.years
    if not years or not years[0] <= split_year < years[-1]:
        raise DomainError(f"split year {split_year} not strictly inside {years[0] if years else '?'}-{years[-1] if years else '?'}")
    vals = dataset.values(variable)
    cut = split_year - years[0] + 1
    first, second = vals[:, :cut], vals[:, cut:]
    per_entity = {}
    m1s, m2s = [], []
    for i, ent in enumerate(dataset.entities):
        a, b = first[i][~np.isnan(first[i])], second[i][~np.isnan(second[i])]
        if a.size == 0 or b.size == 0:
            continue
        m1, m2 = float(a.mean()), float(b.mean())
        per_entity[ent] = _change(m1, m2)
        m1s.append(m1)
        m2s.append(m2)
    if not per_entity:
        raise InsufficientDataError(f"{variable}: no entity has data in both sub-periods")
    if weighting == "entity":
        agg = _change(float(np.mean(m1s)), float(np.mean(m2s)))
    elif weighting == "observation":
        agg = _change(float(np.nanmean(first)), float(np.nanmean(second)))
    else:
        raise DomainError(f"unknown weighting {weighting!r}")
    split = ((years[0], split_year), (split_year + 1, years[-1]))
    return SubperiodSummary(variable, split, per_entity, agg, weighting)


def rank_entities(
    summary: SubperiodSummary,
    k: int,
    direction: str = "best",
    scale: ScaleDirection | str = ScaleDirection.HIGHER_IS_BETTER,
    period: int = 1,
) -> list[str]:
    """Top ``k`` entities by period mean.

    On a ``higher_is_better`` index (PRS ratings) the best entities have the
    highest means. ``neutral`` scales rank by raw value, highest first for
    ``best``. Ties break on the entity identifier.
    """
    scale = ScaleDirection(scale)
    n = len(summary.per_entity)
    if not 1 <= k <= n:
        raise DomainError(f"k={k} outside 1..{n}")
    if direction not in ("best", "worst"):
        raise DomainError(f"unknown direction {direction!r}")
    if period not in (1, 2):
        raise DomainError("period must be 1 or 2")

    def score(item):
        ent, change = item
        m = change.mean1 if period == 1 else change.mean2
        goodness = -m if scale is ScaleDirection.HIGHER_IS_WORSE else m
        return (-goodness if direction == "best" else goodness, ent)

    return [ent for ent, _ in sorted(summary.per_entity.items(), key=score)[:k]]


@dataclass(frozen=True)
class CorrelationMatrix:
    variables: tuple[str, ...]
    entries: np.ndarray

    def __getitem__(self, pair: tuple[str, str]) -> float:
        a, b = pair
        return float(self.entries[self.variables.index(a), self.variables.index(b)])

    def to_dict(self) -> dict:
        return {"variables": list(self.variables), "entries": self.entries.tolist()}

    def csv_rows(self) -> list[dict]:
        return [
            {"row": a, "column": b, "correlation": float(self.entries[i, j])}
            for i, a in enumerate(self.variables)
            for j, b in enumerate(self.variables)
        ]


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    dx, dy = x - x.mean(), y - y.mean()
    r = float(dx @ dy / math.sqrt((dx @ dx) * (dy @ dy)))
    return min(1.0, max(-1.0, r))


def pearson_corr_matrix(dataset: PanelDataset, variables: Sequence[str]) -> CorrelationMatrix:
    """Pairwise-complete Pearson correlations over the pooled entity-year sample."""
    data = {}
    for v in variables:
        if v not in dataset.columns:
            raise UnknownVariableError(f"unknown variable {v!r}")
        data[v] = dataset.values(v).ravel()
    for v, x in data.items():
        x = x[~np.isnan(x)]
        if x.size < 2:
            raise InsufficientDataError(f"{v}: fewer than 2 observations")
        if np.ptp(x) == 0:
            raise UndefinedCorrelationError(f"{v}: zero variance, correlation undefined")
    k = len(variables)
    out = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            x, y = data[variables[i]], data[variables[j]]
            both = ~np.isnan(x) & ~np.isnan(y)
            if both.sum() < 2:
                raise InsufficientDataError(f"{variables[i]}/{variables[j]}: fewer than 2 paired observations")
            xs, ys = x[both], y[both]
            if np.ptp(xs) == 0 or np.ptp(ys) == 0:
                name = variables[i] if np.ptp(xs) == 0 else variables[j]
                raise UndefinedCorrelationError(f"{name}: zero variance on the paired sample")
            out[i, j] = out[j, i] = _pearson(xs, ys)
    return CorrelationMatrix(tuple(variables), out)
