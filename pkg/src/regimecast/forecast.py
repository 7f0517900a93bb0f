"""Closed-loop value forecasting and holdout evaluation.

Each forecast interval asks the selector for the governing model, then rolls
that model's recursion forward by one stride of new timestamps. Predicted
values and a synthetically extended assignment column feed the next step, so
the rollout never peeks at held-out truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import errors
from .armodel import generate
from .data import SeriesSet, TimeGrid, build_grid
from .depgraph import TemporalGraph, build_graph
from .identify import AssignmentMatrix, ClusterConfig, ModelLibrary, track
from .select import SelectorContext, SelectorDecision


@dataclass(frozen=True)
class ForecastResult:
    series_id: str
    model_trail: tuple[tuple[int, int, str], ...]  # (interval, model id, source)
    values: np.ndarray
    horizon_intervals: int


@dataclass(frozen=True)
class EvalReport:
    per_series: dict[str, dict[str, float]]
    aggregate: dict[str, float]
    holdout_length: int

    def to_json(self) -> dict:
        return {
            "per_series": self.per_series,
            "aggregate": self.aggregate,
            "holdout_length": self.holdout_length,
        }

    def csv_rows(self) -> list[list]:
        rows = [["series", "mae", "mse", "mape", "skipped_mape_points"]]
        for sid, metrics in self.per_series.items():
            rows.append([
                sid,
                metrics["mae"],
                metrics["mse"],
                metrics["mape"],
                metrics["skipped_mape_points"],
            ])
        return rows


def _check_pair(truth, pred) -> tuple[np.ndarray, np.ndarray]:
    truth = np.asarray(truth, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if truth.shape != pred.shape or truth.ndim != 1:
        raise errors.LengthMismatch(f"shapes {truth.shape} vs {pred.shape}")
    if truth.size == 0:
        raise errors.EmptyInput("empty sequences")
    return truth, pred


def mae(truth, pred) -> float:
    truth, pred = _check_pair(truth, pred)
    return float(np.mean(np.abs(truth - pred)))


def mse(truth, pred) -> float:
    truth, pred = _check_pair(truth, pred)
    return float(np.mean((truth - pred) ** 2))


def mape_detail(truth, pred) -> tuple[float, int]:
    """Mean absolute percentage error as a fraction, skipping zero-truth
    points; returns (value, number of skipped points)."""
    truth, pred = _check_pair(truth, pred)
    mask = truth != 0
    skipped = int(np.sum(~mask))
    if not np.any(mask):
        raise errors.EmptyInput("all truth values are zero; MAPE undefined")
    value = float(np.mean(np.abs(truth[mask] - pred[mask]) / np.abs(truth[mask])))
    return value, skipped


def mape(truth, pred) -> float:
    return mape_detail(truth, pred)[0]


def _extend(assignments: AssignmentMatrix, column: np.ndarray) -> AssignmentMatrix:
    pad = np.zeros((assignments.n, 1))
    return AssignmentMatrix(
        entries=np.column_stack([assignments.entries, column.astype(int)]),
        fit_errors=np.column_stack([assignments.fit_errors, pad]),
        eps_bounds=np.column_stack([assignments.eps_bounds, pad]),
    )


def forecast_series(
    series_index: int,
    horizon_intervals: int,
    selector,
    library: ModelLibrary,
    assignments: AssignmentMatrix,
    sset: SeriesSet,
    grid: TimeGrid,
    q: int = 5,
) -> ForecastResult:
    """Roll the selector plus AR generation forward ``horizon_intervals``
    intervals; each interval contributes ``stride`` new values.

    Series other than the target are extended by persistence in the synthetic
    assignment columns, so later windows still have a full graph to narrate.
    """
    if horizon_intervals < 0:
        raise ValueError("horizon_intervals must be nonnegative")
    history = list(sset.values[series_index])
    extended = assignments
    trail: list[tuple[int, int, str]] = []
    values: list[float] = []
    for _ in range(horizon_intervals):
        at_j = extended.m + 1
        ctx = SelectorContext(
            graph=build_graph(extended),
            assignments=extended,
            library=library,
            series_ids=sset.series_ids,
            q=q,
            grid=grid,
            timestamps=sset.timestamps,
        )
        decision: SelectorDecision = selector.decide(series_index, at_j, ctx)
        trail.append((at_j, decision.model_id, decision.source))
        model = library.models[decision.model_id]
        step = generate(model, history[-model.lag:], grid.stride)
        values.extend(step.tolist())
        history.extend(step.tolist())
        column = extended.entries[:, -1].copy()
        column[series_index] = decision.model_id
        extended = _extend(extended, column)
    return ForecastResult(
        series_id=sset.series_ids[series_index],
        model_trail=tuple(trail),
        values=np.array(values, dtype=float),
        horizon_intervals=horizon_intervals,
    )


def _series_metrics(truth, pred) -> dict[str, float]:
    out = {"mae": mae(truth, pred), "mse": mse(truth, pred)}
    try:
        value, skipped = mape_detail(truth, pred)
    except errors.EmptyInput:
        value, skipped = math.nan, len(truth)
    out["mape"] = value
    out["skipped_mape_points"] = skipped
    return out


def evaluate_forecasts(
    truths: Sequence[np.ndarray],
    preds: Sequence[np.ndarray],
    series_ids: Sequence[str],
    holdout: int,
) -> EvalReport:
    """Score per-series forecasts and macro-average across series."""
    per_series = {
        sid: _series_metrics(t, p) for sid, t, p in zip(series_ids, truths, preds)
    }
    aggregate = {}
    for key in ("mae", "mse", "mape"):
        vals = [m[key] for m in per_series.values() if not math.isnan(m[key])]
        aggregate[key] = float(np.mean(vals)) if vals else math.nan
    return EvalReport(per_series=per_series, aggregate=aggregate, holdout_length=holdout)


def holdout_eval(
    sset: SeriesSet,
    cfg: ClusterConfig,
    interval_length: int,
    stride: int,
    selector,
    holdout: int = 45,
    q: int = 5,
) -> tuple[EvalReport, ModelLibrary, AssignmentMatrix]:
    """Withhold the last ``holdout`` points, identify on the rest, forecast
    closed-loop over the holdout, and score every series."""
    N = sset.length
    train_len = N - holdout
    if train_len < interval_length or holdout < 1:
        raise errors.TooShort(
            f"holdout {holdout} leaves {train_len} training points, "
            f"need at least {interval_length}"
        )
    train = SeriesSet(
        series_ids=sset.series_ids,
        values=sset.values[:, :train_len],
        timestamps=None if sset.timestamps is None else tuple(sset.timestamps[:train_len]),
    )
    grid = build_grid(train_len, interval_length, stride)
    library, assignments = track(train, grid, cfg)
    horizon = math.ceil(holdout / stride)
    truths, preds = [], []
    for i in range(sset.n):
        result = forecast_series(
            i, horizon, selector, library, assignments, train, grid, q=q
        )
        preds.append(result.values[:holdout])
        truths.append(sset.values[i, train_len: train_len + holdout])
    report = evaluate_forecasts(truths, preds, sset.series_ids, holdout)
    return report, library, assignments
