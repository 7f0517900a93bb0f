"""Deterministic serialization of a series' recent model trail into text.

The narrative is produced in two stages: structured facts are read off the
assignment matrix, then rendered through a fixed template. Identical inputs
give byte-identical text; snapshot tests pin the template via
``TEMPLATE_VERSION``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from . import errors
from .data import TimeGrid
from .depgraph import TemporalGraph
from .identify import AssignmentMatrix, ModelLibrary

TEMPLATE_VERSION = "template_v1"
MAX_CO_ASSIGNED = 20


@dataclass(frozen=True)
class Fact:
    interval: int
    model_id: int
    co_assigned_series_ids: tuple[str, ...]
    co_assigned_overflow: int  # count beyond the listed ids
    switched: Optional[bool]   # None when there is no prior interval
    previous_model: Optional[int]


@dataclass(frozen=True)
class Narrative:
    series_id: str
    window: tuple[int, int]
    text: str
    facts: tuple[Fact, ...]
    template_version: str = TEMPLATE_VERSION


def _interval_label(j: int, grid: Optional[TimeGrid], timestamps) -> str:
    if grid is None:
        return f"T{j}"
    lo, hi = grid.window(j)
    if timestamps is not None:
        return f"T{j} ({timestamps[lo]} to {timestamps[hi - 1]})"
    return f"T{j} (timestamps {lo}..{hi - 1})"


def serialize(
    series_index: int,
    at_j: int,
    q: int,
    graph: TemporalGraph,
    assignments: AssignmentMatrix,
    library: ModelLibrary,
    series_ids: Sequence[str],
    grid: Optional[TimeGrid] = None,
    timestamps: Optional[Sequence[str]] = None,
) -> Narrative:
    """Narrative of the q intervals before ``at_j`` for one series, ending in
    the question of which model governs the series at ``at_j``.

    ``at_j`` may be one past the last assigned interval (the forecasting
    case); history must reach back q intervals.
    """
    n, m = assignments.n, assignments.m
    if not (0 <= series_index < n):
        raise errors.IndexOutOfRange(f"series index {series_index} outside [0, {n})")
    if not (2 <= at_j <= m + 1):
        raise errors.IndexOutOfRange(f"interval {at_j} outside [2, {m + 1}]")
    if q < 1:
        raise ValueError("q must be >= 1")
    if at_j - q < 1:
        raise errors.InsufficientHistory(
            f"window of {q} intervals before T{at_j} reaches before T1"
        )
    entries = assignments.entries
    sid = series_ids[series_index]
    facts = []
    for jj in range(at_j - q, at_j):
        model_id = int(entries[series_index, jj - 1])
        co = sorted(
            series_ids[i]
            for i in range(n)
            if i != series_index and entries[i, jj - 1] == model_id
        )
        overflow = max(0, len(co) - MAX_CO_ASSIGNED)
        if jj == 1:
            switched, prev = None, None
        else:
            prev = int(entries[series_index, jj - 2])
            switched = prev != model_id
        facts.append(
            Fact(
                interval=jj,
                model_id=model_id,
                co_assigned_series_ids=tuple(co[:MAX_CO_ASSIGNED]),
                co_assigned_overflow=overflow,
                switched=switched,
                previous_model=prev,
            )
        )

    lines = []
    for fact in facts:
        if fact.co_assigned_series_ids:
            listed = ", ".join(fact.co_assigned_series_ids)
            if fact.co_assigned_overflow:
                listed += f" (and {fact.co_assigned_overflow} more)"
        else:
            listed = "no other series"
        sentence = (
            f"During interval {_interval_label(fact.interval, grid, timestamps)}, "
            f"series {sid} was approximated by model {fact.model_id}; "
            f"the same model also approximated: {listed}."
        )
        if fact.switched is None:
            pass
        elif fact.switched:
            sentence += (
                f" It switched from model {fact.previous_model} "
                f"to model {fact.model_id}."
            )
        else:
            sentence += f" It remained governed by model {fact.model_id}."
        lines.append(sentence)
    lines.append(
        f"Which model will approximate series {sid} at interval T{at_j}? "
        f"Answer 'no' if the current model persists, otherwise 'yes, model <id>'."
    )
    return Narrative(
        series_id=sid,
        window=(at_j - q, at_j - 1),
        text="\n".join(lines),
        facts=tuple(facts),
    )
