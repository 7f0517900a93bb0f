"""Next-model selection: decide whether a series switches models and which
model governs it next.

Two interchangeable selectors: an offline baseline that argmaxes over the
transitions observed in the temporal graph, and a remote chat-completion
client that reasons over the serialized narrative. Every decision satisfies
``switch == (model_id != current model)``.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import requests

from . import errors
from .data import TimeGrid
from .depgraph import TemporalGraph, transition_counts
from .identify import AssignmentMatrix, ModelLibrary
from .narrate import Narrative, serialize

SYSTEM_INSTRUCTION = (
    "You are selecting which autoregressive model from a fixed library will "
    "govern a time series at the next interval, based on a narrative of its "
    "recent model trail and co-assigned series. Reply exactly 'no' if the "
    "current model persists, otherwise reply exactly 'yes, model <id>'."
)


@dataclass(frozen=True)
class SelectorDecision:
    switch: bool
    model_id: int
    source: str  # "baseline" | "remote" | "fallback" | "forced"
    rationale: Optional[str] = None


@dataclass(frozen=True)
class SelectorEndpointConfig:
    base_url: str
    model_name: str
    api_key_env_var: str = "SELECTOR_API_KEY"
    timeout: float = 30.0
    max_retries: int = 2
    mode: str = "zero_shot"  # or "exemplar_few_shot"
    fallback_to_baseline: bool = True
    backoff_base: float = 1.0  # first retry delay, doubled per attempt

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.mode not in ("zero_shot", "exemplar_few_shot"):
            raise ValueError(f"unknown mode {self.mode!r}")


def baseline_decide(
    series_index: int,
    at_j: int,
    graph: TemporalGraph,
    assignments: AssignmentMatrix,
) -> SelectorDecision:
    """First-order Markov argmax over transitions observed before ``at_j``.

    The predicted model is the most frequent successor of the series' current
    model; ties go to the lowest id, and a never-before-seen source model
    predicts persistence.
    """
    if at_j < 2:
        raise errors.IndexOutOfRange(f"need at_j >= 2, got {at_j}")
    if at_j - 1 > assignments.m:
        raise errors.IndexOutOfRange(
            f"current interval {at_j - 1} beyond assignment matrix ({assignments.m})"
        )
    current = int(assignments.entries[series_index, at_j - 2])
    upto = min(at_j - 1, graph.n_states)
    predicted = current
    if upto >= 1:
        counts = transition_counts(graph, upto)
        outgoing = {nu: c for (mu, nu), c in counts.items() if mu == current}
        if outgoing:
            best = max(sorted(outgoing), key=lambda nu: outgoing[nu])
            predicted = best
    return SelectorDecision(
        switch=predicted != current, model_id=predicted, source="baseline"
    )


_FENCE = re.compile(r"^```[a-zA-Z]*\n?|\n?```$")
_NO = re.compile(r"^no[.!]?$", re.IGNORECASE)
_YES = re.compile(r"^yes,?\s+model\s+(\d+)[.!]?$", re.IGNORECASE)


def parse_reply(text: str, current_model: int, library_size: int) -> SelectorDecision:
    """Parse a selector reply: 'no' keeps the current model, 'yes, model k'
    switches to model k. Anything else is a ParseFailure."""
    cleaned = text.strip()
    cleaned = _FENCE.sub("", cleaned).strip()
    if _NO.match(cleaned):
        return SelectorDecision(switch=False, model_id=current_model, source="remote")
    match = _YES.match(cleaned)
    if match:
        model_id = int(match.group(1))
        if not (0 <= model_id < library_size):
            raise errors.OutOfRangeModel(model_id, library_size)
        return SelectorDecision(
            switch=model_id != current_model, model_id=model_id, source="remote"
        )
    raise errors.ParseFailure(text)


def build_messages(
    narrative: Narrative,
    exemplars: Optional[Sequence[tuple[str, str]]] = None,
) -> list[dict]:
    messages = [{"role": "system", "content": SYSTEM_INSTRUCTION}]
    for prompt, answer in exemplars or ():
        messages.append({"role": "user", "content": prompt})
        messages.append({"role": "assistant", "content": answer})
    messages.append({"role": "user", "content": narrative.text})
    return messages


def remote_decide(
    narrative: Narrative,
    current_model: int,
    library_size: int,
    cfg: SelectorEndpointConfig,
    exemplars: Optional[Sequence[tuple[str, str]]] = None,
    fallback_context: Optional[tuple[int, int, TemporalGraph, AssignmentMatrix]] = None,
    _sleep=time.sleep,
) -> SelectorDecision:
    """Ask a chat-completion endpoint which model governs the series next.

    Transient transport failures are retried with exponential backoff; once
    retries are exhausted the baseline decision is returned (source
    'fallback') when configured and possible, otherwise Transport is raised.
    Parse failures are never silently recovered.
    """
    if cfg.mode == "exemplar_few_shot" and not exemplars:
        raise ValueError("exemplar_few_shot mode requires exemplars")
    body = {
        "model": cfg.model_name,
        "messages": build_messages(
            narrative, exemplars if cfg.mode == "exemplar_few_shot" else None
        ),
        "temperature": 0,
    }
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(cfg.api_key_env_var)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    last_error: Optional[Exception] = None
    for attempt in range(cfg.max_retries + 1):
        if attempt > 0:
            _sleep(cfg.backoff_base * 2 ** (attempt - 1))
        try:
            resp = requests.post(
                cfg.base_url, json=body, headers=headers, timeout=cfg.timeout
            )
            if resp.status_code >= 400:
                last_error = errors.Transport(
                    f"endpoint returned HTTP {resp.status_code}"
                )
                continue
            payload = resp.json()
            reply = payload["choices"][0]["message"]["content"]
        except errors.RegimecastError:
            continue
        except (requests.RequestException, json.JSONDecodeError, KeyError,
                IndexError, TypeError) as exc:
            last_error = exc
            continue
        return parse_reply(reply, current_model, library_size)
    if cfg.fallback_to_baseline and fallback_context is not None:
        series_index, at_j, graph, assignments = fallback_context
        decision = baseline_decide(series_index, at_j, graph, assignments)
        return SelectorDecision(
            switch=decision.switch,
            model_id=decision.model_id,
            source="fallback",
            rationale=f"transport failure: {last_error}",
        )
    raise errors.Transport(f"endpoint unreachable after retries: {last_error}")


def build_exemplars(
    graph: TemporalGraph,
    assignments: AssignmentMatrix,
    library: ModelLibrary,
    series_ids: Sequence[str],
    q: int,
    count: int = 8,
    exclude_series: Optional[int] = None,
) -> list[tuple[str, str]]:
    """Labeled (narrative, answer) pairs taken from observed trajectories,
    for exemplar few-shot prompting. Deterministic: earliest series and
    intervals first."""
    exemplars: list[tuple[str, str]] = []
    m = assignments.m
    for i in range(assignments.n):
        if i == exclude_series:
            continue
        for at_j in range(q + 1, m + 1):
            narrative = serialize(
                i, at_j, q, graph, assignments, library, series_ids
            )
            current = int(assignments.entries[i, at_j - 2])
            actual = int(assignments.entries[i, at_j - 1])
            answer = "no" if actual == current else f"yes, model {actual}"
            exemplars.append((narrative.text, answer))
            if len(exemplars) == count:
                return exemplars
    return exemplars


# --- selector objects used by the forecaster ---------------------------------

@dataclass
class SelectorContext:
    """Frozen pipeline state a selector may consult for one decision."""

    graph: TemporalGraph
    assignments: AssignmentMatrix
    library: ModelLibrary
    series_ids: Sequence[str]
    q: int
    grid: Optional["TimeGrid"] = None
    timestamps: Optional[Sequence[str]] = None


class BaselineSelector:
    name = "baseline"

    def decide(self, series_index: int, at_j: int, ctx: SelectorContext) -> SelectorDecision:
        return baseline_decide(series_index, at_j, ctx.graph, ctx.assignments)


class PersistenceSelector:
    """Always answers 'no'; the closed-loop sanity selector."""

    name = "persistence"

    def decide(self, series_index: int, at_j: int, ctx: SelectorContext) -> SelectorDecision:
        current = int(ctx.assignments.entries[series_index, at_j - 2])
        return SelectorDecision(switch=False, model_id=current, source="forced")


class ForcedSelector:
    """Replays a known schedule; used to isolate value forecasting from
    model selection in tests."""

    name = "forced"

    def __init__(self, schedule):
        # schedule[series_index][at_j] -> model id (at_j 1-based)
        self._schedule = schedule

    def decide(self, series_index: int, at_j: int, ctx: SelectorContext) -> SelectorDecision:
        current = int(ctx.assignments.entries[series_index, at_j - 2])
        model_id = int(self._schedule[series_index][at_j])
        return SelectorDecision(
            switch=model_id != current, model_id=model_id, source="forced"
        )


class RemoteSelector:
    name = "remote"

    def __init__(
        self,
        cfg: SelectorEndpointConfig,
        exemplars: Optional[Sequence[tuple[str, str]]] = None,
    ):
        self.cfg = cfg
        self.exemplars = exemplars

    def decide(self, series_index: int, at_j: int, ctx: SelectorContext) -> SelectorDecision:
        q = min(ctx.q, at_j - 1)
        narrative = serialize(
            series_index, at_j, q, ctx.graph, ctx.assignments, ctx.library,
            ctx.series_ids, grid=ctx.grid, timestamps=ctx.timestamps,
        )
        current = int(ctx.assignments.entries[series_index, at_j - 2])
        return remote_decide(
            narrative,
            current,
            ctx.library.size,
            self.cfg,
            exemplars=self.exemplars,
            fallback_context=(series_index, at_j, ctx.graph, ctx.assignments),
        )
