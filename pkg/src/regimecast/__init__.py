"""Interpretable forecasting of co-evolving time series.

Pipeline: segment synchronized series on a sliding interval grid, fit
interval-local AR models, cluster them into a reusable library, track model
reuse into a temporal dependency graph, serialize recent transitions into
narratives, and forecast by predicting which model governs each series next.
"""

from .armodel import ARModel, fit_ar, generate, score
from .data import SeriesSet, TimeGrid, auto_segment, build_grid, load_csv, slice_segment
from .depgraph import TemporalGraph, build_graph, transition_counts
from .forecast import ForecastResult, forecast_series, holdout_eval, mae, mape, mse
from .identify import AssignmentMatrix, ClusterConfig, ModelLibrary, track
from .narrate import Narrative, serialize
from .select import (
    BaselineSelector,
    RemoteSelector,
    SelectorDecision,
    SelectorEndpointConfig,
    baseline_decide,
    parse_reply,
    remote_decide,
)
from .synth import SynthSpec, generate_set, random_spec

__all__ = [
    "ARModel", "fit_ar", "generate", "score",
    "SeriesSet", "TimeGrid", "auto_segment", "build_grid", "load_csv", "slice_segment",
    "TemporalGraph", "build_graph", "transition_counts",
    "ForecastResult", "forecast_series", "holdout_eval", "mae", "mape", "mse",
    "AssignmentMatrix", "ClusterConfig", "ModelLibrary", "track",
    "Narrative", "serialize",
    "BaselineSelector", "RemoteSelector", "SelectorDecision",
    "SelectorEndpointConfig", "baseline_decide", "parse_reply", "remote_decide",
    "SynthSpec", "generate_set", "random_spec",
]
