"""Command-line orchestration of the pipeline stages.

Exit codes: 0 success, 1 domain error, 2 usage/validation error. Flags
override config-file values, which override defaults. Every command that
writes outputs drops a run manifest next to them.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from importlib.metadata import PackageNotFoundError, version as pkg_version

from . import errors
from .data import SeriesSet, auto_segment, build_grid, load_csv
from .depgraph import build_graph, edge_list_rows, graph_to_json
from .forecast import forecast_series, holdout_eval
from .identify import ClusterConfig, track
from .narrate import serialize
from .select import (
    BaselineSelector,
    RemoteSelector,
    SelectorEndpointConfig,
    build_exemplars,
)
from .state import PipelineState, load_state, save_state, write_json_atomic
from .synth import generate_set, random_spec


def _package_version() -> str:
    try:
        return pkg_version("regimecast")
    except PackageNotFoundError:
        return "unknown"


def _write_manifest(out_dir: str, command: str, config: dict, started: float) -> None:
    manifest = {
        "command": command,
        "config": config,
        "version": _package_version(),
        "elapsed_seconds": round(time.time() - started, 3),
    }
    write_json_atomic(os.path.join(out_dir, "manifest.json"), manifest)


def _usage_error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


# defaults applied after config-file merging, so precedence is
# flag > config file > default
_DEFAULTS = {
    "lag": 2,
    "epsilon": 0.2,
    "tau": 0.1,
    "threshold": 0.1,
    "q": 5,
    "holdout": 45,
    "horizon": 1,
    "selector": "baseline",
    "llm_model": "gpt-4",
    "few_shot_exemplars": 0,
}


def _resolve_defaults(args: argparse.Namespace, file_cfg: dict) -> None:
    for key, value in file_cfg.items():
        attr = key.replace("-", "_")
        if getattr(args, attr, None) is None:
            setattr(args, attr, value)
    for key, default in _DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, default)


def _write_series_csv(path: str, sset: SeriesSet) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", *sset.series_ids])
        ts = sset.timestamps or [str(t) for t in range(sset.length)]
        for t in range(sset.length):
            writer.writerow([ts[t], *(repr(v) for v in sset.values[:, t])])


def _grid_from_args(args, sset: SeriesSet):
    if args.auto_segment:
        candidates = [int(c) for c in args.candidates.split(",")] if args.candidates else []
        return auto_segment(sset, candidates, threshold=args.threshold)
    if args.interval_length is None:
        raise errors.IntervalTooLong(
            "either --interval-length or --auto-segment is required"
        )
    stride = args.stride if args.stride is not None else max(1, args.interval_length // 2)
    return build_grid(sset.length, args.interval_length, stride)


# --- subcommand handlers ------------------------------------------------------

def _cmd_synth(args) -> int:
    spec = random_spec(
        n=args.n, K=args.k, p=args.lag, m=args.m, L=args.interval_length,
        noise_std=args.noise_std, seed=args.seed,
    )
    sset, library, truth = generate_set(spec)
    os.makedirs(args.out, exist_ok=True)
    _write_series_csv(os.path.join(args.out, "data.csv"), sset)
    write_json_atomic(
        os.path.join(args.out, "truth.json"),
        {
            "models": [m.to_json() for m in library.models],
            "schedule": truth.entries.tolist(),
            "noise_std": spec.noise_std,
            "seed": spec.seed,
            "interval_length": spec.grid.interval_length,
            "rng": "numpy.random.default_rng([seed, series_index])",
        },
    )
    print(f"wrote {sset.n} series x {sset.length} points to {args.out}/data.csv")
    return 0


def _cmd_ingest(args) -> int:
    sset = load_csv(args.input)
    print(f"{args.input}: {sset.n} series, {sset.length} timestamps, all finite")
    return 0


def _cmd_segment(args) -> int:
    sset = load_csv(args.input)
    candidates = [int(c) for c in args.candidates.split(",")] if args.candidates else []
    grid = auto_segment(sset, candidates, threshold=args.threshold)
    flag = " (flagged: no candidate met the stationarity target)" if grid.flagged else ""
    print(
        f"interval_length={grid.interval_length} stride={grid.stride} "
        f"intervals={grid.interval_count}{flag}"
    )
    return 0


def _cmd_identify(args) -> int:
    sset = load_csv(args.input)
    grid = _grid_from_args(args, sset)
    cfg = ClusterConfig(lag=args.lag, epsilon=args.epsilon, tau=args.tau, k_max=args.k_max)
    library, assignments = track(sset, grid, cfg)
    state = PipelineState(
        series_ids=sset.series_ids, grid=grid, library=library,
        assignments=assignments, config=cfg, timestamps=sset.timestamps,
    )
    save_state(state, args.out)
    print(
        f"identified {library.size} models over {grid.interval_count} intervals "
        f"-> {args.out}"
    )
    return 0


def _cmd_graph(args) -> int:
    state = load_state(args.state)
    graph = build_graph(state.assignments)
    write_json_atomic(args.out, graph_to_json(graph))
    if args.edges_csv:
        with open(args.edges_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["state_j", "source_model", "target_model", "multiplicity"])
            writer.writerows(edge_list_rows(graph))
    print(f"{graph.n_states} graph states -> {args.out}")
    return 0


def _cmd_narrate(args) -> int:
    state = load_state(args.state)
    if args.series not in state.series_ids:
        return _usage_error(f"series {args.series!r} not in state file")
    series_index = state.series_ids.index(args.series)
    at_j = args.at if args.at is not None else state.assignments.m + 1
    q = min(args.q, at_j - 1)
    graph = build_graph(state.assignments)
    narrative = serialize(
        series_index, at_j, q, graph, state.assignments, state.library,
        state.series_ids, grid=state.grid, timestamps=state.timestamps,
    )
    print(narrative.text)
    return 0


def _build_selector(args, state: PipelineState):
    if args.selector == "baseline":
        return BaselineSelector()
    cfg = SelectorEndpointConfig(
        base_url=args.endpoint,
        model_name=args.llm_model,
        mode="exemplar_few_shot" if args.few_shot_exemplars else "zero_shot",
        fallback_to_baseline=not args.no_fallback,
    )
    exemplars = None
    if args.few_shot_exemplars:
        graph = build_graph(state.assignments)
        exemplars = build_exemplars(
            graph, state.assignments, state.library, state.series_ids,
            q=args.q, count=args.few_shot_exemplars,
        )
    return RemoteSelector(cfg, exemplars=exemplars)


def _cmd_forecast(args) -> int:
    state = load_state(args.state)
    sset = load_csv(args.input)
    if sset.series_ids != state.series_ids:
        return _usage_error("--input series do not match the state file")
    selector = _build_selector(args, state)
    train = SeriesSet(
        series_ids=sset.series_ids,
        values=sset.values[:, : state.grid.series_length],
        timestamps=None if sset.timestamps is None
        else tuple(sset.timestamps[: state.grid.series_length]),
    )
    rows = []
    for i in range(sset.n):
        result = forecast_series(
            i, args.horizon, selector, state.library, state.assignments,
            train, state.grid, q=args.q,
        )
        rows.append(result)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series", "step", "value", "interval", "model", "source"])
        for result in rows:
            for k, value in enumerate(result.values):
                interval, model_id, source = result.model_trail[k // state.grid.stride]
                writer.writerow([result.series_id, k + 1, repr(float(value)),
                                 interval, model_id, source])
    print(f"forecast {args.horizon} intervals for {sset.n} series -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    sset = load_csv(args.input)
    cfg = ClusterConfig(lag=args.lag, epsilon=args.epsilon, tau=args.tau, k_max=args.k_max)
    stride = args.stride if args.stride is not None else max(1, args.interval_length // 2)
    started = time.time()
    dummy_state = None
    if args.selector == "remote":
        # identify once on the training span to build selector inputs
        train_len = sset.length - args.holdout
        train = SeriesSet(sset.series_ids, sset.values[:, :train_len])
        grid = build_grid(train_len, args.interval_length, stride)
        library, assignments = track(train, grid, cfg)
        dummy_state = PipelineState(
            series_ids=sset.series_ids, grid=grid, library=library,
            assignments=assignments, config=cfg,
        )
    selector = _build_selector(args, dummy_state) if dummy_state else BaselineSelector()
    report, library, assignments = holdout_eval(
        sset, cfg, args.interval_length, stride, selector,
        holdout=args.holdout, q=args.q,
    )
    os.makedirs(args.out, exist_ok=True)
    write_json_atomic(os.path.join(args.out, "report.json"), report.to_json())
    with open(os.path.join(args.out, "report.csv"), "w", newline="") as fh:
        csv.writer(fh).writerows(report.csv_rows())
    _write_manifest(args.out, "eval", vars(args) | {"config": None}, started)
    agg = report.aggregate
    print(
        f"holdout={report.holdout_length} mae={agg['mae']:.6g} "
        f"mse={agg['mse']:.6g} mape={agg['mape']:.6g}"
    )
    return 0


# --- argument parsing ---------------------------------------------------------

def _add_common_identify_flags(sub):
    sub.add_argument("--lag", type=int, default=None)
    sub.add_argument("--epsilon", type=float, default=None)
    sub.add_argument("--tau", type=float, default=None)
    sub.add_argument("--k-max", type=int, default=None)
    sub.add_argument("--interval-length", type=int, default=None)
    sub.add_argument("--stride", type=int, default=None)
    sub.add_argument("--auto-segment", action="store_true")
    sub.add_argument("--candidates", type=str, default=None)
    sub.add_argument("--threshold", type=float, default=None)


def _add_selector_flags(sub):
    sub.add_argument("--selector", choices=["baseline", "remote"], default=None)
    sub.add_argument("--endpoint", type=str, default=None)
    sub.add_argument("--llm-model", type=str, default=None)
    sub.add_argument("--few-shot-exemplars", type=int, default=None)
    sub.add_argument("--no-fallback", action="store_true")
    sub.add_argument("--q", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regimecast",
        description="Interpretable co-evolving time series forecasting via "
        "interval-local AR models and model-reuse graphs",
    )
    parser.add_argument("--config", type=str, default=None,
                        help="JSON file with default flag values")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("synth", help="generate labeled synthetic series")
    sub.add_argument("--n", type=int, default=6)
    sub.add_argument("--k", type=int, default=2)
    sub.add_argument("--lag", type=int, default=2)
    sub.add_argument("--m", type=int, default=8)
    sub.add_argument("--interval-length", type=int, default=128)
    sub.add_argument("--noise-std", type=float, default=0.01)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", type=str, required=True)
    sub.set_defaults(func=_cmd_synth)

    sub = subs.add_parser("ingest", help="validate a wide CSV")
    sub.add_argument("--input", type=str, required=True)
    sub.set_defaults(func=_cmd_ingest)

    sub = subs.add_parser("segment", help="pick an interval length by stationarity")
    sub.add_argument("--input", type=str, required=True)
    sub.add_argument("--candidates", type=str, required=True)
    sub.add_argument("--threshold", type=float, default=0.1)
    sub.set_defaults(func=_cmd_segment)

    sub = subs.add_parser("identify", help="build the model library and assignments")
    sub.add_argument("--input", type=str, required=True)
    sub.add_argument("--out", type=str, required=True)
    _add_common_identify_flags(sub)
    sub.set_defaults(func=_cmd_identify)

    sub = subs.add_parser("graph", help="export the temporal dependency graph")
    sub.add_argument("--state", type=str, required=True)
    sub.add_argument("--out", type=str, required=True)
    sub.add_argument("--edges-csv", type=str, default=None)
    sub.set_defaults(func=_cmd_graph)

    sub = subs.add_parser("narrate", help="print one series' narrative")
    sub.add_argument("--state", type=str, required=True)
    sub.add_argument("--series", type=str, required=True)
    sub.add_argument("--q", type=int, default=5)
    sub.add_argument("--at", type=int, default=None)
    sub.set_defaults(func=_cmd_narrate)

    sub = subs.add_parser("forecast", help="forecast future intervals")
    sub.add_argument("--state", type=str, required=True)
    sub.add_argument("--input", type=str, required=True)
    sub.add_argument("--horizon", type=int, default=None)
    sub.add_argument("--out", type=str, required=True)
    _add_selector_flags(sub)
    sub.set_defaults(func=_cmd_forecast)

    sub = subs.add_parser("eval", help="holdout evaluation end to end")
    sub.add_argument("--input", type=str, required=True)
    sub.add_argument("--holdout", type=int, default=None)
    sub.add_argument("--out", type=str, required=True)
    _add_common_identify_flags(sub)
    _add_selector_flags(sub)
    sub.set_defaults(func=_cmd_eval)

    return parser


def _validate(args) -> str | None:
    if getattr(args, "epsilon", None) is not None and args.epsilon <= 0:
        return "epsilon must be > 0"
    if getattr(args, "tau", None) is not None and args.tau < 0:
        return "tau must be >= 0"
    if getattr(args, "lag", None) is not None and args.lag < 1:
        return "lag must be >= 1"
    if getattr(args, "holdout", None) is not None and args.holdout < 1:
        return "holdout must be >= 1"
    if getattr(args, "horizon", None) is not None and args.horizon < 0:
        return "horizon must be >= 0"
    if getattr(args, "selector", None) == "remote" and not getattr(args, "endpoint", None):
        return "--endpoint is required with --selector remote"
    return None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    file_cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            return _usage_error(f"cannot read config file: {exc}")
    _resolve_defaults(args, file_cfg)
    problem = _validate(args)
    if problem is not None:
        return _usage_error(problem)
    try:
        return args.func(args)
    except errors.RegimecastError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
