"""Versioned JSON persistence for the identified pipeline state, so each CLI
stage can round-trip through a single ``state.json`` document."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .armodel import ARModel
from .data import TimeGrid
from .identify import AssignmentMatrix, ClusterConfig, ModelLibrary

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class PipelineState:
    series_ids: tuple[str, ...]
    grid: TimeGrid
    library: ModelLibrary
    assignments: AssignmentMatrix
    config: ClusterConfig
    timestamps: Optional[tuple[str, ...]] = None

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "series_ids": list(self.series_ids),
            "timestamps": None if self.timestamps is None else list(self.timestamps),
            "grid": {
                "interval_length": self.grid.interval_length,
                "stride": self.grid.stride,
                "interval_count": self.grid.interval_count,
                "series_length": self.grid.series_length,
                "flagged": self.grid.flagged,
            },
            "models": [m.to_json() for m in self.library.models],
            "birth_intervals": list(self.library.birth_intervals),
            "assignments": self.assignments.entries.tolist(),
            "fit_errors": self.assignments.fit_errors.tolist(),
            "eps_bounds": self.assignments.eps_bounds.tolist(),
            "config": self.config.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineState":
        version = obj.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported state schema version: {version}")
        grid = TimeGrid(
            interval_length=obj["grid"]["interval_length"],
            stride=obj["grid"]["stride"],
            interval_count=obj["grid"]["interval_count"],
            series_length=obj["grid"]["series_length"],
            flagged=obj["grid"].get("flagged", False),
        )
        library = ModelLibrary(
            models=[ARModel.from_json(m) for m in obj["models"]],
            birth_intervals=list(obj["birth_intervals"]),
        )
        assignments = AssignmentMatrix(
            entries=np.array(obj["assignments"], dtype=int),
            fit_errors=np.array(obj["fit_errors"], dtype=float),
            eps_bounds=np.array(obj["eps_bounds"], dtype=float),
        )
        ts = obj.get("timestamps")
        return cls(
            series_ids=tuple(obj["series_ids"]),
            grid=grid,
            library=library,
            assignments=assignments,
            config=ClusterConfig.from_json(obj["config"]),
            timestamps=None if ts is None else tuple(ts),
        )


def write_json_atomic(path, obj: dict) -> None:
    """Write JSON via a temp file and rename, so readers never see partial
    documents."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(obj, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_state(state: PipelineState, path) -> None:
    write_json_atomic(path, state.to_json())


def load_state(path) -> PipelineState:
    with open(path) as fh:
        return PipelineState.from_json(json.load(fh))
