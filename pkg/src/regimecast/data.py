"""Loading of synchronized series and the sliding interval grid.

Interval indices are 1-based throughout (interval ``j`` is the window
``[(j-1)*stride, (j-1)*stride + interval_length)``); series indices are
0-based positions into ``SeriesSet.series_ids``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import errors


@dataclass(frozen=True)
class SeriesSet:
    """n synchronized series of identical length N."""

    series_ids: tuple[str, ...]
    values: np.ndarray  # shape (n, N), float64
    timestamps: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2:
            raise ValueError("values must be a 2-d array (n series x N timestamps)")
        if len(self.series_ids) != vals.shape[0]:
            raise ValueError("series_ids length does not match values rows")
        if len(set(self.series_ids)) != len(self.series_ids):
            raise errors.DuplicateHeader(
                next(s for s in self.series_ids if list(self.series_ids).count(s) > 1)
            )
        if not np.all(np.isfinite(vals)):
            r, c = np.argwhere(~np.isfinite(vals))[0]
            raise errors.MissingValue(int(r), int(c))
        if self.timestamps is not None and len(self.timestamps) != vals.shape[1]:
            raise ValueError("timestamps length does not match series length")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class TimeGrid:
    """Sliding window layout over a series of length ``series_length``."""

    interval_length: int
    stride: int
    interval_count: int
    series_length: int
    # set by auto_segment when no candidate met the stationarity target
    flagged: bool = False

    def __post_init__(self):
        if self.interval_length < 1 or self.stride < 1 or self.interval_count < 1:
            raise ValueError("grid parameters must be positive")
        if (self.interval_count - 1) * self.stride + self.interval_length > self.series_length:
            raise ValueError("last interval does not fit in the series")

    def start(self, j: int) -> int:
        """0-based start index of interval j (1-based)."""
        return (j - 1) * self.stride

    def window(self, j: int) -> tuple[int, int]:
        s = self.start(j)
        return s, s + self.interval_length


@dataclass(frozen=True)
class Segment:
    series_index: int
    interval_index: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


def load_csv(path) -> SeriesSet:
    """Parse a wide CSV: header ``timestamp,<id1>,<id2>,...``, one row per time."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise errors.EmptyFile(str(path))
    header = rows[0]
    if len(header) < 2:
        raise errors.EmptyFile(f"{path}: no series columns")
    ids = header[1:]
    seen = set()
    for name in ids:
        if name in seen:
            raise errors.DuplicateHeader(name)
        seen.add(name)
    width = len(header)
    timestamps = []
    columns: list[list[float]] = [[] for _ in ids]
    for rix, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise errors.RaggedRows(rix, width, len(row))
        timestamps.append(row[0])
        for cix, cell in enumerate(row[1:], start=2):
            try:
                v = float(cell)
            except ValueError:
                raise errors.NonNumericCell(rix, cix, cell) from None
            if not math.isfinite(v):
                raise errors.MissingValue(rix, cix)
            columns[cix - 2].append(v)
    if not timestamps:
        raise errors.EmptyFile(f"{path}: header only")
    return SeriesSet(
        series_ids=tuple(ids),
        values=np.array(columns, dtype=float),
        timestamps=tuple(timestamps),
    )


def build_grid(N: int, L: int, s: int) -> TimeGrid:
    """Grid with m = floor((N - L)/s) + 1 intervals."""
    if s < 1:
        raise errors.ZeroStride(f"stride must be >= 1, got {s}")
    if L < 1:
        raise errors.IntervalTooLong(f"interval length must be >= 1, got {L}")
    if L > N:
        raise errors.IntervalTooLong(f"interval length {L} exceeds series length {N}")
    m = (N - L) // s + 1
    return TimeGrid(interval_length=L, stride=s, interval_count=m, series_length=N)


def _segment_stationary(seg: np.ndarray, threshold: float) -> bool:
    half = len(seg) // 2
    a, b = seg[:half], seg[half: 2 * half]
    sd = float(np.std(seg))
    tol = threshold * sd
    return (
        abs(float(np.mean(a)) - float(np.mean(b))) <= tol
        and abs(float(np.std(a)) - float(np.std(b))) <= tol
    )


def auto_segment(
    sset: SeriesSet,
    candidates: Sequence[int],
    threshold: float = 0.1,
    pass_fraction: float = 0.9,
) -> TimeGrid:
    """Pick the smallest candidate interval length whose segments look stationary.

    A (series, interval) pair passes when its two halves agree in mean and
    standard deviation within ``threshold`` times the segment's own standard
    deviation. Stride is fixed to floor(L/2). If no candidate reaches
    ``pass_fraction``, the grid for the largest candidate is returned flagged.
    """
    if not candidates:
        raise errors.EmptyCandidates("no candidate interval lengths given")
    N = sset.length
    for L in candidates:
        if L > N:
            raise errors.IntervalTooLong(f"candidate {L} exceeds series length {N}")
    for L in sorted(candidates):
        s = max(1, L // 2)
        grid = build_grid(N, L, s)
        total = 0
        passed = 0
        for i in range(sset.n):
            for j in range(1, grid.interval_count + 1):
                lo, hi = grid.window(j)
                total += 1
                if _segment_stationary(sset.values[i, lo:hi], threshold):
                    passed += 1
        if passed >= pass_fraction * total:
            return grid
    L = max(candidates)
    s = max(1, L // 2)
    grid = build_grid(N, L, s)
    return TimeGrid(
        interval_length=grid.interval_length,
        stride=grid.stride,
        interval_count=grid.interval_count,
        series_length=grid.series_length,
        flagged=True,
    )


def slice_segment(sset: SeriesSet, grid: TimeGrid, i: int, j: int) -> Segment:
    """Segment of series i (0-based) at interval j (1-based)."""
    if not (0 <= i < sset.n):
        raise errors.IndexOutOfRange(f"series index {i} outside [0, {sset.n})")
    if not (1 <= j <= grid.interval_count):
        raise errors.IndexOutOfRange(
            f"interval index {j} outside [1, {grid.interval_count}]"
        )
    lo, hi = grid.window(j)
    return Segment(series_index=i, interval_index=j, values=sset.values[i, lo:hi])
