"""Model identification: cluster per-interval AR fits into a shared library
and track model reuse across intervals.

The library starts from the first interval, where one model is fitted per
series and the fits are merged agglomeratively into representative models.
At every later interval each series keeps the best-scoring library model if
that score clears the acceptance bound; otherwise the series joins that
interval's "unexplained" set, which is fitted and clustered the same way and
appended to the library. The library only ever grows and ids are stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import errors
from .armodel import ARModel, fit_ar, score
from .data import SeriesSet, TimeGrid, slice_segment

ZERO_VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class ClusterConfig:
    lag: int
    epsilon: float = 0.2
    tau: float = 0.1
    k_max: Optional[int] = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.lag < 1:
            raise ValueError("lag must be >= 1")

    def to_json(self) -> dict:
        return {
            "lag": self.lag,
            "epsilon": self.epsilon,
            "tau": self.tau,
            "k_max": self.k_max,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ClusterConfig":
        return cls(
            lag=int(obj["lag"]),
            epsilon=float(obj["epsilon"]),
            tau=float(obj["tau"]),
            k_max=obj.get("k_max"),
        )


@dataclass
class ModelLibrary:
    models: list[ARModel] = field(default_factory=list)
    birth_intervals: list[int] = field(default_factory=list)

    def add(self, model: ARModel, birth_interval: int) -> int:
        self.models.append(model)
        self.birth_intervals.append(birth_interval)
        return len(self.models) - 1

    @property
    def size(self) -> int:
        return len(self.models)


@dataclass(frozen=True)
class AssignmentMatrix:
    """Per (series, interval): the governing model id, its score, and the
    acceptance bound that was in force for that segment."""

    entries: np.ndarray      # (n, m) int
    fit_errors: np.ndarray   # (n, m) float
    eps_bounds: np.ndarray   # (n, m) float

    def __post_init__(self):
        object.__setattr__(self, "entries", np.asarray(self.entries, dtype=int))
        object.__setattr__(self, "fit_errors", np.asarray(self.fit_errors, dtype=float))
        object.__setattr__(self, "eps_bounds", np.asarray(self.eps_bounds, dtype=float))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]


def acceptance_bound(segment_values, epsilon: float) -> float:
    """Score threshold under which a model counts as regenerating the segment.

    Relative to the segment's variance so the criterion is scale free;
    exactly constant segments get a tiny absolute floor instead.
    """
    var = float(np.var(segment_values))
    return epsilon * var if var > 0.0 else ZERO_VARIANCE_FLOOR


def compute_loss(cluster_mses: Sequence[Sequence[float]], tau: float) -> float:
    """Total fit error plus tau times the summed within-cluster MSE variance."""
    total = 0.0
    for mses in cluster_mses:
        arr = np.asarray(mses, dtype=float)
        if arr.size == 0:
            raise errors.EmptyCluster("clusters must be non-empty")
        total += float(arr.sum()) + tau * float(np.var(arr))
    return total


def _cluster_fit_term(score_mat: np.ndarray, members: list[int]) -> tuple[int, np.ndarray]:
    """Best representative (by summed score over member segments) and the
    member MSEs under it. ``score_mat[a, b]`` is model a scored on segment b."""
    sub = score_mat[np.ix_(members, members)]
    sums = sub.sum(axis=1)
    best = int(np.argmin(sums))
    return members[best], sub[best]


def _cluster_loss(score_mat: np.ndarray, members: list[int], tau: float) -> float:
    _, mses = _cluster_fit_term(score_mat, members)
    return float(mses.sum()) + tau * float(np.var(mses))


def _admissible(score_mat: np.ndarray, bounds: np.ndarray, members: list[int]) -> bool:
    """Some member model regenerates every member segment within its bound."""
    sub = score_mat[np.ix_(members, members)]
    return bool(np.any(np.all(sub <= bounds[members], axis=1)))


def _agglomerate(
    score_mat: np.ndarray, bounds: np.ndarray, cfg: ClusterConfig
) -> list[list[int]]:
    """Greedy bottom-up merging of singletons.

    A merge is allowed while the merged cluster still has a representative
    that regenerates every member within its acceptance bound; among allowed
    merges the one with the smallest loss increase goes first. When k_max is
    exceeded and no allowed merge remains, the cheapest merge is forced.
    """
    nloc = score_mat.shape[0]
    clusters: list[list[int]] = [[i] for i in range(nloc)]
    losses = [_cluster_loss(score_mat, c, cfg.tau) for c in clusters]
    while len(clusters) > 1:
        best_pair = None
        best_delta = np.inf
        forced_pair = None
        forced_delta = np.inf
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                merged = clusters[a] + clusters[b]
                delta = _cluster_loss(score_mat, merged, cfg.tau) - losses[a] - losses[b]
                if delta < forced_delta:
                    forced_delta, forced_pair = delta, (a, b)
                if _admissible(score_mat, bounds, merged) and delta < best_delta:
                    best_delta, best_pair = delta, (a, b)
        if best_pair is None:
            if cfg.k_max is not None and len(clusters) > cfg.k_max:
                best_pair = forced_pair
            else:
                break
        a, b = best_pair
        clusters[a] = sorted(clusters[a] + clusters[b])
        losses[a] = _cluster_loss(score_mat, clusters[a], cfg.tau)
        del clusters[b], losses[b]
    clusters.sort(key=lambda c: c[0])
    return clusters


def _fit_and_cluster(
    segments: list[np.ndarray], cfg: ClusterConfig
) -> tuple[list[ARModel], list[int], list[float], list[float]]:
    """Fit one model per segment, cluster the fits, and return
    (representatives, member->cluster index, member fit errors, member bounds)."""
    fits = [fit_ar(seg, cfg.lag) for seg in segments]
    nloc = len(fits)
    score_mat = np.empty((nloc, nloc))
    for a in range(nloc):
        for b in range(nloc):
            score_mat[a, b] = score(fits[a], segments[b])
    bounds = np.array([acceptance_bound(seg, cfg.epsilon) for seg in segments])
    clusters = _agglomerate(score_mat, bounds, cfg)
    reps: list[ARModel] = []
    member_cluster = [0] * nloc
    member_err = [0.0] * nloc
    for cix, members in enumerate(clusters):
        rep_ix, mses = _cluster_fit_term(score_mat, members)
        reps.append(fits[rep_ix])
        for local, member in enumerate(members):
            member_cluster[member] = cix
            member_err[member] = float(mses[local])
    return reps, member_cluster, member_err, list(bounds)


def init_models(
    sset: SeriesSet, grid: TimeGrid, cfg: ClusterConfig
) -> tuple[ModelLibrary, np.ndarray, np.ndarray, np.ndarray]:
    """Cluster the first-interval fits of all series into the initial library.

    Returns the library plus the first assignment column (ids, fit errors,
    acceptance bounds), one entry per series.
    """
    segments = [slice_segment(sset, grid, i, 1).values for i in range(sset.n)]
    reps, member_cluster, member_err, bounds = _fit_and_cluster(segments, cfg)
    library = ModelLibrary()
    for rep in reps:
        library.add(rep, birth_interval=1)
    ids = np.array(member_cluster, dtype=int)
    return library, ids, np.array(member_err), np.array(bounds)


def track(
    sset: SeriesSet, grid: TimeGrid, cfg: ClusterConfig
) -> tuple[ModelLibrary, AssignmentMatrix]:
    """Run initialization at the first interval, then sweep the remaining
    intervals, reusing library models where they still fit and growing the
    library from each interval's unexplained series."""
    n, m = sset.n, grid.interval_count
    entries = np.zeros((n, m), dtype=int)
    fit_errors = np.zeros((n, m))
    eps_bounds = np.zeros((n, m))
    library, ids, errs, bounds = init_models(sset, grid, cfg)
    entries[:, 0], fit_errors[:, 0], eps_bounds[:, 0] = ids, errs, bounds
    for j in range(2, m + 1):
        unexplained: list[int] = []
        segments = {i: slice_segment(sset, grid, i, j).values for i in range(n)}
        for i in range(n):
            seg = segments[i]
            bound = acceptance_bound(seg, cfg.epsilon)
            eps_bounds[i, j - 1] = bound
            scores = np.array([score(mdl, seg) for mdl in library.models])
            best = int(np.argmin(scores))  # argmin takes the lowest id on ties
            if scores[best] <= bound:
                entries[i, j - 1] = best
                fit_errors[i, j - 1] = scores[best]
            else:
                unexplained.append(i)
        if unexplained:
            segs = [segments[i] for i in unexplained]
            reps, member_cluster, member_err, _ = _fit_and_cluster(segs, cfg)
            base = library.size
            for rep in reps:
                library.add(rep, birth_interval=j)
            for local, i in enumerate(unexplained):
                entries[i, j - 1] = base + member_cluster[local]
                fit_errors[i, j - 1] = member_err[local]
    return library, AssignmentMatrix(entries=entries, fit_errors=fit_errors, eps_bounds=eps_bounds)
