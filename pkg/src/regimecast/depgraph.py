"""Temporal dependency graph: one bipartite state per pair of consecutive
intervals, recording which model-to-model transitions at least one series
took and which series sat on each endpoint."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import errors
from .identify import AssignmentMatrix


@dataclass(frozen=True)
class GraphState:
    j: int  # source interval (1-based); the state covers transitions j -> j+1
    edges: frozenset[tuple[int, int]]
    out_attrs: dict[int, np.ndarray]  # model id -> bool vector over series
    in_attrs: dict[int, np.ndarray]

    def transition_multiplicity(self, mu: int, nu: int) -> int:
        """Number of series realizing the transition mu -> nu at this state."""
        if (mu, nu) not in self.edges:
            return 0
        return int(np.sum(self.out_attrs[mu] & self.in_attrs[nu]))


@dataclass(frozen=True)
class TemporalGraph:
    states: tuple[GraphState, ...]
    n_series: int
    # set when the assignment matrix had fewer than two intervals
    degenerate: bool = False

    @property
    def n_states(self) -> int:
        return len(self.states)


def build_graph(assignments: AssignmentMatrix) -> TemporalGraph:
    """Single scan over (series, interval) pairs per the edge and attribute
    definitions; a one-interval matrix yields an empty, flagged graph."""
    entries = assignments.entries
    n, m = entries.shape
    if m < 2:
        return TemporalGraph(states=(), n_series=n, degenerate=True)
    states = []
    for j in range(1, m):
        src = entries[:, j - 1]
        dst = entries[:, j]
        edges = frozenset((int(mu), int(nu)) for mu, nu in zip(src, dst))
        out_attrs = {
            int(mu): np.asarray(src == mu) for mu in np.unique(src)
        }
        in_attrs = {
            int(nu): np.asarray(dst == nu) for nu in np.unique(dst)
        }
        states.append(GraphState(j=j, edges=edges, out_attrs=out_attrs, in_attrs=in_attrs))
    return TemporalGraph(states=tuple(states), n_series=n)


def transition_counts(graph: TemporalGraph, upto_j: int) -> dict[tuple[int, int], int]:
    """Multiplicity of every transition over states 1..upto_j.

    Counts are recovered from the endpoint attribute vectors, so the total
    equals n_series * upto_j.
    """
    if not (1 <= upto_j <= graph.n_states):
        raise errors.IndexOutOfRange(
            f"upto_j {upto_j} outside [1, {graph.n_states}]"
        )
    counts: dict[tuple[int, int], int] = {}
    for state in graph.states[:upto_j]:
        for mu, nu in state.edges:
            counts[(mu, nu)] = counts.get((mu, nu), 0) + state.transition_multiplicity(mu, nu)
    return counts


def _bits(vec: np.ndarray) -> str:
    return "".join("1" if b else "0" for b in vec)


def graph_to_json(graph: TemporalGraph) -> dict:
    """JSON form with attribute vectors as 0/1 strings in series order."""
    return {
        "n_series": graph.n_series,
        "degenerate": graph.degenerate,
        "states": [
            {
                "j": state.j,
                "edges": sorted([mu, nu] for mu, nu in state.edges),
                "out_attrs": {str(mu): _bits(v) for mu, v in sorted(state.out_attrs.items())},
                "in_attrs": {str(nu): _bits(v) for nu, v in sorted(state.in_attrs.items())},
            }
            for state in graph.states
        ],
    }


def edge_list_rows(graph: TemporalGraph) -> list[tuple[int, int, int, int]]:
    """(state j, source model, target model, multiplicity) rows for CSV export."""
    rows = []
    for state in graph.states:
        for mu, nu in sorted(state.edges):
            rows.append((state.j, mu, nu, state.transition_multiplicity(mu, nu)))
    return rows
