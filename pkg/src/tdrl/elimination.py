"""Width of an elimination order and per-step statistics."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .graph import Graph

EliminationOrder = Sequence[int]


class InvalidOrderError(ValueError):
    pass


@dataclass
class EliminationTrace:
    nodes: list[int] = field(default_factory=list)
    degrees: list[int] = field(default_factory=list)
    fill_edges: list[int] = field(default_factory=list)
    running_max: list[int] = field(default_factory=list)

    @property
    def width(self) -> int:
        return self.running_max[-1] if self.running_max else 0


def check_order(g: Graph, order: EliminationOrder) -> None:
    if len(order) != g.num_nodes() or set(order) != set(g.nodes):
        raise InvalidOrderError("order is not a permutation of the graph's nodes")


def width_of_order(g: Graph, order: EliminationOrder) -> tuple[int, EliminationTrace]:
    """Eliminate ``order`` left to right; width is the largest degree seen at elimination.

    Degrees are recorded before the node is removed.
    """
    check_order(g, order)
    adj = g.adjacency()
    trace = EliminationTrace()
    cmax = 0
    for u in order:
        nbrs = adj.pop(u)
        fill = 0
        for v in nbrs:
            av = adj[v]
            av.discard(u)
            before = len(av)
            av |= nbrs
            av.discard(v)
            fill += len(av) - before
        deg = len(nbrs)
        cmax = max(cmax, deg)
        trace.nodes.append(u)
        trace.degrees.append(deg)
        trace.fill_edges.append(fill // 2)
        trace.running_max.append(cmax)
    return cmax, trace


def fill_in_count(g: Graph, u: int) -> int:
    """Number of non-adjacent pairs in the neighborhood of ``u``."""
    if u not in g:
        raise KeyError(f"node {u} not in graph")
    nbrs = g.neighbors(u)
    return sum(1 for a, b in itertools.combinations(nbrs, 2) if not g.has_edge(a, b))
