"""Greedy elimination-order baselines: min-degree, min-fill and uniform random."""

from __future__ import annotations

import heapq
import itertools

from .graph import Graph, make_rng


def _tiebreak_keys(g: Graph, seed: int | None) -> dict[int, float]:
    # lowest id wins by default; a seed replaces ids with a random priority
    if seed is None:
        return {u: u for u in g.nodes}
    rng = make_rng(seed)
    return dict(zip(g.nodes, rng.permutation(g.num_nodes()).tolist()))


def min_degree_order(g: Graph, seed: int | None = None) -> list[int]:
    """Repeatedly eliminate a node of minimum current degree.

    Ties go to the lowest node id unless ``seed`` is given, in which case they
    are broken by a seeded random priority.
    """
    key = _tiebreak_keys(g, seed)
    adj = g.adjacency()
    heap = [(len(ns), key[u], u) for u, ns in adj.items()]
    heapq.heapify(heap)
    order = []
    while heap:
        d, _, u = heapq.heappop(heap)
        if u not in adj or len(adj[u]) != d:
            continue  # stale entry
        nbrs = adj.pop(u)
        for v in nbrs:
            av = adj[v]
            av |= nbrs
            av.discard(v)
            av.discard(u)
            heapq.heappush(heap, (len(av), key[v], v))
        order.append(u)
    return order


def _fill(adj: dict[int, set[int]], u: int) -> int:
    return sum(1 for a, b in itertools.combinations(adj[u], 2) if b not in adj[a])


def min_fill_order(g: Graph, seed: int | None = None) -> list[int]:
    """Repeatedly eliminate a node whose elimination adds the fewest edges.

    Fill counts are refreshed only for nodes within distance two of the
    eliminated node; nothing else can change. Tie-breaking as in
    :func:`min_degree_order`.
    """
    key = _tiebreak_keys(g, seed)
    adj = g.adjacency()
    fill = {u: _fill(adj, u) for u in adj}
    heap = [(f, key[u], u) for u, f in fill.items()]
    heapq.heapify(heap)
    order = []
    while heap:
        f, _, u = heapq.heappop(heap)
        if u not in adj or fill[u] != f:
            continue
        nbrs = adj.pop(u)
        for v in nbrs:
            av = adj[v]
            av |= nbrs
            av.discard(v)
            av.discard(u)
        del fill[u]
        touched = set(nbrs)
        for v in nbrs:
            touched |= adj[v]
        for w in touched:
            nf = _fill(adj, w)
            if nf != fill[w]:
                fill[w] = nf
                heapq.heappush(heap, (nf, key[w], w))
        order.append(u)
    return order


def random_order(g: Graph, seed: int) -> list[int]:
    """Uniformly random permutation of the nodes, fixed by ``seed``."""
    rng = make_rng(seed)
    nodes = g.nodes
    return [nodes[i] for i in rng.permutation(len(nodes))]
