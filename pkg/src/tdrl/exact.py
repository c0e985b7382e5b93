"""Exact treewidth for small graphs.

Two independent routes: plain enumeration of every elimination order, and a
best-first branch and bound over sets of eliminated vertices. Both work on
bitmask adjacency over dense indices ``0..n-1``.
"""

from __future__ import annotations

import heapq
import itertools
import time
from typing import NamedTuple

from .elimination import width_of_order
from .graph import Graph
from .heuristics import min_fill_order

BRUTEFORCE_LIMIT = 10


class ExactResult(NamedTuple):
    width: int
    order: list[int]
    proven_optimal: bool = True


class TooLargeError(ValueError):
    pass


def _bitmasks(g: Graph) -> tuple[list[int], list[int]]:
    nodes = g.nodes
    index = {u: i for i, u in enumerate(nodes)}
    adj = [0] * len(nodes)
    for u, v in g.edges():
        adj[index[u]] |= 1 << index[v]
        adj[index[v]] |= 1 << index[u]
    return nodes, adj


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _eliminate(adj: list[int], i: int) -> list[int]:
    """Bitmask elimination of index ``i``; the row of ``i`` is zeroed."""
    nb = adj[i]
    out = list(adj)
    out[i] = 0
    bit = 1 << i
    for j in _bits(nb):
        out[j] = (out[j] | nb) & ~((1 << j) | bit)
    return out


def exact_treewidth_bruteforce(g: Graph) -> ExactResult:
    """Minimum width over all ``n!`` elimination orders, by exhaustive enumeration.

    Orders sharing a prefix share the elimination work, but nothing is pruned.
    """
    n = g.num_nodes()
    if n > BRUTEFORCE_LIMIT:
        raise TooLargeError(
            f"brute force is limited to {BRUTEFORCE_LIMIT} nodes (got {n}); "
            "use exact_treewidth_bnb instead"
        )
    if n == 0:
        return ExactResult(0, [])
    nodes, adj0 = _bitmasks(g)
    best = [n, None]
    prefix: list[int] = []

    def rec(adj: list[int], remaining: int, cur: int) -> None:
        if not remaining:
            if cur < best[0]:
                best[0] = cur
                best[1] = list(prefix)
            return
        for i in _bits(remaining):
            deg = adj[i].bit_count()
            prefix.append(i)
            rec(_eliminate(adj, i), remaining & ~(1 << i), max(cur, deg))
            prefix.pop()

    rec(adj0, (1 << n) - 1, 0)
    return ExactResult(best[0], [nodes[i] for i in best[1]])


_popcount = int.bit_count


def exact_treewidth_bnb(g: Graph, time_budget: float | None = None) -> ExactResult:
    """Best-first branch and bound over eliminated-vertex sets.

    The graph left after eliminating a set ``S`` does not depend on the order
    inside ``S``, so each set is memoized with the smallest max-degree seen on
    the way to it. A state's bound is ``max(max-degree so far, min degree of
    the remaining graph)``. Simplicial vertices are removed up front. The
    initial incumbent comes from min-fill. If ``time_budget`` (seconds) runs
    out, the incumbent is returned with ``proven_optimal=False``.
    """
    start = time.perf_counter()
    n = g.num_nodes()
    if n == 0:
        return ExactResult(0, [])

    ub_order = min_fill_order(g)
    ub, _ = width_of_order(g, ub_order)
    nodes, adj = _bitmasks(g)
    full = (1 << n) - 1

    # simplicial reduction: eliminating a simplicial vertex first is always safe
    prefix: list[int] = []
    low = 0
    eliminated = 0
    changed = True
    while changed:
        changed = False
        for i in _bits(full & ~eliminated):
            nb = adj[i]
            if all((nb & ~(1 << j) & ~adj[j]) == 0 for j in _bits(nb)):
                low = max(low, _popcount(nb))
                adj = _eliminate(adj, i)
                eliminated |= 1 << i
                prefix.append(i)
                changed = True
    if low >= ub or eliminated == full:
        if low < ub:
            return ExactResult(low, [nodes[i] for i in prefix])
        return ExactResult(ub, ub_order)

    def bound(a: list[int], rem: int, gval: int) -> int:
        if not rem:
            return gval
        return max(gval, min(_popcount(a[j]) for j in _bits(rem)))

    # memo: eliminated set -> (best g, parent set, vertex)
    memo: dict[int, tuple[int, int, int]] = {eliminated: (low, -1, -1)}
    counter = itertools.count()
    root_rem = full & ~eliminated
    heap = [(bound(adj, root_rem, low), -_popcount(eliminated), next(counter), eliminated, low, adj)]
    best_state = None
    pops = 0
    timed_out = False
    while heap:
        f, _, _, s, gval, a = heapq.heappop(heap)
        if f >= ub:
            break
        if memo[s][0] < gval:
            continue
        if s == full:
            best_state = s
            ub = gval
            break
        pops += 1
        if time_budget is not None and pops % 64 == 0 and time.perf_counter() - start > time_budget:
            timed_out = True
            break
        rem = full & ~s
        for i in _bits(rem):
            deg = _popcount(a[i])
            ng = max(gval, deg)
            if ng >= ub:
                continue
            ns = s | (1 << i)
            old = memo.get(ns)
            if old is not None and old[0] <= ng:
                continue
            na = _eliminate(a, i)
            nf = bound(na, rem & ~(1 << i), ng)
            if nf >= ub:
                continue
            memo[ns] = (ng, s, i)
            heapq.heappush(heap, (nf, -_popcount(ns), next(counter), ns, ng, na))

    if best_state is None:
        return ExactResult(ub, ub_order, proven_optimal=not timed_out)
    tail = []
    s = best_state
    while s != eliminated:
        _, parent, i = memo[s]
        tail.append(i)
        s = parent
    order = [nodes[i] for i in prefix + tail[::-1]]
    return ExactResult(ub, order)
