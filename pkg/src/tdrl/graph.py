"""Undirected simple graphs, elimination, random generators and PACE ``.gr`` I/O.

Node ids are stable integer labels. Removing a node never renumbers the
others, which is what the elimination environment relies on. Every mutating
operation returns a new :class:`Graph`.

All randomness goes through :func:`make_rng`, a PCG64 bit generator seeded via
``numpy.random.SeedSequence``, so fixtures reproduce across platforms.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "Graph",
    "ErConfig",
    "GrParseError",
    "make_rng",
    "generate_er",
    "parse_gr",
    "write_gr",
    "eliminate_node",
    "path_graph",
    "cycle_graph",
    "complete_graph",
    "star_graph",
    "grid_graph",
    "random_tree",
    "k_tree",
]


def make_rng(seed: int | Sequence[int]) -> np.random.Generator:
    """PCG64 generator for ``seed``; a sequence seeds a derived stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


class Graph:
    """Undirected simple graph keyed by stable node ids.

    Treat instances as immutable; use :meth:`eliminate`, :meth:`remove_node`
    or :meth:`relabel` to derive new graphs.
    """

    __slots__ = ("_adj",)

    def __init__(self, nodes: Iterable[int] = (), edges: Iterable[tuple[int, int]] = ()):
        adj: dict[int, set[int]] = {int(u): set() for u in nodes}
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                continue
            if u not in adj or v not in adj:
                raise KeyError(f"edge ({u}, {v}) references an unknown node")
            adj[u].add(v)
            adj[v].add(u)
        self._adj: dict[int, frozenset[int]] = {u: frozenset(ns) for u, ns in adj.items()}

    @classmethod
    def _from_adj(cls, adj: dict[int, frozenset[int]]) -> "Graph":
        g = cls.__new__(cls)
        g._adj = adj
        return g

    @classmethod
    def from_adjacency(cls, adj: Mapping[int, Iterable[int]]) -> "Graph":
        nodes = list(adj)
        edges = [(u, v) for u in adj for v in adj[u]]
        return cls(nodes, edges)

    @property
    def nodes(self) -> list[int]:
        return list(self._adj)

    def neighbors(self, u: int) -> frozenset[int]:
        return self._adj[u]

    def degree(self, u: int) -> int:
        return len(self._adj[u])

    def has_edge(self, u: int, v: int) -> bool:
        return u in self._adj and v in self._adj[u]

    def edges(self) -> list[tuple[int, int]]:
        """Sorted list of edges, each as ``(min, max)``."""
        return sorted((u, v) for u, ns in self._adj.items() for v in ns if u < v)

    def num_nodes(self) -> int:
        return len(self._adj)

    def num_edges(self) -> int:
        return sum(len(ns) for ns in self._adj.values()) // 2

    def adjacency(self) -> dict[int, set[int]]:
        """A mutable copy of the neighbor-set map."""
        return {u: set(ns) for u, ns in self._adj.items()}

    def is_clique(self, nodes: Iterable[int] | None = None) -> bool:
        vs = list(self._adj if nodes is None else nodes)
        return all(b in self._adj[a] for a, b in itertools.combinations(vs, 2))

    def is_complete(self) -> bool:
        n = len(self._adj)
        return all(len(ns) == n - 1 for ns in self._adj.values())

    def remove_node(self, u: int) -> "Graph":
        if u not in self._adj:
            raise KeyError(f"node {u} not in graph")
        adj = dict(self._adj)
        for v in adj.pop(u):
            adj[v] = adj[v] - {u}
        return Graph._from_adj(adj)

    def eliminate(self, u: int) -> "Graph":
        return eliminate_node(self, u)

    def relabel(self, mapping: Mapping[int, int]) -> "Graph":
        """Apply a node-id bijection; node order follows the new ids' insertion order."""
        new_ids = [mapping[u] for u in self._adj]
        if len(set(new_ids)) != len(new_ids):
            raise ValueError("relabeling is not injective")
        return Graph(new_ids, ((mapping[u], mapping[v]) for u, v in self.edges()))

    def subgraph(self, nodes: Iterable[int]) -> "Graph":
        keep_set = set(nodes) & self._adj.keys()
        keep = [u for u in self._adj if u in keep_set]
        return Graph._from_adj({u: self._adj[u] & keep_set for u in keep})

    def connected_components(self) -> list[list[int]]:
        """Components in order of their first node, each in node order."""
        seen: set[int] = set()
        out = []
        for s in self._adj:
            if s in seen:
                continue
            seen.add(s)
            comp = {s}
            stack = [s]
            while stack:
                x = stack.pop()
                for y in self._adj[x]:
                    if y not in seen:
                        seen.add(y)
                        comp.add(y)
                        stack.append(y)
            out.append([u for u in self._adj if u in comp])
        return out

    def __contains__(self, u: object) -> bool:
        return u in self._adj

    def __len__(self) -> int:
        return len(self._adj)

    def __iter__(self) -> Iterator[int]:
        return iter(self._adj)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._adj == other._adj

    def __hash__(self) -> int:
        return hash(frozenset(self._adj.items()))

    def __repr__(self) -> str:
        return f"Graph(n={self.num_nodes()}, m={self.num_edges()})"


def eliminate_node(g: Graph, u: int) -> Graph:
    """Remove ``u`` from ``g`` and turn its former neighborhood into a clique."""
    if u not in g:
        raise KeyError(f"node {u} not in graph")
    nbrs = g.neighbors(u)
    adj = dict(g._adj)
    del adj[u]
    for v in nbrs:
        adj[v] = (adj[v] | nbrs) - {u, v}
    return Graph._from_adj(adj)


class ErConfig:
    """Parameters of an Erdos-Renyi G(n, p) draw; ``edge_probability`` defaults to ``min(1, 5/n)``."""

    def __init__(self, n: int, edge_probability: float | None = None, seed: int = 0):
        if n < 1:
            raise ValueError("n must be >= 1")
        p = min(1.0, 5.0 / n) if edge_probability is None else float(edge_probability)
        if not 0.0 <= p <= 1.0:
            raise ValueError("edge_probability must lie in [0, 1]")
        self.n = int(n)
        self.edge_probability = p
        self.seed = int(seed)

    def __repr__(self) -> str:
        return f"ErConfig(n={self.n}, edge_probability={self.edge_probability}, seed={self.seed})"


def generate_er(config: ErConfig) -> Graph:
    """Draw G(n, p) on nodes ``1..n``.

    One uniform variate is drawn per candidate pair ``(i, j)``, ``i < j``, in
    lexicographic order, so the result depends only on ``(n, p, seed)``.
    """
    n, p = config.n, config.edge_probability
    rng = make_rng(config.seed)
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    draws = rng.random(len(pairs))
    return Graph(range(1, n + 1), (e for e, x in zip(pairs, draws) if x < p))


class GrParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_gr(data: bytes | str) -> Graph:
    """Parse a PACE ``.gr`` instance into a graph on nodes ``1..n``.

    Self-loops and repeated edges are dropped silently.
    """
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    n = None
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] == "p":
            if n is not None:
                raise GrParseError(lineno, "duplicate 'p' header")
            if len(parts) != 4 or parts[1] != "tw":
                raise GrParseError(lineno, f"malformed header {raw.strip()!r}")
            try:
                n, _m = int(parts[2]), int(parts[3])
            except ValueError:
                raise GrParseError(lineno, f"non-integer header field in {raw.strip()!r}") from None
            if n < 0 or _m < 0:
                raise GrParseError(lineno, "negative count in header")
            continue
        if n is None:
            raise GrParseError(lineno, "edge line before 'p tw' header")
        if len(parts) != 2:
            raise GrParseError(lineno, f"expected two endpoints, got {raw.strip()!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GrParseError(lineno, f"non-integer endpoint in {raw.strip()!r}") from None
        for x in (u, v):
            if not 1 <= x <= n:
                raise GrParseError(lineno, f"endpoint {x} out of range 1..{n}")
        edges.append((u, v))
    if n is None:
        raise GrParseError(0, "missing 'p tw' header")
    return Graph(range(1, n + 1), edges)


def write_gr(g: Graph) -> bytes:
    """Serialize ``g`` as PACE ``.gr``; nodes are renumbered 1..n in sorted-id order."""
    index = {u: i for i, u in enumerate(sorted(g.nodes), 1)}
    edges = sorted(tuple(sorted((index[u], index[v]))) for u, v in g.edges())
    lines = [f"p tw {g.num_nodes()} {len(edges)}"]
    lines += [f"{u} {v}" for u, v in edges]
    return ("\n".join(lines) + "\n").encode("ascii")


# ---------------------------------------------------------------------------
# deterministic families used as fixtures and oracles


def path_graph(n: int, start: int = 1) -> Graph:
    ids = range(start, start + n)
    return Graph(ids, zip(ids, ids[1:]))


def cycle_graph(n: int, start: int = 1) -> Graph:
    ids = list(range(start, start + n))
    return Graph(ids, [(ids[i], ids[(i + 1) % n]) for i in range(n)])


def complete_graph(n: int, start: int = 1) -> Graph:
    ids = range(start, start + n)
    return Graph(ids, itertools.combinations(ids, 2))


def star_graph(leaves: int) -> Graph:
    """Center is node 1, leaves are ``2..leaves+1``."""
    return Graph(range(1, leaves + 2), ((1, v) for v in range(2, leaves + 2)))


def grid_graph(rows: int, cols: int) -> Graph:
    def nid(r: int, c: int) -> int:
        return r * cols + c + 1

    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((nid(r, c), nid(r, c + 1)))
            if r + 1 < rows:
                edges.append((nid(r, c), nid(r + 1, c)))
    return Graph(range(1, rows * cols + 1), edges)


def random_tree(n: int, seed: int) -> Graph:
    """Uniform attachment tree: node ``i`` joins a uniformly chosen earlier node."""
    rng = make_rng(seed)
    edges = [(i, int(rng.integers(1, i))) for i in range(2, n + 1)]
    return Graph(range(1, n + 1), edges)


def k_tree(n: int, k: int, seed: int) -> Graph:
    """Random k-tree on ``n >= k + 1`` nodes (treewidth exactly ``k``).

    Starts from a (k+1)-clique; every further node attaches to a uniformly
    chosen existing k-clique. Node ids are shuffled so the construction order
    is not the id order.
    """
    if n < k + 1:
        raise ValueError("a k-tree needs at least k + 1 nodes")
    rng = make_rng(seed)
    base = list(range(k + 1))
    edges = list(itertools.combinations(base, 2))
    cliques = [tuple(c) for c in itertools.combinations(base, k)]
    for v in range(k + 1, n):
        c = cliques[int(rng.integers(len(cliques)))]
        edges += [(v, w) for w in c]
        for drop in range(k):
            cliques.append(tuple(sorted(c[:drop] + c[drop + 1:] + (v,))))
    perm = rng.permutation(n) + 1
    return Graph(range(1, n + 1), ((int(perm[a]), int(perm[b])) for a, b in edges))
