"""Tree decompositions: construction from an elimination order, validation, PACE ``.td`` I/O."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .elimination import EliminationOrder, check_order
from .graph import Graph


@dataclass
class TreeDecomposition:
    bags: list[frozenset[int]]
    tree_edges: list[tuple[int, int]] = field(default_factory=list)

    @property
    def width(self) -> int:
        return width_of_td(self)


@dataclass
class ValidationReport:
    missing_nodes: list[int] = field(default_factory=list)
    uncovered_edges: list[tuple[int, int]] = field(default_factory=list)
    disconnected_nodes: list[int] = field(default_factory=list)
    tree_errors: list[str] = field(default_factory=list)

    @property
    def coverage_ok(self) -> bool:
        return not self.missing_nodes

    @property
    def edges_ok(self) -> bool:
        return not self.uncovered_edges

    @property
    def connectivity_ok(self) -> bool:
        return not self.disconnected_nodes

    @property
    def ok(self) -> bool:
        return self.coverage_ok and self.edges_ok and self.connectivity_ok and not self.tree_errors

    def failures(self) -> list[str]:
        out = []
        if self.missing_nodes:
            out.append(f"condition 1: nodes in no bag: {self.missing_nodes}")
        if self.uncovered_edges:
            out.append(f"condition 2: edges in no bag: {self.uncovered_edges}")
        if self.disconnected_nodes:
            out.append(f"condition 3: bags containing these nodes are disconnected: {self.disconnected_nodes}")
        out.extend(self.tree_errors)
        return out


def td_from_order(g: Graph, order: EliminationOrder) -> TreeDecomposition:
    """Build a tree decomposition while eliminating ``order``.

    Each eliminated node ``u`` yields the bag ``{u} | N(u)``. Open ("leaf") bags
    wait for their parent, which is the bag of the first of their members to be
    eliminated later. A new bag contained in an open bag is not created; the
    open bag stands in for it. Component roots are chained at the end so that
    the result is always a single tree.
    """
    check_order(g, order)
    adj = g.adjacency()
    bags: list[frozenset[int]] = []
    edges: list[tuple[int, int]] = []
    leaf_bags: list[int] = []  # insertion order; first match wins

    for u in order:
        nbrs = adj.pop(u)
        for v in nbrs:
            av = adj[v]
            av |= nbrs
            av.discard(v)
            av.discard(u)
        b = frozenset(nbrs | {u})

        bid = next((l for l in leaf_bags if b <= bags[l]), None)
        if bid is None:
            bid = len(bags)
            bags.append(b)
            leaf_bags.append(bid)
        keep = []
        for l in leaf_bags:
            if l != bid and u in bags[l]:
                edges.append((l, bid))
            else:
                keep.append(l)
        leaf_bags = keep

    # one open bag per connected component remains
    for a, c in zip(leaf_bags, leaf_bags[1:]):
        edges.append((a, c))
    return TreeDecomposition(bags, edges)


def width_of_td(td: TreeDecomposition) -> int:
    if not td.bags:
        raise ValueError("empty tree decomposition has no width")
    return max(len(b) for b in td.bags) - 1


def validate_td(g: Graph, td: TreeDecomposition) -> ValidationReport:
    """Check the three tree-decomposition conditions and that the bag graph is a tree.

    Never raises on an invalid decomposition; failures carry witnesses.
    """
    report = ValidationReport()
    nb = len(td.bags)
    tree_adj: dict[int, list[int]] = defaultdict(list)
    for a, c in td.tree_edges:
        if not (0 <= a < nb and 0 <= c < nb) or a == c:
            report.tree_errors.append(f"tree edge ({a}, {c}) is invalid")
            continue
        tree_adj[a].append(c)
        tree_adj[c].append(a)

    if nb and not report.tree_errors:
        if len(td.tree_edges) != nb - 1 or len(_reach(0, tree_adj, None)) != nb:
            report.tree_errors.append(
                f"bag graph is not a tree ({nb} bags, {len(td.tree_edges)} edges)"
            )

    where: dict[int, list[int]] = defaultdict(list)
    for i, b in enumerate(td.bags):
        for v in b:
            where[v].append(i)

    report.missing_nodes = [u for u in g.nodes if u not in where]
    for u, v in g.edges():
        if not set(where.get(u, ())) & set(where.get(v, ())):
            report.uncovered_edges.append((u, v))
    for u in g.nodes:
        holders = where.get(u)
        if holders and len(_reach(holders[0], tree_adj, set(holders))) != len(holders):
            report.disconnected_nodes.append(u)
    return report


def _reach(start: int, adj: dict[int, list[int]], allowed: set[int] | None) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in adj.get(x, ()):
            if y not in seen and (allowed is None or y in allowed):
                seen.add(y)
                stack.append(y)
    return seen


def format_td(td: TreeDecomposition, n: int) -> str:
    """PACE solution format; bag ids are 1-based."""
    lines = [f"s td {len(td.bags)} {max((len(b) for b in td.bags), default=0)} {n}"]
    for i, b in enumerate(td.bags, 1):
        lines.append(" ".join(["b", str(i), *map(str, sorted(b))]))
    for a, c in td.tree_edges:
        lines.append(f"{a + 1} {c + 1}")
    return "\n".join(lines) + "\n"


def parse_td(text: str) -> tuple[TreeDecomposition, int]:
    """Inverse of :func:`format_td`; returns the decomposition and the declared node count."""
    header = None
    bags: dict[int, frozenset[int]] = {}
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] == "s":
            if len(parts) != 5 or parts[1] != "td":
                raise ValueError(f"line {lineno}: malformed solution line")
            header = tuple(int(x) for x in parts[2:])
        elif parts[0] == "b":
            bags[int(parts[1])] = frozenset(int(x) for x in parts[2:])
        else:
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: malformed tree edge")
            edges.append((int(parts[0]) - 1, int(parts[1]) - 1))
    if header is None:
        raise ValueError("missing 's td' line")
    num_bags, _, n = header
    if sorted(bags) != list(range(1, num_bags + 1)):
        raise ValueError("bag ids must be 1..num_bags")
    return TreeDecomposition([bags[i] for i in range(1, num_bags + 1)], edges), n
