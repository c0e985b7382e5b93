"""Best-of-k solving, approximation ratios and normalized-entropy traces."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .elimination import width_of_order
from .exact import exact_treewidth_bnb, exact_treewidth_bruteforce
from .graph import Graph, make_rng
from .heuristics import min_degree_order, min_fill_order, random_order
from .policy import PolicyNet, act
from .training import rollout

METHODS = ("exact", "bnb", "min-degree", "min-fill", "random", "agent")


def solve_best_of_k(net: PolicyNet, g: Graph, k: int = 10, seed: int = 0) -> tuple[list[int], int]:
    """Sample ``k`` rollouts and keep the lowest-width one (earliest on ties).

    Sample ``i`` uses the stream ``(seed, i)``, so the first ``k`` samples are
    shared by every larger ``k``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    best_order: list[int] = []
    best_width = None
    for i in range(k):
        ep = rollout(net, g, make_rng([seed, i]))
        if best_width is None or ep.width < best_width:
            best_width, best_order = ep.width, ep.actions
    return best_order, best_width


@dataclass
class Solution:
    method: str
    order: list[int]
    width: int
    seconds: float
    proven_optimal: bool | None = None


def solve(
    g: Graph,
    method: str,
    *,
    seed: int = 0,
    k: int = 10,
    net: PolicyNet | None = None,
    time_budget: float | None = None,
) -> Solution:
    t0 = time.perf_counter()
    proven = None
    if method == "exact":
        order = exact_treewidth_bruteforce(g).order
        proven = True
    elif method == "bnb":
        res = exact_treewidth_bnb(g, time_budget)
        order, proven = res.order, res.proven_optimal
    elif method == "min-degree":
        order = min_degree_order(g)
    elif method == "min-fill":
        order = min_fill_order(g)
    elif method == "random":
        order = random_order(g, seed)
    elif method == "agent":
        if net is None:
            raise ValueError("the agent method needs a trained network")
        order, _ = solve_best_of_k(net, g, k, seed)
    else:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    width, _ = width_of_order(g, order)
    return Solution(method, list(order), width, time.perf_counter() - t0, proven)


# ---------------------------------------------------------------------------


@dataclass
class MethodSummary:
    method: str
    ratios: list[float]
    mean_ratio: float
    std_ratio: float
    max_ratio: float
    mean_seconds: float | None = None


@dataclass
class SolveReport:
    reference: str
    graph_ids: list[str]
    widths: dict[str, list[int]]
    seconds: dict[str, list[float]]
    excluded: list[str]
    summaries: dict[str, MethodSummary] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "reference": self.reference,
                "graph_ids": self.graph_ids,
                "widths": self.widths,
                "seconds": self.seconds,
                "excluded": self.excluded,
                "summary": {m: asdict(s) for m, s in self.summaries.items()},
            },
            indent=2,
        )

    def summary_csv(self) -> str:
        """One row per method with the approximation-ratio table columns."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "approx_ratio", "approx_ratio_std", "ratio_max", "avg_time_sec"])
        for m, s in self.summaries.items():
            w.writerow([m, f"{s.mean_ratio:.6f}", f"{s.std_ratio:.6f}", f"{s.max_ratio:.6f}",
                        "" if s.mean_seconds is None else f"{s.mean_seconds:.6f}"])
        return buf.getvalue()

    def per_graph_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        methods = list(self.widths)
        w.writerow(["graph", *(f"width_{m}" for m in methods), *(f"time_{m}" for m in methods)])
        for i, gid in enumerate(self.graph_ids):
            w.writerow([gid, *(self.widths[m][i] for m in methods),
                        *(f"{self.seconds[m][i]:.6f}" if m in self.seconds else "" for m in methods)])
        return buf.getvalue()


def approximation_ratio(
    widths: Mapping[str, Sequence[int]],
    reference: str,
    seconds: Mapping[str, Sequence[float]] | None = None,
    graph_ids: Sequence[str] | None = None,
) -> SolveReport:
    """Per-graph ``width / reference width`` with mean, std and max per method.

    Graphs whose reference width is 0 are left out of the ratios and listed in
    ``excluded``.
    """
    if reference not in widths:
        raise KeyError(f"reference method {reference!r} has no widths")
    n = len(widths[reference])
    if any(len(w) != n for w in widths.values()):
        raise ValueError("all methods must cover the same graphs")
    ids = list(graph_ids) if graph_ids is not None else [str(i) for i in range(n)]
    ref = widths[reference]
    keep = [i for i in range(n) if ref[i] > 0]
    seconds = dict(seconds or {})
    report = SolveReport(
        reference,
        ids,
        {m: [int(x) for x in w] for m, w in widths.items()},
        {m: [float(x) for x in s] for m, s in seconds.items()},
        [ids[i] for i in range(n) if ref[i] <= 0],
    )
    for m, w in widths.items():
        ratios = [w[i] / ref[i] for i in keep]
        arr = np.asarray(ratios, dtype=float)
        report.summaries[m] = MethodSummary(
            m,
            ratios,
            float(arr.mean()) if ratios else float("nan"),
            float(arr.std()) if ratios else float("nan"),
            float(arr.max()) if ratios else float("nan"),
            float(np.mean(seconds[m])) if m in seconds and len(seconds[m]) else None,
        )
    return report


# ---------------------------------------------------------------------------


@dataclass
class EntropyTrace:
    steps: list[int] = field(default_factory=list)
    remaining: list[int] = field(default_factory=list)
    normalized: list[float] = field(default_factory=list)
    complete: list[bool] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "remaining_nodes", "normalized_entropy"])
        for s, r, h in zip(self.steps, self.remaining, self.normalized):
            w.writerow([s, r, repr(float(h))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "EntropyTrace":
        tr = cls()
        for rec in csv.DictReader(io.StringIO(text)):
            tr.steps.append(int(rec["step"]))
            tr.remaining.append(int(rec["remaining_nodes"]))
            tr.normalized.append(float(rec["normalized_entropy"]))
        return tr


def normalized_entropy(h: float, n_actions: int) -> float:
    """Entropy divided by ``log n_actions``; defined as 0 for a single action."""
    if n_actions <= 1:
        return 0.0
    return h / math.log(n_actions)


def entropy_trace(net: PolicyNet, g: Graph, seed: int = 0) -> EntropyTrace:
    """Normalized policy entropy before every action of one sampled rollout."""
    rng = make_rng(seed)
    tr = EntropyTrace()
    graph = g
    step = 0
    while graph.num_nodes():
        a = act(net, graph, "sample", rng)
        tr.steps.append(step)
        tr.remaining.append(graph.num_nodes())
        tr.normalized.append(normalized_entropy(a.entropy, graph.num_nodes()))
        tr.complete.append(graph.is_complete())
        graph = graph.eliminate(a.node)
        step += 1
    return tr
