"""Treewidth through elimination orders: greedy heuristics, exact search and a GCN actor-critic policy."""

from .decomposition import TreeDecomposition, td_from_order, validate_td, width_of_td
from .elimination import fill_in_count, width_of_order
from .exact import exact_treewidth_bnb, exact_treewidth_bruteforce
from .graph import ErConfig, Graph, eliminate_node, generate_er, parse_gr, write_gr
from .heuristics import min_degree_order, min_fill_order, random_order

__version__ = "0.1.0"

__all__ = [
    "ErConfig",
    "Graph",
    "TreeDecomposition",
    "eliminate_node",
    "exact_treewidth_bnb",
    "exact_treewidth_bruteforce",
    "fill_in_count",
    "generate_er",
    "min_degree_order",
    "min_fill_order",
    "parse_gr",
    "random_order",
    "td_from_order",
    "validate_td",
    "width_of_order",
    "width_of_td",
    "write_gr",
]
