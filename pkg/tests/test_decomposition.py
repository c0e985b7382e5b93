import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdrl.decomposition import (
    TreeDecomposition,
    format_td,
    parse_td,
    td_from_order,
    validate_td,
    width_of_td,
)
from tdrl.elimination import InvalidOrderError, width_of_order
from tdrl.exact import exact_treewidth_bruteforce
from tdrl.graph import ErConfig, Graph, complete_graph, generate_er, grid_graph, make_rng, path_graph

from conftest import TREE7_LOWER, TREE7_UPPER

A, B, C = 1, 2, 3


def test_tree7_optimal_order(tree7):
    td = td_from_order(tree7, TREE7_LOWER)
    assert validate_td(tree7, td).ok
    assert all(len(b) <= 2 for b in td.bags)
    assert width_of_td(td) == 1


def test_tree7_upper_order(tree7):
    td = td_from_order(tree7, TREE7_UPPER)
    assert validate_td(tree7, td).ok
    assert width_of_td(td) == 2
    assert frozenset({3, 4, 5}) in td.bags


def test_complete_graph_single_bag():
    g = complete_graph(4)
    for order in ([1, 2, 3, 4], [3, 1, 4, 2]):
        td = td_from_order(g, order)
        assert td.bags == [frozenset({1, 2, 3, 4})]
        assert td.tree_edges == []


def test_random_pairs_valid_and_width_preserved():
    rng = make_rng(77)
    for i in range(200):
        n = int(rng.integers(1, 31))
        g = generate_er(ErConfig(n, None, int(rng.integers(2**31))))
        order = [g.nodes[j] for j in rng.permutation(n)]
        td = td_from_order(g, order)
        rep = validate_td(g, td)
        assert rep.ok, rep.failures()
        assert width_of_td(td) == width_of_order(g, order)[0]
        assert len(td.bags) <= n


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 20), p=st.floats(0.0, 1.0))
def test_td_property(seed, n, p):
    g = generate_er(ErConfig(n, p, seed))
    order = [g.nodes[j] for j in make_rng(seed).permutation(n)]
    td = td_from_order(g, order)
    assert validate_td(g, td).ok
    assert width_of_td(td) == width_of_order(g, order)[0]
    assert len(td.bags) <= n


def test_disconnected_graph_is_joined_into_one_tree():
    g = Graph(range(1, 8), [(1, 2), (2, 3), (4, 5), (6, 7)])
    td = td_from_order(g, [1, 4, 6, 2, 3, 5, 7])
    rep = validate_td(g, td)
    assert rep.ok, rep.failures()
    assert len(td.tree_edges) == len(td.bags) - 1


def test_isolated_nodes_get_bags():
    g = Graph([1, 2, 3])
    td = td_from_order(g, [2, 1, 3])
    assert sorted(td.bags, key=min) == [frozenset({1}), frozenset({2}), frozenset({3})]
    assert validate_td(g, td).ok


def test_invalid_order():
    with pytest.raises(InvalidOrderError):
        td_from_order(path_graph(3), [1, 2])


def test_validate_uncovered_edge():
    g = path_graph(3)  # a-b-c
    td = TreeDecomposition([frozenset({A, B}), frozenset({C})], [(0, 1)])
    rep = validate_td(g, td)
    assert rep.coverage_ok and rep.connectivity_ok
    assert rep.uncovered_edges == [(B, C)]
    assert not rep.ok


def test_validate_disconnected_node():
    g = Graph([A, B, C], [(A, B), (B, C), (A, C)])
    td = TreeDecomposition([frozenset({A, B}), frozenset({B, C}), frozenset({A, C})], [(0, 1), (1, 2)])
    rep = validate_td(g, td)
    assert rep.disconnected_nodes == [A]
    assert rep.coverage_ok and rep.edges_ok


def test_validate_missing_node():
    g = path_graph(3)
    td = TreeDecomposition([frozenset({A, B})], [])
    rep = validate_td(g, td)
    assert rep.missing_nodes == [C]
    assert rep.uncovered_edges == [(B, C)]


def test_validate_reports_non_tree():
    g = path_graph(3)
    bags = [frozenset({A, B}), frozenset({B, C}), frozenset({B})]
    assert validate_td(g, TreeDecomposition(bags, [(0, 1), (1, 2), (2, 0)])).tree_errors
    assert validate_td(g, TreeDecomposition(bags, [(0, 1)])).tree_errors
    assert validate_td(g, TreeDecomposition(bags, [(0, 5), (1, 2)])).tree_errors


def test_width_of_td():
    assert width_of_td(TreeDecomposition([frozenset({1, 2, 3, 4})])) == 3
    bags = [frozenset({1, 2}), frozenset({2, 3}), frozenset({3, 4})]
    assert width_of_td(TreeDecomposition(bags, [(0, 1), (1, 2)])) == 1
    with pytest.raises(ValueError):
        width_of_td(TreeDecomposition([]))


def test_exact_k5_td_width():
    g = complete_graph(5)
    td = td_from_order(g, exact_treewidth_bruteforce(g).order)
    assert width_of_td(td) == 4


def test_pace_td_round_trip():
    g = grid_graph(3, 4)
    td = td_from_order(g, g.nodes)
    text = format_td(td, g.num_nodes())
    assert text.startswith(f"s td {len(td.bags)} {width_of_td(td) + 1} 12\n")
    back, n = parse_td(text)
    assert n == 12
    assert back.bags == td.bags and back.tree_edges == td.tree_edges
