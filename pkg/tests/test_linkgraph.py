"""Graph building, redirect resolution and edge-list round trips."""

import logging

import pytest

from annoforge.linkgraph import LinkGraph, build_link_graph, read_edge_list, resolve_redirect, write_edge_list

# Five pages, resolved by hand:
#   A links B, Alias(->B), Chain(->Alias->B), Loop1(->Loop2->Loop1), Missing
#   B links A and itself (self-loop dropped after resolution)
HAND_PAGES = [
    ("A", ["B", "Alias", "Chain", "Loop1", "Missing"]),
    ("B", ["A", "B"]),
]
HAND_REDIRECTS = {"Alias": "B", "Chain": "Alias", "Loop1": "Loop2", "Loop2": "Loop1"}


def test_hand_resolved_fixture():
    graph = build_link_graph(HAND_PAGES, HAND_REDIRECTS)
    assert graph.titles == ["A", "B"]
    # A's five links collapse to the single node B; B keeps only A.
    assert graph.out_edges == [[1], [0]]


def test_redirect_cycle_warns(caplog):
    with caplog.at_level(logging.WARNING):
        assert resolve_redirect("Loop1", HAND_REDIRECTS) is None
    assert any("cycle" in rec.message for rec in caplog.records)


def test_transitive_chain():
    assert resolve_redirect("Chain", HAND_REDIRECTS) == "B"
    assert resolve_redirect("B", HAND_REDIRECTS) == "B"


def test_node_order_is_sorted_titles():
    pages = [("Zèbre", ["Ane"]), ("Ane", ["Zèbre"]), ("Mule", [])]
    graph = build_link_graph(pages)
    assert graph.titles == sorted(["Zèbre", "Ane", "Mule"])
    assert graph.index == {t: i for i, t in enumerate(graph.titles)}


def test_redirect_pages_are_not_nodes():
    pages = [("A", ["R"]), ("R", ["A"]), ("B", [])]
    graph = build_link_graph(pages, {"R": "B"})
    assert graph.titles == ["A", "B"]
    assert graph.out_edges[graph.index["A"]] == [graph.index["B"]]


def test_duplicate_edges_collapsed():
    pages = [("A", ["B", "B", "Alias"]), ("B", [])]
    graph = build_link_graph(pages, {"Alias": "B"})
    assert graph.out_edges == [[1], []]


def test_edge_list_roundtrip(tmp_path):
    graph = build_link_graph(HAND_PAGES, HAND_REDIRECTS)
    path = tmp_path / "graph.tsv"
    write_edge_list(graph, path, header={"source": "test"})
    text = path.read_text(encoding="utf-8")
    assert text.startswith("# source: test\nnodes 2\n")
    loaded = read_edge_list(path)
    assert loaded.titles == graph.titles
    assert loaded.out_edges == graph.out_edges


def test_edge_list_bytes_deterministic(tmp_path):
    graph = build_link_graph(HAND_PAGES, HAND_REDIRECTS)
    p1, p2 = tmp_path / "a.tsv", tmp_path / "b.tsv"
    write_edge_list(graph, p1)
    write_edge_list(graph, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_read_rejects_out_of_range_edge(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("nodes 1\n0\tA\nedges 1\n0\t3\n", encoding="utf-8")
    with pytest.raises(ValueError, match="out of range"):
        read_edge_list(path)


def test_build_is_deterministic_across_input_order():
    forward = build_link_graph(HAND_PAGES, HAND_REDIRECTS)
    backward = build_link_graph(list(reversed(HAND_PAGES)), HAND_REDIRECTS)
    assert forward.titles == backward.titles
    assert forward.out_edges == backward.out_edges


def test_counts():
    graph = LinkGraph(titles=["A", "B", "C"], out_edges=[[1, 2], [], [0]])
    assert graph.node_count == 3
    assert graph.edge_count == 3
