from functools import lru_cache
from math import factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphs.graded_graph import (
    PascalGraph, TabulatedGraph, YoungGraph, builtin_graph, conjugate, hook_length_dimension,
    parse_partition, partition_label, partitions, pascal_graph, young_graph,
)
from models.exceptions import EnumerationCapExceeded, GraphFormatError, LevelError
from models.pydantic_models import FinitePath


@lru_cache(maxsize=None)
def pascal_rule(n, k):
    if k < 0 or k > n:
        return 0
    if n == 0:
        return 1
    return pascal_rule(n - 1, k - 1) + pascal_rule(n - 1, k)


def test_pascal_level_sizes():
    graph = pascal_graph(4)
    assert [len(graph.level(n)) for n in range(4)] == [1, 2, 3, 4]
    assert graph.level(2) == ["2,0", "2,1", "2,2"]


def test_pascal_path_count_follows_pascal_rule(pascal):
    for n in range(pascal.depth):
        for k in range(n + 1):
            assert pascal.path_count("0,0", f"{n},{k}") == pascal_rule(n, k)


def test_six_paths_to_4_2(pascal):
    assert pascal.path_count("0,0", "4,2") == 6
    paths = pascal.enumerate_paths("0,0", "4,2", cap=100)
    assert len(paths) == 6
    assert len(set(paths)) == 6
    assert all(p.endpoint == "4,2" and p.start_level == 0 for p in paths)


@pytest.mark.parametrize("graph", [
    PascalGraph(6),
    YoungGraph(6),
    TabulatedGraph(
        levels=[["r"], ["a", "b"], ["c", "d"]],
        edges=[("r", "a", 1), ("r", "b", 2), ("a", "c", 1), ("a", "d", 1), ("b", "c", 2), ("b", "d", 1)],
    ),
], ids=["pascal", "young", "multigraph"])
def test_path_count_equals_enumeration(graph):
    for m in range(graph.depth):
        for n in range(m + 1, graph.depth):
            for v in graph.level(m):
                for w in graph.level(n):
                    paths = graph.enumerate_paths(v, w, cap=10000)
                    assert len(paths) == graph.path_count(v, w)
                    assert len(set(paths)) == len(paths)
                    assert all(graph.is_path(p) and p.vertices[0] == v and p.endpoint == w for p in paths)


def test_enumeration_of_long_paths():
    graph = PascalGraph(1501)
    paths = graph.enumerate_paths("0,0", "1500,0", cap=1)
    assert len(paths) == 1
    assert paths[0].steps == 1500
    assert paths[0].endpoint == "1500,0"


def test_interior_vertices_have_two_predecessors(pascal):
    for n in range(2, pascal.depth):
        for k in range(1, n):
            assert len(pascal.predecessors(f"{n},{k}")) == 2
        assert len(pascal.predecessors(f"{n},0")) == 1


def test_path_count_satisfies_forward_recurrence(young):
    for w in young.level(5):
        for n in range(5):
            for v in young.level(n):
                expected = sum(k * young.path_count(u, w) for u, k in young.successors(v))
                assert young.path_count(v, w) == expected


def test_young_dimensions():
    graph = young_graph(7)
    assert graph.dimension("()") == 1
    assert graph.dimension("(2,1)") == 2
    assert graph.dimension("(2,2)") == 2
    assert graph.dimension("(3)") == 1
    assert graph.dimension("(3,2,1)") == 16


def test_hook_length_matches_path_dp(young):
    tabulated = TabulatedGraph.from_document(young.to_document())
    for n in range(young.depth):
        for label in young.level(n):
            assert young.dimension(label) == tabulated.dimension(label)


@settings(max_examples=8, deadline=None)
@given(st.integers(min_value=0, max_value=7))
def test_sum_of_squared_dimensions_is_factorial(n):
    graph = YoungGraph(8)
    assert sum(graph.dimension(v) ** 2 for v in graph.level(n)) == factorial(n)


def test_young_path_count_between_shapes(young):
    assert young.path_count("(1)", "(2,1)") == 2
    assert young.path_count("(2)", "(1,1,1)") == 0
    assert young.path_count("()", "(2,2)") == 2


def test_multigraph_dimensions(multigraph):
    assert multigraph.dimension("a") == 1
    assert multigraph.dimension("b") == 2
    assert multigraph.dimension("c") == 5
    assert multigraph.dimension("d") == 3
    assert multigraph.level_dimensions(2) == {"c": 5, "d": 3}


def test_multigraph_paths_distinguish_parallel_edges(multigraph):
    paths = multigraph.enumerate_paths("r", "c", cap=10)
    assert len(paths) == 5
    assert {p.label() for p in paths} == {"r;a;c", "r;b;c", "r;b;c#1", "r;b#1;c", "r;b#1;c#1"}
    assert multigraph.validate().passed


def test_trivial_path_enumeration(pascal):
    assert pascal.enumerate_paths("2,1", "2,1", cap=1) == [FinitePath(start_level=2, vertices=("2,1",))]


def test_enumeration_cap_refusal(pascal):
    with pytest.raises(EnumerationCapExceeded) as excinfo:
        pascal.enumerate_paths("0,0", "4,2", cap=5)
    assert excinfo.value.count == 6
    with pytest.raises(EnumerationCapExceeded):
        pascal.enumerate_level_paths(6, cap=10)


def test_builtin_graphs_validate():
    assert pascal_graph(5).validate().passed
    assert young_graph(6).validate().passed


def test_validate_reports_dangling_vertex():
    graph = TabulatedGraph(
        levels=[["r"], ["a"], ["b", "iso"]],
        edges=[("r", "a", 1), ("a", "b", 1)],
    )
    report = graph.validate()
    assert not report.passed
    assert any(v.kind == "dangling vertex" and v.vertex == "iso" for v in report.violations)


def test_validate_reports_bad_level_indexing():
    graph = TabulatedGraph(
        levels=[["r"], ["a"], ["b"]],
        edges=[("r", "a", 1), ("a", "b", 1), ("r", "b", 1)],
    )
    kinds = {v.kind for v in graph.validate().violations}
    assert "bad level indexing" in kinds


def test_validate_reports_dead_end_and_unknown_vertex():
    graph = TabulatedGraph(
        levels=[["r"], ["a", "b"], ["c"]],
        edges=[("r", "a", 1), ("r", "b", 1), ("a", "c", 1), ("b", "z", 1)],
    )
    kinds = {v.kind for v in graph.validate().violations}
    assert {"dead end", "unknown vertex"} <= kinds


def test_graph_mode_needs_single_root():
    graph = TabulatedGraph(levels=[["r", "s"], ["a"]], edges=[("r", "a", 1), ("s", "a", 1)])
    assert not graph.validate().passed
    compactum = TabulatedGraph(
        levels=[["r", "s"], ["a"]], edges=[("r", "a", 1), ("s", "a", 1)], mode="compactum"
    )
    assert compactum.validate().passed
    assert compactum.dimension("a") == 2


def test_document_round_trip_keeps_counts():
    graph = pascal_graph(5)
    tabulated = TabulatedGraph.from_document(graph.to_document())
    assert tabulated.validate().passed
    assert tabulated.path_count("0,0", "4,2") == 6
    assert tabulated.level(3) == graph.level(3)


def test_cone():
    graph = pascal_graph(5)
    assert graph.cone("4,2", 2) == ["2,0", "2,1", "2,2"]
    assert graph.cone("4,0", 2) == ["2,0"]
    assert graph.cone("4,3", 3) == ["3,2", "3,3"]
    assert young_graph(5).cone("(2,2)", 2) == ["(2)", "(1,1)"]


def test_level_errors(pascal):
    with pytest.raises(LevelError):
        pascal.path_count("3,1", "1,0")
    with pytest.raises(LevelError):
        pascal.level(7)
    with pytest.raises(LevelError):
        pascal.level_of("2,3")
    with pytest.raises(LevelError):
        pascal_graph(0)


def test_check_path_rejects_non_edges(pascal):
    with pytest.raises(LevelError):
        pascal.check_path(FinitePath(vertices=("0,0", "1,1", "2,0")))
    assert not pascal.is_path(FinitePath(vertices=("0,0", "1,0"), edge_choices=(1,)))
    assert pascal.is_path(FinitePath.parse("0,0;1,1;2,1"))


def test_partition_labels():
    assert parse_partition("(2,1)") == (2, 1)
    assert parse_partition("()") == ()
    assert partition_label((3, 1, 1)) == "(3,1,1)"
    for bad in ("(1,2)", "(2, 1)", "2,1", "(0)", "(a)"):
        with pytest.raises(LevelError):
            parse_partition(bad)


def test_partitions_and_conjugates():
    assert partitions(4) == ((4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1))
    assert conjugate((3, 1)) == (2, 1, 1)
    assert hook_length_dimension((2, 2)) == 2


def test_unknown_builtin_graph():
    with pytest.raises(GraphFormatError):
        builtin_graph("fibonacci", 4)
    assert isinstance(builtin_graph("pascal", 3), PascalGraph)


def test_finite_path_label_round_trip():
    path = FinitePath.parse("r;b#1;c#1")
    assert path.edge_choices == (1, 1)
    assert path.label() == "r;b#1;c#1"
    assert path.prefix(1).label() == "r;b#1"
    assert path.end_level == 2
