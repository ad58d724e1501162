import itertools
import math

import pytest

from graphfield.graphs import (DecoratedGraph, are_isomorphic, automorphism_count, canonical_form,
                               complete_subgraph, enumerate_graphs, internal_edge_indices, is_admissible,
                               koszul_sign,
                               ordered_partitions, parse_graph, quotient_graph, wheel)

G1 = "4;5;3>1,3>2,4>1,4>2,2>1"


def strings(classes):
    return [c.representative.to_string() for c in classes]


def test_enumerate_small_families():
    assert strings(enumerate_graphs(2, 1)) == ["2;1;1>2", "2;1;2>1"]
    assert strings(enumerate_graphs(2, 2)) == ["2;2;1>2,1>2", "2;2;1>2,2>1", "2;2;2>1,2>1"]
    assert enumerate_graphs(1, 1) == []


def test_enumeration_has_no_duplicates_up_to_relabeling():
    for n in range(2, 5):
        for l in range(0, 2 * n - 2):
            reps = [c.representative for c in enumerate_graphs(n, l, labeled=False)]
            keys = [canonical_form(g).key for g in reps]
            assert len(keys) == len(set(keys))


def test_graph_text_round_trip():
    g = parse_graph(G1)
    assert g.to_string() == G1
    assert parse_graph("3;2;1-2,2-3").directed is False
    with pytest.raises(ValueError):
        parse_graph("2;1;1>1")
    with pytest.raises(ValueError):
        parse_graph("4;5;3>1")


def test_reorder_and_opposite_flip_parity():
    g = parse_graph(G1)
    swapped = g.reorder([1, 0, 2, 3, 4])
    assert swapped.parity == -1
    assert canonical_form(swapped).sign == canonical_form(g).sign
    assert g.opposite().parity == -1
    bare = DecoratedGraph(g.n, swapped.edges)
    assert canonical_form(bare).sign == -canonical_form(g).sign


def test_wheel_shape():
    assert (wheel(2).n, wheel(2).l) == (3, 4)
    assert (wheel(3).n, wheel(3).l) == (4, 6)
    with pytest.raises(ValueError):
        wheel(1)
    for n in range(2, 6):
        w = wheel(n)
        spokes = [e for e in w.edges if e[1] == n + 1]
        assert len(spokes) == n


def test_complete_subgraph_examples():
    g = parse_graph(G1)
    assert complete_subgraph(g, [1, 2]).edges == ((2, 1),)
    assert complete_subgraph(g, [3, 4]).l == 0
    assert complete_subgraph(g, [1, 2, 3, 4]).edges == g.edges


def test_quotient_examples():
    g = parse_graph(G1)
    q = quotient_graph(g, [1, 2])
    assert (q.n, q.l) == (3, 4)
    assert sorted(q.edges) == [(2, 1), (2, 1), (3, 1), (3, 1)]
    rim = quotient_graph(wheel(3), [1, 2, 3])
    assert (rim.n, rim.l) == (2, 3)
    assert len(set(rim.edges)) == 1
    assert are_isomorphic(quotient_graph(g, [2]), g)


def test_edge_count_arithmetic():
    for cls in enumerate_graphs(4, 5, labeled=False):
        g = cls.representative
        for k in (2, 3):
            for a in itertools.combinations(range(1, 5), k):
                assert quotient_graph(g, a).l == g.l - complete_subgraph(g, a).l


def test_admissibility_examples():
    g = parse_graph(G1)
    assert is_admissible(g, [1, 2], "collapse-2n-3")
    assert not is_admissible(g, [3, 4], "collapse-2n-3")
    assert is_admissible(parse_graph("2;2;1>2,1>2"), [(1,), (2,)], "partition")
    with pytest.raises(ValueError):
        is_admissible(g, [1, 2], "collapse-2n-4")


def test_koszul_sign_examples():
    g = parse_graph(G1)
    assert koszul_sign(g, [1, 2]) == 1
    ordered = parse_graph("3;2;1>2,2>3")
    assert koszul_sign(ordered, [2, 3]) == 1
    assert koszul_sign(ordered.reorder([1, 0]), [2, 3]) == -1


def test_koszul_sign_flips_across_the_cut():
    g = parse_graph(G1)
    for a in ([1, 2], [1, 3], [2, 4], [1, 2, 3]):
        inside = set(internal_edge_indices(g, a))
        for i in range(g.l - 1):
            order = list(range(g.l))
            order[i], order[i + 1] = order[i + 1], order[i]
            h = DecoratedGraph(g.n, tuple(g.edges[k] for k in order))
            across = (i in inside) != (i + 1 in inside)
            expected = -koszul_sign(g, a) if across else koszul_sign(g, a)
            assert koszul_sign(h, a) == expected


def test_automorphism_examples():
    for n in range(2, 6):
        assert automorphism_count(wheel(n)) == n
    assert automorphism_count(parse_graph("2;1;1>2")) == 1
    assert automorphism_count(parse_graph("2;1;1-2")) == 2


def test_automorphism_count_divides_factorial():
    for n in range(2, 6):
        for l in range(0, 4):
            for cls in enumerate_graphs(n, l, labeled=False):
                assert math.factorial(n) % automorphism_count(cls.representative) == 0


def test_ordered_partitions_sorted_by_minimum():
    for part in ordered_partitions(4, 2):
        mins = [min(b) for b in part]
        assert mins == sorted(mins)
    assert len(ordered_partitions(4, 2)) == 14


def test_decorated_graph_rejects_loops():
    with pytest.raises(ValueError):
        DecoratedGraph(2, ((1, 1),))
