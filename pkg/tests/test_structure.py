import random

import pytest
from hypothesis import given, settings

from structlim.io import (FormatError, format_graph, format_structure, parse, parse_manifest,
                          load_manifest)
from structlim.structure import (GRAPH, Signature, Structure, StructureError, ball, bfs_distances,
                                 disjoint_union, graph, induced, max_degree, neighborhood, relabel)
from strategies import cycle, graphs, path, random_graph, star


def test_signature_validation():
    with pytest.raises(StructureError):
        Signature((("R", 0),))
    with pytest.raises(StructureError):
        Signature((("R", 2), ("R", 1)))
    assert GRAPH.is_graph
    assert GRAPH.with_constants(["c1"]).constants == ("c1",)


def test_structure_validation():
    with pytest.raises(StructureError):
        Structure(GRAPH, 2, {"adj": {(0, 2)}})
    with pytest.raises(StructureError):
        Structure(GRAPH, 2, {"adj": {(0,)}})
    with pytest.raises(StructureError):
        Structure(GRAPH.with_constants(["c"]), 2, {"adj": set()})
    with pytest.raises(StructureError):
        Structure(GRAPH, 2, {"E": set()})


def test_graph_is_symmetric_and_loopless():
    g = graph(3, [(0, 1), (2, 2)])
    assert g.relations["adj"] == {(0, 1), (1, 0)}
    assert g.adjacency[2] == frozenset()


def test_bfs_and_neighbourhood_on_a_path():
    p = path(6)
    assert bfs_distances(p, [0]) == {i: i for i in range(6)}
    assert neighborhood(p, [2], 1) == {1, 2, 3}
    assert neighborhood(p, [0, 5], 1) == {0, 1, 4, 5}
    with pytest.raises(StructureError):
        neighborhood(p, [0], -1)


def test_numpy_integers_are_accepted_as_elements():
    import numpy as np
    assert neighborhood(path(3), [np.int64(1)], 0) == {1}


def test_ball_puts_roots_first():
    b = ball(cycle(7), [3], 2)
    assert b.roots == (0,)
    assert b.structure.n == 5
    assert max_degree(b.structure) == 2


def test_ball_drops_constants():
    s = cycle(5).expand(c=4)
    b = ball(s, [0], 1)
    assert not b.structure.constants


def test_induced_refuses_to_lose_constants():
    with pytest.raises(StructureError):
        induced(cycle(5).expand(c=4), [0, 1])


def test_induced_small_and_large_paths_agree():
    rng = random.Random(3)
    g = random_graph(rng, 40, 0.2)
    for size in (3, 8, 30):
        keep = rng.sample(range(40), size)
        order = list(keep)
        expected = {tuple(order.index(e) for e in t) for t in g.relations["adj"]
                    if all(e in keep for e in t)}
        assert induced(g, keep, order=order).relations["adj"] == expected


def test_disjoint_union_offsets():
    u, offsets = disjoint_union([path(2), path(3)])
    assert offsets == [0, 2]
    assert u.n == 5
    assert (2, 3) in u.relations["adj"] and (1, 2) not in u.relations["adj"]


@given(graphs())
@settings(max_examples=50, deadline=None)
def test_relabel_preserves_degrees(g):
    perm = list(range(g.n))
    random.Random(g.n).shuffle(perm)
    h = relabel(g, perm)
    assert sorted(len(a) for a in g.adjacency) == sorted(len(a) for a in h.adjacency)


def test_graph_format_roundtrip():
    g = star(3)
    assert parse(format_graph(g)) == g


def test_structure_format_roundtrip_with_constants():
    sig = Signature((("R", 3), ("P", 1)), ("c",))
    s = Structure(sig, 4, {"R": {(0, 1, 2), (3, 3, 0)}, "P": {(1,)}}, {"c": 2})
    assert parse(format_structure(s)) == s


def test_labelled_graph_file():
    g = parse("graph 3\n a b  # comment\n b c\n")
    assert g.labels == ("a", "b", "c")
    assert g.relations["adj"] == graph(3, [(0, 1), (1, 2)]).relations["adj"]


def test_format_errors_carry_line_numbers():
    with pytest.raises(FormatError) as err:
        parse("graph 2\n0 1 1\n")
    assert err.value.line == 2
    with pytest.raises(FormatError):
        parse("graph 2\na b\nc d\n")
    with pytest.raises(FormatError):
        parse("")


def test_manifest_paths_are_relative_to_the_manifest(tmp_path):
    (tmp_path / "a.g").write_text("graph 1\n")
    (tmp_path / "m.txt").write_text("a.g first\n")
    m = load_manifest(tmp_path / "m.txt")
    assert m.labels == ("first",)
    assert m.load()[0].n == 1
    with pytest.raises(FormatError):
        parse_manifest("# nothing\n")
