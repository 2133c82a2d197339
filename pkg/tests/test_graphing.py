from collections import Counter
from fractions import Fraction

import pytest

from structlim.graphing import (GraphingError, Graphing, Piece, PiecewiseMap, as_point, clean, cyclic_windows,
                                debruijn_graph, debruijn_graphing, debruijn_sequence, format_graphing_spec,
                                graphing_ball, graphing_ball_stats, graphing_component, hanf_check,
                                parse_graphing_spec, sample_points, sample_root)
from structlim.local import ball_distribution, canonical_code, tv_distance
from structlim.structure import ball, graph, max_degree

F = Fraction
G = debruijn_graphing()
f_map, t1, t2 = G.maps


def frac_point(p):
    return tuple(Fraction(int(v.numerator), int(v.denominator)) for v in p)


def test_baker_map_value():
    assert frac_point(f_map(as_point(F(1, 4), F(1, 2)))) == (F(1, 2), F(1, 4))
    assert frac_point(f_map(as_point(F(3, 4), F(1, 2)))) == (F(1, 2), F(3, 4))
    assert frac_point(f_map(as_point(F(3, 4), F(5, 2)))) == (F(3, 4), F(5, 2))


def test_involutions_and_inverse_images_on_samples():
    for p in sample_points(G, 500, seed=3):
        assert t1(t1(p)) == p and t2(t2(p)) == p
        pre = f_map.preimages(p)
        assert len(pre) == 1 and f_map(pre[0]) == p


def test_certificate_rejects_bad_maps():
    def pieces(*rows):
        return tuple(Piece(tuple(map(F, box)), tuple(map(F, rule))) for box, rule in rows)

    space = (F(1), F(1))
    with pytest.raises(GraphingError):  # stretches area
        PiecewiseMap("g", pieces(((0, F(1, 2), 0, 1), (2, 0, 1, 0)))).certify(space)
    with pytest.raises(GraphingError):  # two pieces onto the same box
        PiecewiseMap("g", pieces(((0, F(1, 2), 0, 1), (1, 0, 1, 0)),
                                 ((F(1, 2), 1, 0, 1), (1, F(-1, 2), 1, 0)))).certify(space)
    with pytest.raises(GraphingError):  # image leaves the space
        PiecewiseMap("g", pieces(((0, 1, 0, F(1, 2)), (1, 0, 1, 1)))).certify(space)
    third = F(1, 3)
    rotation = pieces(((0, third, 0, 1), (1, third, 1, 0)), ((third, 2 * third, 0, 1), (1, third, 1, 0)),
                      ((2 * third, 1, 0, 1), (1, -2 * third, 1, 0)))
    PiecewiseMap("g", rotation).certify(space)
    with pytest.raises(GraphingError):  # a rotation of thirds is not an involution
        PiecewiseMap("g", rotation, involution=True).certify(space)
    with pytest.raises(GraphingError):
        Piece((F(0), F(1), F(0), F(1)), (F(-1), F(1), F(1), F(0)))


def test_swap_is_a_certified_involution():
    swap = PiecewiseMap("s", (Piece((F(0), F(1, 2), F(0), F(1)), (F(1), F(1, 2), F(1), F(0))),
                              Piece((F(1, 2), F(1), F(0), F(1)), (F(1), F(-1, 2), F(1), F(0)))), True)
    g = Graphing((F(1), F(1)), (swap,), 1)
    assert graphing_ball(g, (F(1, 3), F(0)), 3).structure.n == 2


# the finite graphs

@pytest.mark.parametrize("n", range(1, 11))
def test_debruijn_sequence_windows(n):
    s = debruijn_sequence(n)
    w = cyclic_windows(s, n)
    assert len(s) == 2 ** n and len(w) == 2 ** n and set(w.values()) == {1}


def test_debruijn_graph_shape():
    for n in (1, 3, 6):
        g = debruijn_graph(n)
        assert g.n == 3 * 2 ** n and max_degree(g) <= 4
    with pytest.raises(GraphingError):
        debruijn_graph(0)
    with pytest.raises(GraphingError):
        debruijn_graph(21)


def test_ball_statistics_are_uniform_over_windows():
    n, r = 8, 1
    s = debruijn_sequence(n)
    g = debruijn_graph(n)
    N = len(s)
    width = 2 * r + 1
    windows = Counter(tuple(s[(i + j - r) % N] for j in range(width)) for i in range(N))
    assert set(windows.values()) == {2 ** (n - width)}
    code_of_window = {}
    for i in range(N):
        win = tuple(s[(i + j - r) % N] for j in range(width))
        code = canonical_code(ball(g, [i], r))
        assert code_of_window.setdefault(win, code) == code


# graphing balls

def test_radius_zero_ball():
    b = graphing_ball(G, sample_root(G, 1), 0)
    assert b.structure.n == 1 and b.roots == (0,)


def decorated_line(bits):
    """Finite line u_0..u_{m-1} with pendant w_i and z_i placed by bit i."""
    m = len(bits)
    edges = [(i, i + 1) for i in range(m - 1)]
    for i, bit in enumerate(bits):
        edges.append((i, m + i))
        edges.append((m + i, 2 * m + i) if bit == 0 else (i, 2 * m + i))
    return graph(3 * m, edges)


def binary_digits(v, k):
    out = []
    for _ in range(k):
        v *= 2
        out.append(int(v >= 1))
        v -= int(v >= 1)
    return out


def test_generic_ball_matches_the_bit_window():
    r = 2
    for seed in range(40):
        x, y = frac_point(sample_root(G, seed))
        if y >= 1:
            continue
        ahead = binary_digits(x, r + 1)
        behind = binary_digits(y, r)
        bits = list(reversed(behind)) + ahead
        line = decorated_line(bits)
        expected = canonical_code(ball(line, [r], r))
        assert canonical_code(graphing_ball(G, (x, y), r)) == expected


def test_rational_orbit_has_a_finite_component():
    s, points = graphing_component(G, (F(1, 15), F(8, 15)))
    assert s.n == 12 and len(set(points)) == 12
    with pytest.raises(GraphingError):
        graphing_component(G, sample_root(G, 0), limit=500)


def test_sample_root_is_deterministic_and_in_range():
    assert sample_root(G, 9) == sample_root(G, 9)
    assert sample_root(G, 9) != sample_root(G, 10)
    pts = sample_points(G, 30_000, seed=0)
    assert all(G.contains(p) for p in pts)
    rows = Counter(int(p[1]) for p in pts)
    sigma = (30_000 * (1 / 3) * (2 / 3)) ** 0.5
    assert all(abs(c - 10_000) <= 3 * sigma for c in rows.values())


def test_stats_basic_properties():
    a = graphing_ball_stats(G, 1, 3000, seed=4)
    assert sum(a.hits.values()) == 3000
    assert sum(a.estimates.values()) == 1
    b = graphing_ball_stats(G, 1, 3000, seed=4)
    assert a.hits == b.hits
    finite_codes = set(ball_distribution(debruijn_graph(10), 1).freqs)
    assert set(a.hits) <= finite_codes


def test_stats_do_not_depend_on_workers():
    a = graphing_ball_stats(G, 1, 9000, seed=2)
    b = graphing_ball_stats(G, 1, 9000, seed=2, workers=2)
    assert a.hits == b.hits


# cleaning and the Hanf comparison

def test_clean_keeps_stats_without_rare_codes():
    a = graphing_ball_stats(G, 1, 2000, seed=1)
    c = clean(a, F(1, 1000))
    assert c.hits == a.hits and not c.removed and c.threshold == F(1, 1000)


def test_clean_removes_injected_orbit():
    a = graphing_ball_stats(G, 2, 20_000, seed=0, inject=[(F(1, 15), F(8, 15))] * 2)
    injected_code = canonical_code(graphing_ball(G, (F(1, 15), F(8, 15)), 2))
    assert a.hits[injected_code] == 2
    c = clean(a, F(1, 1000))
    assert injected_code in c.removed and injected_code not in c.hits
    assert sum(c.estimates.values()) == 1
    with pytest.raises(GraphingError):
        clean(a, F(999, 1000))
    with pytest.raises(GraphingError):
        clean(a, 0)


def test_hanf_check():
    d = ball_distribution(debruijn_graph(6), 1)
    rep = hanf_check(d, d, 3, 192)
    assert rep.passed
    a = graphing_ball_stats(G, 2, 5000, seed=0, inject=[(F(1, 15), F(8, 15))])
    b = clean(a, F(1, 1000))
    rep = hanf_check(a, b, 1, 5000)
    assert len(rep.failures) == 1
    with pytest.raises(GraphingError):
        hanf_check(a, d, 1, 10)


def test_tv_between_graphing_and_finite_graph():
    stats = graphing_ball_stats(G, 2, 20_000, seed=0)
    assert tv_distance(stats.to_distribution(), ball_distribution(debruijn_graph(10), 2)) <= 0.05


# text format

def test_spec_roundtrip():
    text = format_graphing_spec(G)
    assert parse_graphing_spec(text) == G


def test_spec_errors():
    with pytest.raises(GraphingError):
        parse_graphing_spec("space 1 1\n")
    with pytest.raises(GraphingError):
        parse_graphing_spec("piece 0 1 0 1 : 1 0 1 0\n")
    with pytest.raises(GraphingError):
        parse_graphing_spec("map g\npiece 0 1 0 1 1 0 1 0\n")
    with pytest.raises(GraphingError):
        parse_graphing_spec("map g\npiece 0 1/0 0 1 : 1 0 1 0\n")
    g = parse_graphing_spec("space 1 1\nmap id\npiece 0 1 0 1 : 1 0 1 0\n")
    assert graphing_ball(g, (F(1, 2), F(1, 2)), 2).structure.n == 1
