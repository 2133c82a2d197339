import random
from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from structlim.canon import canonical_bytes, isomorphic
from structlim.density import density_exact
from structlim.formula import local_radius
from structlim.local import (LocalityError, agreement_radius, ball_distribution, canonical_code,
                             distribution_from_counts, local_density_from_balls, neighbourhood_volume,
                             product_expansion_density, rho, tv_distance)
from structlim.parser import parse
from structlim.structure import StructureError, ball, graph, relabel
from strategies import bounded_degree_graph, complete, cycle, graphs, path, random_formula, star


def shuffled(g, seed):
    perm = list(range(g.n))
    random.Random(seed).shuffle(perm)
    return relabel(g, perm), perm


# canonical forms

def test_agrees_with_networkx_on_random_pairs():
    rng = random.Random(0)
    for _ in range(150):
        n = rng.randint(1, 8)
        m = rng.randint(0, n * (n - 1) // 2)
        a = nx.gnm_random_graph(n, m, seed=rng.randrange(10**6))
        b = nx.gnm_random_graph(n, m, seed=rng.randrange(10**6))
        ga, gb = graph(n, a.edges()), graph(n, b.edges())
        assert isomorphic(ga, gb) == nx.is_isomorphic(a, b)


@pytest.mark.parametrize("g", [nx.petersen_graph(), nx.hypercube_graph(4), nx.grid_2d_graph(5, 5),
                               nx.random_regular_graph(3, 40, seed=2)])
def test_invariant_under_relabelling(g):
    g = nx.convert_node_labels_to_integers(g)
    s = graph(g.number_of_nodes(), g.edges())
    code = canonical_bytes(s)
    for seed in range(100 if s.n <= 16 else 10):
        assert canonical_bytes(shuffled(s, seed)[0]) == code


@given(graphs(max_n=8), st.integers(0, 2**16))
@settings(max_examples=100, deadline=None)
def test_rooted_codes_follow_the_root(g, seed):
    h, perm = shuffled(g, seed)
    for v in range(g.n):
        assert canonical_bytes(g, [v]) == canonical_bytes(h, [perm[v]])


def test_roots_are_pinned():
    p = path(3)
    assert canonical_code(ball(p, [0], 1)) != canonical_code(ball(p, [1], 1))
    c5 = cycle(5)
    assert canonical_code(ball(c5, [0], 1)) == canonical_code(ball(c5, [3], 1))


def test_single_vertex_code_is_fixed():
    k1 = graph(1, [])
    codes = {canonical_code(ball(k1, [0], r)).data for r in range(4)}
    assert len(codes) == 1


def test_large_symmetric_graphs_are_fast():
    assert isomorphic(graph(150, []), graph(150, []))
    assert isomorphic(complete(40), relabel(complete(40), list(reversed(range(40)))))


# ball distributions

def test_cycle_has_one_ball_type():
    d = ball_distribution(cycle(5), 1)
    assert list(d.freqs.values()) == [1]


def test_star_distribution():
    d = ball_distribution(star(3), 1)
    assert sorted(d.freqs.values()) == [Fraction(1, 4), Fraction(3, 4)]
    assert len(d.lines()) == 2


@given(graphs(max_n=9), st.integers(0, 3))
@settings(max_examples=60, deadline=None)
def test_frequencies_sum_to_one(g, r):
    d = ball_distribution(g, r)
    assert sum(d.freqs.values()) == 1 and all(f > 0 for f in d.freqs.values())


def test_tv_distance_examples():
    a = ball_distribution(cycle(5), 1)
    assert tv_distance(a, a) == 0
    assert tv_distance(a, ball_distribution(star(3), 1)) == 1
    codes = sorted(ball_distribution(star(3), 1).freqs)
    half = distribution_from_counts(1, {codes[0]: 1, codes[1]: 1})
    one = distribution_from_counts(1, {codes[0]: 1})
    assert tv_distance(half, one) == Fraction(1, 2)
    with pytest.raises(ValueError):
        tv_distance(a, ball_distribution(cycle(5), 2))


# rho

def test_rho_examples():
    assert rho((cycle(5), 0), (cycle(5), 2)) == 0
    assert rho((cycle(5), 0), (cycle(7), 0)) == Fraction(1, 2)
    assert rho((path(3), 0), (path(3), 1)) == 1
    assert agreement_radius((path(3), 0), (path(3), 1)) == 0


def test_rho_depth_cap():
    assert rho((cycle(20), 0), (cycle(30), 0), max_radius=5) == 0
    assert rho((cycle(20), 0), (cycle(30), 0)) == Fraction(1, 10)


def test_rho_ultrametric_on_sampled_triples():
    rng = random.Random(4)
    pool = [cycle(5), cycle(6), cycle(7), path(6), star(3), bounded_degree_graph(rng, 12)]
    rooted = [(g, v) for g in pool for v in range(min(g.n, 3))]
    for _ in range(300):
        a, b, c = (rng.choice(rooted) for _ in range(3))
        assert rho(a, c) <= max(rho(a, b), rho(b, c))


# local densities from balls

def test_local_density_examples():
    f = parse("E y @<=1(x). x~y")
    assert local_density_from_balls(star(3), f) == 1
    assert local_density_from_balls(cycle(6), parse("x~x")) == 0
    with pytest.raises(LocalityError):
        local_density_from_balls(star(3), parse("E y. x~y"))
    with pytest.raises(LocalityError):
        local_density_from_balls(star(3), f, r=0)


def test_local_density_matches_exact_on_cubic_graphs():
    rng = random.Random(7)
    fs = [random_formula(rng, ("x",), 2, 4, local=True) for _ in range(6)]
    for i in range(20):
        g = graph(*(lambda h: (h.number_of_nodes(), h.edges()))(
            nx.random_regular_graph(3, rng.choice([8, 16, 32, 64]), seed=i)))
        for f in fs:
            r = local_radius(f)
            assert local_density_from_balls(g, f, r) == density_exact(g, f).value


# product expansion

def test_neighbourhood_volume():
    assert neighbourhood_volume(3, 1) == 4
    assert neighbourhood_volume(3, 2) == 10
    assert neighbourhood_volume(2, 3) == 7
    assert neighbourhood_volume(0, 5) == 1


def test_edgeless_expansion_is_zero():
    e = product_expansion_density(graph(6, []), parse("E z @<=0(x). z~y"))
    assert e.value == 0 == density_exact(graph(6, []), parse("E z @<=0(x). z~y")).value


def test_expansion_on_cycles_within_bound():
    f = parse("(E u @<=1(x). x~u) & (E v @<=1(y). y~v) & ~(E u @<=1(x). u~y) & ~x=y")
    for n in (8, 12, 20):
        e = product_expansion_density(cycle(n), f)
        exact = density_exact(cycle(n), f).value
        assert abs(e.value - exact) <= e.error_bound


def test_expansion_bound_holds_on_random_instances():
    rng = random.Random(11)
    checked = 0
    for _ in range(60):
        g = bounded_degree_graph(rng, rng.randint(6, 24))
        f = random_formula(rng, ("x", "y"), 2, 3, local=True)
        if local_radius(f) > 1 or set(f.free_vars) != {"x", "y"}:
            continue
        e = product_expansion_density(g, f, r=1, variables=("x", "y"))
        assert abs(e.value - density_exact(g, f, ("x", "y")).value) <= e.error_bound
        checked += 1
    assert checked >= 10


def test_expansion_errors():
    with pytest.raises(LocalityError):
        product_expansion_density(cycle(5), parse("E z @<=1(x). z~x"))
    with pytest.raises(StructureError):
        product_expansion_density(star(4), parse("x~y"), degree_bound=3)
