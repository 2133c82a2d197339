"""Random graphs and formulas shared by the test modules."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from structlim.formula import And, Exists, Forall, Not, Or, Var, adj, eq
from structlim.structure import graph

VARS = ("x", "y", "z", "w")


def random_graph(rng: random.Random, n: int, p: float = 0.5):
    return graph(n, [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p])


def bounded_degree_graph(rng: random.Random, n: int, delta: int = 3, tries: int = 4):
    """Random graph with maximum degree at most ``delta`` (greedy edge insertion)."""
    deg = [0] * n
    edges = set()
    for _ in range(tries * n):
        u, v = rng.randrange(n), rng.randrange(n)
        if u == v or (min(u, v), max(u, v)) in edges or deg[u] >= delta or deg[v] >= delta:
            continue
        edges.add((min(u, v), max(u, v)))
        deg[u] += 1
        deg[v] += 1
    return graph(n, edges)


def cycle(n: int):
    return graph(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int):
    return graph(n, [(i, i + 1) for i in range(n - 1)])


def complete(n: int):
    return graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star(leaves: int):
    return graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def random_formula(rng: random.Random, free=("x", "y"), qrank: int = 2, size: int = 3,
                   local: bool = False, pool=VARS):
    """Random formula over ``adj`` and ``=`` whose free variables lie in ``free``.

    With ``local`` every quantifier is relativised to radius 1 around a
    variable already in scope.
    """

    def atom(scope):
        a, b = rng.choice(scope), rng.choice(scope)
        return adj(a, b) if rng.random() < 0.7 else eq(a, b)

    def go(scope, rank, budget):
        roll = rng.random()
        if budget <= 0 or roll < 0.25:
            return atom(scope)
        if roll < 0.4:
            return Not(go(scope, rank, budget - 1))
        if roll < 0.7 or rank == 0:
            cls = And if rng.random() < 0.5 else Or
            return cls(go(scope, rank, budget - 1), go(scope, rank, budget - 1))
        fresh = [v for v in pool if v not in scope]
        var = rng.choice(fresh) if fresh else rng.choice(pool)
        cls = Exists if rng.random() < 0.5 else Forall
        inner_scope = list(dict.fromkeys([*scope, var]))
        body = go(inner_scope, rank - 1, budget - 1)
        if local:
            return cls(var, body, 1, (Var(rng.choice(scope)),))
        return cls(var, body)

    scope = list(free) if free else [rng.choice(pool)]
    f = go(scope, qrank, size)
    if not free:
        # close the formula off so it is a sentence
        for v in reversed(f.free_vars):
            f = Exists(v, f)
    return f


@st.composite
def graphs(draw, max_n: int = 7, min_n: int = 1):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return graph(n, [e for e, keep in zip(pairs, mask) if keep])


@st.composite
def formulas(draw, free=("x", "y"), qrank: int = 2, local: bool = False):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_formula(random.Random(seed), free, qrank, draw(st.integers(0, 4)), local)
