"""Finite relational structures and the Gaifman-graph machinery built on them.

The universe of a structure is always ``range(n)``. Relations are stored as
frozensets of tuples; everything is immutable once constructed, so structures
can be hashed, pickled and shared across workers.
"""

from __future__ import annotations

import operator
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping, Sequence


class StructureError(ValueError):
    """Raised for malformed signatures, structures, or out-of-range elements."""


@dataclass(frozen=True)
class Signature:
    relations: tuple[tuple[str, int], ...] = ()
    constants: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "relations", tuple((str(r), int(a)) for r, a in self.relations))
        object.__setattr__(self, "constants", tuple(str(c) for c in self.constants))
        names = [r for r, _ in self.relations] + list(self.constants)
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate symbol names in signature: {names}")
        for name, arity in self.relations:
            if arity < 1:
                raise StructureError(f"relation {name} has non-positive arity {arity}")

    def arity(self, name: str) -> int:
        for r, a in self.relations:
            if r == name:
                return a
        raise KeyError(name)

    def has_relation(self, name: str) -> bool:
        return any(r == name for r, _ in self.relations)

    def with_constants(self, names: Sequence[str]) -> "Signature":
        return Signature(self.relations, self.constants + tuple(names))

    @property
    def is_graph(self) -> bool:
        return self.relations == (("adj", 2),)


GRAPH = Signature((("adj", 2),))


@dataclass(frozen=True, eq=False)
class Structure:
    """A finite model over ``signature`` with universe ``range(n)``.

    ``labels`` optionally keeps the original element names from a file so
    reports can refer back to them; it plays no role in semantics.
    """

    signature: Signature
    n: int
    relations: Mapping[str, frozenset] = field(default_factory=dict)
    constants: Mapping[str, int] = field(default_factory=dict)
    labels: tuple | None = None

    def __post_init__(self):
        if self.n < 0:
            raise StructureError("universe size must be non-negative")
        rels = {}
        for name, arity in self.signature.relations:
            tuples = frozenset(tuple(int(e) for e in t) for t in self.relations.get(name, ()))
            for t in tuples:
                if len(t) != arity:
                    raise StructureError(f"tuple {t} has wrong arity for {name}/{arity}")
                if any(not 0 <= e < self.n for e in t):
                    raise StructureError(f"tuple {t} of {name} leaves universe [0,{self.n})")
            rels[name] = tuples
        extra = set(self.relations) - set(rels)
        if extra:
            raise StructureError(f"relations not in signature: {sorted(extra)}")
        consts = {}
        for c in self.signature.constants:
            if c not in self.constants:
                raise StructureError(f"constant {c} is not interpreted")
            v = int(self.constants[c])
            if not 0 <= v < self.n:
                raise StructureError(f"constant {c}={v} leaves universe [0,{self.n})")
            consts[c] = v
        object.__setattr__(self, "relations", rels)
        object.__setattr__(self, "constants", consts)

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return (self.signature == other.signature and self.n == other.n
                and self.relations == other.relations and self.constants == other.constants)

    def __hash__(self):
        return hash((self.signature, self.n, tuple(sorted(self.relations.items(), key=lambda kv: kv[0])),
                     tuple(sorted(self.constants.items()))))

    def __len__(self):
        return self.n

    def __repr__(self):
        sizes = ", ".join(f"{k}:{len(v)}" for k, v in self.relations.items())
        return f"Structure(n={self.n}, {sizes})"

    @cached_property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        """Gaifman neighbourhoods, one frozenset per element."""
        nbrs = [set() for _ in range(self.n)]
        for tuples in self.relations.values():
            for t in tuples:
                distinct = set(t)
                if len(distinct) < 2:
                    continue
                for u, v in combinations(distinct, 2):
                    nbrs[u].add(v)
                    nbrs[v].add(u)
        return tuple(frozenset(s) for s in nbrs)

    @cached_property
    def tuples_from(self) -> dict[str, dict[int, list[tuple[int, ...]]]]:
        """Tuples of each relation grouped by their first element."""
        out = {}
        for name, tuples in self.relations.items():
            by_first: dict[int, list] = {}
            for t in tuples:
                by_first.setdefault(t[0], []).append(t)
            out[name] = by_first
        return out

    @cached_property
    def sorted_adjacency(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(sorted(s)) for s in self.adjacency)

    def check_element(self, v: int) -> int:
        try:
            v = operator.index(v)
        except TypeError:
            raise StructureError(f"element {v!r} is not an integer") from None
        if not 0 <= v < self.n:
            raise StructureError(f"element {v!r} outside universe [0,{self.n})")
        return v

    def expand(self, **constants: int) -> "Structure":
        """Add interpretations for new constant symbols: ``(G, v1, ..., vp)``."""
        sig = self.signature.with_constants(list(constants))
        return Structure(sig, self.n, self.relations, {**self.constants, **constants}, self.labels)


def graph(n: int, edges: Iterable[tuple[int, int]]) -> Structure:
    """Simple undirected graph: ``adj`` is symmetrised and loops are dropped."""
    adj = set()
    for u, v in edges:
        if u == v:
            continue
        adj.add((u, v))
        adj.add((v, u))
    return Structure(GRAPH, n, {"adj": frozenset(adj)})


def edges_of(g: Structure) -> list[tuple[int, int]]:
    return sorted((u, v) for u, v in g.relations["adj"] if u < v)


def gaifman_graph(s: Structure) -> Structure:
    return graph(s.n, ((u, v) for u in range(s.n) for v in s.adjacency[u] if u < v))


def bfs_distances(s: Structure, sources: Sequence[int], r: int | None = None) -> dict[int, int]:
    """Gaifman distances from a set of sources, in BFS discovery order.

    With ``r`` given, exploration stops at distance ``r``.
    """
    dist: dict[int, int] = {}
    queue = deque()
    for v in sources:
        v = s.check_element(v)
        if v not in dist:
            dist[v] = 0
            queue.append(v)
    adj = s.sorted_adjacency
    while queue:
        u = queue.popleft()
        d = dist[u]
        if r is not None and d >= r:
            continue
        for w in adj[u]:
            if w not in dist:
                dist[w] = d + 1
                queue.append(w)
    return dist


def neighborhood(s: Structure, tup: Sequence[int], r: int) -> frozenset[int]:
    """Closed r-neighbourhood of a tuple in the Gaifman graph."""
    if r < 0:
        raise StructureError("radius must be non-negative")
    return frozenset(bfs_distances(s, tup, r))


def induced(s: Structure, elements: Iterable[int], order: Sequence[int] | None = None) -> Structure:
    """Substructure induced on ``elements``, re-indexed to ``range(|A|)``.

    Elements keep their relative order unless ``order`` is given, in which
    case element ``order[i]`` becomes ``i``.
    """
    keep = sorted(set(elements)) if order is None else list(order)
    for v in keep:
        s.check_element(v)
    index = {v: i for i, v in enumerate(keep)}
    for c, v in s.constants.items():
        if v not in index:
            raise StructureError(f"constant {c} interpreted outside the induced set")
    if 4 * len(keep) < s.n:
        # small subsets: only look at tuples starting inside the subset
        rels = {name: frozenset(tuple(index[e] for e in t) for v in keep for t in by_first.get(v, ())
                                if all(e in index for e in t))
                for name, by_first in s.tuples_from.items()}
    else:
        rels = {name: frozenset(tuple(index[e] for e in t) for t in tuples if all(e in index for e in t))
                for name, tuples in s.relations.items()}
    labels = None
    if s.labels is not None:
        labels = tuple(s.labels[v] for v in keep)
    return Structure(s.signature, len(keep), rels, {c: index[v] for c, v in s.constants.items()}, labels)


@dataclass(frozen=True)
class RootedBall:
    structure: Structure
    roots: tuple[int, ...]
    radius: int

    def __post_init__(self):
        if self.radius < 0:
            raise StructureError("radius must be non-negative")
        if not self.roots and self.structure.n:
            raise StructureError("a rooted ball needs at least one root")
        for v in self.roots:
            self.structure.check_element(v)


def ball(s: Structure, roots: Sequence[int], r: int) -> RootedBall:
    """Induced substructure on the closed r-neighbourhood of ``roots``.

    Elements are renumbered in BFS discovery order, so the roots come first.
    """
    if not roots:
        raise StructureError("ball needs at least one root")
    dist = bfs_distances(s, roots, r)
    order = list(dist)
    # constants may lie outside the ball, so the ball lives over the bare relations
    bare = s if not s.constants else Structure(Signature(s.signature.relations), s.n, s.relations)
    sub = induced(bare, order, order=order)
    index = {v: i for i, v in enumerate(order)}
    return RootedBall(sub, tuple(index[v] for v in roots), r)


def max_degree(s: Structure) -> int:
    return max((len(a) for a in s.adjacency), default=0)


def disjoint_union(parts: Sequence[Structure]) -> tuple[Structure, list[int]]:
    """Disjoint union of constant-free structures over one signature.

    Returns the union and the offset of each part.
    """
    if not parts:
        raise StructureError("empty union")
    sig = parts[0].signature
    offsets, rels, total = [], {name: set() for name, _ in sig.relations}, 0
    for p in parts:
        if p.signature.relations != sig.relations or p.constants:
            raise StructureError("disjoint union needs constant-free parts over one signature")
        offsets.append(total)
        for name, tuples in p.relations.items():
            rels[name].update(tuple(e + total for e in t) for t in tuples)
        total += p.n
    return Structure(Signature(sig.relations), total, rels), offsets


def relabel(s: Structure, perm: Sequence[int]) -> Structure:
    """Isomorphic copy where element ``v`` becomes ``perm[v]``."""
    rels = {name: frozenset(tuple(perm[e] for e in t) for t in tuples) for name, tuples in s.relations.items()}
    return Structure(s.signature, s.n, rels, {c: perm[v] for c, v in s.constants.items()})
