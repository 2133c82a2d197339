"""Canonical forms of finite structures with an ordered tuple of roots.

Individualisation-refinement: colour refinement with the roots pinned, then
a search over individualisations of the first non-singleton cell. Each leaf
of the search is a discrete ordered partition, i.e. a labelling; the
canonical form is the smallest encoding over all leaves. Automorphisms found
along the way (two leaves with equal encodings) prune branches that are
images of explored ones.
"""

from __future__ import annotations

from typing import Sequence

from .structure import Structure


def _incidence(s: Structure):
    names = [name for name, _ in s.signature.relations]
    inc = [[] for _ in range(s.n)]
    for r, name in enumerate(names):
        for t in s.relations[name]:
            for v in set(t):
                inc[v].append((r, t))
    return inc


def _initial_cells(s: Structure, roots: Sequence[int]):
    keys = {}
    for v in range(s.n):
        positions = tuple(i for i, r in enumerate(roots) if r == v)
        consts = tuple(sorted(c for c, x in s.constants.items() if x == v))
        keys[v] = (positions, consts)
    order = sorted(set(keys.values()))
    return [[v for v in range(s.n) if keys[v] == k] for k in order]


def _swap_is_automorphism(s: Structure, inc, u, v):
    def sw(x):
        return v if x == u else u if x == v else x

    names = [name for name, _ in s.signature.relations]
    for r, t in inc[u] + inc[v]:
        if tuple(sw(x) for x in t) not in s.relations[names[r]]:
            return False
    return True


def _twin_generators(s: Structure, inc, cells):
    """Transpositions of twins, chained inside each twin class.

    Swapping two twins preserves every relation, so these are automorphisms
    and let the search skip the factorial blow-up of large twin classes.
    """
    cell_of = {v: i for i, c in enumerate(cells) for v in c}
    gens = []
    for closed in (False, True):
        groups = {}
        for v in range(s.n):
            nb = s.adjacency[v] | {v} if closed else s.adjacency[v]
            groups.setdefault((cell_of[v], nb), []).append(v)
        for members in groups.values():
            members.sort()
            for u, v in zip(members, members[1:]):
                if _swap_is_automorphism(s, inc, u, v):
                    a = list(range(s.n))
                    a[u], a[v] = v, u
                    gens.append(a)
    return gens


def _refine(cells, inc):
    """Equitable refinement of an ordered partition; cell order stays canonical."""
    while True:
        color = {}
        for i, cell in enumerate(cells):
            for v in cell:
                color[v] = i
        new = []
        for cell in cells:
            if len(cell) == 1:
                new.append(cell)
                continue
            sig = {}
            for v in cell:
                sig[v] = tuple(sorted((r, tuple(-1 if x == v else color[x] for x in t)) for r, t in inc[v]))
            groups = {}
            for v in cell:
                groups.setdefault(sig[v], []).append(v)
            for key in sorted(groups):
                new.append(groups[key])
        if len(new) == len(cells):
            return new
        cells = new


def _encode(s: Structure, roots, order):
    label = [0] * s.n
    for i, v in enumerate(order):
        label[v] = i
    rels = tuple(tuple(sorted(tuple(label[x] for x in t) for t in s.relations[name]))
                 for name, _ in s.signature.relations)
    consts = tuple(sorted((c, label[v]) for c, v in s.constants.items()))
    return (s.n, tuple(label[r] for r in roots), rels, consts)


def canonical_form(s: Structure, roots: Sequence[int] = ()):
    """Return ``(encoding, order)`` where ``order[i]`` is the element labelled i.

    Two rooted structures are isomorphic (respecting the order of roots and
    the constants) iff their encodings are equal.
    """
    roots = tuple(roots)
    if s.n == 0:
        return _encode(s, roots, []), []
    inc = _incidence(s)
    best = [None, None]
    start = _refine(_initial_cells(s, roots), inc)
    autos: list[list[int]] = _twin_generators(s, inc, start)

    def orbit_closure(seed, prefix):
        gens = [a for a in autos if all(a[p] == p for p in prefix)]
        seen = set(seed)
        stack = list(seed)
        while stack:
            v = stack.pop()
            for a in gens:
                w = a[v]
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    def search(cells, prefix):
        if len(cells) == s.n:
            order = [c[0] for c in cells]
            enc = _encode(s, roots, order)
            if best[0] is None or enc < best[0]:
                best[0], best[1] = enc, order
            elif enc == best[0]:
                a = [0] * s.n
                for u, v in zip(order, best[1]):
                    a[u] = v
                autos.append(a)
            return
        k = next(i for i, c in enumerate(cells) if len(c) > 1)
        tried: list[int] = []
        orbit, seen_autos = set(), -1
        for v in sorted(cells[k]):
            if tried:
                # closure only changes when a child was explored or new automorphisms appeared
                if len(autos) != seen_autos or tried[-1] not in orbit:
                    orbit, seen_autos = orbit_closure(tried, prefix), len(autos)
                if v in orbit:
                    continue
            rest = [w for w in cells[k] if w != v]
            child = _refine(cells[:k] + [[v], rest] + cells[k + 1:], inc)
            search(child, prefix + [v])
            tried.append(v)

    search(start, [])
    return best[0], best[1]


def encoding_bytes(enc) -> bytes:
    n, roots, rels, consts = enc
    parts = [str(n), ",".join(map(str, roots))]
    for tuples in rels:
        parts.append(";".join(",".join(map(str, t)) for t in tuples))
    parts.append(";".join(f"{c}={v}" for c, v in consts))
    return "|".join(parts).encode()


def canonical_bytes(s: Structure, roots: Sequence[int] = ()) -> bytes:
    sig = ";".join(f"{name}/{a}" for name, a in s.signature.relations)
    return sig.encode() + b"#" + encoding_bytes(canonical_form(s, roots)[0])


def isomorphic(a: Structure, b: Structure, roots_a: Sequence[int] = (), roots_b: Sequence[int] = ()) -> bool:
    if a.n != b.n or a.signature != b.signature:
        return False
    if any(len(a.relations[r]) != len(b.relations[r]) for r in a.relations):
        return False
    return canonical_bytes(a, roots_a) == canonical_bytes(b, roots_b)
