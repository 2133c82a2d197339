"""Rooted-ball statistics for bounded-degree structures.

A ball's isomorphism type is captured by a :class:`BallCode`, the canonical
encoding of the rooted substructure. Distributions of codes are exact
rationals over all roots of a finite structure.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import total_ordering
from itertools import product
from math import comb
from typing import Mapping, Sequence

from .canon import canonical_bytes
from .density import Evaluator, EmptyStructure
from .formula import Formula, local_radius
from .structure import RootedBall, Structure, StructureError, ball, disjoint_union, max_degree


class LocalityError(ValueError):
    pass


@total_ordering
@dataclass(frozen=True)
class BallCode:
    data: bytes
    radius: int
    roots: int = 1

    def __lt__(self, other):
        return (self.data, self.radius, self.roots) < (other.data, other.radius, other.roots)

    @property
    def hex(self) -> str:
        return self.data.hex()

    def __repr__(self):
        return f"BallCode(r={self.radius}, {self.data[:40]!r}{'...' if len(self.data) > 40 else ''})"


_CODE_CACHE: dict = {}
_CACHE_LIMIT = 200_000


def canonical_code(b: RootedBall) -> BallCode:
    """Code invariant under rooted isomorphism (roots pinned in order)."""
    key = (b.structure, b.roots)
    data = _CODE_CACHE.get(key)
    if data is None:
        if len(_CODE_CACHE) >= _CACHE_LIMIT:
            _CODE_CACHE.clear()
        data = canonical_bytes(b.structure, b.roots)
        _CODE_CACHE[key] = data
    return BallCode(data, b.radius, len(b.roots))


@dataclass
class BallDistribution:
    radius: int
    freqs: dict[BallCode, Fraction]
    size: int
    representatives: dict[BallCode, RootedBall] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if any(c.radius != self.radius for c in self.freqs):
            raise ValueError("all codes must have the distribution's radius")

    def items(self):
        return sorted(self.freqs.items())

    def counts(self) -> dict[BallCode, Fraction]:
        return {c: f * self.size for c, f in self.freqs.items()}

    def lines(self) -> list[str]:
        return [f"{c.hex} {f.numerator}/{f.denominator}" for c, f in self.items()]


def ball_distribution(g: Structure, r: int) -> BallDistribution:
    if g.n == 0:
        raise EmptyStructure("ball distribution of the empty structure is undefined")
    counts: Counter = Counter()
    reps: dict[BallCode, RootedBall] = {}
    for v in range(g.n):
        b = ball(g, [v], r)
        c = canonical_code(b)
        counts[c] += 1
        reps.setdefault(c, b)
    return BallDistribution(r, {c: Fraction(k, g.n) for c, k in counts.items()}, g.n, reps)


def distribution_from_counts(radius: int, counts: Mapping[BallCode, int], reps=None) -> BallDistribution:
    total = sum(counts.values())
    return BallDistribution(radius, {c: Fraction(k, total) for c, k in counts.items() if k},
                            total, dict(reps or {}))


def tv_distance(d1: BallDistribution, d2: BallDistribution) -> Fraction:
    if d1.radius != d2.radius:
        raise ValueError(f"radius mismatch: {d1.radius} vs {d2.radius}")
    codes = set(d1.freqs) | set(d2.freqs)
    return sum((abs(d1.freqs.get(c, 0) - d2.freqs.get(c, 0)) for c in codes), Fraction(0)) / 2


def agreement_radius(a: tuple[Structure, int], b: tuple[Structure, int], max_radius: int | None = None):
    """Largest r with isomorphic radius-r balls, or None when the rooted components agree.

    Returns -1 if even the radius-0 balls differ. Comparison stops at
    ``max_radius`` when given, in which case agreement up to that depth
    counts as agreement.
    """
    (ga, oa), (gb, ob) = a, b
    r = 0
    prev = None
    while True:
        ba, bb = ball(ga, [oa], r), ball(gb, [ob], r)
        if canonical_code(ba) != canonical_code(bb):
            return r - 1
        sizes = (ba.structure.n, bb.structure.n)
        if sizes == prev or (max_radius is not None and r >= max_radius):
            return None
        prev = sizes
        r += 1


def rho(a: tuple[Structure, int], b: tuple[Structure, int], max_radius: int | None = None) -> Fraction:
    """Distance ``1/(1+r)`` between rooted structures, r the agreement radius.

    Isomorphic rooted components are at distance 0.
    """
    r = agreement_radius(a, b, max_radius)
    if r is None:
        return Fraction(0)
    return Fraction(1, 1 + max(r, 0))


def _check_local(f: Formula, r: int | None):
    radius = local_radius(f)
    if radius is None:
        raise LocalityError(f"formula is not syntactically local: {f}")
    if r is None:
        return radius
    if radius > r:
        raise LocalityError(f"formula has local radius {radius} > {r}")
    return r


def local_density_from_balls(g: Structure, f: Formula, r: int | None = None,
                             dist: BallDistribution | None = None) -> Fraction:
    """Density of a one-variable local formula from radius-r ball statistics.

    Each ball type contributes its frequency when ``f`` holds at the root of
    its representative ball.
    """
    if len(f.free_vars) != 1:
        raise LocalityError("expected exactly one free variable")
    r = _check_local(f, r)
    if dist is None:
        dist = ball_distribution(g, r)
    elif dist.radius != r:
        raise ValueError("distribution radius differs from the locality radius")
    total = Fraction(0)
    for code, freq in dist.freqs.items():
        rep = dist.representatives[code]
        if Evaluator(rep.structure).compile(f, f.free_vars)(rep.roots):
            total += freq
    return total


def neighbourhood_volume(delta: int, k: int) -> int:
    """Largest number of vertices within distance k of a vertex when degrees are at most delta."""
    if delta == 0 or k == 0:
        return 1
    return 1 + delta * sum((delta - 1) ** j for j in range(k))


@dataclass(frozen=True)
class Expansion:
    value: Fraction
    error_bound: Fraction
    nominal_bound: Fraction
    radius: int
    max_degree: int
    terms: int


def product_expansion_density(g: Structure, f: Formula, r: int | None = None,
                              degree_bound: int | None = None,
                              variables: Sequence[str] | None = None) -> Expansion:
    """Approximate ``<f, G>`` for a p-variable local formula from one-root ball types.

    Sums, over p-tuples of ball types whose disjoint union satisfies ``f``
    at the roots, the product of their frequencies. Tuples whose entries are
    pairwise at distance greater than 2r+1 are counted exactly by this sum,
    which gives ``error_bound = C(p,2) * V(delta, 2r+1) / n`` with ``V`` the
    largest (2r+1)-neighbourhood. ``nominal_bound`` is the cruder
    ``C(p,2) * delta * (delta-1)^(2r) / n``.
    """
    variables = tuple(f.free_vars if variables is None else variables)
    p = len(variables)
    if p < 2:
        raise LocalityError("the product expansion needs at least two free variables")
    if g.n == 0:
        raise EmptyStructure("empty structure")
    r = _check_local(f, r)
    delta = max_degree(g)
    if degree_bound is not None and delta > degree_bound:
        raise StructureError(f"maximum degree {delta} exceeds the bound {degree_bound}")
    dist = ball_distribution(g, r)
    codes = sorted(dist.freqs)
    value = Fraction(0)
    for combo in product(codes, repeat=p):
        reps = [dist.representatives[c] for c in combo]
        union, offsets = disjoint_union([b.structure for b in reps])
        roots = tuple(off + b.roots[0] for off, b in zip(offsets, reps))
        if Evaluator(union).compile(f, variables)(roots):
            term = Fraction(1)
            for c in combo:
                term *= dist.freqs[c]
            value += term
    pairs = comb(p, 2)
    bound = Fraction(pairs * neighbourhood_volume(delta, 2 * r + 1), g.n)
    nominal = Fraction(pairs * delta * max(delta - 1, 0) ** (2 * r), g.n)
    return Expansion(value, bound, nominal, r, delta, len(codes) ** p)
