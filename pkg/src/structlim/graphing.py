"""Graphings on a rational box, their sampled ball statistics, and the De Bruijn example.

A graphing here is a box ``[0,W) x [0,H)`` with finitely many piecewise
affine maps. Each piece sends a half-open box to a box by
``(x, y) -> (a x + b, c y + d)`` with positive rational ``a, c``; outside
its pieces a map is the identity. Two points are adjacent when one is the
image of the other under some map. Points are exact rationals, so orbits
never drift and equal points are genuinely equal.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np
from gmpy2 import mpq

from .local import BallCode, BallDistribution, canonical_code
from .structure import RootedBall, Structure, graph

DEFAULT_BITS = 64
DEFAULT_THETA = Fraction(1, 10_000)
_BLOCK = 4096


class GraphingError(ValueError):
    pass


def _q(v) -> mpq:
    if isinstance(v, str):
        v = Fraction(v)
    if isinstance(v, Fraction):
        return mpq(v.numerator, v.denominator)
    return mpq(v)


def _frac(v: mpq) -> Fraction:
    return Fraction(int(v.numerator), int(v.denominator))


Point = tuple  # (mpq, mpq)


def as_point(x, y) -> Point:
    return (_q(x), _q(y))


@dataclass(frozen=True)
class Piece:
    """``(x, y) -> (a x + b, c y + d)`` on the box ``[x0,x1) x [y0,y1)``."""

    box: tuple
    rule: tuple

    def __post_init__(self):
        x0, x1, y0, y1 = self.box
        a, _, c, _ = self.rule
        if not (x0 < x1 and y0 < y1):
            raise GraphingError(f"empty region {self.box}")
        if a <= 0 or c <= 0:
            raise GraphingError("only positive scale factors are supported")

    def contains(self, p) -> bool:
        x0, x1, y0, y1 = self.box
        return x0 <= p[0] < x1 and y0 <= p[1] < y1

    def apply(self, p) -> Point:
        a, b, c, d = self.rule
        return (a * p[0] + b, c * p[1] + d)

    def image(self) -> tuple:
        x0, x1, y0, y1 = self.box
        a, b, c, d = self.rule
        return (a * x0 + b, a * x1 + b, c * y0 + d, c * y1 + d)

    def in_image(self, p) -> bool:
        x0, x1, y0, y1 = self.image()
        return x0 <= p[0] < x1 and y0 <= p[1] < y1

    def invert(self, p) -> Point:
        a, b, c, d = self.rule
        return ((p[0] - b) / a, (p[1] - d) / c)


def _boxes_overlap(u, v) -> bool:
    return u[0] < v[1] and v[0] < u[1] and u[2] < v[3] and v[2] < u[3]


def _area(box):
    return (box[1] - box[0]) * (box[3] - box[2])


@dataclass(frozen=True)
class PiecewiseMap:
    name: str
    pieces: tuple[Piece, ...]
    involution: bool = False

    def __call__(self, p) -> Point:
        for piece in self.pieces:
            if piece.contains(p):
                return piece.apply(p)
        return p

    def preimages(self, p) -> list[Point]:
        if not any(piece.contains(p) for piece in self.pieces):
            out = [p]
        else:
            out = []
        out.extend(piece.invert(p) for piece in self.pieces if piece.in_image(p))
        return out

    def certify(self, space) -> None:
        """Check that the map is a measure-preserving bijection of the box.

        Pieces and their images must be pairwise disjoint, stay inside the
        space, scale area by exactly 1, and the images must cover exactly
        the union of the pieces (the map is the identity elsewhere).
        """
        W, H = space
        boxes = [p.box for p in self.pieces]
        images = [p.image() for p in self.pieces]
        for b in boxes + images:
            if not (0 <= b[0] and b[1] <= W and 0 <= b[2] and b[3] <= H):
                raise GraphingError(f"{self.name}: box {b} leaves the space")
        for u, v in combinations(boxes, 2):
            if _boxes_overlap(u, v):
                raise GraphingError(f"{self.name}: overlapping regions {u} and {v}")
        for u, v in combinations(images, 2):
            if _boxes_overlap(u, v):
                raise GraphingError(f"{self.name}: overlapping images {u} and {v}")
        for piece, img in zip(self.pieces, images):
            if _area(img) != _area(piece.box):
                raise GraphingError(f"{self.name}: piece {piece.box} does not preserve measure")
        xs = sorted({v for b in boxes + images for v in b[:2]})
        ys = sorted({v for b in boxes + images for v in b[2:]})
        for x0, x1 in zip(xs, xs[1:]):
            for y0, y1 in zip(ys, ys[1:]):
                mid = ((x0 + x1) / 2, (y0 + y1) / 2)
                inside = any(p.contains(mid) for p in self.pieces)
                covered = any(p.in_image(mid) for p in self.pieces)
                if inside != covered:
                    raise GraphingError(f"{self.name}: not a bijection near {tuple(map(_frac, mid))}")
                if self.involution and self(self(mid)) != mid:
                    raise GraphingError(f"{self.name}: not an involution at {tuple(map(_frac, mid))}")


@dataclass(frozen=True)
class Graphing:
    space: tuple
    maps: tuple[PiecewiseMap, ...]
    degree_bound: int

    def __post_init__(self):
        if not (self.space[0] > 0 and self.space[1] > 0):
            raise GraphingError("space must have positive width and height")
        names = [m.name for m in self.maps]
        if len(set(names)) != len(names):
            raise GraphingError("duplicate map names")
        for m in self.maps:
            m.certify(self.space)

    def contains(self, p) -> bool:
        return 0 <= p[0] < self.space[0] and 0 <= p[1] < self.space[1]

    def neighbours(self, p) -> list[Point]:
        out: dict = {}
        for m in self.maps:
            q = m(p)
            if m.involution and m(q) != p:
                raise GraphingError(f"{m.name} fails the involution law at {tuple(map(_frac, p))}")
            out.setdefault(q, None)
            if not m.involution:
                for q in m.preimages(p):
                    out.setdefault(q, None)
        out.pop(p, None)
        if len(out) > self.degree_bound:
            raise GraphingError(f"point {tuple(map(_frac, p))} has degree {len(out)} "
                                f"> declared bound {self.degree_bound}")
        return list(out)


def _explore(g: Graphing, root, r: int | None, limit: int | None):
    root = (_q(root[0]), _q(root[1]))
    if not g.contains(root):
        raise GraphingError("root outside the space")
    dist = {root: 0}
    frontier = [root]
    nbrs: dict = {}
    while frontier:
        nxt = []
        for p in frontier:
            nbrs[p] = g.neighbours(p)
            if r is not None and dist[p] >= r:
                continue
            for q in nbrs[p]:
                if q not in dist:
                    dist[q] = dist[p] + 1
                    nxt.append(q)
                    if limit is not None and len(dist) > limit:
                        raise GraphingError(f"component exceeds {limit} vertices")
        frontier = nxt
    order = list(dist)
    index = {p: i for i, p in enumerate(order)}
    edges = [(index[p], index[q]) for p in order for q in nbrs[p] if q in index]
    return graph(len(order), edges), order, max(dist.values())


def graphing_ball(g: Graphing, p, r: int) -> RootedBall:
    """Radius-r ball around ``p``, vertices numbered in BFS order (root 0)."""
    if r < 0:
        raise GraphingError("radius must be non-negative")
    s, _, _ = _explore(g, p, r, None)
    return RootedBall(s, (0,), r)


def graphing_component(g: Graphing, p, limit: int = 100_000) -> tuple[Structure, list]:
    """Connected component of ``p`` and its points; fails past ``limit`` vertices."""
    s, order, _ = _explore(g, p, None, limit)
    return s, [tuple(map(_frac, q)) for q in order]


# sampling

def sample_points(g: Graphing, count: int, seed: int = 0, bits: int = DEFAULT_BITS) -> list[Point]:
    """Uniform points on a grid of step ``W/2^bits`` by ``H/2^bits``.

    Block ``b`` of 4096 points draws from the stream ``(seed, b)``.
    """
    if not 1 <= bits <= 64:
        raise GraphingError("bits must be between 1 and 64")
    W, H = g.space
    scale = mpq(1, 2 ** bits)
    out = []
    for b, start in enumerate(range(0, count, _BLOCK)):
        m = min(_BLOCK, count - start)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        raw = rng.integers(0, 2 ** bits, size=(m, 2), dtype=np.uint64, endpoint=False)
        out.extend((W * int(kx) * scale, H * int(ky) * scale) for kx, ky in raw.tolist())
    return out


def sample_root(g: Graphing, seed: int = 0, bits: int = DEFAULT_BITS) -> Point:
    return sample_points(g, 1, seed, bits)[0]


@dataclass(frozen=True)
class SampledBallStats:
    """Hit counts of ball codes among sampled roots.

    After :func:`clean`, ``removed`` holds the dropped codes with their hits,
    ``threshold`` the cut-off, and ``samples`` the surviving total.
    """

    radius: int
    samples: int
    seed: int
    hits: dict
    threshold: Fraction | None = None
    removed: dict = field(default_factory=dict)
    injected: int = 0
    representatives: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if sum(self.hits.values()) != self.samples:
            raise GraphingError("hits must sum to the sample count")

    @property
    def estimates(self) -> dict[BallCode, Fraction]:
        return {c: Fraction(h, self.samples) for c, h in self.hits.items()}

    def to_distribution(self) -> BallDistribution:
        return BallDistribution(self.radius, self.estimates, self.samples, dict(self.representatives))

    def lines(self) -> list[str]:
        return [f"{c.hex} {h} {float(Fraction(h, self.samples)):.6f}" for c, h in sorted(self.hits.items())]


def _code_chunk(g, roots, r):
    hits: Counter = Counter()
    reps = {}
    for p in roots:
        b = graphing_ball(g, p, r)
        c = canonical_code(b)
        hits[c] += 1
        reps.setdefault(c, b)
    return hits, reps


def graphing_ball_stats(g: Graphing, r: int, samples: int, seed: int = 0, *,
                        inject: Sequence = (), bits: int = DEFAULT_BITS,
                        workers: int = 1) -> SampledBallStats:
    """Ball-code counts over ``samples`` roots.

    ``inject`` lists explicit roots that take the place of the last random
    draws, so the total stays ``samples``. The result does not depend on
    ``workers``.
    """
    if samples < 1:
        raise GraphingError("need at least one sample")
    inject = [as_point(*p) for p in inject]
    if len(inject) > samples:
        raise GraphingError("more injected roots than samples")
    roots = sample_points(g, samples - len(inject), seed, bits) + inject
    if workers > 1 and len(roots) > _BLOCK:
        chunks = [roots[i:i + _BLOCK] for i in range(0, len(roots), _BLOCK)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_code_chunk, [g] * len(chunks), chunks, [r] * len(chunks)))
    else:
        parts = [_code_chunk(g, roots, r)]
    hits: Counter = Counter()
    reps: dict = {}
    for h, rp in parts:
        hits.update(h)
        for c, b in rp.items():
            reps.setdefault(c, b)
    return SampledBallStats(r, samples, seed, dict(hits), None, {}, len(inject), reps)


def clean(stats: SampledBallStats, theta=DEFAULT_THETA) -> SampledBallStats:
    """Drop codes whose estimated measure is below ``theta`` and renormalise."""
    theta = Fraction(theta)
    if not 0 < theta < 1:
        raise GraphingError("threshold must lie strictly between 0 and 1")
    keep = {c: h for c, h in stats.hits.items() if Fraction(h, stats.samples) >= theta}
    if not keep:
        raise GraphingError(f"threshold {theta} removes every code")
    removed = dict(stats.removed)
    removed.update({c: h for c, h in stats.hits.items() if c not in keep})
    reps = {c: b for c, b in stats.representatives.items() if c in keep}
    return SampledBallStats(stats.radius, sum(keep.values()), stats.seed, keep, theta, removed,
                            stats.injected, reps)


# comparison with finite graphs

def _freqs(src):
    if isinstance(src, SampledBallStats):
        return src.radius, src.estimates
    if isinstance(src, BallDistribution):
        return src.radius, src.freqs
    raise TypeError("expected sampled stats or a ball distribution")


def _scaled(freq: Fraction, n_scale: int) -> int:
    # a code seen at all counts at least once: presence is what matters
    return 0 if freq == 0 else max(1, round(freq * n_scale))


@dataclass(frozen=True)
class HanfReport:
    t: int
    n_scale: int
    rows: tuple

    @property
    def failures(self) -> list:
        return [row for row in self.rows if row[1] != row[2]]

    @property
    def passed(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        return [f"{c.hex} {a} {b} {'ok' if a == b else 'FAIL'}" for c, a, b in self.rows]


def hanf_check(a, b, t: int, n_scale: int) -> HanfReport:
    """Compare ``min(t, count)`` per ball code, counts scaled to ``n_scale`` roots."""
    ra, fa = _freqs(a)
    rb, fb = _freqs(b)
    if ra != rb:
        raise GraphingError(f"radius mismatch: {ra} vs {rb}")
    if t < 1 or n_scale < 1:
        raise GraphingError("t and n_scale must be positive")
    rows = []
    for c in sorted(set(fa) | set(fb)):
        rows.append((c, min(t, _scaled(fa.get(c, Fraction(0)), n_scale)),
                     min(t, _scaled(fb.get(c, Fraction(0)), n_scale))))
    return HanfReport(t, n_scale, tuple(rows))


# the De Bruijn example

def debruijn_sequence(n: int) -> list[int]:
    """Binary De Bruijn sequence of order n (concatenated Lyndon words)."""
    if n < 1:
        raise GraphingError("order must be positive")
    a = [0] * (n + 1)
    seq: list[int] = []

    def gen(t, p):
        if t > n:
            if n % p == 0:
                seq.extend(a[1:p + 1])
            return
        a[t] = a[t - p]
        gen(t + 1, p)
        if a[t - p] == 0:
            a[t] = 1
            gen(t + 1, t)

    gen(1, 1)
    return seq


def cyclic_windows(seq: Sequence[int], n: int) -> Counter:
    m = len(seq)
    return Counter(tuple(seq[(i + j) % m] for j in range(n)) for i in range(m))


def debruijn_graph(n: int) -> Structure:
    """Base cycle ``u_i``, pendant ``w_i``, and ``z_i`` hung on ``w_i`` (bit 0) or ``u_i`` (bit 1).

    Vertices are numbered ``u_i = i``, ``w_i = N + i``, ``z_i = 2N + i``
    with ``N = 2^n``.
    """
    if not 1 <= n <= 20:
        raise GraphingError("n must lie in 1..20")
    s = debruijn_sequence(n)
    N = len(s)
    edges = []
    for i, bit in enumerate(s):
        edges.append((i, (i + 1) % N))
        edges.append((i, N + i))
        edges.append((N + i, 2 * N + i) if bit == 0 else (i, 2 * N + i))
    return graph(3 * N, edges)


def _pieces(rows):
    return tuple(Piece(tuple(map(_q, box)), tuple(map(_q, rule))) for box, rule in rows)


def debruijn_graphing() -> Graphing:
    h = Fraction(1, 2)
    f = PiecewiseMap("f", _pieces([
        ((0, h, 0, 1), (2, 0, h, 0)),
        ((h, 1, 0, 1), (2, -1, h, h)),
    ]))
    t1 = PiecewiseMap("T1", _pieces([
        ((0, 1, 0, 1), (1, 0, 1, 1)),
        ((0, 1, 1, 2), (1, 0, 1, -1)),
    ]), involution=True)
    t2 = PiecewiseMap("T2", _pieces([
        ((0, h, 1, 2), (1, 0, 1, 1)),
        ((h, 1, 0, 1), (1, 0, 1, 2)),
        ((0, h, 2, 3), (1, 0, 1, -1)),
        ((h, 1, 2, 3), (1, 0, 1, -2)),
    ]), involution=True)
    return Graphing((mpq(1), mpq(3)), (f, t1, t2), 4)


# text format
#
#   space W H
#   degree D
#   map NAME [involution]
#   piece x0 x1 y0 y1 : a b c d
#
# numbers are integers or fractions like 1/2; '#' starts a comment

def parse_graphing_spec(text: str) -> Graphing:
    space, degree, maps = (mpq(1), mpq(3)), None, []
    current = None

    def close():
        if current is not None:
            maps.append(PiecewiseMap(current[0], tuple(current[2]), current[1]))

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        try:
            if words[0] == "space" and len(words) == 3:
                space = (_q(words[1]), _q(words[2]))
            elif words[0] == "degree" and len(words) == 2:
                degree = int(words[1])
            elif words[0] == "map" and len(words) in (2, 3):
                if len(words) == 3 and words[2] != "involution":
                    raise GraphingError(f"unknown map flag {words[2]!r}")
                close()
                current = (words[1], len(words) == 3, [])
            elif words[0] == "piece":
                if current is None:
                    raise GraphingError("piece before any map")
                if len(words) != 10 or words[5] != ":":
                    raise GraphingError("expected 'piece x0 x1 y0 y1 : a b c d'")
                box = tuple(_q(w) for w in words[1:5])
                rule = tuple(_q(w) for w in words[6:10])
                current[2].append(Piece(box, rule))
            else:
                raise GraphingError(f"unrecognised line {line!r}")
        except (ValueError, ZeroDivisionError) as exc:
            raise GraphingError(f"line {lineno}: {exc}") from None
    close()
    if not maps:
        raise GraphingError("no maps declared")
    if degree is None:
        degree = 2 * len(maps)
    return Graphing(space, tuple(maps), degree)


def _fmt(v) -> str:
    f = _frac(_q(v))
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def format_graphing_spec(g: Graphing) -> str:
    out = [f"space {_fmt(g.space[0])} {_fmt(g.space[1])}", f"degree {g.degree_bound}"]
    for m in g.maps:
        out.append(f"map {m.name}" + (" involution" if m.involution else ""))
        for p in m.pieces:
            out.append("piece " + " ".join(map(_fmt, p.box)) + " : " + " ".join(map(_fmt, p.rule)))
    return "\n".join(out) + "\n"


def load_graphing_spec(path) -> Graphing:
    return parse_graphing_spec(Path(path).read_text())


__all__ = [
    "GraphingError", "Piece", "PiecewiseMap", "Graphing", "as_point", "graphing_ball",
    "graphing_component", "sample_points", "sample_root", "SampledBallStats", "graphing_ball_stats",
    "clean", "HanfReport", "hanf_check", "debruijn_sequence", "cyclic_windows", "debruijn_graph",
    "debruijn_graphing", "parse_graphing_spec", "format_graphing_spec", "load_graphing_spec",
]
