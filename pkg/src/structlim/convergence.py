"""Finite diagnostics for convergence of structure sequences.

A sequence can only be observed up to its last element, so every verdict
here is a windowed Cauchy test: look at the last ``w`` entries and compare
all pairs. Gaps at most ``eps`` mean converged, a gap above ``2 eps`` means
diverged, and anything in between is inconclusive.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Sequence

from .density import DEFAULT_BUDGET, DensityValue, density_exact, density_sampled
from .ef import TypeOracle
from .formula import Formula
from .local import ball_distribution, tv_distance
from .structure import Structure, max_degree

DEFAULT_EPS = Fraction(1, 100)
DEFAULT_WINDOW = 5

CONVERGED, DIVERGED, INCONCLUSIVE = "converged", "diverged", "inconclusive"


class ConvergenceError(ValueError):
    pass


@dataclass(frozen=True)
class DensityTrace:
    formula: Formula
    entries: tuple[tuple[str, DensityValue], ...]

    @property
    def values(self) -> list:
        return [v.value for _, v in self.entries]

    def lines(self) -> list[str]:
        return [f"{label} {v.text()}" for label, v in self.entries]


def density_trace(seq: Sequence[Structure], f: Formula, mode: str = "auto", *,
                  samples: int = 10_000, seed: int = 0, labels: Sequence[str] | None = None,
                  budget: int = DEFAULT_BUDGET, workers: int = 1) -> DensityTrace:
    """Densities of ``f`` along ``seq``, in order.

    ``mode`` is ``exact``, ``sampled`` or ``auto`` (exact when the tuple
    space fits in ``budget``). Sampled entries all use ``seed``.
    """
    if mode not in ("exact", "sampled", "auto"):
        raise ConvergenceError(f"unknown mode {mode!r}")
    labels = [str(i) for i in range(len(seq))] if labels is None else list(labels)
    if len(labels) != len(seq):
        raise ConvergenceError("one label per structure expected")
    p = len(f.free_vars)
    out = []
    for label, s in zip(labels, seq):
        exact = mode == "exact" or (mode == "auto" and s.n ** p <= budget)
        if exact:
            v = density_exact(s, f, budget=budget, workers=workers)
        else:
            v = density_sampled(s, f, samples, seed)
        out.append((label, v))
    return DensityTrace(f, tuple(out))


@dataclass(frozen=True)
class ConvergenceVerdict:
    """Outcome of a windowed test.

    ``witness`` is ``(i, j, gap)`` for the largest gap in the window, with
    ``i < j`` indices into the full sequence; ``None`` for a window of
    identical entries.
    """

    status: str
    witness: tuple | None
    params: dict = field(default_factory=dict)

    def __str__(self):
        eps, w = self.params.get("eps"), self.params.get("window")
        head = f"{self.status} (eps={_num(eps)}, window={w})"
        if self.witness is None:
            return head
        i, j, gap = self.witness
        return f"{head} max gap {_num(gap)} between entries {i} and {j}"

    def record(self) -> dict:
        return {"status": self.status,
                "witness": None if self.witness is None else
                [self.witness[0], self.witness[1], _num(self.witness[2])],
                "params": {k: _num(v) for k, v in self.params.items()}}


def _num(x):
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return x


def windowed_verdict(items: Sequence, distance: Callable, eps=DEFAULT_EPS,
                     w: int = DEFAULT_WINDOW, **params) -> ConvergenceVerdict:
    """Compare all pairs among the last ``w`` items under ``distance``."""
    if w < 2:
        raise ConvergenceError("window must be at least 2")
    if len(items) < w:
        raise ConvergenceError(f"sequence of length {len(items)} is shorter than the window {w}")
    start = len(items) - w
    witness = None
    for i, j in combinations(range(start, len(items)), 2):
        gap = distance(items[i], items[j])
        if gap > 0 and (witness is None or gap > witness[2]):
            witness = (i, j, gap)
    worst = 0 if witness is None else witness[2]
    if worst <= eps:
        status = CONVERGED
    elif worst > 2 * eps:
        status = DIVERGED
    else:
        status = INCONCLUSIVE
    return ConvergenceVerdict(status, witness, {"eps": eps, "window": w, **params})


def convergence_verdict(trace: DensityTrace | Sequence, eps=DEFAULT_EPS,
                        w: int = DEFAULT_WINDOW) -> ConvergenceVerdict:
    values = trace.values if isinstance(trace, DensityTrace) else list(trace)
    return windowed_verdict(values, lambda a, b: abs(a - b), eps, w)


def combine(statuses: Sequence[str]) -> str:
    """Conjunction of verdicts: one divergence suffices, convergence needs all."""
    if DIVERGED in statuses:
        return DIVERGED
    if all(s == CONVERGED for s in statuses):
        return CONVERGED
    return INCONCLUSIVE


def bs_convergence_check(seq: Sequence[Structure], r_max: int, eps=DEFAULT_EPS,
                         w: int = DEFAULT_WINDOW, degree_bound: int | None = None
                         ) -> dict[int, ConvergenceVerdict]:
    """Per-radius verdicts on the ball-type distributions (total variation)."""
    degrees = [max_degree(s) for s in seq]
    if degree_bound is not None and max(degrees, default=0) > degree_bound:
        warnings.warn(f"maximum degree {max(degrees)} exceeds the declared bound {degree_bound}")
    elif degree_bound is None and len(degrees) > 1 and degrees[-1] > max(degrees[:-1]):
        warnings.warn("maximum degree is still growing at the end of the sequence")
    out = {}
    for r in range(r_max + 1):
        tail = range(max(0, len(seq) - w), len(seq))
        dists = {i: ball_distribution(seq[i], r) for i in tail}
        items = [dists.get(i) for i in range(len(seq))]
        out[r] = windowed_verdict(items, tv_distance, eps, w, radius=r)
    return out


@dataclass(frozen=True)
class ElementaryVerdict:
    """Agreement of rank-k types across the tail window, for k up to ``kmax``.

    ``witness`` is ``(k, i, j)``: the least rank at which entries ``i`` and
    ``j`` of the window disagree.
    """

    status: str
    witness: tuple | None
    kmax: int
    window: int

    def __str__(self):
        if self.witness is None:
            return f"{self.status} (kmax={self.kmax}, window={self.window})"
        k, i, j = self.witness
        return (f"{self.status} (kmax={self.kmax}, window={self.window}) "
                f"entries {i} and {j} differ at rank {k}")

    def record(self) -> dict:
        return {"status": self.status, "witness": None if self.witness is None else list(self.witness),
                "kmax": self.kmax, "window": self.window}


def elementary_check(seq: Sequence[Structure], kmax: int = 3, w: int = DEFAULT_WINDOW,
                     oracle: TypeOracle | None = None) -> ElementaryVerdict:
    if len(seq) < w:
        raise ConvergenceError(f"sequence of length {len(seq)} is shorter than the window {w}")
    oracle = oracle or TypeOracle()
    start = len(seq) - w
    for k in range(kmax + 1):
        types = {i: oracle.type_of(seq[i], k) for i in range(start, len(seq))}
        for i, j in combinations(range(start, len(seq)), 2):
            if types[i] != types[j]:
                return ElementaryVerdict(DIVERGED, (k, i, j), kmax, w)
    return ElementaryVerdict(CONVERGED, None, kmax, w)


@dataclass(frozen=True)
class SplitReport:
    """Local (ball statistics) and elementary halves of FO convergence."""

    bs: dict
    elementary: ElementaryVerdict
    params: dict

    @property
    def bs_status(self) -> str:
        return combine([v.status for v in self.bs.values()])

    @property
    def fo_status(self) -> str:
        return combine([self.bs_status, self.elementary.status])

    def lines(self) -> list[str]:
        out = [f"bs r={r}: {v}" for r, v in sorted(self.bs.items())]
        out.append(f"bs: {self.bs_status}")
        out.append(f"elementary: {self.elementary}")
        out.append(f"fo: {self.fo_status} (local and elementary convergence together)")
        return out

    def record(self) -> dict:
        return {"bs": {str(r): v.record() for r, v in sorted(self.bs.items())},
                "bs_status": self.bs_status, "elementary": self.elementary.record(),
                "fo_status": self.fo_status,
                "params": {k: _num(v) for k, v in self.params.items()}}


def fo_split_check(seq: Sequence[Structure], r_max: int = 2, kmax: int = 3, eps=DEFAULT_EPS,
                   w: int = DEFAULT_WINDOW, oracle: TypeOracle | None = None) -> SplitReport:
    bs = bs_convergence_check(seq, r_max, eps, w)
    el = elementary_check(seq, kmax, w, oracle)
    return SplitReport(bs, el, {"r_max": r_max, "kmax": kmax, "eps": eps, "window": w})
