"""Model checking and Stone-pairing densities.

``density_exact`` counts satisfying tuples over the whole tuple space and
returns an exact :class:`fractions.Fraction`; ``density_sampled`` estimates
the same quantity from uniform tuples with a Hoeffding confidence radius.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .formula import And, Atom, Equal, Formula, Not, Or, Quantifier, Exists, Truth, Var, conj
from .structure import Structure, StructureError, ball, bfs_distances

DEFAULT_BUDGET = 10**8
CONFIDENCE = 0.95
SAMPLE_BLOCK = 4096


class DensityError(ValueError):
    pass


class EmptyStructure(DensityError):
    pass


class BudgetExceeded(DensityError):
    pass


class Unassigned(DensityError):
    pass


class Evaluator:
    """Compiles formulas to closures over one structure.

    Relativised quantifiers iterate their neighbourhood in BFS order; plain
    quantifiers iterate the universe in index order.
    """

    def __init__(self, structure: Structure):
        self.s = structure
        self._regions: dict = {}

    def region(self, centers: tuple[int, ...], r: int) -> tuple[int, ...]:
        key = (centers, r)
        out = self._regions.get(key)
        if out is None:
            out = tuple(bfs_distances(self.s, centers, r))
            self._regions[key] = out
        return out

    def compile(self, f: Formula, variables: Sequence[str]) -> Callable[[Sequence[int]], bool]:
        """Return ``check(values)`` deciding ``S |= f(values)``.

        ``variables`` names the slots of ``values`` and must cover the free
        variables of ``f``; extra names are allowed and ignored.
        """
        variables = tuple(variables)
        missing = [v for v in f.free_vars if v not in variables]
        if missing:
            raise Unassigned(f"unassigned free variables: {missing}")
        consts = list(self.s.constants.items())
        for t in _const_terms(f):
            if t not in self.s.constants:
                raise StructureError(f"constant {t} is not interpreted in the structure")
        scope = {v: i for i, v in enumerate(variables)}
        cslot = {c: len(variables) + i for i, (c, _) in enumerate(consts)}
        base = len(variables) + len(consts)
        body = self._compile(f, scope, cslot, base)
        const_vals = [v for _, v in consts]
        pad = [0] * _depth(f)

        def check(values):
            return body([*values, *const_vals, *pad])

        return check

    def _compile(self, f, scope, cslot, depth):
        def slot(t):
            return scope[t.name] if isinstance(t, Var) else cslot[t.name]

        if isinstance(f, Truth):
            value = f.value
            return lambda env: value
        if isinstance(f, Atom):
            rel = self.s.relations[f.rel]
            idx = tuple(slot(t) for t in f.args)
            if len(idx) == 1:
                i, = idx
                unary = frozenset(t[0] for t in rel)
                return lambda env: env[i] in unary
            if len(idx) == 2:
                i, j = idx
                return lambda env: (env[i], env[j]) in rel
            return lambda env: tuple(env[k] for k in idx) in rel
        if isinstance(f, Equal):
            i, j = slot(f.left), slot(f.right)
            return lambda env: env[i] == env[j]
        if isinstance(f, Not):
            sub = self._compile(f.sub, scope, cslot, depth)
            return lambda env: not sub(env)
        if isinstance(f, And):
            a = self._compile(f.left, scope, cslot, depth)
            b = self._compile(f.right, scope, cslot, depth)
            return lambda env: a(env) and b(env)
        if isinstance(f, Or):
            a = self._compile(f.left, scope, cslot, depth)
            b = self._compile(f.right, scope, cslot, depth)
            return lambda env: a(env) or b(env)
        if isinstance(f, Quantifier):
            k = depth
            body = self._compile(f.body, {**scope, f.var: k}, cslot, depth + 1)
            want = isinstance(f, Exists)
            if f.radius is None:
                universe = range(self.s.n)

                def domain(env):
                    return universe
            else:
                cs = tuple(slot(t) for t in f.centers)
                r = f.radius
                region = self.region

                def domain(env):
                    return region(tuple(env[c] for c in cs), r)

            def quant(env):
                for v in domain(env):
                    env[k] = v
                    if body(env) is want:
                        return want
                return not want

            return quant
        raise TypeError(f"not a formula: {f!r}")


def _depth(f):
    if isinstance(f, Quantifier):
        return 1 + _depth(f.body)
    if isinstance(f, Not):
        return _depth(f.sub)
    if isinstance(f, (And, Or)):
        return max(_depth(f.left), _depth(f.right))
    return 0


def _const_terms(f):
    from .formula import Const, subformulas
    out = set()
    for g in subformulas(f):
        terms = ()
        if isinstance(g, Atom):
            terms = g.args
        elif isinstance(g, Equal):
            terms = (g.left, g.right)
        elif isinstance(g, Quantifier):
            terms = g.centers
        out.update(t.name for t in terms if isinstance(t, Const))
    return out


def _nonempty(s: Structure):
    if s.n == 0:
        raise EmptyStructure("density is undefined on the empty structure")


def satisfies(s: Structure, f: Formula, assignment: Mapping[str, int] | None = None) -> bool:
    """Tarskian satisfaction ``S |= f[assignment]``."""
    _nonempty(s)
    assignment = dict(assignment or {})
    missing = [v for v in f.free_vars if v not in assignment]
    if missing:
        raise Unassigned(f"unassigned free variables: {missing}")
    names = tuple(assignment)
    values = tuple(s.check_element(assignment[v]) for v in names)
    return bool(Evaluator(s).compile(f, names)(values))


@dataclass(frozen=True)
class DensityValue:
    """Exact or sampled value of ``<f, S>``.

    Exact values are Fractions with ``hits / samples`` over the full tuple
    space. Sampled values carry the Hoeffding radius at 95% confidence and
    the seed that reproduces them.
    """

    mode: str
    value: Fraction | float
    hits: int
    samples: int
    arity: int
    radius: float = 0.0
    seed: int | None = None

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    def __float__(self):
        return float(self.value)

    def text(self) -> str:
        if self.exact:
            v = self.value
            return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
        return repr(float(self.value))

    def record(self) -> dict:
        return {"mode": self.mode, "value": self.text(), "hits": self.hits, "samples": self.samples,
                "free_vars": self.arity, "radius": self.radius, "seed": self.seed}


def _variables(f, variables):
    if variables is None:
        return f.free_vars
    variables = tuple(variables)
    if len(set(variables)) != len(variables):
        raise DensityError("repeated variable in the variable list")
    missing = [v for v in f.free_vars if v not in variables]
    if missing:
        raise Unassigned(f"free variables {missing} not in {variables}")
    return variables


def _count(s, f, variables, firsts):
    check = Evaluator(s).compile(f, variables)
    p = len(variables)
    if p == 0:
        return int(check(()))
    rest = [range(s.n)] * (p - 1)
    total = 0
    for a in firsts:
        for tail in product(*rest):
            if check((a, *tail)):
                total += 1
    return total


def density_exact(s: Structure, f: Formula, variables: Sequence[str] | None = None, *,
                  budget: int = DEFAULT_BUDGET, workers: int = 1) -> DensityValue:
    """Exact ``|{v in S^p : S |= f(v)}| / |S|^p``.

    ``variables`` fixes the tuple of free variables (default: ``f.free_vars``);
    listing unused variables pads the tuple space without changing the value.
    With ``workers > 1`` the first coordinate is split across processes.
    """
    _nonempty(s)
    variables = _variables(f, variables)
    p = len(variables)
    total = s.n ** p
    if total > budget:
        raise BudgetExceeded(f"{s.n}^{p} = {total} tuples exceeds the enumeration budget {budget}; "
                             "use sampling instead")
    if workers > 1 and p > 0 and s.n > 1:
        chunks = [range(i, s.n, workers) for i in range(min(workers, s.n))]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(_count, [s] * len(chunks), [f] * len(chunks),
                                [variables] * len(chunks), chunks))
    else:
        hits = _count(s, f, variables, range(s.n) if p else ())
    return DensityValue("exact", Fraction(hits, total), hits, total, p)


def hoeffding_radius(n_samples: int, confidence: float = CONFIDENCE) -> float:
    return math.sqrt(math.log(2 / (1 - confidence)) / (2 * n_samples))


def sample_tuples(n: int, p: int, n_samples: int, seed: int, block: int = SAMPLE_BLOCK) -> np.ndarray:
    """Uniform tuples in ``range(n)^p``; block ``b`` draws from stream ``(seed, b)``."""
    out = np.empty((n_samples, p), dtype=np.int64)
    for b, start in enumerate(range(0, n_samples, block)):
        m = min(block, n_samples - start)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        out[start:start + m] = rng.integers(0, n, size=(m, p))
    return out


def density_sampled(s: Structure, f: Formula, n_samples: int, seed: int = 0,
                    variables: Sequence[str] | None = None) -> DensityValue:
    """Monte Carlo estimate of the density from ``n_samples`` uniform tuples."""
    _nonempty(s)
    if n_samples < 1:
        raise DensityError("need at least one sample")
    variables = _variables(f, variables)
    p = len(variables)
    check = Evaluator(s).compile(f, variables)
    if p == 0:
        hits = n_samples if check(()) else 0
    else:
        tuples = sample_tuples(s.n, p, n_samples, seed)
        # each distinct tuple is evaluated once; the indicator is deterministic
        uniq, counts = np.unique(tuples, axis=0, return_counts=True)
        hits = int(sum(int(c) for t, c in zip(uniq.tolist(), counts) if check(t)))
    return DensityValue("sampled", hits / n_samples, hits, n_samples, p,
                        hoeffding_radius(n_samples), seed)


# Boolean-combination expansion

def _is_boolean(f):
    return isinstance(f, (Not, And, Or, Truth))


def indicator_polynomial(target: Formula, atoms: Iterable[Formula] | None = None) -> dict[frozenset, Fraction]:
    """Write the indicator of ``target`` as a combination of conjunction indicators.

    Leaves are the maximal non-Boolean subformulas, or members of ``atoms``
    when given. The result maps a frozenset of leaves (the empty set standing
    for the constant 1) to its coefficient, using ``1[a & b] = 1[a] 1[b]``
    and ``1[~a] = 1 - 1[a]``.
    """
    atoms = None if atoms is None else frozenset(atoms)

    def mul(p, q):
        out: dict[frozenset, Fraction] = {}
        for k1, c1 in p.items():
            for k2, c2 in q.items():
                k = k1 | k2
                out[k] = out.get(k, 0) + c1 * c2
        return out

    def add(p, q, sign=1):
        out = dict(p)
        for k, c in q.items():
            out[k] = out.get(k, 0) + sign * c
        return out

    one = {frozenset(): Fraction(1)}

    def go(f):
        if atoms is not None and f in atoms or not _is_boolean(f):
            if atoms is not None and f not in atoms and not _is_boolean(f):
                raise DensityError(f"subformula {f} is not among the declared atoms")
            return {frozenset([f]): Fraction(1)}
        if isinstance(f, Truth):
            return dict(one) if f.value else {}
        if isinstance(f, Not):
            return add(one, go(f.sub), -1)
        a, b = go(f.left), go(f.right)
        if isinstance(f, And):
            return mul(a, b)
        return add(add(a, b), mul(a, b), -1)

    return {k: c for k, c in go(target).items() if c != 0}


def boolean_expansion(densities: Mapping, target: Formula, atoms: Iterable[Formula] | None = None):
    """Density of a Boolean combination from the densities of leaf conjunctions.

    ``densities`` maps frozensets of leaves (or single leaf formulas) to
    their density values.
    """
    table = {}
    for k, v in densities.items():
        key = k if isinstance(k, frozenset) else frozenset([k])
        table[key] = v.value if isinstance(v, DensityValue) else v
    total = Fraction(0)
    for key, coeff in indicator_polynomial(target, atoms).items():
        if not key:
            total += coeff
            continue
        if key not in table:
            names = ", ".join(sorted(map(str, key)))
            raise DensityError(f"missing density for conjunction of [{names}]")
        total += coeff * table[key]
    return total


def conjunction_of(key: frozenset) -> Formula:
    return conj(*sorted(key, key=str))


def conjunction_densities(s: Structure, target: Formula, atoms=None, **kw) -> dict[frozenset, Fraction]:
    """Exact densities of every conjunction the expansion of ``target`` needs."""
    return {key: density_exact(s, conjunction_of(key), **kw).value
            for key in indicator_polynomial(target, atoms) if key}


# locality audit

@dataclass
class LocalityReport:
    formula: Formula
    radius: int
    checked: int = 0
    counterexamples: list = field(default_factory=list)

    @property
    def violated(self) -> bool:
        return bool(self.counterexamples)

    def __str__(self):
        if not self.violated:
            return f"no violation found in {self.checked} tuples"
        i, tup, whole = self.counterexamples[0]
        return (f"{len(self.counterexamples)} violations in {self.checked} tuples; first: structure {i}, "
                f"tuple {tup}: {whole} in the structure, {not whole} in its {self.radius}-neighbourhood")


def locality_audit(f: Formula, r: int, structures: Sequence[Structure], *, samples: int = 2000,
                   seed: int = 0, exhaustive_limit: int = 4096) -> LocalityReport:
    """Look for tuples where ``f`` disagrees between a structure and a neighbourhood.

    Tuple spaces up to ``exhaustive_limit`` are enumerated, larger ones are
    sampled. The audit can refute r-locality but never certify it.
    """
    variables = f.free_vars
    p = len(variables)
    if p == 0:
        raise DensityError("locality is defined for formulas with free variables")
    report = LocalityReport(f, r)
    for i, s in enumerate(structures):
        if s.n == 0:
            continue
        whole = Evaluator(s).compile(f, variables)
        if s.n ** p <= exhaustive_limit:
            tuples = product(range(s.n), repeat=p)
        else:
            tuples = map(tuple, sample_tuples(s.n, p, samples, seed + i).tolist())
        for tup in tuples:
            b = ball(s, tup, r)
            local = Evaluator(b.structure).compile(f, variables)(b.roots)
            got = bool(whole(tup))
            report.checked += 1
            if got != bool(local):
                report.counterexamples.append((i, tuple(tup), got))
    return report
