"""First-order formula AST over a relational signature.

Nodes are frozen dataclasses, so formulas are hashable and can key the
conjunction tables used by :func:`structlim.density.boolean_expansion`.
Implication has no node of its own: :func:`implies` rewrites it to
``~a | b``.

Quantifiers may be *relativised*: ``Exists("y", body, radius=1, centers=(Var("x"),))``
ranges only over the closed 1-neighbourhood of ``x``. Formulas whose
quantifiers are all relativised are local by construction, see
:func:`classify`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Mapping, Sequence, Union

from .structure import Signature


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self):
        return self.name


Term = Union[Var, Const]


def _term_vars(terms):
    return tuple(t.name for t in terms if isinstance(t, Var))


class Formula:
    """Base class; subclasses define ``children`` and the cached metadata."""

    __slots__ = ()

    @cached_property
    def qrank(self) -> int:
        return _qrank(self)

    @cached_property
    def free_vars(self) -> tuple[str, ...]:
        """Free variables in order of first appearance."""
        return _free_vars(self)

    @property
    def is_sentence(self) -> bool:
        return not self.free_vars

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Truth(Formula):
    value: bool


TRUE = Truth(True)
FALSE = Truth(False)


@dataclass(frozen=True)
class Atom(Formula):
    rel: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Equal(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Quantifier(Formula):
    var: str
    body: Formula
    radius: int | None = None
    centers: tuple[Term, ...] = ()

    def __post_init__(self):
        if (self.radius is None) != (not self.centers):
            raise ValueError("a relativised quantifier needs both a radius and centre terms")
        if self.radius is not None and self.radius < 0:
            raise ValueError("relativisation radius must be non-negative")


class Exists(Quantifier):
    pass


class Forall(Quantifier):
    pass


def _qrank(f: Formula) -> int:
    if isinstance(f, (Truth, Atom, Equal)):
        return 0
    if isinstance(f, Not):
        return f.sub.qrank
    if isinstance(f, (And, Or)):
        return max(f.left.qrank, f.right.qrank)
    if isinstance(f, Quantifier):
        return f.body.qrank + 1
    raise TypeError(f"not a formula: {f!r}")


def _free_vars(f: Formula) -> tuple[str, ...]:
    out: dict[str, None] = {}

    def walk(g, bound):
        if isinstance(g, Atom):
            names = _term_vars(g.args)
        elif isinstance(g, Equal):
            names = _term_vars((g.left, g.right))
        elif isinstance(g, Truth):
            return
        elif isinstance(g, Not):
            walk(g.sub, bound)
            return
        elif isinstance(g, (And, Or)):
            walk(g.left, bound)
            walk(g.right, bound)
            return
        elif isinstance(g, Quantifier):
            for name in _term_vars(g.centers):
                if name not in bound:
                    out.setdefault(name)
            walk(g.body, bound | {g.var})
            return
        else:
            raise TypeError(f"not a formula: {g!r}")
        for name in names:
            if name not in bound:
                out.setdefault(name)

    walk(f, frozenset())
    return tuple(out)


# builders

def neg(f: Formula) -> Formula:
    return Not(f)


def conj(*fs: Formula) -> Formula:
    return reduce(And, fs) if fs else TRUE


def disj(*fs: Formula) -> Formula:
    return reduce(Or, fs) if fs else FALSE


def implies(a: Formula, b: Formula) -> Formula:
    return Or(Not(a), b)


def exists(var: str, body: Formula, radius: int | None = None, centers: Sequence[str] = ()) -> Exists:
    return Exists(var, body, radius, tuple(Var(c) for c in centers))


def forall(var: str, body: Formula, radius: int | None = None, centers: Sequence[str] = ()) -> Forall:
    return Forall(var, body, radius, tuple(Var(c) for c in centers))


def adj(x: str, y: str) -> Atom:
    return Atom("adj", (Var(x), Var(y)))


def eq(x: str, y: str) -> Equal:
    return Equal(Var(x), Var(y))


# printing

def to_text(f: Formula) -> str:
    """Fully parenthesised text that parses back to the same AST."""
    if isinstance(f, Truth):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return f"{f.rel}({','.join(map(str, f.args))})"
    if isinstance(f, Equal):
        return f"{f.left}={f.right}"
    if isinstance(f, Not):
        return f"~({to_text(f.sub)})"
    if isinstance(f, And):
        return f"({to_text(f.left)} & {to_text(f.right)})"
    if isinstance(f, Or):
        return f"({to_text(f.left)} | {to_text(f.right)})"
    if isinstance(f, Quantifier):
        q = "E" if isinstance(f, Exists) else "A"
        rel = ""
        if f.radius is not None:
            rel = f" @<={f.radius}({','.join(map(str, f.centers))})"
        return f"({q} {f.var}{rel}. {to_text(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


# rewriting

def substitute(f: Formula, mapping: Mapping[str, Term]) -> Formula:
    """Replace free occurrences of variables by terms (capture is the caller's problem)."""

    def term(t, bound):
        if isinstance(t, Var) and t.name in mapping and t.name not in bound:
            return mapping[t.name]
        return t

    def go(g, bound):
        if isinstance(g, Truth):
            return g
        if isinstance(g, Atom):
            return Atom(g.rel, tuple(term(t, bound) for t in g.args))
        if isinstance(g, Equal):
            return Equal(term(g.left, bound), term(g.right, bound))
        if isinstance(g, Not):
            return Not(go(g.sub, bound))
        if isinstance(g, (And, Or)):
            return type(g)(go(g.left, bound), go(g.right, bound))
        if isinstance(g, Quantifier):
            centers = tuple(term(t, bound) for t in g.centers)
            return type(g)(g.var, go(g.body, bound | {g.var}), g.radius, centers)
        raise TypeError(f"not a formula: {g!r}")

    return go(f, frozenset())


def constant_names(sig: Signature, p: int, prefix: str = "c") -> tuple[str, ...]:
    taken = {r for r, _ in sig.relations} | set(sig.constants)
    while any(f"{prefix}{i}" in taken for i in range(1, p + 1)):
        prefix = "_" + prefix
    return tuple(f"{prefix}{i}" for i in range(1, p + 1))


def nu(f: Formula, sig: Signature, variables: Sequence[str] | None = None):
    """Turn a p-variable formula into a sentence over ``sig`` plus p constants.

    Free variable ``variables[i]`` becomes the i-th fresh constant. Returns
    ``(sentence, extended_signature, constant_names)``; the structure side of
    the correspondence is ``G.expand(**dict(zip(constant_names, values)))``.
    """
    variables = tuple(f.free_vars if variables is None else variables)
    missing = set(f.free_vars) - set(variables)
    if missing:
        raise ValueError(f"free variables {sorted(missing)} not listed")
    names = constant_names(sig, len(variables))
    sentence = substitute(f, {v: Const(c) for v, c in zip(variables, names)})
    return sentence, sig.with_constants(names), names


# fragments

@dataclass(frozen=True)
class FragmentFlags:
    is_sentence: bool
    free_var_count: int
    is_quantifier_free: bool
    local_radius: int | None

    @property
    def is_local(self) -> bool:
        return self.local_radius is not None


def local_radius(f: Formula) -> int | None:
    """Syntactic locality radius, or None if some quantifier is unrelativised.

    Free variables and constants sit at distance 0 from the free tuple; a
    variable relativised with radius r to centres at distance at most d is at
    distance at most r + d. The formula's radius is the largest such bound.
    """

    def go(g, depth):
        if isinstance(g, (Truth, Atom, Equal)):
            return 0
        if isinstance(g, Not):
            return go(g.sub, depth)
        if isinstance(g, (And, Or)):
            a = go(g.left, depth)
            b = go(g.right, depth)
            return None if a is None or b is None else max(a, b)
        if isinstance(g, Quantifier):
            if g.radius is None:
                return None
            d = g.radius + max(depth.get(t.name, 0) if isinstance(t, Var) else 0 for t in g.centers)
            inner = go(g.body, {**depth, g.var: d})
            return None if inner is None else max(d, inner)
        raise TypeError(f"not a formula: {g!r}")

    return go(f, {})


def classify(f: Formula) -> FragmentFlags:
    p = len(f.free_vars)
    return FragmentFlags(is_sentence=p == 0, free_var_count=p,
                         is_quantifier_free=f.qrank == 0, local_radius=local_radius(f))


def subformulas(f: Formula):
    yield f
    if isinstance(f, Not):
        yield from subformulas(f.sub)
    elif isinstance(f, (And, Or)):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif isinstance(f, Quantifier):
        yield from subformulas(f.body)
