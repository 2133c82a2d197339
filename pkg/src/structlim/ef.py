"""Ehrenfeucht-Fraisse games and the quantifier-rank distance.

Duplicator wins the k-round game on ``(A, a)`` and ``(B, b)`` iff the two
tuples have the same rank-k type, where

* the rank-0 type of a tuple is its atomic type, and
* the rank-m type of ``a`` is the atomic type of ``a`` together with the set
  of rank-(m-1) types of its one-element extensions.

:class:`TypeOracle` computes these types bottom-up over the whole tuple
space with numpy and interns them in a table shared between structures, so
``A`` and ``B`` agree up to rank k iff their root types have the same id.
:func:`ef_game` plays the game directly, memoising positions; it is much
slower and serves as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np

from .canon import isomorphic
from .structure import Structure

TUPLE_BUDGET = 2 * 10**8
_CHUNK = 1 << 20


class EFError(ValueError):
    pass


class _Ctx:
    """Per-structure arrays: dense relations and constant values."""

    def __init__(self, s: Structure):
        self.s = s
        self.n = s.n
        self.consts = [s.constants[c] for c in s.signature.constants]
        self.dense = {}
        for name, arity in s.signature.relations:
            if s.n ** arity <= 5 * 10**7:
                arr = np.zeros((s.n,) * arity, dtype=bool)
                if s.relations[name]:
                    idx = np.array(sorted(s.relations[name]), dtype=np.int64).T
                    arr[tuple(idx)] = True
                self.dense[name] = arr

    def holds(self, name, cols):
        """Vectorised membership test; ``cols`` are broadcastable index arrays."""
        if name in self.dense:
            return self.dense[name][tuple(cols)]
        cols = np.broadcast_arrays(*cols)
        rel = self.s.relations[name]
        flat = [c.ravel().tolist() for c in cols]
        out = np.fromiter((t in rel for t in zip(*flat)), dtype=bool, count=cols[0].size)
        return out.reshape(cols[0].shape)


def _element_columns(n, j, rows):
    """Elements at chosen positions 0..j-1 for flat tuple indices ``rows``."""
    cols = []
    for q in range(j):
        cols.append((rows // n ** (j - 1 - q)) % n)
    return cols


def _new_fact_bits(ctx: _Ctx, existing, new):
    """Atomic facts of ``existing + (new,)`` that involve the new position.

    ``existing`` lists broadcastable arrays (or scalars) for the earlier
    positions; the bit layout depends only on the signature and the number
    of positions, never on the structure.
    """
    p = len(existing)
    cols = list(existing) + [new]
    bits = [np.equal(e, new) for e in existing]
    for name, arity in ctx.s.signature.relations:
        for pattern in product(range(p + 1), repeat=arity):
            if p in pattern:
                bits.append(ctx.holds(name, [cols[i] for i in pattern]))
    return bits


def _pack(bits, shape):
    if len(bits) > 62:
        raise EFError("too many atomic facts per extension for this implementation")
    code = np.zeros(shape, dtype=np.int64)
    for i, b in enumerate(bits):
        code |= np.broadcast_to(b, shape).astype(np.int64) << i
    return code


class TypeOracle:
    """Rank-k types of structures, interned in one shared table."""

    def __init__(self):
        self._ids: dict = {}
        self._cache: dict = {}

    def _intern(self, key):
        i = self._ids.get(key)
        if i is None:
            i = self._ids[key] = len(self._ids)
        return i

    def _atomic_root(self, ctx: _Ctx):
        # atomic type of the constant tuple, built one position at a time
        key = ("A", ())
        for p in range(len(ctx.consts)):
            existing = [np.int64(c) for c in ctx.consts[:p]]
            bits = _new_fact_bits(ctx, existing, np.int64(ctx.consts[p]))
            key = ("A", key, tuple(bool(b) for b in bits))
        return self._intern(key)

    def type_of(self, s: Structure, k: int) -> int:
        """Interned id of the rank-k type of ``s`` (with its constants)."""
        if k < 0:
            raise EFError("rank must be non-negative")
        ck = (id(s), k)
        hit = self._cache.get(ck)
        if hit is not None and hit[0] is s:
            return hit[1]
        if s.n ** max(k, 0) > TUPLE_BUDGET:
            raise EFError(f"{s.n}^{k} tuples exceed the budget for rank-type computation")
        ctx = _Ctx(s)
        sig_tag = (s.signature.relations, len(ctx.consts))
        root = self._atomic_root(ctx)
        if k == 0:
            result = self._intern(("T", sig_tag, 0, root))
        else:
            result = self._types(ctx, k, sig_tag, root)
        self._cache[ck] = (s, result)
        return result

    def _types(self, ctx: _Ctx, k, sig_tag, root):
        n = ctx.n
        consts = [np.int64(c) for c in ctx.consts]
        # atomic type ids of chosen tuples of length 0..k-1
        atomic = np.array([root], dtype=np.int64)
        for j in range(k - 1):
            rows = np.arange(n ** j, dtype=np.int64)
            existing = consts + [c[:, None] for c in _element_columns(n, j, rows)]
            new = np.arange(n, dtype=np.int64)[None, :]
            code = _pack(_new_fact_bits(ctx, existing, new), (n ** j, n)).ravel()
            parent = np.repeat(atomic, n)
            atomic = self._intern_pairs(("A", sig_tag, j + 1), parent, code)

        # rank-1 types of (k-1)-tuples, chunked over rows
        j = k - 1
        total = n ** j
        level = np.empty(total, dtype=np.int64)
        step = max(1, _CHUNK // max(n, 1))
        for start in range(0, total, step):
            rows = np.arange(start, min(total, start + step), dtype=np.int64)
            existing = consts + [c[:, None] for c in _element_columns(n, j, rows)]
            new = np.arange(n, dtype=np.int64)[None, :]
            code = _pack(_new_fact_bits(ctx, existing, new), (len(rows), n))
            level[rows] = self._intern_sets(("T", sig_tag, 1), atomic[rows], code)

        for m in range(2, k + 1):
            j = k - m
            prev = level.reshape(n ** j, n)
            atom = np.full(n ** j, root, dtype=np.int64) if j == 0 else atomic_levels(self, ctx, j, sig_tag, root)
            level = self._intern_sets(("T", sig_tag, m), atom, prev)
        return int(level[0])

    def _intern_pairs(self, tag, parent, code):
        pairs = np.stack([parent, code], axis=1)
        uniq, inv = np.unique(pairs, axis=0, return_inverse=True)
        ids = np.array([self._intern((tag, int(a), int(c))) for a, c in uniq], dtype=np.int64)
        return ids[inv.ravel()]

    def _intern_sets(self, tag, atom, matrix):
        """Intern ``(atom[i], set(matrix[i]))`` row by row."""
        rows = matrix.shape[0]
        if matrix.shape[1] == 0:
            return np.array([self._intern((tag, int(a), ())) for a in atom], dtype=np.int64)
        values, inv = np.unique(matrix, return_inverse=True)
        inv = inv.reshape(matrix.shape)
        present = np.zeros((rows, len(values)), dtype=bool)
        present[np.arange(rows)[:, None], inv] = True
        packed = np.packbits(present, axis=1)
        keyed = np.concatenate([atom.astype(np.int64)[:, None].view(np.uint8), packed], axis=1)
        keyed = np.ascontiguousarray(keyed)
        void = keyed.view(np.dtype((np.void, keyed.shape[1]))).ravel()
        uniq, first, back = np.unique(void, return_index=True, return_inverse=True)
        ids = np.empty(len(uniq), dtype=np.int64)
        for u, r in enumerate(first):
            members = tuple(int(v) for v in values[present[r]])
            ids[u] = self._intern((tag, int(atom[r]), members))
        return ids[back.ravel()]


def atomic_levels(oracle: TypeOracle, ctx: _Ctx, j, sig_tag, root):
    """Atomic type ids for all chosen tuples of length ``j``."""
    n = ctx.n
    consts = [np.int64(c) for c in ctx.consts]
    atomic = np.array([root], dtype=np.int64)
    for i in range(j):
        rows = np.arange(n ** i, dtype=np.int64)
        existing = consts + [c[:, None] for c in _element_columns(n, i, rows)]
        new = np.arange(n, dtype=np.int64)[None, :]
        code = _pack(_new_fact_bits(ctx, existing, new), (n ** i, n)).ravel()
        atomic = oracle._intern_pairs(("A", sig_tag, i + 1), np.repeat(atomic, n), code)
    return atomic


def _check_comparable(a: Structure, b: Structure):
    if a.signature != b.signature:
        raise EFError("EF games need structures over the same signature")


def ef_equivalent(a: Structure, b: Structure, k: int, oracle: TypeOracle | None = None) -> bool:
    """Whether Duplicator wins the k-round game (same sentences of rank at most k)."""
    _check_comparable(a, b)
    oracle = oracle or TypeOracle()
    return oracle.type_of(a, k) == oracle.type_of(b, k)


def ef_game(a: Structure, b: Structure, k: int) -> bool:
    """Play the k-round game by exhaustive search over positions (small inputs only)."""
    _check_comparable(a, b)
    rels = [(name, arity) for name, arity in a.signature.relations]
    ca = tuple(a.constants[c] for c in a.signature.constants)
    cb = tuple(b.constants[c] for c in b.signature.constants)

    def partial_iso(xs, ys):
        m = len(xs)
        for i in range(m):
            for j in range(m):
                if (xs[i] == xs[j]) != (ys[i] == ys[j]):
                    return False
        for name, arity in rels:
            ra, rb = a.relations[name], b.relations[name]
            for pat in product(range(m), repeat=arity):
                if (tuple(xs[i] for i in pat) in ra) != (tuple(ys[i] for i in pat) in rb):
                    return False
        return True

    @lru_cache(maxsize=None)
    def duplicator_wins(xs, ys, rounds):
        if not partial_iso(xs, ys):
            return False
        if rounds == 0:
            return True
        for x in range(a.n):
            if not any(duplicator_wins(xs + (x,), ys + (y,), rounds - 1) for y in range(b.n)):
                return False
        for y in range(b.n):
            if not any(duplicator_wins(xs + (x,), ys + (y,), rounds - 1) for x in range(a.n)):
                return False
        return True

    return duplicator_wins(ca, cb, k)


@dataclass(frozen=True)
class ElementaryDistance:
    """``2^-k`` for the least distinguishing rank k, 0 for isomorphic inputs.

    When no rank up to ``kmax`` separates non-isomorphic structures the
    distance is only known to lie in ``(0, 2^-kmax]``: ``upper`` holds that
    bound and ``exact`` is False.
    """

    upper: Fraction
    exact: bool
    rank: int | None
    kmax: int

    @property
    def value(self) -> Fraction | None:
        return self.upper if self.exact else None

    def __str__(self):
        if self.exact and self.upper == 0:
            return "0"
        if self.exact:
            return f"2^-{self.rank}"
        return f"(0, 2^-{self.kmax}]"


def elementary_distance(a: Structure, b: Structure, kmax: int = 3,
                        oracle: TypeOracle | None = None) -> ElementaryDistance:
    if kmax < 1:
        raise EFError("kmax must be at least 1")
    _check_comparable(a, b)
    oracle = oracle or TypeOracle()
    for k in range(kmax + 1):
        if not ef_equivalent(a, b, k, oracle):
            return ElementaryDistance(Fraction(1, 2 ** k), True, k, kmax)
    if isomorphic(a, b):
        return ElementaryDistance(Fraction(0), True, None, kmax)
    return ElementaryDistance(Fraction(1, 2 ** kmax), False, None, kmax)
