"""Recursive-descent parser for the formula language.

Grammar, loosest binding first::

    f      := disj ("->" f)?                      right associative
    disj   := conj ("|" conj)*
    conj   := unary ("&" unary)*
    unary  := "~" unary | quant | primary
    quant  := ("E"|"A") var ["@<=" int "(" terms ")"] "." f
    primary:= "true" | "false" | "(" f ")" | name "(" terms ")"
            | term "=" term | term "~" term

A quantifier body extends as far right as possible. ``x~y`` is shorthand
for ``adj(x,y)`` and is only accepted when the signature has ``adj/2``.
Identifiers naming a signature constant are constants, all others are
variables.
"""

from __future__ import annotations

import re

from .formula import FALSE, TRUE, And, Atom, Const, Equal, Exists, Forall, Formula, Not, Or, Var, implies
from .structure import GRAPH, Signature


class FormulaError(ValueError):
    def __init__(self, msg, pos=None):
        super().__init__(msg if pos is None else f"{msg} (at position {pos})")
        self.pos = pos


class ParseError(FormulaError):
    pass


class UnknownSymbol(FormulaError):
    pass


class ArityMismatch(FormulaError):
    pass


_TOKEN = re.compile(r"\s*(?:(->|@<=|[()~&|.,=])|([A-Za-z_][A-Za-z0-9_']*)|(\d+))")
_KEYWORDS = {"E", "A", "true", "false"}


def tokenize(text: str):
    pos, out = 0, []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        if m.group(1):
            out.append(("op", m.group(1), start))
        elif m.group(2):
            out.append(("id", m.group(2), start))
        else:
            out.append(("int", int(m.group(3)), start))
        pos = m.end()
    out.append(("eof", None, len(text)))
    return out


class _Parser:
    def __init__(self, text, sig):
        self.toks = tokenize(text)
        self.i = 0
        self.sig = sig

    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def accept(self, value):
        if self.tok[0] == "op" and self.tok[1] == value:
            self.i += 1
            return True
        return False

    def expect(self, value):
        if not self.accept(value):
            kind, got, pos = self.tok
            raise ParseError(f"expected {value!r}, found {got if kind != 'eof' else 'end of input'!r}", pos)

    def parse(self):
        f = self.formula()
        if self.tok[0] != "eof":
            raise ParseError(f"unexpected {self.tok[1]!r}", self.tok[2])
        return f

    def formula(self):
        left = self.disj()
        if self.accept("->"):
            return implies(left, self.formula())
        return left

    def disj(self):
        f = self.conj()
        while self.accept("|"):
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.accept("&"):
            f = And(f, self.unary())
        return f

    def unary(self):
        if self.accept("~"):
            return Not(self.unary())
        kind, val, _ = self.tok
        if kind == "id" and val in ("E", "A"):
            return self.quantifier()
        return self.primary()

    def variable(self):
        kind, val, pos = self.tok
        if kind != "id" or val in _KEYWORDS:
            raise ParseError(f"expected a variable, found {val!r}", pos)
        if val in self.sig.constants:
            raise ParseError(f"cannot quantify over constant {val!r}", pos)
        self.i += 1
        return val

    def term(self):
        kind, val, pos = self.tok
        if kind != "id" or val in _KEYWORDS:
            raise ParseError(f"expected a term, found {val!r}", pos)
        self.i += 1
        return Const(val) if val in self.sig.constants else Var(val)

    def terms(self):
        self.expect("(")
        out = [self.term()]
        while self.accept(","):
            out.append(self.term())
        self.expect(")")
        return tuple(out)

    def quantifier(self):
        kind = self.tok[1]
        self.i += 1
        var = self.variable()
        radius, centers = None, ()
        if self.accept("@<="):
            k, val, pos = self.tok
            if k != "int":
                raise ParseError("expected an integer radius after '@<='", pos)
            self.i += 1
            radius = val
            centers = self.terms()
        self.expect(".")
        body = self.formula()
        cls = Exists if kind == "E" else Forall
        return cls(var, body, radius, centers)

    def primary(self):
        kind, val, pos = self.tok
        if kind == "id" and val == "true":
            self.i += 1
            return TRUE
        if kind == "id" and val == "false":
            self.i += 1
            return FALSE
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        if kind != "id":
            raise ParseError(f"unexpected {val if kind != 'eof' else 'end of input'!r}", pos)
        nxt = self.peek()
        if nxt[0] == "op" and nxt[1] == "(":
            self.i += 1
            if not self.sig.has_relation(val):
                raise UnknownSymbol(f"unknown relation {val!r}", pos)
            args = self.terms()
            arity = self.sig.arity(val)
            if len(args) != arity:
                raise ArityMismatch(f"{val} has arity {arity}, got {len(args)} arguments", pos)
            return Atom(val, args)
        left = self.term()
        if self.accept("="):
            return Equal(left, self.term())
        if self.accept("~"):
            if not self.sig.has_relation("adj") or self.sig.arity("adj") != 2:
                raise UnknownSymbol("'~' needs a binary relation adj in the signature", pos)
            return Atom("adj", (left, self.term()))
        raise ParseError(f"expected '=', '~' or '(' after {val!r}", self.tok[2])


def parse(text: str, sig: Signature = GRAPH) -> Formula:
    return _Parser(text, sig).parse()
