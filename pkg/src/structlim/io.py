"""Text formats for structures, graphs and sequence manifests.

Structure format::

    structure 4          # universe size
    rel adj/2
    0 1  1 2
    rel P/1
    3
    const c 0

Graph shorthand::

    graph 3
    0 1
    1 2

``#`` starts a comment. Element tokens that are all integers in ``[0, n)``
are taken literally; otherwise labels are numbered in order of first
appearance and kept on the structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .structure import GRAPH, Signature, Structure, StructureError, edges_of, graph


class FormatError(StructureError):
    def __init__(self, msg, line=None):
        super().__init__(msg if line is None else f"line {line}: {msg}")
        self.line = line


def _lines(text):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


class _Labeler:
    def __init__(self, n, tokens):
        self.n = n
        literal = True
        for tok in tokens:
            try:
                v = int(tok)
            except ValueError:
                literal = False
                break
            if not 0 <= v < n:
                literal = False
                break
        self.literal = literal
        self.index: dict[str, int] = {}

    def __call__(self, tok, lineno):
        if self.literal:
            return int(tok)
        if tok not in self.index:
            if len(self.index) >= self.n:
                raise FormatError(f"more than {self.n} distinct element labels", lineno)
            self.index[tok] = len(self.index)
        return self.index[tok]

    def labels(self):
        if self.literal:
            return None
        names = [None] * self.n
        for tok, v in self.index.items():
            names[v] = tok
        return tuple(name if name is not None else f"_{i}" for i, name in enumerate(names))


def _header(lines, keyword):
    if not lines:
        raise FormatError("empty input")
    lineno, toks = lines[0]
    if len(toks) != 2 or toks[0] != keyword:
        raise FormatError(f"expected header '{keyword} <n>'", lineno)
    try:
        n = int(toks[1])
    except ValueError:
        raise FormatError(f"bad universe size {toks[1]!r}", lineno) from None
    if n < 0:
        raise FormatError("negative universe size", lineno)
    return n


def parse_graph(text: str) -> Structure:
    lines = list(_lines(text))
    n = _header(lines, "graph")
    body = lines[1:]
    lab = _Labeler(n, [t for _, toks in body for t in toks])
    edges = []
    for lineno, toks in body:
        if len(toks) != 2:
            raise FormatError("edge lines hold exactly two elements", lineno)
        edges.append((lab(toks[0], lineno), lab(toks[1], lineno)))
    g = graph(n, edges)
    labels = lab.labels()
    return g if labels is None else Structure(g.signature, n, g.relations, labels=labels)


def parse_structure(text: str) -> Structure:
    lines = list(_lines(text))
    n = _header(lines, "structure")
    body = lines[1:]
    element_tokens = []
    current = None
    for _, toks in body:
        if toks[0] == "rel":
            current = True
        elif toks[0] == "const":
            element_tokens.extend(toks[2:3])
        elif current:
            element_tokens.extend(toks)
    lab = _Labeler(n, element_tokens)

    relations: dict[str, list] = {}
    order: list[tuple[str, int]] = []
    constants: dict[str, int] = {}
    name = arity = None
    pending: list[int] = []

    def flush(lineno):
        if name is not None:
            if len(pending) % arity:
                raise FormatError(f"{len(pending)} elements do not split into {name}/{arity} tuples", lineno)
            relations[name].extend(tuple(pending[i:i + arity]) for i in range(0, len(pending), arity))
            pending.clear()

    for lineno, toks in body:
        if toks[0] == "rel":
            flush(lineno)
            if len(toks) != 2 or "/" not in toks[1]:
                raise FormatError("expected 'rel <name>/<arity>'", lineno)
            name, _, a = toks[1].partition("/")
            try:
                arity = int(a)
            except ValueError:
                raise FormatError(f"bad arity {a!r}", lineno) from None
            if name in relations:
                raise FormatError(f"relation {name} declared twice", lineno)
            relations[name] = []
            order.append((name, arity))
        elif toks[0] == "const":
            if len(toks) != 3:
                raise FormatError("expected 'const <name> <element>'", lineno)
            constants[toks[1]] = lab(toks[2], lineno)
        else:
            if name is None:
                raise FormatError("tuple data before any 'rel' line", lineno)
            pending.extend(lab(t, lineno) for t in toks)
    flush(None)

    sig = Signature(tuple(order), tuple(constants))
    if sig.is_graph:
        return graph_like(n, relations["adj"], lab.labels())
    return Structure(sig, n, relations, constants, lab.labels())


def graph_like(n, pairs, labels=None):
    g = graph(n, pairs)
    return g if labels is None else Structure(GRAPH, n, g.relations, labels=labels)


def parse(text: str) -> Structure:
    """Parse either format, dispatching on the header keyword."""
    for _, toks in _lines(text):
        if toks[0] == "graph":
            return parse_graph(text)
        if toks[0] == "structure":
            return parse_structure(text)
        raise FormatError(f"unknown header {toks[0]!r}")
    raise FormatError("empty input")


def load(path) -> Structure:
    return parse(Path(path).read_text())


def format_graph(g: Structure) -> str:
    lines = [f"graph {g.n}"] + [f"{u} {v}" for u, v in edges_of(g)]
    return "\n".join(lines) + "\n"


def format_structure(s: Structure) -> str:
    lines = [f"structure {s.n}"]
    for name, arity in s.signature.relations:
        lines.append(f"rel {name}/{arity}")
        lines.extend(" ".join(map(str, t)) for t in sorted(s.relations[name]))
    lines.extend(f"const {c} {v}" for c, v in s.constants.items())
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Manifest:
    paths: tuple[Path, ...]
    labels: tuple[str, ...]

    def load(self) -> list[Structure]:
        return [load(p) for p in self.paths]


def parse_manifest(text: str, base: Path | str = ".") -> Manifest:
    """One structure file per line, optionally followed by a label."""
    base = Path(base)
    paths, labels = [], []
    for lineno, toks in _lines(text):
        if len(toks) > 2:
            raise FormatError("expected '<path> [label]'", lineno)
        p = Path(toks[0])
        paths.append(p if p.is_absolute() else base / p)
        labels.append(toks[1] if len(toks) == 2 else p.stem)
    if not paths:
        raise FormatError("manifest lists no structures")
    return Manifest(tuple(paths), tuple(labels))


def load_manifest(path) -> Manifest:
    path = Path(path)
    return parse_manifest(path.read_text(), path.parent)
