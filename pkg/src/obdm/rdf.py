"""RDF data model, a Turtle subset parser, and a canonical serializer.

The Graph type produced here is the substrate every other module works on.
The parser covers the Turtle constructs needed for OWL class hierarchies
and SKOS taxonomies: prefix/base directives, IRIs, prefixed names, the
``a`` keyword, literals (language tags, datatypes, bare numbers/booleans),
predicate and object lists, and blank nodes (labeled or anonymous property
lists).  RDF collections ``( ... )`` are rejected explicitly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union
from urllib.parse import urljoin

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
XSD = "http://www.w3.org/2001/XMLSchema#"

_PREFIX_RE = re.compile(r"[A-Za-z][A-Za-z0-9_.-]*\Z")
# Local names safe to round-trip through a prefixed name.
_SAFE_LOCAL_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.-]*\Z")


class RdfError(Exception):
    pass


class TurtleSyntaxError(RdfError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnsupportedConstruct(TurtleSyntaxError):
    pass


class UnknownPrefix(RdfError):
    def __init__(self, prefix: str):
        super().__init__(f"unknown prefix: {prefix!r}")
        self.prefix = prefix


@dataclass(frozen=True, order=True)
class Iri:
    value: str

    def __post_init__(self):
        if not self.value:
            raise RdfError("empty IRI")

    def local_name(self) -> str:
        v = self.value
        for sep in ("#", "/", ":"):
            idx = v.rfind(sep)
            if idx >= 0 and idx + 1 < len(v):
                return v[idx + 1 :]
        return v

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class BlankNode:
    label: str

    def __str__(self) -> str:
        return f"_:{self.label}"


@dataclass(frozen=True)
class Literal:
    lexical: str
    datatype: Optional[Iri] = None
    language: Optional[str] = None

    def __post_init__(self):
        if self.datatype is not None and self.language is not None:
            raise RdfError("literal cannot carry both datatype and language")

    def sort_key(self):
        return (
            self.lexical,
            self.datatype.value if self.datatype else "",
            self.language or "",
        )


Term = Union[Iri, BlankNode, Literal]
Subject = Union[Iri, BlankNode]


@dataclass(frozen=True)
class Triple:
    subject: Subject
    predicate: Iri
    object: Term


def term_sort_key(t: Term):
    # IRIs first, then blank nodes, then literals; each ordered internally.
    if isinstance(t, Iri):
        return (0, t.value, "", "")
    if isinstance(t, BlankNode):
        return (1, t.label, "", "")
    return (2,) + t.sort_key()


@dataclass(frozen=True)
class Graph:
    triples: frozenset[Triple] = frozenset()
    prefixes: tuple[tuple[str, str], ...] = ()

    @staticmethod
    def of(triples: Iterable[Triple], prefixes: Optional[dict[str, str]] = None) -> "Graph":
        pfx = tuple(sorted((prefixes or {}).items()))
        return Graph(frozenset(triples), pfx)

    @property
    def prefix_map(self) -> dict[str, str]:
        return dict(self.prefixes)

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.triples)

    def objects(self, subject: Subject, predicate: Iri) -> list[Term]:
        return [t.object for t in self.triples if t.subject == subject and t.predicate == predicate]


def validate_prefix(prefix: str) -> None:
    if not _PREFIX_RE.match(prefix):
        raise RdfError(f"invalid prefix: {prefix!r}")


def expand_curie(curie: str, prefixes: dict[str, str]) -> Iri:
    prefix, _, local = curie.partition(":")
    if prefix not in prefixes:
        raise UnknownPrefix(prefix)
    return Iri(prefixes[prefix] + local)


def compress_iri(iri: Iri, prefixes: dict[str, str]) -> Union[str, Iri]:
    """CURIE for the longest matching namespace, or the IRI unchanged.

    Ties on namespace length break toward the lexicographically smallest
    prefix.  Locals that would not survive re-parsing are left expanded.
    """
    best = None
    for prefix, ns in sorted(prefixes.items()):
        if iri.value.startswith(ns) and ns:
            if best is None or len(ns) > len(best[1]):
                best = (prefix, ns)
    if best is None:
        return iri
    local = iri.value[len(best[1]) :]
    if local and not _SAFE_LOCAL_RE.match(local):
        return iri
    return f"{best[0]}:{local}"


def looks_like_iri(text: str) -> bool:
    return "://" in text or text.lower().startswith("urn:")


# ---------------------------------------------------------------------------
# Turtle parsing


_ESCAPES = {
    "t": "\t",
    "b": "\b",
    "n": "\n",
    "r": "\r",
    "f": "\f",
    '"': '"',
    "'": "'",
    "\\": "\\",
}

_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?")
_PNAME_LOCAL_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.-]*")
_LANGTAG_RE = re.compile(r"@[A-Za-z]+(?:-[A-Za-z0-9]+)*")


@dataclass
class _Token:
    kind: str  # iri | pname | bnode | string | number | boolean | punct | a | prefix_kw | base_kw | langtag | eof
    value: str
    line: int
    col: int
    extra: Optional[str] = None  # language tag / datatype marker payload


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def _advance(self, n: int) -> None:
        chunk = self.text[self.pos : self.pos + n]
        nl = chunk.count("\n")
        if nl:
            self.line += nl
            self.col = len(chunk) - chunk.rfind("\n")
        else:
            self.col += n
        self.pos += n

    def _skip_ws(self) -> None:
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c in " \t\r\n":
                self._advance(1)
            elif c == "#":
                end = self.text.find("\n", self.pos)
                self._advance((end - self.pos) if end >= 0 else (len(self.text) - self.pos))
            else:
                return

    def error(self, msg: str) -> TurtleSyntaxError:
        return TurtleSyntaxError(msg, self.line, self.col)

    def _read_quoted(self, quote: str) -> str:
        # caller consumed nothing; text[pos] == quote
        line, col = self.line, self.col
        self._advance(1)
        out = []
        while True:
            if self.pos >= len(self.text):
                raise TurtleSyntaxError("unterminated string", line, col)
            c = self.text[self.pos]
            if c == quote:
                self._advance(1)
                return "".join(out)
            if c == "\n":
                raise TurtleSyntaxError("newline in string", self.line, self.col)
            if c == "\\":
                if self.pos + 1 >= len(self.text):
                    raise self.error("dangling escape")
                e = self.text[self.pos + 1]
                if e in _ESCAPES:
                    out.append(_ESCAPES[e])
                    self._advance(2)
                elif e == "u" or e == "U":
                    width = 4 if e == "u" else 8
                    hexpart = self.text[self.pos + 2 : self.pos + 2 + width]
                    if len(hexpart) != width or not all(h in "0123456789abcdefABCDEF" for h in hexpart):
                        raise self.error("bad unicode escape")
                    out.append(chr(int(hexpart, 16)))
                    self._advance(2 + width)
                else:
                    raise self.error(f"unknown escape \\{e}")
            else:
                out.append(c)
                self._advance(1)

    def next(self) -> _Token:
        self._skip_ws()
        line, col = self.line, self.col
        if self.pos >= len(self.text):
            return _Token("eof", "", line, col)
        c = self.text[self.pos]
        if c == "<":
            end = self.pos + 1
            while end < len(self.text) and self.text[end] not in ">\n":
                end += 1
            if end >= len(self.text) or self.text[end] != ">":
                raise TurtleSyntaxError("unterminated IRI", line, col)
            raw = self.text[self.pos + 1 : end]
            self._advance(end - self.pos + 1)
            return _Token("iri", _unescape_iri(raw, line, col), line, col)
        if c in ".;,[]()":
            # "." may start a decimal number
            if c == "." and self.pos + 1 < len(self.text) and self.text[self.pos + 1].isdigit():
                pass
            else:
                self._advance(1)
                return _Token("punct", c, line, col)
        if c == "^" and self.text[self.pos : self.pos + 2] == "^^":
            self._advance(2)
            return _Token("punct", "^^", line, col)
        if c == "@":
            m = _LANGTAG_RE.match(self.text, self.pos)
            if not m:
                raise TurtleSyntaxError("bad @-token", line, col)
            word = m.group(0)
            self._advance(len(word))
            if word == "@prefix":
                return _Token("prefix_kw", word, line, col)
            if word == "@base":
                return _Token("base_kw", word, line, col)
            return _Token("langtag", word[1:], line, col)
        if c == '"' or c == "'":
            s = self._read_quoted(c)
            return _Token("string", s, line, col)
        if c == "_" and self.text[self.pos : self.pos + 2] == "_:":
            m = _PNAME_LOCAL_RE.match(self.text, self.pos + 2)
            if not m:
                raise TurtleSyntaxError("bad blank node label", line, col)
            self._advance(2 + len(m.group(0)))
            return _Token("bnode", m.group(0), line, col)
        m = _NUMBER_RE.match(self.text, self.pos)
        if m and (c.isdigit() or c in "+-."):
            word = m.group(0)
            self._advance(len(word))
            return _Token("number", word, line, col)
        # prefixed name, "a", boolean, or bare keyword
        m = re.match(r"[A-Za-z][A-Za-z0-9_.-]*", self.text[self.pos :])
        if m:
            word = m.group(0)
            after = self.pos + len(word)
            if after < len(self.text) and self.text[after] == ":":
                local_m = _PNAME_LOCAL_RE.match(self.text, after + 1)
                local = local_m.group(0) if local_m else ""
                self._advance(len(word) + 1 + len(local))
                return _Token("pname", f"{word}:{local}", line, col)
            if word == "a":
                self._advance(1)
                return _Token("a", "a", line, col)
            if word in ("true", "false"):
                self._advance(len(word))
                return _Token("boolean", word, line, col)
            if word in ("PREFIX", "BASE"):
                self._advance(len(word))
                return _Token("prefix_kw" if word == "PREFIX" else "base_kw", word, line, col)
        if c == ":":
            # default ("empty") prefix
            local_m = _PNAME_LOCAL_RE.match(self.text, self.pos + 1)
            local = local_m.group(0) if local_m else ""
            self._advance(1 + len(local))
            return _Token("pname", f":{local}", line, col)
        raise TurtleSyntaxError(f"unexpected character {c!r}", line, col)


def _unescape_iri(raw: str, line: int, col: int) -> str:
    if "\\" not in raw:
        return raw
    out = []
    i = 0
    while i < len(raw):
        if raw[i] == "\\":
            if i + 1 < len(raw) and raw[i + 1] in "uU":
                width = 4 if raw[i + 1] == "u" else 8
                hexpart = raw[i + 2 : i + 2 + width]
                if len(hexpart) != width:
                    raise TurtleSyntaxError("bad unicode escape in IRI", line, col)
                out.append(chr(int(hexpart, 16)))
                i += 2 + width
                continue
            raise TurtleSyntaxError("bad escape in IRI", line, col)
        out.append(raw[i])
        i += 1
    return "".join(out)


class ParseResult:
    def __init__(self, graph: Graph, warnings: list[str]):
        self.graph = graph
        self.warnings = warnings


class _Parser:
    def __init__(self, text: str):
        self.lexer = _Lexer(text)
        self.prefixes: dict[str, str] = {}
        self.base: Optional[str] = None
        self.triples: list[Triple] = []
        self.warnings: list[str] = []
        self._bnode_map: dict[str, BlankNode] = {}
        self._bnode_count = 0
        self._tok = self.lexer.next()

    def _next(self) -> _Token:
        tok = self._tok
        self._tok = self.lexer.next()
        return tok

    def _expect_punct(self, value: str) -> None:
        tok = self._next()
        if tok.kind != "punct" or tok.value != value:
            raise TurtleSyntaxError(f"expected {value!r}", tok.line, tok.col)

    def _fresh_bnode(self) -> BlankNode:
        node = BlankNode(f"b{self._bnode_count}")
        self._bnode_count += 1
        return node

    def _labeled_bnode(self, label: str) -> BlankNode:
        if label not in self._bnode_map:
            self._bnode_map[label] = self._fresh_bnode()
        return self._bnode_map[label]

    def _resolve_iri(self, raw: str, tok: _Token) -> Iri:
        if looks_like_iri(raw) or self.base is None:
            value = raw
        else:
            value = urljoin(self.base, raw)
        if not value:
            raise TurtleSyntaxError("empty IRI", tok.line, tok.col)
        return Iri(value)

    def _expand(self, pname: str, tok: _Token) -> Iri:
        prefix, _, local = pname.partition(":")
        if prefix not in self.prefixes:
            raise TurtleSyntaxError(f"undeclared prefix {prefix!r}", tok.line, tok.col)
        return Iri(self.prefixes[prefix] + local)

    def parse(self) -> ParseResult:
        while self._tok.kind != "eof":
            if self._tok.kind == "prefix_kw":
                self._directive_prefix()
            elif self._tok.kind == "base_kw":
                self._directive_base()
            else:
                self._statement()
        graph = canonicalize_blank_labels(Graph.of(self.triples, self.prefixes))
        return ParseResult(graph, self.warnings)

    def _directive_prefix(self) -> None:
        kw = self._next()
        tok = self._next()
        if tok.kind != "pname":
            raise TurtleSyntaxError("expected prefix declaration", tok.line, tok.col)
        prefix, _, local = tok.value.partition(":")
        if local:
            raise TurtleSyntaxError("prefix declaration must end with ':'", tok.line, tok.col)
        if not _PREFIX_RE.match(prefix):
            raise TurtleSyntaxError(f"invalid prefix {prefix!r}", tok.line, tok.col)
        iri_tok = self._next()
        if iri_tok.kind != "iri":
            raise TurtleSyntaxError("expected namespace IRI", iri_tok.line, iri_tok.col)
        if prefix in self.prefixes and self.prefixes[prefix] != iri_tok.value:
            self.warnings.append(f"prefix {prefix!r} redeclared; last declaration wins")
        self.prefixes[prefix] = self._resolve_iri(iri_tok.value, iri_tok).value
        if kw.value == "@prefix":
            self._expect_punct(".")

    def _directive_base(self) -> None:
        kw = self._next()
        tok = self._next()
        if tok.kind != "iri":
            raise TurtleSyntaxError("expected base IRI", tok.line, tok.col)
        self.base = tok.value
        if kw.value == "@base":
            self._expect_punct(".")

    def _statement(self) -> None:
        tok = self._tok
        if tok.kind == "punct" and tok.value == "[":
            subject = self._bnode_property_list()
            if self._tok.kind == "punct" and self._tok.value == ".":
                self._next()
                return
            self._predicate_object_list(subject)
        else:
            subject = self._subject()
            self._predicate_object_list(subject)
        self._expect_punct(".")

    def _subject(self) -> Subject:
        tok = self._next()
        if tok.kind == "iri":
            return self._resolve_iri(tok.value, tok)
        if tok.kind == "pname":
            return self._expand(tok.value, tok)
        if tok.kind == "bnode":
            return self._labeled_bnode(tok.value)
        raise TurtleSyntaxError("expected subject", tok.line, tok.col)

    def _predicate(self) -> Iri:
        tok = self._next()
        if tok.kind == "a":
            return Iri(RDF_TYPE)
        if tok.kind == "iri":
            return self._resolve_iri(tok.value, tok)
        if tok.kind == "pname":
            return self._expand(tok.value, tok)
        raise TurtleSyntaxError("expected predicate", tok.line, tok.col)

    def _predicate_object_list(self, subject: Subject) -> None:
        while True:
            predicate = self._predicate()
            self._object_list(subject, predicate)
            if self._tok.kind == "punct" and self._tok.value == ";":
                self._next()
                # trailing ';' before '.' or ']'
                if self._tok.kind == "punct" and self._tok.value in ".]":
                    return
                continue
            return

    def _object_list(self, subject: Subject, predicate: Iri) -> None:
        while True:
            obj = self._object()
            self.triples.append(Triple(subject, predicate, obj))
            if self._tok.kind == "punct" and self._tok.value == ",":
                self._next()
                continue
            return

    def _object(self) -> Term:
        tok = self._tok
        if tok.kind == "punct" and tok.value == "(":
            raise UnsupportedConstruct("RDF collections are not supported", tok.line, tok.col)
        if tok.kind == "punct" and tok.value == "[":
            return self._bnode_property_list()
        tok = self._next()
        if tok.kind == "iri":
            return self._resolve_iri(tok.value, tok)
        if tok.kind == "pname":
            return self._expand(tok.value, tok)
        if tok.kind == "bnode":
            return self._labeled_bnode(tok.value)
        if tok.kind == "string":
            if self._tok.kind == "langtag":
                lang = self._next().value
                return Literal(tok.value, language=lang)
            if self._tok.kind == "punct" and self._tok.value == "^^":
                self._next()
                dt_tok = self._next()
                if dt_tok.kind == "iri":
                    return Literal(tok.value, datatype=self._resolve_iri(dt_tok.value, dt_tok))
                if dt_tok.kind == "pname":
                    return Literal(tok.value, datatype=self._expand(dt_tok.value, dt_tok))
                raise TurtleSyntaxError("expected datatype IRI", dt_tok.line, dt_tok.col)
            return Literal(tok.value)
        if tok.kind == "number":
            if "." in tok.value or "e" in tok.value or "E" in tok.value:
                dt = XSD + ("double" if "e" in tok.value.lower() else "decimal")
            else:
                dt = XSD + "integer"
            return Literal(tok.value, datatype=Iri(dt))
        if tok.kind == "boolean":
            return Literal(tok.value, datatype=Iri(XSD + "boolean"))
        raise TurtleSyntaxError("expected object", tok.line, tok.col)

    def _bnode_property_list(self) -> BlankNode:
        self._expect_punct("[")
        node = self._fresh_bnode()
        if self._tok.kind == "punct" and self._tok.value == "]":
            self._next()
            return node
        self._predicate_object_list(node)
        self._expect_punct("]")
        return node


def parse_turtle(text: str) -> Graph:
    return _Parser(text).parse().graph


def parse_turtle_with_warnings(text: str) -> ParseResult:
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Canonical serialization


def _escape_literal(text: str) -> str:
    out = text.replace("\\", "\\\\").replace('"', '\\"')
    return out.replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")


def _render_iri(iri: Iri, prefixes: dict[str, str]) -> str:
    compressed = compress_iri(iri, prefixes)
    if isinstance(compressed, str):
        return compressed
    return f"<{iri.value}>"


def _render_term(term: Term, prefixes: dict[str, str]) -> str:
    if isinstance(term, Iri):
        return _render_iri(term, prefixes)
    if isinstance(term, BlankNode):
        return f"_:{term.label}"
    rendered = f'"{_escape_literal(term.lexical)}"'
    if term.language:
        return f"{rendered}@{term.language}"
    if term.datatype:
        return f"{rendered}^^{_render_iri(term.datatype, prefixes)}"
    return rendered


def _subject_sort_key(s: Subject):
    if isinstance(s, Iri):
        return (0, s.value)
    return (1, s.label)


def _emit(g: Graph) -> tuple[str, list[str]]:
    """Emit sorted Turtle; also report blank labels in appearance order."""
    prefixes = g.prefix_map
    lines: list[str] = []
    appearance: list[str] = []

    def note(term: Term) -> None:
        if isinstance(term, BlankNode) and term.label not in appearance:
            appearance.append(term.label)

    for prefix, ns in sorted(prefixes.items()):
        lines.append(f"@prefix {prefix}: <{ns}> .")
    by_subject: dict[Subject, dict[Iri, list[Term]]] = {}
    for t in g.triples:
        by_subject.setdefault(t.subject, {}).setdefault(t.predicate, []).append(t.object)
    if lines and by_subject:
        lines.append("")
    for subject in sorted(by_subject, key=_subject_sort_key):
        note(subject)
        preds = by_subject[subject]
        parts = []
        for predicate in sorted(preds, key=lambda p: p.value):
            rendered_pred = "a" if predicate.value == RDF_TYPE else _render_iri(predicate, prefixes)
            objs = sorted(preds[predicate], key=term_sort_key)
            for o in objs:
                note(o)
            rendered_objs = ", ".join(_render_term(o, prefixes) for o in objs)
            parts.append(f"{rendered_pred} {rendered_objs}")
        subj = _render_term(subject, prefixes)
        if len(parts) == 1:
            lines.append(f"{subj} {parts[0]} .")
        else:
            body = " ;\n    ".join(parts)
            lines.append(f"{subj} {body} .")
    return "\n".join(lines) + "\n", appearance


def _relabel(g: Graph, mapping: dict[str, str]) -> Graph:
    def rename(term: Term) -> Term:
        if isinstance(term, BlankNode):
            return BlankNode(mapping.get(term.label, term.label))
        return term

    return Graph(
        frozenset(Triple(rename(t.subject), t.predicate, rename(t.object)) for t in g.triples),
        g.prefixes,
    )


def canonicalize_blank_labels(g: Graph) -> Graph:
    """Relabel blank nodes to b0, b1, ... in canonical emission order.

    Keeps parse and serialize in agreement: a reparse of the canonical
    serialization assigns exactly the labels the graph already carries.
    """
    for _ in range(10):
        _, appearance = _emit(g)
        mapping = {old: f"b{i}" for i, old in enumerate(appearance)}
        if all(old == new for old, new in mapping.items()):
            return g
        g = _relabel(g, mapping)
    return g


def serialize_turtle(g: Graph) -> str:
    """Deterministic Turtle: sorted prefixes, subjects, predicates, objects;
    blank labels canonicalized to appearance order."""
    text, _ = _emit(canonicalize_blank_labels(g))
    return text
