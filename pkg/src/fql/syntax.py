"""Surface syntax: tokenizer, recursive-descent parser, printer and resolver.

    schema S = {
      nodes Emp, Dept;
      edges manager : Emp -> Emp, worksIn : Emp -> Dept;
      equations Emp.manager.worksIn = Emp.worksIn;
      attributes Emp.name : String;
    }
    mapping F : S -> T = { nodes Emp -> E; edges manager -> E.boss; attributes name -> name; }
    instance I : S = { node Emp = 1, 2; edge manager = 1 -> 2, 2 -> 2; attribute name = 1 -> "a", 2 -> "b"; }
    instance J : S = file "j.json";
    query Q = sigma H pi G delta F;
    query Q2 = compose Q Q;
    eval Q I;

Identifiers that are not plain words are written in backquotes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path as FilePath

from .errors import ParseError, ResolutionError
from .instance import Instance
from .rewrite import Path
from .signature import Morphism, TypedSignature

KEYWORDS = {"schema", "mapping", "instance", "query", "nodes", "edges", "equations",
            "attributes", "node", "edge", "attribute", "file", "sigma", "pi", "delta",
            "attr", "compose", "check", "eval", "sql", "encode"}
COMMANDS = ("check", "eval", "compose", "sql", "encode")
PLAIN = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<arrow>->)
  | (?P<number>-?[0-9]+)
  | (?P<word>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<quoted>`(?:[^`\\\n]|\\.)*`)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<punct>[{};,:=.])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    value: object
    line: int
    column: int


def tokenize(text: str) -> list:
    tokens, line, start, pos = [], 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind, raw = m.lastgroup, m.group()
        col = pos - start + 1
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind == "word":
            tokens.append(Token("keyword" if raw in KEYWORDS else "ident", raw, raw, line, col))
        elif kind == "quoted":
            tokens.append(Token("ident", raw, _unescape(raw[1:-1]), line, col))
        elif kind == "string":
            tokens.append(Token("string", raw, json.loads(raw), line, col))
        elif kind == "number":
            tokens.append(Token("number", raw, int(raw), line, col))
        elif kind in ("arrow", "punct"):
            tokens.append(Token(raw, raw, raw, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", None, line, pos - start + 1))
    return tokens


def _unescape(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s)


# -- AST ---------------------------------------------------------------------------

Span = tuple


def _span():
    return field(default=(0, 0), compare=False, repr=False)


@dataclass
class PathExpr:
    start: str
    edges: tuple = ()

    def to_path(self) -> Path:
        return Path(self.start, tuple(self.edges))


@dataclass
class SchemaDecl:
    name: str
    nodes: list
    edges: list
    equations: list
    attributes: list
    span: Span = _span()


@dataclass
class MappingDecl:
    name: str
    source: str
    target: str
    nodes: list
    edges: list
    attributes: list
    span: Span = _span()


@dataclass
class InstanceDecl:
    name: str
    schema: str
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    attributes: list = field(default_factory=list)
    file: str | None = None
    span: Span = _span()


@dataclass
class QueryDecl:
    name: str
    legs: dict = field(default_factory=dict)
    compose: tuple | None = None
    span: Span = _span()


@dataclass
class CommandDecl:
    kind: str
    args: list
    span: Span = _span()


@dataclass
class Program:
    decls: list = field(default_factory=list)

    def named(self) -> dict:
        return {d.name: d for d in self.decls if not isinstance(d, CommandDecl)}

    def commands(self) -> list:
        return [d for d in self.decls if isinstance(d, CommandDecl)]


# -- parser --------------------------------------------------------------------------

class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.column)

    def take(self, kind: str, text: str | None = None) -> Token:
        tok = self.tok
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            got = tok.text or tok.kind
            raise self.error(f"expected {want!r}, found {got!r}")
        self.i += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        return self.tok.kind == kind and (text is None or self.tok.text == text)

    def accept(self, kind: str, text: str | None = None) -> bool:
        if self.at(kind, text):
            self.i += 1
            return True
        return False

    def name(self) -> str:
        return self.take("ident").value

    def program(self) -> Program:
        decls = []
        while not self.at("eof"):
            decls.append(self.decl())
        return Program(decls)

    def decl(self):
        tok = self.tok
        if tok.kind != "keyword":
            raise self.error(f"expected a declaration, found {tok.text!r}")
        span = (tok.line, tok.column)
        if tok.text == "schema":
            return self.schema(span)
        if tok.text == "mapping":
            return self.mapping(span)
        if tok.text == "instance":
            return self.instance(span)
        if tok.text == "query":
            return self.query(span)
        if tok.text in COMMANDS:
            self.i += 1
            args = []
            while self.at("ident"):
                args.append(self.name())
            self.take(";")
            return CommandDecl(tok.text, args, span)
        raise self.error(f"unexpected keyword {tok.text!r}")

    def block(self, sections: dict):
        self.take("{")
        while not self.accept("}"):
            tok = self.tok
            if tok.kind != "keyword" or tok.text not in sections:
                raise self.error(f"expected one of {', '.join(sections)}, found {tok.text!r}")
            self.i += 1
            sections[tok.text]()
            self.take(";")
        self.accept(";")

    def commas(self, item) -> list:
        out = [item()]
        while self.accept(","):
            out.append(item())
        return out

    def path(self) -> PathExpr:
        start = self.name()
        edges = []
        while self.accept("."):
            edges.append(self.name())
        return PathExpr(start, tuple(edges))

    def schema(self, span) -> SchemaDecl:
        self.take("keyword", "schema")
        d = SchemaDecl(self.name(), [], [], [], [], span)
        self.take("=")

        def edge():
            e = self.name()
            self.take(":")
            s = self.name()
            self.take("->")
            return (e, s, self.name())

        def equation():
            p = self.path()
            self.take("=")
            return (p, self.path())

        def attribute():
            node = self.name()
            self.take(".")
            a = self.name()
            self.take(":")
            return (node, a, self.name())

        self.block({
            "nodes": lambda: d.nodes.extend(self.commas(self.name)),
            "edges": lambda: d.edges.extend(self.commas(edge)),
            "equations": lambda: d.equations.extend(self.commas(equation)),
            "attributes": lambda: d.attributes.extend(self.commas(attribute)),
        })
        return d

    def mapping(self, span) -> MappingDecl:
        self.take("keyword", "mapping")
        name = self.name()
        self.take(":")
        src = self.name()
        self.take("->")
        d = MappingDecl(name, src, self.name(), [], [], [], span)
        self.take("=")

        def pair():
            a = self.name()
            self.take("->")
            return (a, self.name())

        def edge():
            e = self.name()
            self.take("->")
            return (e, self.path())

        nodes = lambda: d.nodes.extend(self.commas(pair))
        edges = lambda: d.edges.extend(self.commas(edge))
        attrs = lambda: d.attributes.extend(self.commas(pair))
        self.block({"nodes": nodes, "node": nodes, "edges": edges, "edge": edges,
                    "attributes": attrs, "attr": attrs})
        return d

    def value(self):
        tok = self.tok
        if tok.kind in ("ident", "string", "number"):
            self.i += 1
            return tok.value
        raise self.error(f"expected a value, found {tok.text!r}")

    def instance(self, span) -> InstanceDecl:
        self.take("keyword", "instance")
        name = self.name()
        self.take(":")
        d = InstanceDecl(name, self.name(), span=span)
        self.take("=")
        if self.accept("keyword", "file"):
            d.file = self.take("string").value
            self.take(";")
            return d

        def mapsto():
            x = self.value()
            self.take("->")
            return (x, self.value())

        def table(target, item):
            def run():
                label = self.name()
                self.take("=")
                target.append((label, self.commas(item) if not self.at(";") else []))
            return run

        attrs = table(d.attributes, mapsto)
        self.block({"node": table(d.nodes, self.value), "edge": table(d.edges, mapsto),
                    "attribute": attrs, "attr": attrs})
        return d

    def query(self, span) -> QueryDecl:
        self.take("keyword", "query")
        d = QueryDecl(self.name(), span=span)
        self.take("=")
        if self.accept("keyword", "compose"):
            d.compose = (self.name(), self.name())
        else:
            for leg in ("sigma", "pi", "delta"):
                if self.accept("keyword", leg):
                    d.legs[leg] = self.name()
            if not d.legs:
                raise self.error("a query needs at least one of sigma, pi, delta")
        self.take(";")
        return d


def parse(text: str) -> Program:
    return Parser(text).program()


# -- printer ---------------------------------------------------------------------------

def ident(name: str) -> str:
    if PLAIN.match(name) and name not in KEYWORDS:
        return name
    return "`" + name.replace("\\", "\\\\").replace("`", "\\`") + "`"


def _value(v) -> str:
    if isinstance(v, bool):
        raise TypeError("booleans are not values")
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str) and PLAIN.match(v) and v not in KEYWORDS:
        return v
    return json.dumps(v)


def _path(p: PathExpr) -> str:
    return ".".join(ident(x) for x in (p.start,) + tuple(p.edges))


def _section(label: str, items: list) -> str:
    return f"  {label} {', '.join(items)};\n" if items else ""


def print_decl(d) -> str:
    if isinstance(d, SchemaDecl):
        body = (_section("nodes", [ident(n) for n in d.nodes])
                + _section("edges", [f"{ident(e)} : {ident(s)} -> {ident(t)}" for e, s, t in d.edges])
                + _section("equations", [f"{_path(p)} = {_path(q)}" for p, q in d.equations])
                + _section("attributes", [f"{ident(n)}.{ident(a)} : {ident(t)}"
                                          for n, a, t in d.attributes]))
        return f"schema {ident(d.name)} = {{\n{body}}}\n"
    if isinstance(d, MappingDecl):
        body = (_section("nodes", [f"{ident(a)} -> {ident(b)}" for a, b in d.nodes])
                + _section("edges", [f"{ident(e)} -> {_path(p)}" for e, p in d.edges])
                + _section("attributes", [f"{ident(a)} -> {ident(b)}" for a, b in d.attributes]))
        return f"mapping {ident(d.name)} : {ident(d.source)} -> {ident(d.target)} = {{\n{body}}}\n"
    if isinstance(d, InstanceDecl):
        head = f"instance {ident(d.name)} : {ident(d.schema)} = "
        if d.file is not None:
            return head + f"file {json.dumps(d.file)};\n"
        lines = []
        for n, xs in d.nodes:
            lines.append(f"  node {ident(n)} = {', '.join(_value(x) for x in xs)};\n")
        for label, kind in ((d.edges, "edge"), (d.attributes, "attribute")):
            for e, pairs in label:
                body = ", ".join(f"{_value(x)} -> {_value(y)}" for x, y in pairs)
                lines.append(f"  {kind} {ident(e)} = {body};\n")
        return head + "{\n" + "".join(lines) + "}\n"
    if isinstance(d, QueryDecl):
        if d.compose:
            return f"query {ident(d.name)} = compose {ident(d.compose[0])} {ident(d.compose[1])};\n"
        legs = " ".join(f"{leg} {ident(d.legs[leg])}" for leg in ("sigma", "pi", "delta")
                        if leg in d.legs)
        return f"query {ident(d.name)} = {legs};\n"
    if isinstance(d, CommandDecl):
        return " ".join([d.kind] + [ident(a) for a in d.args]) + ";\n"
    raise TypeError(f"not a declaration: {d!r}")


def print_program(p: Program) -> str:
    return "\n".join(print_decl(d) for d in p.decls)


# -- conversion from engine objects --------------------------------------------------

def schema_decl(name: str, S: TypedSignature) -> SchemaDecl:
    return SchemaDecl(
        name, list(S.nodes), [(e, s, t) for e, (s, t) in S.edges.items()],
        [(PathExpr(p.start, p.edges), PathExpr(q.start, q.edges)) for p, q in S.equations],
        [(n, a, base) for a, (n, base) in S.attributes.items()])


def mapping_decl(name: str, F: Morphism, source: str, target: str) -> MappingDecl:
    return MappingDecl(
        name, source, target, list(F.node_map.items()),
        [(e, PathExpr(p.start, p.edges)) for e, p in F.edge_map.items()],
        list(F.attr_map.items()))


def instance_decl(name: str, I: Instance, schema: str) -> InstanceDecl:
    return InstanceDecl(
        name, schema, [(n, list(r)) for n, r in I.node_rows.items()],
        [(e, list(t.items())) for e, t in I.edge_fn.items()],
        [(a, list(t.items())) for a, t in I.attr_fn.items()])


# -- resolution --------------------------------------------------------------------------

@dataclass
class Environment:
    schemas: dict = field(default_factory=dict)
    mappings: dict = field(default_factory=dict)
    instances: dict = field(default_factory=dict)
    queries: dict = field(default_factory=dict)
    decls: dict = field(default_factory=dict)


def resolve(program: Program, *, base_dir: str | None = None, fuel: int | None = None,
            check_queries: bool = False) -> Environment:
    """Build engine objects; names must be unique and declared before use."""
    from .query import Query, compose as compose_queries, make_query
    from .signature import identity
    from .rewrite import DEFAULT_FUEL

    fuel = fuel or DEFAULT_FUEL
    env = Environment()

    def fail(msg, d):
        return ResolutionError(msg, *d.span)

    def lookup(table, name, kind, d):
        if name not in table:
            raise fail(f"unknown {kind} {name!r}", d)
        return table[name]

    for d in program.decls:
        if isinstance(d, CommandDecl):
            continue
        if d.name in env.decls:
            raise fail(f"{d.name!r} is declared twice", d)
        env.decls[d.name] = d
        if isinstance(d, SchemaDecl):
            env.schemas[d.name] = _build_schema(d, fail, fuel)
        elif isinstance(d, MappingDecl):
            S = lookup(env.schemas, d.source, "schema", d)
            T = lookup(env.schemas, d.target, "schema", d)
            env.mappings[d.name] = _build_mapping(d, S, T, fail)
        elif isinstance(d, InstanceDecl):
            S = lookup(env.schemas, d.schema, "schema", d)
            env.instances[d.name] = _build_instance(d, S, fail, base_dir)
        elif isinstance(d, QueryDecl):
            if d.compose:
                q1 = lookup(env.queries, d.compose[0], "query", d)
                q2 = lookup(env.queries, d.compose[1], "query", d)
                env.queries[d.name] = compose_queries(q1, q2, fuel)
                continue
            legs = {k: lookup(env.mappings, v, "mapping", d) for k, v in d.legs.items()}
            F = legs.get("delta")
            G = legs.get("pi")
            H = legs.get("sigma")
            middle = (F.source if F else G.source if G else H.source)
            F = F or identity(middle)
            G = G or identity(F.source)
            H = H or identity(G.target)
            env.queries[d.name] = (make_query(F, G, H, fuel=fuel) if check_queries
                                   else Query(F, G, H))
    for d in program.commands():
        for a in d.args:
            if a not in env.decls:
                raise fail(f"unknown name {a!r}", d)
    return env


def _build_schema(d: SchemaDecl, fail, fuel) -> TypedSignature:
    from .errors import FqlError

    nodes = set(d.nodes)
    if len(nodes) != len(d.nodes):
        raise fail(f"schema {d.name} lists a node twice", d)
    for e, s, t in d.edges:
        for n in (s, t):
            if n not in nodes:
                raise fail(f"edge {e} refers to unknown node {n!r}", d)
    for n, a, _ in d.attributes:
        if n not in nodes:
            raise fail(f"attribute {a} refers to unknown node {n!r}", d)
    try:
        return TypedSignature(d.nodes, [(e, s, t) for e, s, t in d.edges],
                              [(p.to_path(), q.to_path()) for p, q in d.equations],
                              {a: (n, base) for n, a, base in d.attributes}, fuel=fuel)
    except FqlError as exc:
        raise fail(f"schema {d.name}: {exc}", d) from None


def _build_mapping(d: MappingDecl, S, T, fail) -> Morphism:
    for a, b in d.nodes:
        if a not in S.nodes:
            raise fail(f"mapping {d.name}: {a!r} is not a node of {d.source}", d)
        if b not in T.nodes:
            raise fail(f"mapping {d.name}: {b!r} is not a node of {d.target}", d)
    for e, p in d.edges:
        if e not in S.edges:
            raise fail(f"mapping {d.name}: {e!r} is not an edge of {d.source}", d)
        if p.start not in T.nodes:
            raise fail(f"mapping {d.name}: path {_path(p)} does not start at a node of {d.target}", d)
        for x in p.edges:
            if x not in T.edges:
                raise fail(f"mapping {d.name}: {x!r} is not an edge of {d.target}", d)
    for a, b in d.attributes:
        if a not in S.attributes:
            raise fail(f"mapping {d.name}: {a!r} is not an attribute of {d.source}", d)
        if b not in T.attributes:
            raise fail(f"mapping {d.name}: {b!r} is not an attribute of {d.target}", d)
    return Morphism(S, T, dict(d.nodes), {e: p.to_path() for e, p in d.edges}, dict(d.attributes))


def _build_instance(d: InstanceDecl, S, fail, base_dir) -> Instance:
    from .errors import InstanceError

    if d.file is not None:
        path = FilePath(d.file)
        if base_dir and not path.is_absolute():
            path = FilePath(base_dir) / path
        try:
            return Instance.loads(S, path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise fail(f"instance {d.name}: cannot read {d.file}: {exc.strerror}", d) from None
        except (ValueError, InstanceError) as exc:
            raise fail(f"instance {d.name}: {exc}", d) from None
    data = {"node": {n: xs for n, xs in d.nodes},
            "edge": {e: pairs for e, pairs in d.edges},
            "attr": {a: pairs for a, pairs in d.attributes}}
    try:
        return Instance.from_json(S, data)
    except InstanceError as exc:
        raise fail(f"instance {d.name}: {exc}", d) from None
