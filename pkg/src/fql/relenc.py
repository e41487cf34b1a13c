"""Relational tables as pointed instances, and SPC/SPCU queries as FQL queries.

A relational schema becomes a signature with one node per relation, a
domain node ``D`` carrying the single attribute ``A``, and one edge per
column into ``D``.  Rows of ``D`` are the active domain, keyed by value.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from itertools import count

from .errors import ArityMismatch, NotPointed, SignatureError
from .instance import Instance, KeyGen
from .migrate import coproduct_instance, relationalize
from .query import Query, compose, evaluate, lift_delta, make_query
from .rewrite import DEFAULT_FUEL, Path
from .signature import Morphism, TypedSignature, identity

DOMAIN = "D"
VALUE = "A"


@dataclass
class RelationalSchema:
    relations: dict = field(default_factory=dict)
    domain: str = "String"

    def __post_init__(self):
        self.relations = {name: tuple(cols) for name, cols in self.relations.items()}
        for name, cols in self.relations.items():
            if name == DOMAIN:
                raise SignatureError(f"relation name {DOMAIN} is reserved for the domain node")
            if not cols:
                raise SignatureError(f"relation {name} has no columns")
            if len(set(cols)) != len(cols):
                raise SignatureError(f"relation {name} repeats a column name")

    def arity(self, name: str) -> int:
        return len(self.relations[name])


def column_edge(relation: str, column: str) -> str:
    return f"{relation}_{column}"


def encode_schema(R: RelationalSchema) -> TypedSignature:
    edges = {column_edge(r, c): (r, DOMAIN) for r, cols in R.relations.items() for c in cols}
    return TypedSignature(list(R.relations) + [DOMAIN], edges, [], {VALUE: (DOMAIN, R.domain)})


def encode_instance(R: RelationalSchema, db: dict, S: TypedSignature | None = None) -> Instance:
    """Relations given as lists of tuples; every row gets a fresh ID."""
    S = S or encode_schema(R)
    values = list(dict.fromkeys(v for r in R.relations for row in db.get(r, ()) for v in row))
    textual = all(isinstance(v, str) for v in values)
    ids = count()
    rows, edges = {DOMAIN: values}, {}
    for r, cols in R.relations.items():
        rows[r] = []
        for e in cols:
            edges[column_edge(r, e)] = {}
        for tup in db.get(r, ()):
            if len(tup) != len(cols):
                raise ArityMismatch(f"row {tup} of {r} does not have {len(cols)} columns")
            n = next(ids)
            key = n if textual else f"r{n}"
            rows[r].append(key)
            for c, v in zip(cols, tup):
                edges[column_edge(r, c)][key] = v
    return Instance(S, rows, edges, {VALUE: {v: v for v in values}})


def pointed_parts(S: TypedSignature) -> str:
    """Return the domain node of a pointed signature, or raise NotPointed."""
    if len(S.attributes) != 1:
        raise NotPointed("a pointed signature has exactly one attribute")
    (dom, _), = S.attributes.values()
    for e, (s, t) in S.edges.items():
        if t != dom or s == dom:
            raise NotPointed(f"edge {e} does not go from a relation node to {dom}")
    if S.equations:
        raise NotPointed("a pointed signature has no path equations")
    return dom


def decode_instance(I: Instance, R: RelationalSchema | None = None) -> dict:
    """Each relation node as a bag: a sorted list of value tuples."""
    S = I.schema
    dom = pointed_parts(S)
    (attr,) = S.attributes
    value = I.attr_fn[attr]
    out = {}
    for r in S.nodes:
        if r == dom:
            continue
        if R is not None and r in R.relations:
            cols = [column_edge(r, c) for c in R.relations[r]]
        else:
            cols = S.out_edges(r)
        out[r] = sorted((tuple(value[I.edge_fn[e][x]] for e in cols) for x in I.node_rows[r]),
                        key=_row_key)
    return out


def _row_key(row):
    return tuple((type(v).__name__, v) for v in row)


# -- CSV ----------------------------------------------------------------------------

def read_csv(text: str) -> tuple:
    """(column names, rows) from CSV text with a header row."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        return (), []
    return tuple(rows[0]), [tuple(r) for r in rows[1:] if r]


def write_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


# -- conjunctive queries --------------------------------------------------------------

@dataclass
class SpcQuery:
    """SELECT [DISTINCT] select FROM tables WHERE where.

    Columns of the FROM product are numbered left to right across the
    listed relations; ``where`` holds pairs of equal columns and ``select``
    the output columns.
    """

    tables: tuple
    where: tuple = ()
    select: tuple = ()
    semantics: str = "bag"

    def __post_init__(self):
        self.tables = tuple(self.tables)
        self.where = tuple(tuple(p) for p in self.where)
        self.select = tuple(self.select)
        if self.semantics not in ("bag", "set"):
            raise ValueError(f"semantics must be bag or set, not {self.semantics!r}")

    def columns(self, R: RelationalSchema) -> list:
        """(occurrence index, relation, column) for every column of the product."""
        return [(i, r, c) for i, r in enumerate(self.tables) for c in R.relations[r]]


def _classes(n: int, pairs) -> list:
    """Union-find over 0..n-1; returns the class index of each element."""
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = sorted({find(x) for x in range(n)})
    index = {r: k for k, r in enumerate(roots)}
    return [index[find(x)] for x in range(n)]


@dataclass
class Translation:
    query: Query
    relationalize_after: bool
    output: TypedSignature
    relation: str

    def eval(self, I: Instance, keys: KeyGen | None = None, fuel: int = DEFAULT_FUEL) -> Instance:
        out = evaluate(self.query, I, keys, fuel)
        return relationalize(out) if self.relationalize_after else out


def output_signature(arity: int, domain: str = "String", relation: str = "Q") -> TypedSignature:
    edges = {f"p{k}": (relation, DOMAIN) for k in range(arity)}
    return TypedSignature([relation, DOMAIN], edges, [], {VALUE: (DOMAIN, domain)})


def translate_spc(q: SpcQuery, R: RelationalSchema, *, relation: str = "Q",
                  fuel: int = DEFAULT_FUEL) -> Translation:
    """The query Delta_G Pi_F, preceded by the occurrence map, as one triple.

    S has one node per FROM occurrence, T one node for the filtered product
    whose edges are the classes of equated columns, and U the output relation
    whose edges pick the selected classes.
    """
    for r in q.tables:
        if r not in R.relations:
            raise SignatureError(f"unknown relation {r}")
    cols = q.columns(R)
    for a, b in q.where:
        if not (0 <= a < len(cols) and 0 <= b < len(cols)):
            raise ArityMismatch(f"condition {a} = {b} is outside the {len(cols)} product columns")
    for k in q.select:
        if not 0 <= k < len(cols):
            raise ArityMismatch(f"selected column {k} is outside the {len(cols)} product columns")
    cls = _classes(len(cols), q.where)
    n_classes = max(cls) + 1 if cls else 0
    base = encode_schema(R)
    attr = {VALUE: (DOMAIN, R.domain)}

    occ_nodes = [f"t{i}" for i in range(len(q.tables))]
    s_edges = {f"t{i}_{k}": (f"t{i}", DOMAIN) for k, (i, _, _) in enumerate(cols)}
    S = TypedSignature(occ_nodes + [DOMAIN], s_edges, [], attr)
    occ = Morphism(S, base, {**{f"t{i}": r for i, r in enumerate(q.tables)}, DOMAIN: DOMAIN},
                   {f"t{i}_{k}": Path(r, (column_edge(r, c),)) for k, (i, r, c) in enumerate(cols)},
                   {VALUE: VALUE})

    product = "B"
    T = TypedSignature([product, DOMAIN], {f"c{l}": (product, DOMAIN) for l in range(n_classes)},
                       [], attr)
    F = Morphism(S, T, {**{t: product for t in occ_nodes}, DOMAIN: DOMAIN},
                 {f"t{i}_{k}": Path(product, (f"c{cls[k]}",)) for k, (i, _, _) in enumerate(cols)},
                 {VALUE: VALUE})

    U = output_signature(len(q.select), R.domain, relation)
    G = Morphism(U, T, {relation: product, DOMAIN: DOMAIN},
                 {f"p{j}": Path(product, (f"c{cls[k]}",)) for j, k in enumerate(q.select)},
                 {VALUE: VALUE})

    first = make_query(occ, F, identity(T), fuel=fuel)
    composed = compose(first, lift_delta(G, fuel), fuel)
    return Translation(composed, q.semantics == "set", U, relation)


@dataclass
class UnionPipeline:
    """Bag union of translated arms, folded by Sigma; optionally relationalized."""

    arms: list
    relationalize_after: bool
    output: TypedSignature
    relation: str

    def eval(self, I: Instance, keys: KeyGen | None = None, fuel: int = DEFAULT_FUEL) -> Instance:
        keys = keys or KeyGen()
        results = [evaluate(t.query, I, keys, fuel) for t in self.arms]
        total = results[0]
        for J in results[1:]:
            total = coproduct_instance(total, J, keys)
        return relationalize(total) if self.relationalize_after else total


def translate_spcu(arms, R: RelationalSchema, *, semantics: str = "bag", relation: str = "Q",
                   fuel: int = DEFAULT_FUEL) -> UnionPipeline:
    """UNION ALL (bag) or UNION (set) of conjunctive arms with equal arity."""
    arms = list(arms)
    if not arms:
        raise ArityMismatch("a union needs at least one arm")
    widths = {len(a.select) for a in arms}
    if len(widths) != 1:
        raise ArityMismatch(f"union arms have different arities {sorted(widths)}")
    translated = []
    for a in arms:
        bag = SpcQuery(a.tables, a.where, a.select, "bag")
        translated.append(translate_spc(bag, R, relation=relation, fuel=fuel))
    return UnionPipeline(translated, semantics == "set", translated[0].output, relation)


def answer(result: Instance, relation: str = "Q") -> list:
    """Decoded output rows of a translated query, as a sorted bag."""
    return decode_instance(result)[relation]


def as_bag(rows) -> Counter:
    return Counter(tuple(r) for r in rows)
