"""Compile migrations to select/project/product/union plans with key generation.

An instance is stored as binary tables: ``node__X`` holds (id, id),
``edge__e`` holds (source id, target id) and ``attr__a`` holds (id, value),
each name carrying a per-script prefix.  Plans are executed by an internal
bag-semantics evaluator or rendered as SQL text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import count
from typing import Iterable

from .catops import lift
from .errors import (ArityMismatch, FqlError, NotSigmaReady, SignatureError, UnknownTable)
from .instance import Instance
from .migrate import (attribute_preimages, join_order, pi_layouts, restriction_columns,
                      sigma_ready_failure)
from .rewrite import DEFAULT_FUEL, Path
from .signature import Morphism, TypedSignature


# -- plan expressions -------------------------------------------------------------

@dataclass(frozen=True)
class Table:
    name: str


@dataclass(frozen=True)
class Empty:
    arity: int


@dataclass(frozen=True)
class Select:
    """Keep rows where each listed pair of columns holds equal values."""

    expr: object
    pairs: tuple


@dataclass(frozen=True)
class Project:
    expr: object
    columns: tuple
    distinct: bool = False


@dataclass(frozen=True)
class Product:
    """Cartesian product; with no factors, the one-row table of arity zero."""

    exprs: tuple


@dataclass(frozen=True)
class Union:
    """Bag union of equal-arity expressions."""

    exprs: tuple


@dataclass(frozen=True)
class KeyGen:
    """Prepend a column of globally fresh keys."""

    expr: object


UNIT = Product(())
OPERATORS = {"Table", "Empty", "Select", "Project", "Product", "Union", "KeyGen"}


@dataclass
class Statement:
    name: str
    expr: object


@dataclass
class SqlScript:
    statements: list = field(default_factory=list)
    inputs: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def add(self, name: str, expr, note: str | None = None) -> Table:
        self.statements.append(Statement(name, expr))
        if note:
            self.notes[name] = note
        return Table(name)

    def extend(self, other: "SqlScript") -> "SqlScript":
        written = {s.name for s in self.statements}
        out = SqlScript(self.statements + other.statements, dict(self.inputs),
                        {**self.notes, **other.notes})
        for name, arity in other.inputs.items():
            if name not in written:
                out.inputs[name] = arity
        return out

    def to_json(self) -> dict:
        return {"inputs": self.inputs,
                "statements": [{"name": s.name, "expr": _expr_json(s.expr),
                                **({"note": self.notes[s.name]} if s.name in self.notes else {})}
                               for s in self.statements]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _expr_json(x):
    if isinstance(x, Table):
        return {"table": x.name}
    if isinstance(x, Empty):
        return {"empty": x.arity}
    if isinstance(x, Select):
        return {"select": [list(p) for p in x.pairs], "from": _expr_json(x.expr)}
    if isinstance(x, Project):
        return {"project": list(x.columns), "distinct": x.distinct, "from": _expr_json(x.expr)}
    if isinstance(x, Product):
        return {"product": [_expr_json(e) for e in x.exprs]}
    if isinstance(x, Union):
        return {"union_all": [_expr_json(e) for e in x.exprs]}
    if isinstance(x, KeyGen):
        return {"keygen": _expr_json(x.expr)}
    raise TypeError(f"not a plan expression: {x!r}")


def operators(x) -> set:
    """Names of the operators occurring in a plan expression."""
    kind = type(x).__name__
    if isinstance(x, (Table, Empty)):
        return {kind}
    children = x.exprs if isinstance(x, (Product, Union)) else (x.expr,)
    out = {kind}
    for c in children:
        out |= operators(c)
    return out


def audit(script: SqlScript) -> set:
    """Operators used by the script; raises if any falls outside the allowed set."""
    used: set = set()
    for s in script.statements:
        used |= operators(s.expr)
    extra = used - OPERATORS
    if extra:
        raise FqlError(f"plan uses operators outside select/project/product/union/keygen: {extra}")
    return used


# -- table naming -----------------------------------------------------------------

def node_table(prefix: str, n: str) -> str:
    return f"{prefix}node__{n}"


def edge_table(prefix: str, e: str) -> str:
    return f"{prefix}edge__{e}"


def attr_table(prefix: str, a: str) -> str:
    return f"{prefix}attr__{a}"


def schema_tables(S: TypedSignature, prefix: str) -> dict:
    out = {node_table(prefix, n): 2 for n in S.nodes}
    out.update({edge_table(prefix, e): 2 for e in S.edges})
    out.update({attr_table(prefix, a): 2 for a in S.attributes})
    return out


class _Temps:
    def __init__(self, prefix: str):
        self.prefix = prefix
        self.counter = count()

    def __call__(self) -> str:
        return f"{self.prefix}tmp__{next(self.counter)}"


def _path_expr(prefix: str, path: Path):
    """Binary (source, target) table of a path: the node table or a join chain."""
    if not path.edges:
        return Table(node_table(prefix, path.start))
    expr = Table(edge_table(prefix, path.edges[0]))
    for e in path.edges[1:]:
        expr = Project(Select(Product((expr, Table(edge_table(prefix, e)))), ((1, 2),)), (0, 3))
    return expr


def _rekey(script: SqlScript, S: TypedSignature, raw_prefix: str, dst: str, temps) -> None:
    """Copy an instance stored under raw_prefix to dst, giving every row a fresh key."""
    keyed = {}
    for n in S.nodes:
        keyed[n] = script.add(temps(), KeyGen(Project(Table(node_table(raw_prefix, n)), (0,))),
                              note=f"fresh keys for {n}: (new, old)")
    for n in S.nodes:
        script.add(node_table(dst, n), Project(keyed[n], (0, 0)))
    for e, (s, t) in S.edges.items():
        joined = Product((keyed[s], Table(edge_table(raw_prefix, e)), keyed[t]))
        script.add(edge_table(dst, e), Project(Select(joined, ((1, 2), (3, 5))), (0, 4)))
    for a, (n, _) in S.attributes.items():
        joined = Product((keyed[n], Table(attr_table(raw_prefix, a))))
        script.add(attr_table(dst, a), Project(Select(joined, ((1, 2),)), (0, 3)))


# -- compilers ----------------------------------------------------------------------

def sql_delta(F: Morphism, src: str = "in_", dst: str = "out_") -> SqlScript:
    """Delta along F: C -> D reading a D-instance under ``src``, writing a C-instance."""
    C, D = F.source, F.target
    script = SqlScript(inputs=schema_tables(D, src))
    temps = _Temps(dst)
    raw = f"{dst}raw_"
    for c in C.nodes:
        script.add(node_table(raw, c), Table(node_table(src, F.node(c))))
    for e in C.edges:
        script.add(edge_table(raw, e), _path_expr(src, F.edge_map[e]),
                   note=f"edge {e} reads path {F.edge_map[e]}")
    for a in C.attributes:
        script.add(attr_table(raw, a), Table(attr_table(src, F.attr_map[a])))
    _rekey(script, C, raw, dst, temps)
    return script


def sql_sigma(F: Morphism, src: str = "in_", dst: str = "out_", fuel: int = DEFAULT_FUEL, *,
              check: bool = True) -> SqlScript:
    """Sigma along a discrete op-fibration: bag unions of pre-image tables."""
    if check:
        why = sigma_ready_failure(F, fuel)
        if why:
            raise NotSigmaReady(why)
    C, D = F.source, F.target
    script = SqlScript(inputs=schema_tables(C, src))

    def union(parts):
        parts = tuple(parts)
        if not parts:
            return Empty(2)
        return parts[0] if len(parts) == 1 else Union(parts)

    preimage = {d: [c for c in C.nodes if F.node(c) == d] for d in D.nodes}
    for d in D.nodes:
        script.add(node_table(dst, d), union(Table(node_table(src, c)) for c in preimage[d]))
    for e in D.edges:
        parts = []
        for c in preimage[D.src(e)]:
            p = lift(F, c, D.edge_path(e), fuel)
            if p is None:
                raise NotSigmaReady(f"edge {e} has no lift from {c}")
            parts.append(_path_expr(src, p))
        script.add(edge_table(dst, e), union(parts))
    by_attr = attribute_preimages(F)
    for b in D.attributes:
        script.add(attr_table(dst, b), union(Table(attr_table(src, a)) for a in by_attr.get(b, ())))
    return script


def sql_pi(F: Morphism, src: str = "in_", dst: str = "out_", fuel: int = DEFAULT_FUEL, *,
           lenient: bool = False) -> SqlScript:
    """Pi along F: one keyed limit table per target node, then edges and attributes.

    The limit table is grown one comma object at a time: a column forced by
    an edge from an earlier column is joined in through that edge's table,
    any other column through its node table, and each remaining generating
    edge becomes a selection against its edge table.
    """
    layouts = pi_layouts(F, fuel, lenient=lenient)
    C, D = F.source, F.target
    script = SqlScript(inputs=schema_tables(C, src))
    temps = _Temps(dst)
    limits = {}
    for d, lay in layouts.items():
        placed, driver, checks = join_order(lay.columns, lay.links)
        pos = {name: i for i, name in enumerate(placed)}
        x = UNIT
        for i, name in enumerate(placed):
            c = lay.objects[name][0]
            if driver[i] is not None:
                j, k = driver[i]
                x = Project(Select(Product((x, Table(edge_table(src, lay.links[k][2])))), ((j, i),)),
                            tuple(range(i)) + (i + 1,))
            elif i == 0:
                x = Project(Table(node_table(src, c)), (0,))
            else:
                x = Project(Product((x, Table(node_table(src, c)))), tuple(range(i + 1)))
            for a, b, k in checks[i]:
                w = i + 1
                x = Project(Select(Product((x, Table(edge_table(src, lay.links[k][2])))),
                                   ((a, w), (b, w + 1))), tuple(range(w)))
            x = script.add(temps(), x)
        w = len(placed)
        for i, a, j, a2 in lay.agree:
            x = script.add(temps(), Project(Select(
                Product((x, Table(attr_table(src, a)), Table(attr_table(src, a2)))),
                ((pos[lay.columns[i]], w), (pos[lay.columns[j]], w + 2), (w + 1, w + 3))),
                tuple(range(w))))
        ordered = Project(x, tuple(pos[name] for name in lay.columns))
        desc = ", ".join(f"{c}@{'.'.join(g.edges) or 'id'}" for c, g in
                         (lay.objects[n] for n in lay.columns))
        limits[d] = script.add(temps(), KeyGen(ordered), note=f"limit table of {d}: key, {desc}")
    for d in D.nodes:
        script.add(node_table(dst, d), Project(limits[d], (0, 0)))
    for e, (d, d1) in D.edges.items():
        pick = restriction_columns(F, layouts, e)
        n = len(layouts[d].columns)
        pairs = tuple((1 + p, n + 2 + j) for j, p in enumerate(pick))
        script.add(edge_table(dst, e),
                   Project(Select(Product((limits[d], limits[d1])), pairs), (0, n + 1)),
                   note=f"edge {e} matches columns {list(pick)} of {d} with those of {d1}")
    by_attr = attribute_preimages(F)
    for b, (d, _) in D.attributes.items():
        a = by_attr[b][0]
        col = layouts[d].column_of(C.attributes[a][0], ())
        n = len(layouts[d].columns)
        script.add(attr_table(dst, b), Project(Select(
            Product((limits[d], Table(attr_table(src, a)))), ((1 + col, n + 1),)), (0, n + 2)))
    return script


def sql_query(Q, src: str = "in_", dst: str = "out_", fuel: int = DEFAULT_FUEL) -> SqlScript:
    """Delta, Pi and Sigma scripts chained through intermediate prefixes."""
    mid1, mid2 = f"{dst}q1_", f"{dst}q2_"
    script = sql_delta(Q.F, src, mid1)
    script = script.extend(sql_pi(Q.G, mid1, mid2, fuel))
    return script.extend(sql_sigma(Q.H, mid2, dst, fuel, check=False))


def sql_relationalize(T: TypedSignature, src: str = "in_", dst: str = "out_") -> SqlScript:
    """Merge indistinguishable rows, for acyclic signatures.

    Nodes are processed targets first.  Each row is observed as its attribute
    values plus the new keys of its edge targets; distinct observations get
    fresh keys, and a (old, new) map table feeds the nodes upstream.
    """
    from .catops import is_acyclic

    if not is_acyclic(T):
        raise SignatureError("relationalize compiles only for acyclic signatures")
    script = SqlScript(inputs=schema_tables(T, src))
    temps = _Temps(dst)
    mapping, keyed = {}, {}
    for n in _targets_first(T):
        # observation: old id, attribute values, new keys of edge targets
        parts = [Project(Table(node_table(src, n)), (0,))]
        pairs, cols, width = [], [0], 1
        for a in T.attrs_of(n):
            parts.append(Table(attr_table(src, a)))
            pairs.append((0, width))
            cols.append(width + 1)
            width += 2
        for e in T.out_edges(n):
            parts += [Table(edge_table(src, e)), mapping[T.tgt(e)]]
            pairs += [(0, width), (width + 1, width + 2)]
            cols.append(width + 3)
            width += 4
        obs = script.add(temps(), Project(Select(Product(tuple(parts)), tuple(pairs)), tuple(cols)),
                         note=f"observations of {n}")
        k = len(cols) - 1
        keyed[n] = script.add(temps(), KeyGen(Project(obs, tuple(range(1, k + 1)), distinct=True)),
                              note=f"one key per distinct observation of {n}")
        match = tuple((1 + i, k + 2 + i) for i in range(k))
        mapping[n] = script.add(temps(), Project(Select(Product((obs, keyed[n])), match), (0, k + 1)),
                                note=f"old to new keys of {n}")
    for n in T.nodes:
        attrs = T.attrs_of(n)
        script.add(node_table(dst, n), Project(keyed[n], (0, 0)))
        for i, a in enumerate(attrs):
            script.add(attr_table(dst, a), Project(keyed[n], (0, 1 + i)))
        for i, e in enumerate(T.out_edges(n)):
            script.add(edge_table(dst, e), Project(keyed[n], (0, 1 + len(attrs) + i)))
    return script


def _targets_first(T: TypedSignature) -> list:
    done: list = []
    seen: set = set()

    def visit(n):
        if n in seen:
            return
        seen.add(n)
        for e in T.out_edges(n):
            visit(T.tgt(e))
        done.append(n)

    for n in T.nodes:
        visit(n)
    return done


# -- evaluation -----------------------------------------------------------------------

@dataclass
class Relation:
    arity: int
    rows: list


class RelDatabase:
    """Named bag-semantics tables plus the running counter behind key generation."""

    def __init__(self, tables: dict | None = None, counter: int = 0, key_prefix: str = "g"):
        self.tables = {k: Relation(v.arity, list(v.rows)) for k, v in (tables or {}).items()}
        self.counter = counter
        self.key_prefix = key_prefix

    def copy(self) -> "RelDatabase":
        return RelDatabase(self.tables, self.counter, self.key_prefix)

    def put(self, name: str, arity: int, rows: Iterable[tuple]) -> None:
        rows = [tuple(r) for r in rows]
        for r in rows:
            if len(r) != arity:
                raise ArityMismatch(f"row {r} of {name} does not have {arity} columns")
        self.tables[name] = Relation(arity, rows)

    def rows(self, name: str) -> list:
        if name not in self.tables:
            raise UnknownTable(f"no table named {name}")
        return self.tables[name].rows

    def fresh(self):
        self.counter += 1
        return f"{self.key_prefix}{self.counter - 1}"


def arity(expr, db_arity) -> int:
    if isinstance(expr, Table):
        return db_arity(expr.name)
    if isinstance(expr, Empty):
        return expr.arity
    if isinstance(expr, Select):
        n = arity(expr.expr, db_arity)
        for i, j in expr.pairs:
            if not (0 <= i < n and 0 <= j < n):
                raise ArityMismatch(f"selection on columns {i}, {j} of a {n}-column table")
        return n
    if isinstance(expr, Project):
        n = arity(expr.expr, db_arity)
        for i in expr.columns:
            if not 0 <= i < n:
                raise ArityMismatch(f"projection on column {i} of a {n}-column table")
        return len(expr.columns)
    if isinstance(expr, Product):
        return sum(arity(e, db_arity) for e in expr.exprs)
    if isinstance(expr, Union):
        widths = {arity(e, db_arity) for e in expr.exprs}
        if len(widths) != 1:
            raise ArityMismatch(f"union of tables with {sorted(widths)} columns")
        return widths.pop()
    if isinstance(expr, KeyGen):
        return arity(expr.expr, db_arity) + 1
    raise TypeError(f"not a plan expression: {expr!r}")


def _evaluate(expr, db: RelDatabase) -> list:
    if isinstance(expr, Table):
        return db.rows(expr.name)
    if isinstance(expr, Empty):
        return []
    if isinstance(expr, Select):
        if isinstance(expr.expr, Product):
            return _join(expr.expr.exprs, expr.pairs, db)
        rows = _evaluate(expr.expr, db)
        return [r for r in rows if all(r[i] == r[j] for i, j in expr.pairs)]
    if isinstance(expr, Project):
        rows = [tuple(r[i] for i in expr.columns) for r in _evaluate(expr.expr, db)]
        return list(dict.fromkeys(rows)) if expr.distinct else rows
    if isinstance(expr, Product):
        return _join(expr.exprs, (), db)
    if isinstance(expr, Union):
        return [r for e in expr.exprs for r in _evaluate(e, db)]
    if isinstance(expr, KeyGen):
        return [(db.fresh(),) + tuple(r) for r in _evaluate(expr.expr, db)]
    raise TypeError(f"not a plan expression: {expr!r}")


def _join(parts, pairs, db) -> list:
    """Selection over a product, joining factor by factor with hash lookups."""
    acc: list = [()]
    width = 0
    pending = [tuple(sorted(p)) for p in pairs]
    for part in parts:
        rows = _evaluate(part, db)
        n = len(rows[0]) if rows else None
        if n is None:
            return []
        lo, hi = width, width + n
        keys = [(i, j - lo) for i, j in pending if i < lo <= j < hi]
        inner = [(i - lo, j - lo) for i, j in pending if lo <= i and j < hi]
        pending = [p for p in pending if not (p[1] < hi and p[1] >= lo)]
        rows = [r for r in rows if all(r[i] == r[j] for i, j in inner)]
        if keys:
            index: dict = {}
            for r in rows:
                index.setdefault(tuple(r[j] for _, j in keys), []).append(r)
            acc = [a + r for a in acc for r in index.get(tuple(a[i] for i, _ in keys), ())]
        else:
            acc = [a + r for a in acc for r in rows]
        width = hi
    return [r for r in acc if all(r[i] == r[j] for i, j in pending)]


def exec_script(script: SqlScript, db: RelDatabase) -> RelDatabase:
    """Run every statement in order on a copy of db."""
    out = db.copy()
    for name, width in script.inputs.items():
        if name not in out.tables:
            raise UnknownTable(f"input table {name} is missing")
        if out.tables[name].arity != width:
            raise ArityMismatch(f"input table {name} has {out.tables[name].arity} columns, "
                                f"expected {width}")
    for s in script.statements:
        width = arity(s.expr, lambda n: _arity_of(out, n))
        out.put(s.name, width, _evaluate(s.expr, out))
    return out


def _arity_of(db: RelDatabase, name: str) -> int:
    if name not in db.tables:
        raise UnknownTable(f"no table named {name}")
    return db.tables[name].arity


def check_order(script: SqlScript) -> None:
    """Raise if a statement reads a table that no earlier statement or input provides."""
    available = set(script.inputs)
    for s in script.statements:
        for t in _tables(s.expr):
            if t not in available:
                raise UnknownTable(f"{s.name} reads {t} before it is written")
        available.add(s.name)


def _tables(x) -> set:
    if isinstance(x, Table):
        return {x.name}
    if isinstance(x, Empty):
        return set()
    children = x.exprs if isinstance(x, (Product, Union)) else (x.expr,)
    out: set = set()
    for c in children:
        out |= _tables(c)
    return out


# -- instance encoding ------------------------------------------------------------------

def encode(I: Instance, prefix: str = "in_", db: RelDatabase | None = None) -> RelDatabase:
    db = db or RelDatabase()
    S = I.schema
    for n in S.nodes:
        db.put(node_table(prefix, n), 2, [(x, x) for x in I.node_rows[n]])
    for e in S.edges:
        db.put(edge_table(prefix, e), 2, I.edge_fn[e].items())
    for a in S.attributes:
        db.put(attr_table(prefix, a), 2, I.attr_fn[a].items())
    return db


def decode(db: RelDatabase, S: TypedSignature, prefix: str = "out_") -> Instance:
    rows = {n: [r[0] for r in db.rows(node_table(prefix, n))] for n in S.nodes}
    edges = {e: dict(db.rows(edge_table(prefix, e))) for e in S.edges}
    attrs = {a: dict(db.rows(attr_table(prefix, a))) for a in S.attributes}
    return Instance(S, rows, edges, attrs)


def run(script: SqlScript, I: Instance, target: TypedSignature,
        src: str = "in_", dst: str = "out_") -> Instance:
    """Encode I, execute the script, and decode the result over ``target``."""
    return decode(exec_script(script, encode(I, src)), target, dst)


# -- SQL text ------------------------------------------------------------------------------

COUNTER_TABLE = "fql_counter"


def quote(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


class _Renderer:
    def __init__(self, arity_of):
        self.arity_of = arity_of
        self.aliases = count()

    def width(self, expr) -> int:
        return arity(expr, self.arity_of)

    def alias(self) -> str:
        return f"t{next(self.aliases)}"

    def select(self, expr) -> str:
        """A SELECT producing columns c0..c(n-1) for ``expr``."""
        if isinstance(expr, Table):
            return f"SELECT * FROM {quote(expr.name)}"
        if isinstance(expr, Empty):
            cols = ", ".join(f"NULL AS c{i}" for i in range(expr.arity))
            return f"SELECT {cols} FROM (SELECT 0 AS u) AS e WHERE 1 = 0"
        if isinstance(expr, Union):
            return " UNION ALL ".join(self.select(e) for e in expr.exprs)
        if isinstance(expr, Project):
            base = expr.expr.expr if isinstance(expr.expr, Select) else expr.expr
            pairs = expr.expr.pairs if isinstance(expr.expr, Select) else ()
            cols, sources, where = self.columns(base, pairs)
            chosen = ", ".join(f"{cols[i]} AS c{k}" for k, i in enumerate(expr.columns)) or "0 AS u"
            head = "SELECT DISTINCT" if expr.distinct else "SELECT"
            return f"{head} {chosen} FROM {sources}{where}"
        if isinstance(expr, (Select, Product)):
            base = expr.expr if isinstance(expr, Select) else expr
            pairs = expr.pairs if isinstance(expr, Select) else ()
            cols, sources, where = self.columns(base, pairs)
            chosen = ", ".join(f"{c} AS c{k}" for k, c in enumerate(cols)) or "0 AS u"
            return f"SELECT {chosen} FROM {sources}{where}"
        raise FqlError("key generation may only appear at the top of a statement")

    def columns(self, base, pairs):
        factors = base.exprs if isinstance(base, Product) else (base,)
        cols, sources = [], []
        for f in factors:
            a = self.alias()
            if isinstance(f, Table):
                sources.append(f"{quote(f.name)} AS {a}")
            else:
                sources.append(f"({self.select(f)}) AS {a}")
            cols += [f"{a}.c{i}" for i in range(self.width(f))]
        if not sources:
            sources.append(f"(SELECT 0 AS u) AS {self.alias()}")
        where = " AND ".join(f"{cols[i]} = {cols[j]}" for i, j in pairs)
        return cols, ", ".join(sources), (f" WHERE {where}" if where else "")


def render_keygen(name: str, inner_sql: str, width: int) -> list:
    """Key generation as ROW_NUMBER plus the running offset in the counter table."""
    cols = ", ".join(f"s.c{i} AS c{i + 1}" for i in range(width))
    key = (f"'g' || CAST({COUNTER_TABLE}.n + ROW_NUMBER() OVER (ORDER BY (SELECT 0)) - 1 "
           f"AS VARCHAR(32)) AS c0")
    return [f"INSERT INTO {quote(name)} SELECT {key}{', ' + cols if cols else ''} "
            f"FROM ({inner_sql}) AS s, {COUNTER_TABLE};",
            f"UPDATE {COUNTER_TABLE} SET n = n + (SELECT COUNT(*) FROM {quote(name)});"]


def render(script: SqlScript) -> str:
    """SQL text for the script, one statement per line."""
    widths = dict(script.inputs)

    def arity_of(name):
        if name not in widths:
            raise UnknownTable(f"no table named {name}")
        return widths[name]

    lines = [f"CREATE TABLE IF NOT EXISTS {COUNTER_TABLE} (n INTEGER);",
             f"INSERT INTO {COUNTER_TABLE} SELECT 0 WHERE NOT EXISTS (SELECT * FROM {COUNTER_TABLE});"]
    r = _Renderer(arity_of)
    for s in script.statements:
        width = arity(s.expr, arity_of)
        widths[s.name] = width
        cols = ", ".join(f"c{i} VARCHAR(255)" for i in range(width))
        lines.append(f"CREATE TABLE {quote(s.name)} ({cols});")
        if isinstance(s.expr, KeyGen):
            inner = s.expr.expr
            lines += render_keygen(s.name, r.select(inner), width - 1)
        else:
            lines.append(f"INSERT INTO {quote(s.name)} {r.select(s.expr)};")
    return "\n".join(lines) + "\n"
