"""Instances stored as binary tables, validation, isomorphism, and re-keying."""

from __future__ import annotations

import csv
import io
import json
import random
from collections import Counter, defaultdict
from typing import Iterable, Mapping

from .errors import InstanceError, UnknownID
from .rewrite import Path
from .signature import TypedSignature, ValidationReport, conforms


def id_key(x):
    """Sort key that tolerates a mix of integer and string IDs."""
    return (isinstance(x, str), x) if isinstance(x, (int, str)) else (True, str(x))


class KeyGen:
    """Per-evaluation source of fresh IDs.

    The default mode hands out ``k0, k1, ...``; ``mode="guid"`` draws
    random hex keys from a generator seeded with ``seed``.
    """

    def __init__(self, seed: int = 0, prefix: str = "k", mode: str = "counter"):
        if mode not in ("counter", "guid"):
            raise ValueError(f"unknown key mode {mode!r}")
        self.prefix = prefix
        self.mode = mode
        self.counter = 0
        self._rng = random.Random(seed)

    def fresh(self) -> str:
        self.counter += 1
        if self.mode == "guid":
            return f"{self._rng.getrandbits(128):032x}"
        return f"{self.prefix}{self.counter - 1}"


class Instance:
    """A functor from a signature's category to sets, plus attribute values."""

    def __init__(self, schema: TypedSignature, node_rows: Mapping[str, Iterable] | None = None,
                 edge_fn: Mapping[str, Mapping] | None = None,
                 attr_fn: Mapping[str, Mapping] | None = None):
        self.schema = schema
        node_rows = node_rows or {}
        edge_fn = edge_fn or {}
        attr_fn = attr_fn or {}
        for kind, given, declared in (("node", node_rows, schema.nodes),
                                      ("edge", edge_fn, schema.edges),
                                      ("attribute", attr_fn, schema.attributes)):
            unknown = set(given) - set(declared)
            if unknown:
                raise InstanceError(f"unknown {kind}(s) {sorted(unknown)}")
        self.node_rows = {n: tuple(node_rows.get(n, ())) for n in schema.nodes}
        self.edge_fn = {e: dict(edge_fn.get(e, {})) for e in schema.edges}
        self.attr_fn = {a: dict(attr_fn.get(a, {})) for a in schema.attributes}
        self.conflicts: list = []

    def __repr__(self) -> str:
        sizes = ", ".join(f"{n}={len(r)}" for n, r in self.node_rows.items())
        return f"Instance({sizes})"

    def rows(self, node: str) -> tuple:
        return self.node_rows[node]

    def size(self, node: str) -> int:
        return len(self.node_rows[node])

    def sizes(self) -> dict:
        return {n: len(r) for n, r in self.node_rows.items()}

    def eval_path(self, path: Path, x):
        return eval_path(self, path, x)

    def observe(self, node: str, x) -> tuple:
        return tuple(self.attr_fn[a][x] for a in self.schema.attrs_of(node))

    @classmethod
    def empty(cls, schema: TypedSignature) -> "Instance":
        return cls(schema)

    def with_schema(self, schema: TypedSignature) -> "Instance":
        """Reinterpret the same tables over a signature with the same names."""
        return Instance(schema, self.node_rows, self.edge_fn,
                        {a: t for a, t in self.attr_fn.items() if a in schema.attributes})

    def structure(self) -> "Instance":
        return Instance(self.schema.strip(), self.node_rows, self.edge_fn)

    # -- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        return {
            "node": {n: list(r) for n, r in self.node_rows.items()},
            "edge": {e: {str(k): v for k, v in t.items()} for e, t in self.edge_fn.items()},
            "attr": {a: {str(k): v for k, v in t.items()} for a, t in self.attr_fn.items()},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, schema: TypedSignature, data: Mapping) -> "Instance":
        """Load the JSON layout; edge tables may be objects or lists of pairs."""
        nodes = {n: list(r) for n, r in data.get("node", {}).items()}
        by_text = {str(x): x for rows in nodes.values() for x in rows}
        conflicts = []

        def table(name, raw, keep_values):
            pairs = raw.items() if isinstance(raw, Mapping) else [tuple(p) for p in raw]
            out: dict = {}
            for k, v in pairs:
                k = by_text.get(str(k), k)
                if not keep_values:
                    v = by_text.get(str(v), v)
                if k in out and out[k] != v:
                    conflicts.append(f"{name} maps {k} to both {out[k]} and {v}")
                out[k] = v
            return out

        edges = {e: table(e, t, False) for e, t in data.get("edge", {}).items()}
        attrs = {a: table(a, t, True) for a, t in data.get("attr", {}).items()}
        inst = cls(schema, nodes, edges, attrs)
        inst.conflicts = conflicts
        return inst

    @classmethod
    def loads(cls, schema: TypedSignature, text: str) -> "Instance":
        return cls.from_json(schema, json.loads(text))

    def joined_tables(self) -> dict:
        """Per node: header plus one row per ID with its edge targets and attributes."""
        out = {}
        for n in self.schema.nodes:
            cols = self.schema.out_edges(n) + self.schema.attrs_of(n)
            rows = [[x] + [self.edge_fn[c][x] if c in self.edge_fn else self.attr_fn[c][x]
                           for c in cols] for x in self.node_rows[n]]
            out[n] = (["ID"] + cols, rows)
        return out

    def to_csv(self) -> dict:
        texts = {}
        for n, (header, rows) in self.joined_tables().items():
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
            texts[n] = buf.getvalue()
        return texts


def _walk(I: Instance, path: Path, x):
    for e in path.edges:
        try:
            x = I.edge_fn[e][x]
        except KeyError:
            raise UnknownID(f"edge {e} is undefined at {x!r}") from None
    return x


def eval_path(I: Instance, path: Path, x):
    if x not in I.node_rows.get(path.start, ()):
        raise UnknownID(f"{x!r} is not a row of {path.start}")
    return _walk(I, path, x)


def validate(I: Instance, S: TypedSignature | None = None) -> ValidationReport:
    S = S or I.schema
    report = ValidationReport()
    for msg in I.conflicts:
        report.add("functionality", msg)
    owner: dict = {}
    row_sets = {}
    for n in S.nodes:
        rows = I.node_rows.get(n, ())
        row_sets[n] = set(rows)
        if len(row_sets[n]) != len(rows):
            dup = [x for x, c in Counter(rows).items() if c > 1]
            report.add("key", f"node {n} lists IDs {dup} more than once")
        for x in row_sets[n]:
            if x in owner:
                report.add("key", f"ID {x!r} appears in both {owner[x]} and {n}")
            else:
                owner[x] = n
    for e, (src, tgt) in S.edges.items():
        fn = I.edge_fn.get(e, {})
        for x in I.node_rows[src]:
            if x not in fn:
                report.add("totality", f"edge {e} is undefined at {x!r}")
            elif fn[x] not in row_sets[tgt]:
                report.add("range", f"edge {e} sends {x!r} to {fn[x]!r}, not a row of {tgt}")
        extra = set(fn) - row_sets[src]
        if extra:
            report.add("extra", f"edge {e} is defined on non-rows {sorted(extra, key=id_key)}")
    for a, (node, base) in S.attributes.items():
        fn = I.attr_fn.get(a, {})
        for x in I.node_rows[node]:
            if x not in fn:
                report.add("totality", f"attribute {a} is undefined at {x!r}")
            elif not conforms(fn[x], base):
                report.add("typing", f"attribute {a} at {x!r} has value {fn[x]!r}, not {base}")
        extra = set(fn) - row_sets[node]
        if extra:
            report.add("extra", f"attribute {a} is defined on non-rows {sorted(extra, key=id_key)}")
    if not report.ok:
        return report
    for p, q in S.equations:
        for x in I.node_rows[p.start]:
            left, right = _walk(I, p, x), _walk(I, q, x)
            if left != right:
                report.add("equation", f"{p} = {q} fails at {x!r}: {left!r} != {right!r}")
    return report


def rekey(I: Instance, keys: KeyGen) -> Instance:
    """Give every (node, ID) pair a fresh ID; the result is isomorphic to I."""
    fresh = {}
    rows = {}
    for n in I.schema.nodes:
        rows[n] = []
        for x in I.node_rows[n]:
            k = keys.fresh()
            fresh[n, x] = k
            rows[n].append(k)
    S = I.schema
    edges = {e: {fresh[S.src(e), x]: fresh[S.tgt(e), y] for x, y in t.items()}
             for e, t in I.edge_fn.items()}
    attrs = {a: {fresh[S.attributes[a][0], x]: v for x, v in t.items()} for a, t in I.attr_fn.items()}
    return Instance(S, rows, edges, attrs)


# -- isomorphism ------------------------------------------------------------

def _refined_colors(S: TypedSignature, instances) -> list:
    """Joint color refinement of the elements of several instances.

    Colors start from (node, attribute tuple, in-degree profile) and are
    refined by the colors of edge targets and of in-neighbours until the
    partition stops splitting.
    """
    incoming = []
    for I in instances:
        inc = defaultdict(list)
        for e, t in I.edge_fn.items():
            for x, y in t.items():
                inc[S.tgt(e), y].append((e, x))
        incoming.append(inc)
    palette: dict = {}
    colors = []
    for I, inc in zip(instances, incoming):
        col = {}
        for n in S.nodes:
            for x in I.node_rows[n]:
                key = (n, I.observe(n, x), tuple(sorted(Counter(e for e, _ in inc[n, x]).items())))
                col[n, x] = palette.setdefault(key, len(palette))
        colors.append(col)
    count = len(palette)
    while True:
        palette = {}
        new = []
        for I, inc, col in zip(instances, incoming, colors):
            nxt = {}
            for (n, x), c in col.items():
                outs = tuple(col[S.tgt(e), I.edge_fn[e][x]] for e in S.out_edges(n))
                ins = tuple(sorted((e, col[S.src(e), z]) for e, z in inc[n, x]))
                nxt[n, x] = palette.setdefault((c, outs, ins), len(palette))
            new.append(nxt)
        colors = new
        if len(palette) == count:
            return colors
        count = len(palette)


def isomorphic(I: Instance, J: Instance):
    """Return a per-node bijection I -> J commuting with edges and attributes, or None."""
    S = I.schema
    if I.sizes() != J.sizes():
        return None
    ci, cj = _refined_colors(S, [I, J])
    if Counter(ci.values()) != Counter(cj.values()):
        return None
    by_color = defaultdict(list)
    for key, c in cj.items():
        by_color[c].append(key)
    order = sorted(ci, key=lambda k: (len(by_color[ci[k]]), S.nodes.index(k[0]), id_key(k[1])))
    mapping: dict = {}
    used: set = set()

    def assign(n, x, y, trail) -> bool:
        stack = [(n, x, y)]
        while stack:
            n, x, y = stack.pop()
            if (n, x) in mapping:
                if mapping[n, x] != y:
                    return False
                continue
            if (n, y) in used or ci[n, x] != cj[n, y]:
                return False
            mapping[n, x] = y
            used.add((n, y))
            trail.append((n, x, y))
            for e in S.out_edges(n):
                stack.append((S.tgt(e), I.edge_fn[e][x], J.edge_fn[e][y]))
        return True

    def undo(trail):
        for n, x, y in trail:
            del mapping[n, x]
            used.discard((n, y))

    def search(i) -> bool:
        while i < len(order) and order[i] in mapping:
            i += 1
        if i == len(order):
            return True
        n, x = order[i]
        for (_, y) in by_color[ci[n, x]]:
            if (n, y) in used:
                continue
            trail: list = []
            if assign(n, x, y, trail) and search(i + 1):
                return True
            undo(trail)
        return False

    if not search(0):
        return None
    iso = {n: {} for n in S.nodes}
    for (n, x), y in mapping.items():
        iso[n][x] = y
    return iso


def same_up_to_iso(I: Instance, J: Instance) -> bool:
    return isomorphic(I, J) is not None
