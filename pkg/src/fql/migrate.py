"""In-memory evaluation of Delta, Sigma and Pi, plus relationalize and coproducts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .catops import Unknown, comma, fold, lift, point, saturate
from .errors import InfiniteTarget, NotPiReady, NotSigmaReady, UnknownFiniteness
from .instance import Instance, KeyGen, _walk, id_key, rekey
from .rewrite import DEFAULT_FUEL, Path
from .signature import (Morphism, TypedSignature, attribute_square_failure, dop_failure,
                        is_pi_ready)


def delta(F: Morphism, J: Instance, keys: KeyGen | None = None, *,
          fresh_ids: bool = True) -> Instance:
    """Pull J back along F; with ``fresh_ids`` the copies get disjoint keys."""
    S = F.source
    rows = {c: J.node_rows[F.node(c)] for c in S.nodes}
    edges = {e: {x: _walk(J, F.edge_map[e], x) for x in rows[S.src(e)]} for e in S.edges}
    attrs = {a: dict(J.attr_fn[F.attr_map[a]]) for a in S.attributes}
    out = Instance(S, rows, edges, attrs)
    return rekey(out, keys or KeyGen()) if fresh_ids else out


def sigma_ready_failure(F: Morphism, fuel: int = DEFAULT_FUEL) -> str | None:
    try:
        why = dop_failure(F, fuel)
    except UnknownFiniteness as exc:
        return str(exc)
    return why or attribute_square_failure(F)


def sigma(F: Morphism, I: Instance, fuel: int = DEFAULT_FUEL, *, check: bool = True) -> Instance:
    """Push I forward along a discrete op-fibration by disjoint union of fibres."""
    if check:
        why = sigma_ready_failure(F, fuel)
        if why:
            raise NotSigmaReady(why)
    S, T = F.source, F.target
    preimage = {d: [c for c in S.nodes if F.node(c) == d] for d in T.nodes}
    rows = {d: [x for c in preimage[d] for x in I.node_rows[c]] for d in T.nodes}
    edges = {}
    for e in T.edges:
        table = {}
        for c in preimage[T.src(e)]:
            p = lift(F, c, T.edge_path(e), fuel)
            if p is None:
                raise NotSigmaReady(f"edge {e} has no lift from {c}")
            for x in I.node_rows[c]:
                table[x] = _walk(I, p, x)
        edges[e] = table
    attrs = {a: {} for a in T.attributes}
    for a, b in F.attr_map.items():
        attrs[b].update(I.attr_fn[a])
    return Instance(T, rows, edges, attrs)


@dataclass
class LimitTable:
    columns: list
    rows: list


def join_order(columns: Sequence, constraints: Sequence[tuple]):
    """Placement order for a join: (placed, driver, checks).

    Columns whose value is forced by an already placed column through some
    constraint are placed as soon as possible; ``driver[i]`` names that
    constraint for position i, and ``checks[i]`` lists the constraints that
    become checkable once position i is filled.
    """
    incoming: dict = {c: [] for c in columns}
    for k, (s, t, fn) in enumerate(constraints):
        incoming[t].append(k)
    placed: list = []
    placed_set: set = set()
    remaining = list(columns)
    while remaining:
        pick = next((c for c in remaining
                     if all(constraints[k][0] in placed_set or constraints[k][0] == c
                            for k in incoming[c])), None)
        if pick is None:
            pick = next((c for c in remaining
                         if any(constraints[k][0] in placed_set for k in incoming[c])), remaining[0])
        placed.append(pick)
        placed_set.add(pick)
        remaining.remove(pick)
    pos = {c: i for i, c in enumerate(placed)}
    driver: list = [None] * len(placed)
    checks: list = [[] for _ in placed]
    for k, (s, t, fn) in enumerate(constraints):
        if pos[s] < pos[t] and driver[pos[t]] is None:
            driver[pos[t]] = (pos[s], k)
        else:
            checks[max(pos[s], pos[t])].append((pos[s], pos[t], k))
    return placed, driver, checks


def join_all(columns: Sequence, domains: dict, constraints: Sequence[tuple],
             keep=None) -> list:
    """All assignments column -> row satisfying every (src, tgt, function) constraint.

    Columns forced by an already assigned column are never enumerated, so the
    search only branches on columns nothing upstream determines.  ``keep``
    optionally filters complete assignments.  Rows come back sorted.
    """
    columns = list(columns)
    placed, driver, checks = join_order(columns, constraints)
    pos = {c: i for i, c in enumerate(placed)}
    fns = [fn for _, _, fn in constraints]
    n = len(placed)
    out: list = []
    values: list = [None] * n

    def fill(i):
        if i == n:
            out.append(tuple(values))
            return
        if driver[i] is not None:
            j, k = driver[i]
            candidates = (fns[k][values[j]],)
        else:
            candidates = domains[placed[i]]
        for v in candidates:
            values[i] = v
            if all(fns[k].get(values[a]) == values[b] for a, b, k in checks[i]):
                fill(i + 1)
        values[i] = None

    fill(0)
    rows = [tuple(r[pos[c]] for c in columns) for r in out]
    if keep is not None:
        rows = [r for r in rows if keep(r)]
    rows.sort(key=lambda r: tuple(id_key(v) for v in r))
    return rows


def limit_table(B: TypedSignature, H: Instance) -> LimitTable:
    """The limit of H as a table with one column per node of B ("join all")."""
    constraints = [(s, t, H.edge_fn[e]) for e, (s, t) in B.edges.items()]
    rows = join_all(B.nodes, {n: H.node_rows[n] for n in B.nodes}, constraints)
    return LimitTable(list(B.nodes), rows)


def _require_finite(sig: TypedSignature, fuel: int, role: str):
    cat = saturate(sig, fuel)
    if isinstance(cat, Unknown):
        raise InfiniteTarget(f"{role} category is not finite: {cat.reason}")
    return cat


@dataclass
class PiLayout:
    """The comma diagram (d, F) of one target node d, flattened for joining.

    ``objects`` maps column names to (source node, gamma: d -> F(node)),
    ``links`` lists (src column, tgt column, source edge) for the generating
    edges, and ``agree`` lists (column, attribute, column, attribute)
    equalities demanded by a non-injective attribute map.
    """

    columns: list
    objects: dict
    index: dict
    links: list
    agree: list

    def column_of(self, c: str, word: tuple) -> int:
        return self.columns.index(self.index[c, word])


def pi_layouts(F: Morphism, fuel: int = DEFAULT_FUEL, *, lenient: bool = False) -> dict:
    """Check Pi-readiness and finiteness, then lay out every target node."""
    if not is_pi_ready(F, lenient):
        raise NotPiReady("attribute map is not the identity on a shared attribute set"
                         if not lenient else "attribute map is not surjective")
    S, T = F.source, F.target
    _require_finite(S, fuel, "source")
    _require_finite(T, fuel, "target")
    by_attr = attribute_preimages(F)
    layouts = {}
    for d in T.nodes:
        cm = comma(point(T, d), F, fuel)
        if isinstance(cm, Unknown):
            raise InfiniteTarget(cm.reason)
        columns = list(cm.objects)
        objects = {name: (c, gamma) for name, (_, c, gamma) in cm.objects.items()}
        index = {(c, gamma.edges): name for name, (c, gamma) in objects.items()}
        links = [(s, t, cm.q.edge_map[e].edges[0]) for e, (s, t) in cm.signature.edges.items()]
        # Two source attributes with a common image must agree wherever they
        # are observed through the same target morphism.
        agree = []
        for sources in by_attr.values():
            for a in sources:
                for a2 in sources:
                    if a >= a2:
                        continue
                    c, c2 = S.attributes[a][0], S.attributes[a2][0]
                    for cx, gamma in objects.values():
                        if cx == c and (c2, gamma.edges) in index:
                            agree.append((columns.index(index[c, gamma.edges]), a,
                                          columns.index(index[c2, gamma.edges]), a2))
        layouts[d] = PiLayout(columns, objects, index, links, agree)
    return layouts


def attribute_preimages(F: Morphism) -> dict:
    by_attr: dict = {}
    for a, b in sorted(F.attr_map.items()):
        by_attr.setdefault(b, []).append(a)
    return by_attr


def restriction_columns(F: Morphism, layouts: dict, e: str) -> list:
    """For target edge e: d -> d1, the column of d feeding each column of d1."""
    T = F.target
    d, d1 = T.edges[e]
    src, tgt = layouts[d], layouts[d1]
    return [src.column_of(c, T.rewrite.reduce((e,) + gamma.edges))
            for c, gamma in (tgt.objects[name] for name in tgt.columns)]


@dataclass
class PiTable:
    """Limit table of one target node with its rows keyed by fresh IDs."""

    layout: PiLayout
    keyed: dict

    @property
    def columns(self) -> list:
        return self.layout.columns

    @property
    def objects(self) -> dict:
        return self.layout.objects

    def column_of(self, c: str, word: tuple) -> int:
        return self.layout.column_of(c, word)


def pi_with_tables(F: Morphism, I: Instance, fuel: int = DEFAULT_FUEL,
                   keys: KeyGen | None = None, *, lenient: bool = False):
    """Pi along F together with the keyed limit table of every target node."""
    layouts = pi_layouts(F, fuel, lenient=lenient)
    S, T = F.source, F.target
    keys = keys or KeyGen()
    tables = {}
    for d, lay in layouts.items():
        domains = {name: I.node_rows[c] for name, (c, _) in lay.objects.items()}
        constraints = [(s, t, I.edge_fn[e]) for s, t, e in lay.links]
        keep = None
        if lay.agree:
            def keep(row, agree=lay.agree):
                return all(I.attr_fn[a][row[i]] == I.attr_fn[a2][row[j]] for i, a, j, a2 in agree)
        rows = join_all(lay.columns, domains, constraints, keep)
        tables[d] = PiTable(lay, {keys.fresh(): row for row in rows})

    rows = {d: list(tables[d].keyed) for d in T.nodes}
    edges = {}
    for e, (d, d1) in T.edges.items():
        lookup = {row: k for k, row in tables[d1].keyed.items()}
        pick = restriction_columns(F, layouts, e)
        edges[e] = {k: lookup[tuple(row[i] for i in pick)] for k, row in tables[d].keyed.items()}
    attrs = {}
    by_attr = attribute_preimages(F)
    for b, (d, _) in T.attributes.items():
        a = by_attr[b][0]
        table = tables[d]
        col = table.column_of(S.attributes[a][0], ())
        attrs[b] = {k: I.attr_fn[a][row[col]] for k, row in table.keyed.items()}
    return Instance(T, rows, edges, attrs), tables


def pi(F: Morphism, I: Instance, fuel: int = DEFAULT_FUEL, keys: KeyGen | None = None, *,
       lenient: bool = False) -> Instance:
    """Right pushforward of I along F, one keyed limit table per target node."""
    return pi_with_tables(F, I, fuel, keys, lenient=lenient)[0]


def relationalize(I: Instance) -> Instance:
    """Merge IDs that no attribute observation along any path can tell apart.

    Computed as the coarsest partition that separates different attribute
    tuples and is stable under every edge; each class keeps its least ID.
    """
    S = I.schema
    block = {}
    palette: dict = {}
    for n in S.nodes:
        for x in I.node_rows[n]:
            block[n, x] = palette.setdefault((n, I.observe(n, x)), len(palette))
    count = len(palette)
    while True:
        palette = {}
        nxt = {}
        for (n, x), b in block.items():
            sig = (b, tuple(block[S.tgt(e), I.edge_fn[e][x]] for e in S.out_edges(n)))
            nxt[n, x] = palette.setdefault(sig, len(palette))
        block = nxt
        if len(palette) == count:
            break
        count = len(palette)
    rep: dict = {}
    for n in S.nodes:
        for x in sorted(I.node_rows[n], key=id_key):
            rep.setdefault(block[n, x], x)
    keep = {n: [x for x in I.node_rows[n] if rep[block[n, x]] == x] for n in S.nodes}
    edges = {e: {x: rep[block[S.tgt(e), I.edge_fn[e][x]]] for x in keep[S.src(e)]} for e in S.edges}
    attrs = {a: {x: I.attr_fn[a][x] for x in keep[S.attributes[a][0]]} for a in S.attributes}
    return Instance(S, keep, edges, attrs)


def coproduct_instance(I: Instance, J: Instance, keys: KeyGen | None = None) -> Instance:
    """I + J computed as Sigma along the fold C + C -> C."""
    C = I.schema
    keys = keys or KeyGen()
    total, left, right, codiag = fold(C)
    rows, edges, attrs = {}, {}, {}
    for incl, K in ((left, rekey(I, keys)), (right, rekey(J.with_schema(C), keys))):
        for n, m in incl.node_map.items():
            rows[m] = K.node_rows[n]
        for e, p in incl.edge_map.items():
            edges[p.edges[0]] = K.edge_fn[e]
        for a, b in incl.attr_map.items():
            attrs[b] = K.attr_fn[a]
    # the fold is a discrete op-fibration by construction, finite or not
    return sigma(codiag, Instance(total, rows, edges, attrs), check=False)
