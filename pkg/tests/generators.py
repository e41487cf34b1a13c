"""Random signatures, morphisms, instances and queries for property tests.

Everything is driven by an explicit ``random.Random`` so failures replay from
a seed.  Signatures are acyclic, hence finite.
"""

from __future__ import annotations

import itertools
import random

from fql.catops import saturate
from fql.instance import Instance, validate
from fql.query import Query
from fql.rewrite import Path
from fql.signature import Morphism, TypedSignature, check_morphism

VALUES = (0, 1)


def random_signature(rng: random.Random, max_nodes: int = 3, *, prefix: str = "",
                     equations: bool = True, attrs: str = "some") -> TypedSignature:
    """A random acyclic signature, optionally with one path equation.

    ``attrs`` is "none", "some" (each node 0-1 Int attributes) or "all"
    (each node 1-2 Int attributes).
    """
    n = rng.randint(1, max_nodes)
    nodes = [f"{prefix}n{i}" for i in range(n)]
    edges = {}
    for i, j in itertools.combinations(range(n), 2):
        for _ in range(rng.choice((0, 0, 1, 1, 2))):
            edges[f"{prefix}e{len(edges)}"] = (nodes[i], nodes[j])
    eqs = []
    if equations and edges:
        paths = _short_paths(nodes, edges)
        parallel = [(p, q) for p, q in itertools.combinations(paths, 2)
                    if p.start == q.start and _end(p, edges) == _end(q, edges) and p.edges and q.edges]
        if parallel and rng.random() < 0.5:
            eqs.append(rng.choice(parallel))
    attributes = {}
    for node in nodes:
        count = {"none": 0, "some": rng.randint(0, 1), "all": rng.randint(1, 2)}[attrs]
        for _ in range(count):
            attributes[f"{prefix}a{len(attributes)}"] = (node, "Int")
    return TypedSignature(nodes, edges, eqs, attributes)


def _end(p: Path, edges) -> str:
    return edges[p.edges[-1]][1] if p.edges else p.start


def _short_paths(nodes, edges, length: int = 2) -> list:
    out = [Path(n) for n in nodes]
    frontier = list(out)
    for _ in range(length):
        nxt = []
        for p in frontier:
            for e, (s, _) in sorted(edges.items()):
                if s == _end(p, edges):
                    nxt.append(Path(p.start, p.edges + (e,)))
        out += nxt
        frontier = nxt
    return out


def random_morphism(rng: random.Random, S: TypedSignature, T: TypedSignature, *,
                    cover: set = frozenset(), tries: int = 200) -> Morphism | None:
    """A structure-only morphism S -> T whose node image contains ``cover``."""
    if not T.nodes:
        return None
    cat = saturate(T)
    for _ in range(tries):
        node_map = {n: rng.choice(T.nodes) for n in S.nodes}
        if not cover <= set(node_map.values()):
            continue
        edge_map = {}
        for e, (s, t) in S.edges.items():
            hom = cat.hom(node_map[s], node_map[t])
            if not hom:
                break
            edge_map[e] = rng.choice(hom)
        else:
            F = Morphism(S.strip(), T.strip(), node_map, edge_map)
            if check_morphism(F).ok:
                return F
    return None


def random_instance(rng: random.Random, S: TypedSignature, max_rows: int = 2, *,
                    prefix: str = "x", tries: int = 50) -> Instance:
    """A random valid instance; collapses to at most one row per node if needed."""
    for attempt in range(tries + 1):
        limit = max_rows if attempt < tries else 1
        rows, counter = {}, itertools.count()
        for node in S.nodes:
            rows[node] = [f"{prefix}{next(counter)}" for _ in range(rng.randint(0, limit))]
        # every node with an incoming edge from a non-empty node needs rows
        changed = True
        while changed:
            changed = False
            for e, (s, t) in S.edges.items():
                if rows[s] and not rows[t]:
                    rows[t] = [f"{prefix}{next(counter)}"]
                    changed = True
        edges = {e: {x: rng.choice(rows[t]) for x in rows[s]} for e, (s, t) in S.edges.items()}
        attrs = {a: {x: rng.choice(VALUES) for x in rows[n]} for a, (n, _) in S.attributes.items()}
        inst = Instance(S, rows, edges, attrs)
        if validate(inst).ok:
            return inst
    raise AssertionError("could not build a valid instance")


def elements_fibration(rng: random.Random, T: TypedSignature, max_rows: int = 1,
                       max_nodes: int = 3, prefix: str = "") -> Morphism:
    """A Sigma-ready projection A -> T from the elements of a random structure on T."""
    while True:
        K = random_instance(rng, T.strip(), max_rows, prefix="y")
        if 1 <= sum(K.sizes().values()) <= max_nodes:
            break
    nodes, node_map, edges, edge_map, attrs, attr_map = [], {}, {}, {}, {}, {}
    for c in T.nodes:
        for x in K.node_rows[c]:
            name = f"{prefix}{c}_{x}"
            nodes.append(name)
            node_map[name] = c
            for a in T.attrs_of(c):
                attrs[f"{prefix}{a}_{x}"] = (name, T.attributes[a][1])
                attr_map[f"{prefix}{a}_{x}"] = a
    for e, (s, t) in T.edges.items():
        for x in K.node_rows[s]:
            name = f"{prefix}{e}_{x}"
            edges[name] = (f"{prefix}{s}_{x}", f"{prefix}{t}_{K.edge_fn[e][x]}")
            edge_map[name] = Path(s, (e,))
    lifted = []
    for p, q in T.equations:
        for x in K.node_rows[p.start]:
            lifted.append((_lift(K, prefix, p, x), _lift(K, prefix, q, x)))
    A = TypedSignature(nodes, edges, lifted, attrs)
    return Morphism(A, T, node_map, edge_map, attr_map)


def _lift(K: Instance, prefix: str, p: Path, x) -> Path:
    start, out = f"{prefix}{p.start}_{x}", []
    for e in p.edges:
        out.append(f"{prefix}{e}_{x}")
        x = K.edge_fn[e][x]
    return Path(start, tuple(out))


def pi_ready_leg(rng: random.Random, A: TypedSignature, max_nodes: int = 3,
                 prefix: str = "b") -> Morphism | None:
    """A free signature B with a Pi-ready morphism B -> A."""
    needed = {n for n, _ in A.attributes.values()}
    if len(needed) > max_nodes:
        return None
    for _ in range(50):
        B = random_signature(rng, max_nodes, prefix=prefix, equations=False, attrs="none")
        if len(B.nodes) < len(needed):
            continue
        f = random_morphism(rng, B, A, cover=needed, tries=50)
        if f is None:
            continue
        attrs = {}
        for a, (node, base) in A.attributes.items():
            attrs[a] = (rng.choice([b for b in B.nodes if f.node(b) == node]), base)
        B = TypedSignature(B.nodes, B.edges, [], attrs)
        return Morphism(B, A, f.node_map, f.edge_map, {a: a for a in attrs})
    return None


def delta_leg(rng: random.Random, B: TypedSignature, S: TypedSignature) -> Morphism | None:
    """A typed morphism B -> S; attributes of B go to same-typed attributes of S."""
    for _ in range(50):
        f = random_morphism(rng, B.strip(), S, tries=20)
        if f is None:
            return None
        attr_map = {}
        for a, (node, base) in B.attributes.items():
            options = [x for x in S.attrs_of(f.node(node)) if S.attributes[x][1] == base]
            if not options:
                break
            attr_map[a] = rng.choice(options)
        else:
            return Morphism(B, S, f.node_map, f.edge_map, attr_map)
    return None


def random_query(rng: random.Random, S: TypedSignature, T: TypedSignature,
                 max_nodes: int = 3, tag: str = "q") -> Query | None:
    """A valid query S -> T; T's attributes drive the typing of the middle."""
    t = elements_fibration(rng, T, max_nodes=max_nodes, prefix=f"{tag}A")
    f = pi_ready_leg(rng, t.source, max_nodes, prefix=f"{tag}B")
    if f is None:
        return None
    s = delta_leg(rng, f.source, S)
    if s is None:
        return None
    return Query(s, f, t)


def random_query_pair(rng: random.Random, max_nodes: int = 3):
    """Queries S -> T and T -> U over random acyclic signatures."""
    mode = rng.choice(("none", "all"))
    S = random_signature(rng, max_nodes, prefix="S", attrs=mode)
    T = random_signature(rng, max_nodes, prefix="T", attrs=mode)
    U = random_signature(rng, max_nodes, prefix="U", attrs=mode)
    Q1 = random_query(rng, S, T, max_nodes, "q")
    Q2 = random_query(rng, T, U, max_nodes, "r")
    if Q1 is None or Q2 is None:
        return None
    return S, Q1, Q2


def random_presentation(rng: random.Random, max_nodes: int = 3, max_edges: int = 3,
                        max_equations: int = 2, max_len: int = 3) -> TypedSignature:
    """A small signature that may have loops, with random equations between parallel paths."""
    n = rng.randint(1, max_nodes)
    nodes = [f"n{i}" for i in range(n)]
    edges = {}
    for i in range(rng.randint(1, max_edges)):
        edges[f"e{i}"] = (rng.choice(nodes), rng.choice(nodes))
    paths = [p for p in _short_paths(nodes, edges, max_len)]
    eqs = []
    for _ in range(rng.randint(0, max_equations)):
        p = rng.choice(paths)
        parallel = [q for q in paths if q != p and q.start == p.start
                    and _end(q, edges) == _end(p, edges)]
        if parallel:
            eqs.append((p, rng.choice(parallel)))
    return TypedSignature(nodes, edges, eqs)


def sigma_case(rng: random.Random, max_rows: int = 3):
    """(F, I, J): a Sigma-ready F: A -> T, I over A and J over T."""
    T = random_signature(rng, 3, prefix="T", attrs=rng.choice(("none", "some")))
    F = elements_fibration(rng, T, max_rows=1, max_nodes=3, prefix="A")
    I = random_instance(rng, F.source, max_rows, prefix="i")
    J = random_instance(rng, T, max_rows, prefix="j")
    return F, I, J


def pi_case(rng: random.Random, max_rows: int = 3):
    """(F, I, J): a Pi-ready F: B -> A, I over B and J over A; None if none was found."""
    A = random_signature(rng, 3, prefix="T", attrs=rng.choice(("none", "some")))
    F = pi_ready_leg(rng, A, 3, prefix="B")
    if F is None:
        return None
    I = random_instance(rng, F.source, max_rows, prefix="i")
    J = random_instance(rng, A, max_rows, prefix="j")
    return F, I, J


def random_spc_case(rng: random.Random, max_rows: int = 4, max_arity: int = 3,
                    semantics: str | None = None):
    """(schema, database, query) with at most two FROM occurrences."""
    from fql.relenc import RelationalSchema, SpcQuery

    names = ["R", "S"][:rng.randint(1, 2)]
    R = RelationalSchema({r: tuple(f"c{i}" for i in range(rng.randint(1, max_arity)))
                          for r in names})
    domain = ["x", "y", "z"][:rng.randint(1, 3)]
    db = {r: [tuple(rng.choice(domain) for _ in cols) for _ in range(rng.randint(0, max_rows))]
          for r, cols in R.relations.items()}
    return R, db, random_spc_query(rng, R, semantics=semantics)


def random_spc_query(rng: random.Random, R, *, width: int | None = None,
                     semantics: str | None = None, max_arity: int = 3):
    from fql.relenc import SpcQuery

    tables = tuple(rng.choice(sorted(R.relations)) for _ in range(rng.randint(1, 2)))
    n = sum(R.arity(t) for t in tables)
    where = tuple((rng.randrange(n), rng.randrange(n)) for _ in range(rng.randint(0, 2)))
    width = width if width is not None else rng.randint(1, max_arity)
    select = tuple(rng.randrange(n) for _ in range(width))
    return SpcQuery(tables, where, select, semantics or rng.choice(("bag", "set")))
