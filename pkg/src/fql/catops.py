"""Finite-category machinery over signatures.

Saturation enumerates the normal-form paths of a signature.  Generated
signatures (fiber products, commas, categories of elements) are presented
by generating edges together with a rewrite system built while exploring
their morphisms breadth first, so they never need a completion run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable

from .errors import BudgetExceeded, IncompleteSystem, NotOpFibration, UnknownFiniteness
from .instance import Instance
from .rewrite import COMPLETE, DEFAULT_FUEL, Path, RewriteSystem, Rule
from .signature import Morphism, TypedSignature, canonical_name, dop_failure

MAX_MORPHISMS = 200_000


@dataclass(frozen=True)
class Unknown:
    """Finiteness could not be certified within the given budget."""

    reason: str

    def __bool__(self) -> bool:
        return False


class FiniteCategory:
    """The category denoted by a signature whose normal forms are finite in number."""

    def __init__(self, sig: TypedSignature, by_start: dict):
        self.signature = sig
        self.objects = sig.nodes
        self._out = by_start
        self.morphisms = [m for c in sig.nodes for m in by_start[c]]
        self.ids = {m: i for i, m in enumerate(self.morphisms)}
        self._hom: dict = {}
        for m in self.morphisms:
            self._hom.setdefault((m.start, sig.end(m)), []).append(m)

    def __len__(self) -> int:
        return len(self.morphisms)

    def out(self, c: str) -> list:
        return self._out[c]

    def hom(self, x: str, y: str) -> list:
        return self._hom.get((x, y), [])

    def source(self, m: Path) -> str:
        return m.start

    def target(self, m: Path) -> str:
        return self.signature.end(m)

    def identity(self, c: str) -> Path:
        return Path(c)

    def compose(self, f: Path, g: Path) -> Path:
        """Diagrammatic composite f then g."""
        return Path(f.start, self.signature.rewrite.reduce(f.edges + g.edges))


def normal_forms_from(sig: TypedSignature, start: str, fuel: int = DEFAULT_FUEL,
                      limit: int = MAX_MORPHISMS):
    """Yield normal-form paths from ``start`` in shortlex order.

    Normal forms of a complete system are closed under prefixes, so level n
    consists of the irreducible one-edge extensions of level n-1.  Stops
    after ``fuel`` levels or ``limit`` paths; the last yielded value is then
    an Unknown.
    """
    rs = sig.rewrite
    if not rs.is_complete:
        raise IncompleteSystem("cannot enumerate normal forms of an incomplete system")
    level = [((), start)]
    yield Path(start)
    count, depth = 1, 0
    while level:
        if depth >= fuel:
            yield Unknown(f"normal forms from {start} still growing after {fuel} levels")
            return
        depth += 1
        nxt = []
        for word, end in level:
            for e in sig.out_edges(end):
                w = word + (e,)
                if not rs.reducible_suffix(w):
                    nxt.append((w, sig.tgt(e)))
                    yield Path(start, w)
                    count += 1
                    if count > limit:
                        yield Unknown(f"more than {limit} normal forms from {start}")
                        return
        level = nxt


def saturate(S: TypedSignature, fuel: int = DEFAULT_FUEL,
             max_morphisms: int = MAX_MORPHISMS):
    """Enumerate the denoted category, or return Unknown if it keeps growing."""
    by_start = {}
    total = 0
    for c in S.nodes:
        paths = []
        for p in normal_forms_from(S, c, fuel, max_morphisms - total):
            if isinstance(p, Unknown):
                return p
            paths.append(p)
        by_start[c] = paths
        total += len(paths)
    return FiniteCategory(S, by_start)


def is_acyclic(S: TypedSignature) -> bool:
    indeg = {n: 0 for n in S.nodes}
    for src, tgt in S.edges.values():
        indeg[tgt] += 1
    ready = [n for n, d in indeg.items() if d == 0]
    seen = 0
    while ready:
        n = ready.pop()
        seen += 1
        for e in S.out_edges(n):
            t = S.tgt(e)
            indeg[t] -= 1
            if indeg[t] == 0:
                ready.append(t)
    return seen == len(S.nodes)


def lift(F: Morphism, c: str, target_path: Path, fuel: int = DEFAULT_FUEL) -> Path | None:
    """Shortlex-least normal-form path p from c with F(p) equivalent to target_path."""
    want = F.target.normalize(target_path).edges
    for p in normal_forms_from(F.source, c, fuel):
        if isinstance(p, Unknown):
            return None
        if F.image(p).edges == want:
            return p
    return None


# -- presentations -----------------------------------------------------------

def present(nodes: Iterable[str], generators: Iterable[tuple],
            compose: Callable, identity: Callable, budget: int = MAX_MORPHISMS):
    """Build a complete rewrite system for a category given by generators.

    ``generators`` are (name, source, target, meaning) tuples; ``compose``
    and ``identity`` act on meanings, which must identify morphisms among
    those sharing a source.  Each morphism is represented by its
    shortlex-least path; every other path of the form rep.edge gets a rule
    to the representative of its meaning.
    """
    out: dict = {n: [] for n in nodes}
    edges = {}
    for name, src, tgt, meaning in sorted(generators, key=lambda g: g[0]):
        out[src].append((name, tgt, meaning))
        edges[name] = (src, tgt)
    rules = []
    total = 0
    for x in out:
        reps = {identity(x): ()}
        level = [((), identity(x), x)]
        while level:
            nxt = []
            for word, meaning, end in level:
                for name, tgt, gmeaning in out[end]:
                    m2 = compose(meaning, gmeaning)
                    w2 = word + (name,)
                    rep = reps.get(m2)
                    if rep is not None:
                        rules.append(Rule(Path(x, w2), Path(x, rep)))
                    else:
                        reps[m2] = w2
                        nxt.append((w2, m2, tgt))
            level = nxt
        total += len(reps)
        if total > budget:
            raise BudgetExceeded(f"presentation exceeds {budget} morphisms")
    return RewriteSystem(rules, COMPLETE, edges)


def _presented(nodes, generators, compose, identity, attributes=None, budget=MAX_MORPHISMS):
    generators = list(generators)
    edges = {name: (src, tgt) for name, src, tgt, _ in generators}
    cache: dict = {}

    def build():
        if "rs" not in cache:
            cache["rs"] = present(nodes, generators, compose, identity, budget)
        return cache["rs"]

    return TypedSignature(nodes, edges, None, attributes or {}, rewrite=build)


# -- fiber products ----------------------------------------------------------

def fiber_product(F: Morphism, G: Morphism, fuel: int = DEFAULT_FUEL):
    """Pullback of F: A -> C and G: B -> C on denoted categories.

    Objects are pairs (a, b) with F(a) = G(b); morphisms are pairs of
    morphisms with equivalent images.  Generators are the pairs that do not
    factor through two non-identity pairs (topped up until they generate).
    Attributes are pairs of attributes with a common image.
    """
    A, B = F.source, G.source
    cat_a, cat_b = saturate(A, fuel), saturate(B, fuel)
    for cat, name in ((cat_a, "left"), (cat_b, "right")):
        if isinstance(cat, Unknown):
            raise UnknownFiniteness(f"fiber product: {name} factor is not finite ({cat.reason})")
    objects = [(a, b) for a in A.nodes for b in B.nodes if F.node(a) == G.node(b)]
    name_of = {o: canonical_name(*o) for o in objects}
    image_a = {m: F.image(m).edges for m in cat_a.morphisms}
    image_b = {n: G.image(n).edges for n in cat_b.morphisms}
    arrows = []
    for a, b in objects:
        for m in cat_a.out(a):
            for n in cat_b.out(b):
                if image_a[m] == image_b[n]:
                    arrows.append((m, n))
    nonid = [(m, n) for m, n in arrows if m.edges or n.edges]
    by_source: dict = {}
    for m, n in nonid:
        by_source.setdefault((m.start, n.start), []).append((m, n))

    def comp(x, y):
        return (cat_a.compose(x[0], y[0]), cat_b.compose(x[1], y[1]))

    decomposable = set()
    for m, n in nonid:
        end = (A.end(m), B.end(n))
        for y in by_source.get(end, []):
            decomposable.add(comp((m, n), y))
    gens = [x for x in nonid if x not in decomposable]

    def closure(gs):
        reach = set()
        frontier = [(Path(a), Path(b)) for a, b in objects]
        reach.update(frontier)
        out: dict = {}
        for m, n in gs:
            out.setdefault((m.start, n.start), []).append((m, n))
        while frontier:
            nxt = []
            for x in frontier:
                for g in out.get((A.end(x[0]), B.end(x[1])), []):
                    y = comp(x, g)
                    if y not in reach:
                        reach.add(y)
                        nxt.append(y)
            frontier = nxt
        return reach

    reach = closure(gens)
    for x in nonid:
        if x not in reach:
            gens.append(x)
            reach = closure(gens)

    gen_specs = []
    images_a, images_b = {}, {}
    for m, n in gens:
        name = canonical_name(str(m), str(n))
        src = name_of[(m.start, n.start)]
        tgt = name_of[(A.end(m), B.end(n))]
        gen_specs.append((name, src, tgt, (m.edges, n.edges)))
        images_a[name], images_b[name] = m, n

    attributes, attr_a, attr_b = {}, {}, {}
    for (a, b) in objects:
        for alpha in A.attrs_of(a):
            for beta in B.attrs_of(b):
                if F.attr_map.get(alpha) == G.attr_map.get(beta) and alpha in F.attr_map:
                    name = canonical_name(alpha, beta)
                    attributes[name] = (name_of[(a, b)], A.attributes[alpha][1])
                    attr_a[name], attr_b[name] = alpha, beta

    ra, rb = A.rewrite, B.rewrite
    sig = _presented(
        [name_of[o] for o in objects], gen_specs,
        lambda s, t: (ra.reduce(s[0] + t[0]), rb.reduce(s[1] + t[1])),
        lambda x: ((), ()), attributes)
    node_a = {name_of[o]: o[0] for o in objects}
    node_b = {name_of[o]: o[1] for o in objects}
    proj_a = Morphism(sig, A, node_a, images_a, attr_a)
    proj_b = Morphism(sig, B, node_b, images_b, attr_b)
    return sig, proj_a, proj_b


# -- comma categories ----------------------------------------------------------

@dataclass
class CommaResult:
    signature: TypedSignature
    p: Morphism
    q: Morphism
    alpha: dict
    objects: dict = field(default_factory=dict)


def comma(f: Morphism, g: Morphism, fuel: int = DEFAULT_FUEL, *,
          attributes: dict | None = None, budget: int = MAX_MORPHISMS):
    """The comma category (f over g) for f: A -> C and g: B -> C.

    Objects are triples (a, b, gamma: f(a) -> g(b)).  Generating edges are
    (m, id) for edges m of A and (id, n) for edges n of B; every comma
    morphism factors as an (id, n) part followed by an (m, id) part.
    ``attributes`` optionally places attributes, keyed by name, as
    (object triple, base type).
    """
    A, B, C = f.source, g.source, f.target
    cat_c = saturate(C, fuel)
    if isinstance(cat_c, Unknown):
        return cat_c
    objects = {}
    for a in A.nodes:
        for b in B.nodes:
            for gamma in cat_c.hom(f.node(a), g.node(b)):
                objects[canonical_name(a, b, str(gamma))] = (a, b, gamma)
    by_triple = {(a, b, gamma.edges): name for name, (a, b, gamma) in objects.items()}
    gens = []
    p_edges, q_edges = {}, {}
    rc = C.rewrite
    for name, (a, b, gamma) in objects.items():
        for n in B.out_edges(b):
            b1 = B.tgt(n)
            tgt = by_triple[(a, b1, rc.reduce(gamma.edges + g.edge_map[n].edges))]
            ename = canonical_name("R", name, n)
            gens.append((ename, name, tgt, ((), (n,), tgt)))
            p_edges[ename], q_edges[ename] = Path(a), Path(b, (n,))
    for name, (a1, b, gamma1) in objects.items():
        for m in A.edges:
            if A.tgt(m) != a1:
                continue
            a = A.src(m)
            src = by_triple[(a, b, rc.reduce(f.edge_map[m].edges + gamma1.edges))]
            ename = canonical_name("L", m, name)
            gens.append((ename, src, name, ((m,), (), name)))
            p_edges[ename], q_edges[ename] = Path(a, (m,)), Path(b)
    ra, rb = A.rewrite, B.rewrite
    attrs = {k: (obj, base) for k, (obj, base) in (attributes or {}).items()}
    sig = _presented(
        list(objects), gens,
        lambda s, t: (ra.reduce(s[0] + t[0]), rb.reduce(s[1] + t[1]), t[2]),
        lambda x: ((), (), x), attrs, budget)
    p = Morphism(sig, A, {k: v[0] for k, v in objects.items()}, p_edges)
    q = Morphism(sig, B, {k: v[1] for k, v in objects.items()}, q_edges)
    alpha = {k: v[2] for k, v in objects.items()}
    return CommaResult(sig, p, q, alpha, objects)


def point(C: TypedSignature, d: str) -> Morphism:
    """The functor from the one-object category picking out d."""
    one = TypedSignature(["*"], {})
    return Morphism(one, C, {"*": d}, {})


# -- coproducts ----------------------------------------------------------------

def _tag(tag: str, name: str) -> str:
    return canonical_name(tag, name)


def coproduct(S: TypedSignature, T: TypedSignature, tags=("1", "2")):
    """Disjoint union S + T with tagged names and the two inclusions."""
    nodes, edges, attrs, equations, rules = [], {}, {}, [], []
    incls = []
    for tag, sig in zip(tags, (S, T)):
        nodes += [_tag(tag, n) for n in sig.nodes]
        for e, (s, t) in sig.edges.items():
            edges[_tag(tag, e)] = (_tag(tag, s), _tag(tag, t))
        for a, (n, base) in sig.attributes.items():
            attrs[_tag(tag, a)] = (_tag(tag, n), base)

        def rename(p, tag=tag):
            return Path(_tag(tag, p.start), tuple(_tag(tag, e) for e in p.edges))

        equations += [(rename(p), rename(q)) for p, q in sig.equations]
        rules += [Rule(rename(r.lhs), rename(r.rhs)) for r in sig.rewrite.rules]
        incls.append((sig, tag))
    status = COMPLETE if S.rewrite.is_complete and T.rewrite.is_complete else "incomplete"
    rs = RewriteSystem(rules, status, edges)
    total = TypedSignature(nodes, edges, equations, attrs, rewrite=rs)
    out = []
    for sig, tag in incls:
        out.append(Morphism(sig, total, {n: _tag(tag, n) for n in sig.nodes},
                            {e: Path(_tag(tag, s), (_tag(tag, e),)) for e, (s, _) in sig.edges.items()},
                            {a: _tag(tag, a) for a in sig.attributes}))
    return total, out[0], out[1]


def fold(C: TypedSignature):
    """C + C together with the codiagonal morphism C + C -> C."""
    total, left, right = coproduct(C, C)
    node_map, edge_map, attr_map = {}, {}, {}
    for incl in (left, right):
        for n, m in incl.node_map.items():
            node_map[m] = n
        for e, p in incl.edge_map.items():
            edge_map[p.edges[0]] = Path(C.src(e), (e,))
        for a, b in incl.attr_map.items():
            attr_map[b] = a
    return total, left, right, Morphism(total, C, node_map, edge_map, attr_map)


# -- categories of elements ----------------------------------------------------

def element_name(c: str, x) -> str:
    return canonical_name(c, x)


def grothendieck(I: Instance):
    """The category of elements of I with its projection onto I's signature."""
    C = I.schema
    nodes = [element_name(c, x) for c in C.nodes for x in I.node_rows[c]]
    edges, edge_map = {}, {}
    for e, (s, t) in C.edges.items():
        for x in I.node_rows[s]:
            name = canonical_name(e, x)
            edges[name] = (element_name(s, x), element_name(t, I.edge_fn[e][x]))
            edge_map[name] = Path(s, (e,))

    def lifted(word, x):
        out = []
        for e in word:
            out.append(canonical_name(e, x))
            x = I.edge_fn[e][x]
        return tuple(out)

    rules = []
    for r in C.rewrite.rules:
        for x in I.node_rows[r.lhs.start]:
            start = element_name(r.lhs.start, x)
            rules.append(Rule(Path(start, lifted(r.lhs.edges, x)), Path(start, lifted(r.rhs.edges, x))))
    rs = RewriteSystem(rules, C.rewrite.status, edges)
    equations = [(r.lhs, r.rhs) for r in rules]
    sig = TypedSignature(nodes, edges, equations, {}, rewrite=rs)
    node_map = {element_name(c, x): c for c in C.nodes for x in I.node_rows[c]}
    return sig, Morphism(sig, C.strip(), node_map, edge_map)


def degrothendieck(pi: Morphism, fuel: int = DEFAULT_FUEL) -> Instance:
    """Pre-image instance of a discrete op-fibration (structure only)."""
    why = dop_failure(pi, fuel)
    if why is not None:
        raise NotOpFibration(why)
    C = pi.target
    rows = {c: [] for c in C.nodes}
    for x in pi.source.nodes:
        rows[pi.node(x)].append(x)
    edges = {}
    for e in C.edges:
        table = {}
        for x in rows[C.src(e)]:
            p = lift(pi, x, C.edge_path(e), fuel)
            table[x] = pi.source.end(p)
        edges[e] = table
    return Instance(C.strip(), rows, edges)
