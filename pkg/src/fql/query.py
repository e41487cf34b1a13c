"""Queries as (F, G, H) triples denoting Sigma_H Pi_G Delta_F, and their composition."""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

from .catops import (Unknown, comma, degrothendieck, element_name, fiber_product,
                     grothendieck, lift, saturate)
from .errors import (BudgetExceeded, InfiniteTarget, MorphismError, NotPiReady, NotSigmaReady,
                     UnknownFiniteness)
from .instance import Instance, KeyGen
from .migrate import delta, pi, pi_with_tables, sigma, sigma_ready_failure
from .rewrite import DEFAULT_FUEL, Path
from .signature import (Morphism, TypedSignature, canonical_name, check_morphism, identity,
                        is_pi_ready)

DEFAULT_BUDGET = 5000


@dataclass
class Query:
    """Delta along F: S' -> S, then Pi along G: S' -> S'', then Sigma along H: S'' -> T."""

    F: Morphism
    G: Morphism
    H: Morphism

    @property
    def source(self) -> TypedSignature:
        return self.F.target

    @property
    def target(self) -> TypedSignature:
        return self.H.target

    def check(self, fuel: int = DEFAULT_FUEL) -> None:
        """Raise unless the legs line up and satisfy their side conditions."""
        if not self.F.source.same_as(self.G.source):
            raise MorphismError("the Delta and Pi legs have different sources")
        if not self.G.target.same_as(self.H.source):
            raise MorphismError("the Pi leg does not end where the Sigma leg starts")
        for name, leg in (("Delta", self.F), ("Pi", self.G), ("Sigma", self.H)):
            report = check_morphism(leg)
            if not report.ok:
                raise MorphismError(f"{name} leg is not a typed signature morphism:\n{report}")
        for role, sig in (("source", self.F.target), ("Delta/Pi middle", self.F.source),
                          ("Pi/Sigma middle", self.G.target), ("target", self.H.target)):
            cat = saturate(sig, fuel)
            if isinstance(cat, Unknown):
                raise InfiniteTarget(f"{role} signature is not finite: {cat.reason}")
        if not is_pi_ready(self.G):
            raise NotPiReady("Pi leg must be the identity on a shared attribute set")
        why = sigma_ready_failure(self.H, fuel)
        if why:
            raise NotSigmaReady(f"Sigma leg: {why}")

    def eval(self, I: Instance, keys: KeyGen | None = None, fuel: int = DEFAULT_FUEL) -> Instance:
        return evaluate(self, I, keys, fuel)


def make_query(F: Morphism, G: Morphism, H: Morphism, *, check: bool = True,
               fuel: int = DEFAULT_FUEL) -> Query:
    q = Query(F, G, H)
    if check:
        q.check(fuel)
    return q


def lift_delta(F: Morphism, fuel: int = DEFAULT_FUEL) -> Query:
    S = F.source
    return make_query(F, identity(S), identity(S), fuel=fuel)


def lift_pi(G: Morphism, fuel: int = DEFAULT_FUEL) -> Query:
    return make_query(identity(G.source), G, identity(G.target), fuel=fuel)


def lift_sigma(H: Morphism, fuel: int = DEFAULT_FUEL) -> Query:
    S = H.source
    return make_query(identity(S), identity(S), H, fuel=fuel)


def identity_query(S: TypedSignature) -> Query:
    return make_query(identity(S), identity(S), identity(S))


def evaluate(Q: Query, I: Instance, keys: KeyGen | None = None,
             fuel: int = DEFAULT_FUEL) -> Instance:
    keys = keys or KeyGen()
    J = delta(Q.F, I, keys)
    J = pi(Q.G, J, fuel, keys)
    return sigma(Q.H, J, fuel, check=False)


# -- composition ---------------------------------------------------------------

@contextmanager
def _stage(name: str):
    try:
        yield
    except (UnknownFiniteness, InfiniteTarget) as exc:
        raise type(exc)(f"{name}: {exc}") from exc


def _within_budget(sig: TypedSignature, stage: str, budget: int) -> None:
    size = len(sig.nodes) + len(sig.edges)
    if size > budget:
        raise BudgetExceeded(f"{stage} has {size} nodes and edges, over the budget of {budget}")


@dataclass
class Distributivity:
    """Pi along g moved past Sigma along the op-fibration k (typed)."""

    M: TypedSignature
    D1: TypedSignature
    e: Morphism
    q: Morphism
    w: Morphism


def distributivity(k: Morphism, g: Morphism, fuel: int = DEFAULT_FUEL) -> Distributivity:
    """Build e: D' -> A', q: D' -> M, w: M -> C from a typed op-fibration k: A' -> D.

    M is the category of elements of Pi_g of the fibres of k, and D' that of
    its pullback along g; e is the counit read off the limit tables.  The
    attributes of D' are pairs (attribute of e(d'), d'), carried unchanged
    to M along q.
    """
    A1, D, C = k.source, k.target, g.target
    fibres = degrothendieck(k, fuel)
    P, tables = pi_with_tables(g.strip(), fibres, fuel, KeyGen(prefix="r"))
    msig, wproj = grothendieck(P)
    pulled = delta(g.strip(), P, fresh_ids=False)
    dsig, _ = grothendieck(pulled)

    def lifted(word, r):
        out = []
        for ce in word:
            out.append(canonical_name(ce, r))
            r = P.edge_fn[ce][r]
        return tuple(out)

    q_nodes, e_nodes = {}, {}
    for d in D.nodes:
        table = tables[g.node(d)]
        col = table.column_of(d, ())
        for r in pulled.node_rows[d]:
            q_nodes[element_name(d, r)] = element_name(g.node(d), r)
            e_nodes[element_name(d, r)] = table.keyed[r][col]
    q_edges, e_edges = {}, {}
    for E, (d, _) in D.edges.items():
        image = g.edge_map[E].edges
        for r in pulled.node_rows[d]:
            name = canonical_name(E, r)
            q_edges[name] = Path(element_name(g.node(d), r), lifted(image, r))
            path = lift(k, e_nodes[element_name(d, r)], D.edge_path(E), fuel)
            if path is None:
                raise NotSigmaReady(f"edge {E} has no lift from {e_nodes[element_name(d, r)]}")
            e_edges[name] = path

    d_attrs, m_attrs, e_attr, w_attr = {}, {}, {}, {}
    for dn in dsig.nodes:
        for x in A1.attrs_of(e_nodes[dn]):
            name = canonical_name(x, dn)
            d_attrs[name] = (dn, A1.attributes[x][1])
            m_attrs[name] = (q_nodes[dn], A1.attributes[x][1])
            e_attr[name] = x
            w_attr[name] = k.attr_map[x]
    D1 = dsig.with_attributes(d_attrs)
    M = msig.with_attributes(m_attrs)
    e = Morphism(D1, A1, e_nodes, e_edges, e_attr)
    q = Morphism(D1, M, q_nodes, q_edges, {a: a for a in d_attrs})
    w = Morphism(M, C, wproj.node_map, wproj.edge_map, w_attr)
    return Distributivity(M, D1, e, q, w)


def compose(Q1: Query, Q2: Query, fuel: int = DEFAULT_FUEL, *,
            budget: int = DEFAULT_BUDGET) -> Query:
    """A single query isomorphic in effect to running Q1 and then Q2.

    Pullback A' of Q1's Sigma leg t against Q2's Delta leg u, a distributivity
    diagram for the fibration k: A' -> D along Q2's Pi leg g, and two comma
    categories B' = (h, f) and N = (e, r) that move Pi past Delta.  The result
    is not minimized.
    """
    s, f, t = Q1.F, Q1.G, Q1.H
    u, g, v = Q2.F, Q2.G, Q2.H
    if not t.target.same_as(u.target):
        raise MorphismError("the first query's target is not the second query's source")

    with _stage("pullback of the Sigma and Delta legs"):
        A1, h, k = fiber_product(t, u, fuel)
    _within_budget(A1, "pullback", budget)

    with _stage("distributivity diagram"):
        dd = distributivity(k, g, fuel)
    _within_budget(dd.M, "distributivity target", budget)
    _within_budget(dd.D1, "distributivity pullback", budget)

    with _stage("first comma category"):
        placed = {}
        for x, (a1, base) in A1.attributes.items():
            b = f.source.attributes[h.attr_map[x]][0]
            placed[x] = (canonical_name(a1, b, h.node(a1)), base)
        cm = comma(h, f, fuel, attributes=placed)
        if isinstance(cm, Unknown):
            raise UnknownFiniteness(cm.reason)
    B1 = cm.signature
    _within_budget(B1, "first comma category", budget)
    r = Morphism(B1, A1, cm.p.node_map, cm.p.edge_map, {x: x for x in placed})
    m = Morphism(B1, f.source, cm.q.node_map, cm.q.edge_map,
                 {x: h.attr_map[x] for x in placed})

    with _stage("second comma category"):
        placed2 = {}
        for y, (dn, base) in dd.D1.attributes.items():
            holder = B1.attributes[dd.e.attr_map[y]][0]
            placed2[y] = (canonical_name(dn, holder, dd.e.node(dn)), base)
        cm2 = comma(dd.e, r, fuel, attributes=placed2)
        if isinstance(cm2, Unknown):
            raise UnknownFiniteness(cm2.reason)
    N = cm2.signature
    _within_budget(N, "second comma category", budget)
    p = Morphism(N, dd.D1, cm2.p.node_map, cm2.p.edge_map, {y: y for y in placed2})
    n = Morphism(N, B1, cm2.q.node_map, cm2.q.edge_map,
                 {y: dd.e.attr_map[y] for y in placed2})

    return Query(n.then(m).then(s), p.then(dd.q), dd.w.then(v))
