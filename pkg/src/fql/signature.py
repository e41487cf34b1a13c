"""Typed signatures, typed signature morphisms, and their validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .errors import (IncompleteSystem, MorphismError, ParallelityError, SignatureError,
                     UnknownFiniteness)
from .rewrite import DEFAULT_FUEL, Path, RewriteSystem, check_parallel, complete, path_end

BASE_TYPES = {"String": (str,), "Nat": (int,), "Int": (int,)}


def conforms(value, base_type: str) -> bool:
    """Typed membership test; bools are never numbers and Nat is non-negative."""
    if isinstance(value, bool) or base_type not in BASE_TYPES:
        return False
    if not isinstance(value, BASE_TYPES[base_type]):
        return False
    return base_type != "Nat" or value >= 0


def canonical_name(*parts) -> str:
    """Render a structured tuple as a node or edge name for generated signatures."""
    return "(" + ",".join(str(p) for p in parts) + ")"


def _edge_triples(edges) -> dict:
    if isinstance(edges, Mapping):
        return {name: tuple(ends) for name, ends in edges.items()}
    return {name: (src, tgt) for name, src, tgt in edges}


class TypedSignature:
    """Nodes, labeled edges, path equations and typed attributes.

    ``rewrite`` may be given directly (a RewriteSystem, or a zero-argument
    factory for lazy construction) when the caller already owns a complete
    presentation; otherwise it is obtained by completion of the equations.
    With ``equations=None`` the rules of the given system serve as equations.
    """

    def __init__(self, nodes: Iterable[str], edges=(), equations: Iterable[tuple] | None = (),
                 attributes: Mapping[str, tuple] | None = None, *,
                 rewrite: RewriteSystem | Callable[[], RewriteSystem] | None = None,
                 fuel: int = DEFAULT_FUEL):
        self.nodes = tuple(dict.fromkeys(nodes))
        self.edges = _edge_triples(edges)
        self._equations = None if equations is None else tuple((p, q) for p, q in equations)
        self.attributes = {a: tuple(v) for a, v in (attributes or {}).items()}
        self.fuel = fuel
        self._rewrite_source = rewrite
        self._rewrite: RewriteSystem | None = rewrite if isinstance(rewrite, RewriteSystem) else None
        self._check()
        self._out: dict = {n: [] for n in self.nodes}
        for name in sorted(self.edges):
            self._out[self.edges[name][0]].append(name)
        self._attrs: dict = {n: [] for n in self.nodes}
        for name in sorted(self.attributes):
            self._attrs[self.attributes[name][0]].append(name)

    @property
    def equations(self) -> tuple:
        if self._equations is None:
            self._equations = tuple((r.lhs, r.rhs) for r in self.rewrite.rules)
        return self._equations

    def _check(self):
        node_set = set(self.nodes)
        for name, (src, tgt) in self.edges.items():
            if src not in node_set or tgt not in node_set:
                raise SignatureError(f"edge {name}: {src} -> {tgt} uses an undeclared node")
        for p, q in self._equations or ():
            for path in (p, q):
                if path.start not in node_set:
                    raise SignatureError(f"equation path {path} starts at an undeclared node")
                path_end(path, self.edges)
            check_parallel(p, q, self.edges)
        for name, (node, base) in self.attributes.items():
            if node not in node_set:
                raise SignatureError(f"attribute {name} is on undeclared node {node}")
            if base not in BASE_TYPES:
                raise SignatureError(f"attribute {name} has unknown base type {base}")
            if name in self.edges:
                raise SignatureError(f"attribute {name} clashes with an edge name")

    # -- structure -------------------------------------------------------
    def __repr__(self) -> str:
        return (f"TypedSignature({len(self.nodes)} nodes, {len(self.edges)} edges, "
                f"{len(self.equations)} equations, {len(self.attributes)} attributes)")

    def out_edges(self, node: str) -> list:
        return self._out[node]

    def attrs_of(self, node: str) -> list:
        return self._attrs[node]

    def src(self, edge: str) -> str:
        return self.edges[edge][0]

    def tgt(self, edge: str) -> str:
        return self.edges[edge][1]

    def end(self, path: Path) -> str:
        return path_end(path, self.edges)

    def identity_path(self, node: str) -> Path:
        return Path(node)

    def path(self, text: str) -> Path:
        """Parse ``Node.e1.e2`` (plain names only)."""
        head, *rest = text.split(".")
        p = Path(head, tuple(rest))
        if head not in self._out:
            raise SignatureError(f"unknown node {head!r}")
        path_end(p, self.edges)
        return p

    def edge_path(self, edge: str) -> Path:
        return Path(self.edges[edge][0], (edge,))

    # -- word problem ----------------------------------------------------
    @property
    def rewrite(self) -> RewriteSystem:
        if self._rewrite is None:
            if callable(self._rewrite_source):
                self._rewrite = self._rewrite_source()
            else:
                self._rewrite = complete(self.equations, self.fuel, edges=self.edges)
        return self._rewrite

    def normalize(self, path: Path) -> Path:
        return self.rewrite.normalize(path)

    def equivalent(self, p: Path, q: Path) -> bool:
        check_parallel(p, q, self.edges)
        return self.rewrite.equivalent(p, q)

    # -- derived signatures ---------------------------------------------
    def strip(self) -> "TypedSignature":
        """The same presentation with no attributes."""
        return TypedSignature(self.nodes, self.edges, self._equations, {},
                              rewrite=lambda: self.rewrite, fuel=self.fuel)

    def with_attributes(self, attributes: Mapping[str, tuple]) -> "TypedSignature":
        return TypedSignature(self.nodes, self.edges, self._equations, attributes,
                              rewrite=lambda: self.rewrite, fuel=self.fuel)

    def same_as(self, other: "TypedSignature") -> bool:
        return (set(self.nodes) == set(other.nodes) and self.edges == other.edges
                and self.attributes == other.attributes
                and set(self.equations) == set(other.equations))


class Morphism:
    """A typed signature morphism: node map, edge-to-path map, attribute map."""

    def __init__(self, source: TypedSignature, target: TypedSignature,
                 node_map: Mapping[str, str], edge_map: Mapping[str, object] | None = None,
                 attr_map: Mapping[str, str] | None = None):
        self.source = source
        self.target = target
        self.node_map = dict(node_map)
        self.edge_map: dict = {}
        for name, image in (edge_map or {}).items():
            if isinstance(image, Path):
                self.edge_map[name] = image
            else:
                if isinstance(image, str):
                    image = (image,) if image else ()
                start = self.node_map.get(source.edges[name][0]) if name in source.edges else None
                self.edge_map[name] = Path(start, tuple(image))
        self.attr_map = dict(attr_map or {})

    def __repr__(self) -> str:
        return f"Morphism({self.source!r} -> {self.target!r})"

    def node(self, n: str) -> str:
        return self.node_map[n]

    def apply(self, path: Path) -> Path:
        edges: tuple = ()
        for e in path.edges:
            edges += self.edge_map[e].edges
        return Path(self.node_map[path.start], edges)

    def image(self, path: Path) -> Path:
        """Normal form of the image path in the target."""
        return self.target.normalize(self.apply(path))

    def then(self, other: "Morphism") -> "Morphism":
        """Diagrammatic composite: first self, then other."""
        return Morphism(
            self.source, other.target,
            {n: other.node_map[m] for n, m in self.node_map.items()},
            {e: other.apply(p) for e, p in self.edge_map.items()},
            {a: other.attr_map[b] for a, b in self.attr_map.items()},
        )

    def strip(self) -> "Morphism":
        return Morphism(self.source.strip(), self.target.strip(), self.node_map, self.edge_map, {})


def identity(sig: TypedSignature) -> Morphism:
    return Morphism(sig, sig, {n: n for n in sig.nodes},
                    {e: Path(s, (e,)) for e, (s, _) in sig.edges.items()},
                    {a: a for a in sig.attributes})


def compose(f: Morphism, g: Morphism) -> Morphism:
    return f.then(g)


@dataclass
class Violation:
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, detail: str):
        self.violations.append(Violation(kind, detail))

    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def __str__(self) -> str:
        return "ok" if self.ok else "\n".join(str(v) for v in self.violations)


def check_morphism(F: Morphism) -> ValidationReport:
    S, T = F.source, F.target
    report = ValidationReport()
    for n in S.nodes:
        if n not in F.node_map:
            report.add("node", f"node {n} is not mapped")
        elif F.node_map[n] not in T._out:
            report.add("node", f"node {n} maps to undeclared {F.node_map[n]}")
    if not report.ok:
        return report
    for e, (src, tgt) in S.edges.items():
        image = F.edge_map.get(e)
        if image is None:
            report.add("edge", f"edge {e} is not mapped")
            continue
        want_start, want_end = F.node_map[src], F.node_map[tgt]
        try:
            end = path_end(image, T.edges)
        except SignatureError as exc:
            report.add("endpoint", f"edge {e}: {exc}")
            continue
        if image.start != want_start or end != want_end:
            report.add("endpoint", f"edge {e}: {src} -> {tgt} maps to {image} "
                                   f"({image.start} -> {end}), expected {want_start} -> {want_end}")
    if not report.ok:
        return report
    if not S.rewrite.is_complete or not T.rewrite.is_complete:
        raise IncompleteSystem("cannot check equations: a word problem is undecided")
    for p, q in S.equations:
        if not T.equivalent(F.apply(p), F.apply(q)):
            report.add("equation", f"{p} = {q} maps to inequivalent {F.apply(p)} and {F.apply(q)}")
    for a, (node, base) in S.attributes.items():
        b = F.attr_map.get(a)
        if b is None:
            report.add("attribute", f"attribute {a} is not mapped")
        elif b not in T.attributes:
            report.add("attribute", f"attribute {a} maps to undeclared {b}")
        else:
            tnode, tbase = T.attributes[b]
            if tnode != F.node_map[node]:
                report.add("attribute", f"attribute {a} on {node} maps to {b} on {tnode}, "
                                        f"expected an attribute of {F.node_map[node]}")
            if tbase != base:
                report.add("attribute-type", f"attribute {a}: {base} maps to {b}: {tbase}")
    return report


@dataclass(frozen=True)
class MorphismProfile:
    is_dop: bool
    is_pi_ready: bool
    is_sigma_ready: bool


def dop_failure(F: Morphism, fuel: int = DEFAULT_FUEL) -> str | None:
    """Explain why F is not a discrete op-fibration, or return None if it is.

    Requires the source category to be finite.  For every source object c,
    taking images must be a bijection from morphisms out of c onto morphisms
    out of F(c): every target generator (identity or edge) out of F(c) must
    lift exactly once, and distinct morphisms out of c must have distinct
    images (lifts of composite paths are then unique as well).
    """
    from .catops import Unknown, saturate

    cat = saturate(F.source, fuel)
    if isinstance(cat, Unknown):
        raise UnknownFiniteness("source category could not be saturated; lift uniqueness is unknown")
    T = F.target
    for c in F.source.nodes:
        images: dict = {}
        for m in cat.out(c):
            key = F.image(m).edges
            if key in images:
                return (f"not a discrete op-fibration: {images[key]} and {m} from {c} "
                        f"both map to {Path(F.node(c), key)}")
            images[key] = m
        d = F.node(c)
        if () not in images:
            return f"not a discrete op-fibration: identity of {d} has no lift from {c}"
        for q in T.out_edges(d):
            if T.normalize(T.edge_path(q)).edges not in images:
                return f"not a discrete op-fibration: edge {q} has no lift from {c}"
    return None


def is_pi_ready(F: Morphism, lenient: bool = False) -> bool:
    if lenient:
        return set(F.attr_map.values()) == set(F.target.attributes)
    return (set(F.source.attributes) == set(F.target.attributes)
            and all(F.attr_map.get(a) == a for a in F.source.attributes))


def attribute_square_failure(F: Morphism) -> str | None:
    """None iff each source node's attributes biject onto its image's attributes."""
    for c in F.source.nodes:
        images = [F.attr_map[a] for a in F.source.attrs_of(c)]
        wanted = F.target.attrs_of(F.node(c))
        if sorted(images) != sorted(wanted):
            return (f"attributes of {c} ({', '.join(F.source.attrs_of(c)) or 'none'}) are not "
                    f"union compatible with those of {F.node(c)} ({', '.join(wanted) or 'none'})")
    return None


def profile(F: Morphism, *, lenient_pi: bool = False, fuel: int = DEFAULT_FUEL) -> MorphismProfile:
    dop = dop_failure(F, fuel) is None
    return MorphismProfile(
        is_dop=dop,
        is_pi_ready=is_pi_ready(F, lenient_pi),
        is_sigma_ready=dop and attribute_square_failure(F) is None,
    )
