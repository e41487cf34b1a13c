"""Paths and Knuth-Bendix completion over paths of a signature.

Equations between paths are oriented by shortlex (length first, then edge
names compared lexicographically).  Rewriting a path replaces a subpath
matching a rule's left side by its right side; since both sides are
parallel, the result is again a composable path with the same endpoints.

>>> eqs = [(Path("s", ("f", "f")), Path("s", ("f",)))]
>>> rs = complete(eqs, edges={"f": ("s", "s")})
>>> rs.normalize(Path("s", ("f", "f", "f"))).edges
('f',)
"""

from __future__ import annotations

import heapq
from itertools import count
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import IncompleteSystem, ParallelityError, SignatureError

COMPLETE = "complete"
INCOMPLETE = "incomplete"
DEFAULT_FUEL = 1000
MAX_RULE_LENGTH = 64

Word = tuple


@dataclass(frozen=True, order=True)
class Path:
    start: str
    edges: tuple = ()

    def __post_init__(self):
        if not isinstance(self.edges, tuple):
            object.__setattr__(self, "edges", tuple(self.edges))

    def __len__(self) -> int:
        return len(self.edges)

    def __str__(self) -> str:
        return ".".join((self.start,) + self.edges)

    def then(self, other: "Path") -> "Path":
        """Concatenate; the caller guarantees other starts where self ends."""
        return Path(self.start, self.edges + other.edges)

    def extend(self, edge: str) -> "Path":
        return Path(self.start, self.edges + (edge,))

    @property
    def is_identity(self) -> bool:
        return not self.edges


def path_end(path: Path, edges: Mapping[str, tuple]) -> str:
    """Return the end node of ``path``, checking composability."""
    node = path.start
    for name in path.edges:
        try:
            src, tgt = edges[name]
        except KeyError:
            raise SignatureError(f"unknown edge {name!r} in path {path}") from None
        if src != node:
            raise SignatureError(f"path {path} is not composable at edge {name!r}")
        node = tgt
    return node


def shortlex_key(word: Sequence[str]):
    return (len(word), tuple(word))


@dataclass(frozen=True)
class Rule:
    lhs: Path
    rhs: Path


class RewriteSystem:
    """An oriented set of path rules together with its completion status."""

    order = "shortlex"

    def __init__(self, rules: Iterable[Rule], status: str = COMPLETE,
                 edges: Mapping[str, tuple] | None = None):
        self.rules = tuple(rules)
        self.status = status
        self.edges = dict(edges) if edges is not None else None
        self._index = {r.lhs.edges: r.rhs.edges for r in self.rules}
        self._lengths = tuple(sorted({len(k) for k in self._index}))

    @property
    def is_complete(self) -> bool:
        return self.status == COMPLETE

    def __repr__(self) -> str:
        return f"RewriteSystem({len(self.rules)} rules, {self.status})"

    def reduce(self, word: Sequence[str]) -> Word:
        """Rewrite ``word`` until no left side occurs in it.

        Scans left to right keeping the processed prefix irreducible, so each
        step only has to test the suffixes of that prefix.
        """
        index, lengths = self._index, self._lengths
        if not index:
            return tuple(word)
        out: list = []
        todo = list(reversed(word))
        while todo:
            out.append(todo.pop())
            n = len(out)
            for k in lengths:
                if k > n:
                    break
                rhs = index.get(tuple(out[n - k:]))
                if rhs is not None:
                    del out[n - k:]
                    todo.extend(reversed(rhs))
                    break
        return tuple(out)

    def reducible_suffix(self, word: Sequence[str]) -> bool:
        """True if some left side is a suffix of ``word``."""
        n = len(word)
        for k in self._lengths:
            if k > n:
                break
            if tuple(word[n - k:]) in self._index:
                return True
        return False

    def _require_complete(self):
        if not self.is_complete:
            raise IncompleteSystem("rewrite system is incomplete: the word problem is undecided")

    def normalize(self, path: Path) -> Path:
        self._require_complete()
        return Path(path.start, self.reduce(path.edges))

    def equivalent(self, p1: Path, p2: Path) -> bool:
        check_parallel(p1, p2, self.edges)
        self._require_complete()
        return self.reduce(p1.edges) == self.reduce(p2.edges)


def check_parallel(p1: Path, p2: Path, edges: Mapping[str, tuple] | None) -> None:
    if p1.start != p2.start:
        raise ParallelityError(f"{p1} and {p2} start at different nodes")
    if edges is not None:
        try:
            e1, e2 = path_end(p1, edges), path_end(p2, edges)
        except SignatureError as exc:
            raise ParallelityError(str(exc)) from None
        if e1 != e2:
            raise ParallelityError(f"{p1} ends at {e1} but {p2} ends at {e2}")


def _critical_pairs(l1: str, r1: str, l2: str, r2: str):
    """Peaks l1 overlapping l2 (suffix of l1 = prefix of l2) or l2 inside l1."""
    n1, n2 = len(l1), len(l2)
    head = l2[0]
    i = l1.find(head, n1 - min(n1, n2) + 1)
    while i != -1:
        if l2.startswith(l1[i:]):
            k = n1 - i
            yield r1 + l2[k:], l1[:i] + r2
        i = l1.find(head, i + 1)
    if n2 < n1:
        i = l1.find(l2)
        if i >= 0:
            yield r1, l1[:i] + r2 + l1[i + n2:]


_END = ""


class _Index:
    """Left sides of encoded rules in a trie keyed by reversed words.

    Reduction appends one symbol at a time and walks the trie backwards from
    the end of the output, so a suffix match costs only its own length.
    """

    def __init__(self):
        self.rhs: dict = {}
        self._trie: dict = {}

    def add(self, lhs: str, rhs: str):
        self.rhs[lhs] = rhs
        node = self._trie
        for c in reversed(lhs):
            node = node.setdefault(c, {})
        node[_END] = lhs

    def remove(self, lhs: str) -> str:
        node = self._trie
        for c in reversed(lhs):
            node = node[c]
        del node[_END]
        return self.rhs.pop(lhs)

    def reduce(self, word: str) -> str:
        out: list = []
        todo = list(reversed(word))
        trie, rhs = self._trie, self.rhs
        while todo:
            out.append(todo.pop())
            node = trie
            for j in range(len(out) - 1, -1, -1):
                node = node.get(out[j])
                if node is None:
                    break
                lhs = node.get(_END)
                if lhs is not None:
                    del out[j:]
                    todo.extend(reversed(rhs[lhs]))
                    break
        return "".join(out)


def complete(equations: Iterable[tuple], fuel: int = DEFAULT_FUEL, *,
             edges: Mapping[str, tuple] | None = None,
             max_length: int = MAX_RULE_LENGTH) -> RewriteSystem:
    """Run Knuth-Bendix completion on path equations.

    ``fuel`` bounds the number of rules the procedure may create; each new
    rule triggers one round of critical pairs against the current rules.
    A rule whose left side is longer than ``max_length`` also counts as
    running out, since such families usually grow without end and make
    each further step slower.  Running out yields an Incomplete system
    instead of diverging.  Words are handled internally as strings with one character per edge,
    assigned in name order so that string order agrees with shortlex.
    """
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    equations = list(equations)
    names = set(edges or ())
    for p1, p2 in equations:
        check_parallel(p1, p2, edges)
        names.update(p1.edges)
        names.update(p2.edges)
    code = {e: chr(0x100 + i) for i, e in enumerate(sorted(names))}
    name_of = {c: e for e, c in code.items()}
    # pending pairs are processed shortest first; the counter keeps ties in arrival order
    pending: list = []
    arrivals = count()

    def push(start, a, b):
        heapq.heappush(pending, (len(a) + len(b), next(arrivals), start, a, b))

    for p1, p2 in equations:
        push(p1.start, "".join(code[e] for e in p1.edges), "".join(code[e] for e in p2.edges))

    index = _Index()
    starts: dict = {}
    created = 0
    status = COMPLETE
    while pending:
        _, _, start, a, b = heapq.heappop(pending)
        a, b = index.reduce(a), index.reduce(b)
        if a == b:
            continue
        lhs, rhs = (a, b) if (len(a), a) > (len(b), b) else (b, a)
        if created >= fuel or len(lhs) > max_length:
            status = INCOMPLETE
            break
        created += 1
        for l in [l for l in index.rhs if lhs in l]:
            push(starts.pop(l), l, index.remove(l))
        index.add(lhs, rhs)
        starts[lhs] = start
        for l, r in list(index.rhs.items()):
            if l != lhs and lhs in r:
                index.rhs[l] = index.reduce(r)
        for l, r in list(index.rhs.items()):
            for x, y in _critical_pairs(lhs, rhs, l, r):
                push(start, x, y)
            if l != lhs:
                for x, y in _critical_pairs(l, r, lhs, rhs):
                    push(starts[l], x, y)

    def decode(word):
        return tuple(name_of[c] for c in word)

    ordered = sorted(((decode(l), decode(r), starts[l]) for l, r in index.rhs.items()),
                     key=lambda t: shortlex_key(t[0]))
    return RewriteSystem([Rule(Path(st, l), Path(st, r)) for l, r, st in ordered], status, edges)


def normalize(path: Path, rs: RewriteSystem) -> Path:
    return rs.normalize(path)


def equivalent(p1: Path, p2: Path, rs: RewriteSystem) -> bool:
    return rs.equivalent(p1, p2)
