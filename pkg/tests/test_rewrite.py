import random

import pytest
from hypothesis import given, strategies as st

from fql.errors import IncompleteSystem, ParallelityError
from fql.rewrite import Path, RewriteSystem, Rule, complete, shortlex_key
from fql.signature import TypedSignature

from fixtures import employees_signature
from generators import random_presentation
from oracles import CertifiedOracle, all_paths

LOOP = {"f": ("s", "s"), "g": ("s", "s")}


def test_idempotent_loop_collapses():
    rs = complete([(Path("s", ("f", "f")), Path("s", ("f",)))], edges=LOOP)
    assert rs.is_complete
    assert rs.normalize(Path("s", ("f",) * 5)) == Path("s", ("f",))


def test_shortlex_orients_longer_side_left():
    rs = complete([(Path("s", ("g",)), Path("s", ("f", "f")))], edges=LOOP)
    pairs = {(r.lhs.edges, r.rhs.edges) for r in rs.rules}
    # ff -> g, and the overlap fff gives gf -> fg
    assert pairs == {(("f", "f"), ("g",)), (("g", "f"), ("f", "g"))}
    assert shortlex_key(("f", "g")) < shortlex_key(("g", "f")) < shortlex_key(("f", "f", "f"))


def test_employee_equations_decide_paths():
    S = employees_signature()
    long = Path("Emp", ("manager", "manager", "worksIn", "secretary", "worksIn"))
    assert S.equivalent(long, Path("Emp", ("worksIn",)))
    assert not S.equivalent(Path("Emp", ("manager",)), Path("Emp"))
    assert S.normalize(Path("Dept", ("secretary", "worksIn"))) == Path("Dept")


def test_critical_pair_is_added():
    # fg = g and gf = f overlap on g: gfg reduces both to gg and fg
    rs = complete([(Path("s", ("f", "g")), Path("s", ("g",))),
                   (Path("s", ("g", "f")), Path("s", ("f",)))], edges=LOOP)
    assert rs.is_complete
    assert rs.equivalent(Path("s", ("g", "g")), Path("s", ("g",)))
    assert rs.equivalent(Path("s", ("f", "f")), Path("s", ("f",)))


def test_fuel_exhaustion_is_reported_not_raised():
    # xyx = yxy has no finite shortlex completion
    edges = {"x": ("s", "s"), "y": ("s", "s")}
    rs = complete([(Path("s", ("x", "y", "x")), Path("s", ("y", "x", "y")))], 20, edges=edges)
    assert not rs.is_complete
    with pytest.raises(IncompleteSystem):
        rs.normalize(Path("s", ("x",)))


def test_non_parallel_equation_rejected():
    with pytest.raises(ParallelityError):
        complete([(Path("a", ("e",)), Path("a"))], edges={"e": ("a", "b")})
    with pytest.raises(ParallelityError):
        complete([(Path("a"), Path("b"))], edges={})


def test_zero_fuel_rejected():
    with pytest.raises(ValueError):
        complete([], 0)


def test_reduce_uses_given_rules():
    rs = RewriteSystem([Rule(Path("s", ("f", "f")), Path("s"))])
    assert rs.reduce(("f", "f", "f", "g", "f", "f")) == ("f", "g")


def test_engine_agrees_with_certified_closure_on_fixed_presentation():
    S = TypedSignature(["s"], LOOP, [(Path("s", ("f", "g")), Path("s", ("g", "f")))])
    oracle = CertifiedOracle(S, S.rewrite.rules)
    assert oracle.certified
    for s, w in all_paths(S.nodes, S.edges, 4):
        for t, v in all_paths(S.nodes, S.edges, 4):
            p, q = Path(s, w), Path(t, v)
            assert S.equivalent(p, q) == oracle.equivalent(p, q)


words = st.lists(st.sampled_from(["f", "g"]), max_size=8).map(tuple)


@given(st.lists(st.tuples(words, words), min_size=1, max_size=2), words)
def test_normal_form_is_irreducible_and_stable(eqs, w):
    rs = complete([(Path("s", a), Path("s", b)) for a, b in eqs], 200, edges=LOOP)
    if not rs.is_complete:
        return
    nf = rs.reduce(w)
    assert rs.reduce(nf) == nf
    assert shortlex_key(nf) <= shortlex_key(w)
    for a, b in eqs:
        assert rs.reduce(a) == rs.reduce(b)


@given(st.integers(0, 10 ** 6))
def test_random_presentations_agree_with_oracle(seed):
    S0 = random_presentation(random.Random(seed))
    S = TypedSignature(S0.nodes, S0.edges, S0.equations, fuel=200)
    if not S.rewrite.is_complete:
        return
    oracle = CertifiedOracle(S, S.rewrite.rules, bound=4)
    assert oracle.certified
    paths = [Path(s, w) for s, w in all_paths(S.nodes, S.edges, 4)]
    for p in paths:
        for q in paths:
            if p.start == q.start and S.end(p) == S.end(q):
                assert S.equivalent(p, q) == oracle.equivalent(p, q)
