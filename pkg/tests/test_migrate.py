import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from fql.errors import InfiniteTarget, NotPiReady, NotSigmaReady
from fql.instance import Instance, KeyGen, same_up_to_iso, validate
from fql.migrate import (coproduct_instance, delta, join_all, join_order, pi, pi_with_tables,
                         relationalize, sigma)
from fql.signature import Morphism, TypedSignature, identity

from fixtures import (abc_instance, abc_morphism, employees_instance, point_into_loop,
                      split_morphism, split_target_instance)
from generators import pi_case, random_instance, random_signature, sigma_case
from oracles import count_homs

seeds = st.integers(0, 10 ** 6)


def split_people():
    F = split_morphism()
    return F, split_target_instance(F.target)


def test_delta_splits_people_table():
    F, J = split_people()
    I = delta(F, J)
    assert I.sizes() == {"N1": 3, "N2": 3}
    assert sorted(I.attr_fn["Age"].values()) == [20, 20, 30]
    assert sorted(I.attr_fn["Name"].values()) == ["Alice", "Bob", "Sue"]
    assert not set(I.node_rows["N1"]) & set(I.node_rows["N2"])
    assert validate(I).ok


def test_delta_can_keep_ids():
    F, J = split_people()
    I = delta(F, J, fresh_ids=False)
    assert I.node_rows["N1"] == I.node_rows["N2"] == ("1", "2", "3")


def test_pi_rebuilds_the_product_table():
    F, J = split_people()
    P = pi(F, delta(F, J))
    rows = Counter((P.attr_fn["Name"][x], P.attr_fn["Age"][x], P.attr_fn["Salary"][x])
                   for x in P.node_rows["N"])
    salary = {"Bob": 250, "Sue": 300, "Alice": 100}
    assert rows == Counter((n, a, salary[n]) for n in salary for a in (20, 20, 30))


def test_pi_limit_table_columns():
    F, J = split_people()
    _, tables = pi_with_tables(F, delta(F, J))
    table = tables["N"]
    assert len(table.keyed) == 9 and len(table.columns) == 2


def test_sigma_worked_example_counts_and_edges():
    F = abc_morphism()
    I = abc_instance(F.source)
    J = sigma(F, I)
    assert J.sizes() == {"A": 6, "B": 5, "C": 7}
    assert J.edge_fn["G"] == {"11": "7", "16": "9", "15": "10", "14": "8", "13": "10", "12": "9"}
    assert J.edge_fn["H"]["12"] == "18" and J.edge_fn["H"]["14"] == "4"
    assert validate(J).ok


def test_sigma_rejects_non_fibrations():
    F, J = split_people()
    with pytest.raises(NotSigmaReady):
        sigma(F, delta(F, J))


def test_pi_into_a_loop_is_infinite():
    F = point_into_loop()
    I = Instance(F.source, {"s": ["a", "b"]})
    with pytest.raises(InfiniteTarget):
        pi(F, I)


def test_pi_needs_identity_on_attributes():
    F = split_morphism()
    G = Morphism(F.source, F.target, F.node_map, {},
                 {"Name": "Name", "Salary": "Age", "Age": "Age"})
    with pytest.raises(NotPiReady):
        pi(G, Instance.empty(F.source))


def test_pi_along_identity_is_isomorphic():
    I = employees_instance()
    S = TypedSignature(["a", "b"], {"f": ("a", "b")}, [], {"v": ("b", "Int")})
    J = Instance(S, {"a": [1, 2], "b": [3]}, {"f": {1: 3, 2: 3}}, {"v": {3: 9}})
    assert same_up_to_iso(pi(identity(S), J), J)
    assert I.sizes()["Emp"] == 3


def test_join_order_places_driven_columns_after_their_source():
    placed, driver, checks = join_order(["a", "b", "c"], [("a", "b", 0), ("b", "c", 1), ("a", "c", 2)])
    assert placed == ["a", "b", "c"]
    assert driver == [None, (0, 0), (1, 1)]
    assert checks[2] == [(0, 2, 2)]


def test_join_all_matches_nested_loops():
    f = {1: 2, 2: 3, 3: 1}
    g = {1: 1, 2: 1, 3: 2}
    domains = {"a": [1, 2, 3], "b": [1, 2, 3], "c": [1, 2]}
    constraints = [("a", "b", f), ("c", "b", g)]
    rows = join_all(["a", "b", "c"], domains, constraints)
    expected = sorted((a, b, c) for a in domains["a"] for b in domains["b"] for c in domains["c"]
                      if f[a] == b and g[c] == b)
    assert rows == expected


def test_join_all_filter():
    rows = join_all(["a"], {"a": [1, 2, 3]}, [], keep=lambda r: r[0] != 2)
    assert rows == [(1,), (3,)]


def test_relationalize_merges_indistinguishable_rows():
    S = TypedSignature(["R", "D"], {"c": ("R", "D")}, [], {"A": ("D", "String")})
    I = Instance(S, {"R": [0, 1], "D": ["x"]}, {"c": {0: "x", 1: "x"}}, {"A": {"x": "x"}})
    out = relationalize(I)
    assert out.sizes() == {"R": 1, "D": 1} and out.node_rows["R"] == (0,)


def test_relationalize_keeps_distinguishable_rows():
    S = TypedSignature(["R", "D"], {"c": ("R", "D")}, [], {"A": ("D", "String")})
    I = Instance(S, {"R": [0, 1], "D": ["x", "y"]}, {"c": {0: "x", 1: "y"}},
                 {"A": {"x": "x", "y": "y"}})
    assert relationalize(I).sizes() == {"R": 2, "D": 2}


def test_coproduct_instance_is_disjoint_union():
    I = employees_instance()
    total = coproduct_instance(I, I, KeyGen())
    assert total.sizes() == {"Emp": 6, "Dept": 4}
    assert validate(total).ok
    assert relationalize(total).sizes() == {"Emp": 3, "Dept": 2}


@given(seeds)
def test_sigma_is_left_adjoint_to_delta(seed):
    F, I, J = sigma_case(random.Random(seed), 2)
    assert count_homs(F.target, sigma(F, I), J) == count_homs(F.source, I, delta(F, J))


@given(seeds)
def test_pi_is_right_adjoint_to_delta(seed):
    case = pi_case(random.Random(seed), 2)
    if case is None:
        return
    F, I, J = case
    assert count_homs(F.source, delta(F, J), I) == count_homs(F.target, J, pi(F, I))


@given(seeds)
def test_results_are_valid_instances(seed):
    rng = random.Random(seed)
    F, I, J = sigma_case(rng, 2)
    assert validate(sigma(F, I)).ok and validate(delta(F, J)).ok
    case = pi_case(rng, 2)
    if case:
        G, K, _ = case
        assert validate(pi(G, K)).ok


@given(seeds)
def test_relationalize_is_idempotent(seed):
    rng = random.Random(seed)
    S = random_signature(rng, 3, attrs="all")
    I = random_instance(rng, S, 3)
    once = relationalize(I)
    assert validate(once).ok
    assert relationalize(once).sizes() == once.sizes()
