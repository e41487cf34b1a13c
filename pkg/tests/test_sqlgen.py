import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from fql.errors import ArityMismatch, SignatureError, UnknownTable
from fql.instance import same_up_to_iso, validate
from fql.migrate import delta, pi, relationalize, sigma
from fql.query import compose, lift_delta, lift_pi
from fql.sqlgen import (COUNTER_TABLE, OPERATORS, Empty, KeyGen, Product, Project, RelDatabase,
                        Select, SqlScript, Table, Union, audit, check_order, exec_script,
                        render, run, sql_delta, sql_pi, sql_query, sql_relationalize, sql_sigma)

from fixtures import (abc_instance, abc_morphism, employees_signature, loop_signature,
                      split_morphism, split_target_instance)
from generators import pi_case, random_instance, random_signature, sigma_case
from sqlite_runner import run_sqlite, stringify

seeds = st.integers(0, 10 ** 6)


def split_case():
    F = split_morphism()
    J = split_target_instance(F.target)
    return F, J, delta(F, J)


def test_delta_plan_matches_direct_delta():
    F, J, I = split_case()
    out = run(sql_delta(F), J, F.source)
    assert validate(out).ok
    assert same_up_to_iso(out, I)


def test_pi_plan_matches_direct_pi():
    F, _, I = split_case()
    out = run(sql_pi(F), I, F.target)
    assert out.sizes() == {"N": 9}
    assert same_up_to_iso(out, pi(F, I))


def test_sigma_plan_matches_direct_sigma():
    F = abc_morphism()
    X = abc_instance(F.source)
    out = run(sql_sigma(F), X, F.target)
    assert out.sizes() == {"A": 6, "B": 5, "C": 7}
    assert same_up_to_iso(out, sigma(F, X))


def test_relationalize_plan_matches_direct_relationalize():
    F, J, _ = split_case()
    out = run(sql_relationalize(F.target), J, F.target)
    assert same_up_to_iso(out, relationalize(J))


def test_query_plan_chains_the_three_stages():
    F, J, _ = split_case()
    Q = compose(lift_delta(F), lift_pi(F))
    assert same_up_to_iso(run(sql_query(Q), J, F.target), Q.eval(J))


def test_plans_use_only_allowed_operators():
    F, _, _ = split_case()
    G = abc_morphism()
    for script in (sql_delta(F), sql_pi(F), sql_sigma(G), sql_relationalize(F.target)):
        assert audit(script) <= OPERATORS
        check_order(script)


def test_audit_rejects_foreign_operators():
    class Difference:
        expr = Table("x")
    script = SqlScript([], {"x": 2})
    script.add("y", Project(Difference(), (0,)))
    with pytest.raises(Exception, match="outside"):
        audit(script)


def test_sigma_renders_as_union_all():
    sql = render(sql_sigma(abc_morphism()))
    line = next(l for l in sql.splitlines() if l.startswith('INSERT INTO "out_node__C"'))
    assert line.count("UNION ALL") == 3


def test_identity_copies_render_as_plain_selects():
    sql = render(sql_delta(split_morphism()))
    assert 'INSERT INTO "out_raw_node__N1" SELECT * FROM "in_node__N";' in sql.splitlines()


def test_key_generation_reads_the_counter_once_and_advances_it():
    lines = render(sql_delta(split_morphism())).splitlines()
    inserts = [l for l in lines if "ROW_NUMBER" in l]
    assert len(inserts) == 2
    for l in inserts:
        assert l.count(f"{COUNTER_TABLE}.n") == 1
    updates = [l for l in lines if l.startswith(f"UPDATE {COUNTER_TABLE}")]
    assert len(updates) == 2


def test_plan_serializes_to_json():
    data = json.loads(sql_sigma(abc_morphism()).dumps())
    assert data["statements"][0]["name"] == "out_node__A"
    assert "union_all" in data["statements"][0]["expr"]


def test_sqlite_runs_the_rendered_text():
    F, J, I = split_case()
    assert same_up_to_iso(run_sqlite(sql_delta(F), J, F.source), stringify(I))
    assert same_up_to_iso(run_sqlite(sql_pi(F), I, F.target), stringify(pi(F, I)))
    G = abc_morphism()
    X = abc_instance(G.source)
    assert same_up_to_iso(run_sqlite(sql_sigma(G), X, G.target), stringify(sigma(G, X)))
    assert same_up_to_iso(run_sqlite(sql_relationalize(F.target), J, F.target),
                          stringify(relationalize(J)))


def test_evaluator_operators():
    db = RelDatabase()
    db.put("r", 2, [(1, 1), (1, 2), (2, 2)])
    db.put("s", 1, [(2,), (3,)])
    script = SqlScript([], {"r": 2, "s": 1})
    script.add("eq", Select(Table("r"), ((0, 1),)))
    script.add("joined", Project(Select(Product((Table("r"), Table("s"))), ((1, 2),)), (0,)))
    script.add("both", Union((Table("s"), Project(Table("r"), (0,)), Empty(1))))
    script.add("distinct", Project(Table("r"), (0,), distinct=True))
    script.add("unit", Product(()))
    script.add("keyed", KeyGen(Table("s")))
    out = exec_script(script, db)
    assert out.rows("eq") == [(1, 1), (2, 2)]
    assert sorted(out.rows("joined")) == [(1,), (2,)]
    assert sorted(out.rows("both")) == [(1,), (1,), (2,), (2,), (3,)]
    assert out.rows("distinct") == [(1,), (2,)]
    assert out.rows("unit") == [()]
    assert out.rows("keyed") == [("g0", 2), ("g1", 3)]


def test_arity_mismatch():
    db = RelDatabase()
    db.put("r", 2, [(1, 2)])
    db.put("s", 1, [(1,)])
    for bad in (Union((Table("r"), Table("s"))), Project(Table("s"), (3,)),
                Select(Table("s"), ((0, 1),))):
        script = SqlScript([], {"r": 2, "s": 1})
        script.add("x", bad)
        with pytest.raises(ArityMismatch):
            exec_script(script, db)
    with pytest.raises(ArityMismatch):
        db.put("t", 2, [(1,)])


def test_unknown_table():
    script = SqlScript([], {})
    script.add("x", Table("nowhere"))
    with pytest.raises(UnknownTable):
        exec_script(script, RelDatabase())
    with pytest.raises(UnknownTable):
        check_order(script)
    with pytest.raises(UnknownTable):
        exec_script(SqlScript([], {"missing": 2}), RelDatabase())


def test_relationalize_needs_an_acyclic_signature():
    with pytest.raises(SignatureError):
        sql_relationalize(loop_signature())
    with pytest.raises(SignatureError):
        sql_relationalize(employees_signature())


@settings(max_examples=60)
@given(seeds)
def test_delta_and_sigma_plans_agree_with_direct_evaluation(seed):
    F, I, J = sigma_case(random.Random(seed), 3)
    assert same_up_to_iso(run(sql_sigma(F), I, F.target), sigma(F, I))
    assert same_up_to_iso(run(sql_delta(F), J, F.source), delta(F, J))


@settings(max_examples=60)
@given(seeds)
def test_pi_plans_agree_with_direct_evaluation(seed):
    case = pi_case(random.Random(seed), 3)
    if case is None:
        return
    F, I, _ = case
    assert same_up_to_iso(run(sql_pi(F), I, F.target), pi(F, I))


@settings(max_examples=60)
@given(seeds)
def test_relationalize_plans_agree_with_direct_evaluation(seed):
    rng = random.Random(seed)
    S = random_signature(rng, 3, attrs=rng.choice(("none", "some", "all")))
    I = random_instance(rng, S, 3)
    assert same_up_to_iso(run(sql_relationalize(S), I, S), relationalize(I))


@settings(max_examples=25)
@given(seeds)
def test_sqlite_agrees_on_random_cases(seed):
    rng = random.Random(seed)
    F, I, J = sigma_case(rng, 2)
    assert same_up_to_iso(run_sqlite(sql_sigma(F), I, F.target), stringify(sigma(F, I)))
    assert same_up_to_iso(run_sqlite(sql_delta(F), J, F.source), stringify(delta(F, J)))
    case = pi_case(rng, 2)
    if case:
        G, K, _ = case
        assert same_up_to_iso(run_sqlite(sql_pi(G), K, G.target), stringify(pi(G, K)))
