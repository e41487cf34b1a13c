"""Worked-example signatures and instances shared by the test modules."""

from __future__ import annotations

from fql.instance import Instance
from fql.rewrite import Path
from fql.signature import Morphism, TypedSignature


def employees_signature() -> TypedSignature:
    return TypedSignature(
        ["Emp", "Dept"],
        {"manager": ("Emp", "Emp"), "worksIn": ("Emp", "Dept"), "secretary": ("Dept", "Emp")},
        [(Path("Emp", ("manager", "worksIn")), Path("Emp", ("worksIn",))),
         (Path("Dept", ("secretary", "worksIn")), Path("Dept"))],
        {"FName": ("Emp", "String"), "LName": ("Emp", "String"), "DName": ("Dept", "String")},
    )


def employees_instance(sig=None, printed: bool = False) -> Instance:
    sig = sig or employees_signature()
    if printed:
        manager = {"101": "103", "102": "102", "103": "103"}
        secretary = {"q10": "102", "x02": "101"}
    else:
        manager = {"101": "102", "102": "102", "103": "103"}
        secretary = {"q10": "101", "x02": "103"}
    return Instance(
        sig,
        {"Emp": ["101", "102", "103"], "Dept": ["q10", "x02"]},
        {"manager": manager, "worksIn": {"101": "q10", "102": "q10", "103": "x02"},
         "secretary": secretary},
        {"FName": {"101": "Alan", "102": "Camille", "103": "Andrey"},
         "LName": {"101": "Turing", "102": "Jordan", "103": "Markov"},
         "DName": {"q10": "CS", "x02": "Math"}},
    )


def split_morphism() -> Morphism:
    """N1 (Name, Salary) and N2 (Age) both sent to N (Name, Age, Salary)."""
    source = TypedSignature(["N1", "N2"], {}, [],
                            {"Name": ("N1", "String"), "Salary": ("N1", "Nat"), "Age": ("N2", "Nat")})
    target = TypedSignature(["N"], {}, [],
                            {"Name": ("N", "String"), "Salary": ("N", "Nat"), "Age": ("N", "Nat")})
    return Morphism(source, target, {"N1": "N", "N2": "N"}, {},
                    {"Name": "Name", "Salary": "Salary", "Age": "Age"})


def split_target_instance(target: TypedSignature) -> Instance:
    return Instance(
        target, {"N": ["1", "2", "3"]}, {},
        {"Name": {"1": "Bob", "2": "Sue", "3": "Alice"},
         "Age": {"1": 20, "2": 20, "3": 30},
         "Salary": {"1": 250, "2": 300, "3": 100}},
    )


def abc_morphism() -> Morphism:
    """The discrete op-fibration over A --G--> B, A --H--> C."""
    source = TypedSignature(
        ["a1", "a2", "a3", "b1", "b2", "c1", "c2", "c3", "c4"],
        {"g1": ("a1", "b1"), "h1": ("a1", "c1"), "g2": ("a2", "b2"), "h2": ("a2", "c2"),
         "g3": ("a3", "b2"), "h3": ("a3", "c4")})
    target = TypedSignature(["A", "B", "C"], {"G": ("A", "B"), "H": ("A", "C")})
    node_map = {"a1": "A", "a2": "A", "a3": "A", "b1": "B", "b2": "B",
                "c1": "C", "c2": "C", "c3": "C", "c4": "C"}
    edge_map = {f"{x}{i}": x.upper() for x in "gh" for i in (1, 2, 3)}
    return Morphism(source, target, node_map, edge_map)


def abc_instance(source: TypedSignature) -> Instance:
    return Instance(
        source,
        {"a1": ["11"], "a2": ["16", "15", "14"], "a3": ["13", "12"],
         "b1": ["7", "6"], "b2": ["10", "9", "8"],
         "c1": ["2", "1"], "c2": ["4", "3"], "c3": ["5"], "c4": ["18", "17"]},
        {"g1": {"11": "7"}, "h1": {"11": "1"},
         "g2": {"16": "9", "15": "10", "14": "8"}, "h2": {"16": "3", "15": "4", "14": "4"},
         "g3": {"13": "10", "12": "9"}, "h3": {"13": "17", "12": "18"}},
    )


def loop_signature() -> TypedSignature:
    return TypedSignature(["s"], {"f": ("s", "s")})


def point_into_loop() -> Morphism:
    return Morphism(TypedSignature(["s"]), loop_signature(), {"s": "s"}, {})


def chain_signature(n: int) -> TypedSignature:
    return TypedSignature([str(i) for i in range(n + 1)],
                          {f"e{i}": (str(i), str(i + 1)) for i in range(n)})
