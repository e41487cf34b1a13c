"""The ``fql`` command: check, evaluate, compose and compile text programs.

Exit status: 0 ok, 1 validation failure, 2 undecided within fuel, 3 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path as FilePath

from . import sqlgen
from .catops import Unknown, saturate
from .errors import (BudgetExceeded, FqlError, IncompleteSystem, InfiniteTarget, ParseError,
                     UnknownFiniteness)
from .instance import Instance, KeyGen, validate
from .query import compose as compose_queries
from .relenc import (RelationalSchema, decode_instance, encode_instance, encode_schema, read_csv,
                     write_csv)
from .rewrite import DEFAULT_FUEL
from .signature import attribute_square_failure, check_morphism, dop_failure, is_pi_ready
from .syntax import (CommandDecl, Environment, InstanceDecl, MappingDecl, Program, QueryDecl,
                     SchemaDecl, instance_decl, mapping_decl, parse, print_decl, resolve,
                     schema_decl)

OK, INVALID, UNDECIDED, USAGE = 0, 1, 2, 3
UNDECIDED_ERRORS = (UnknownFiniteness, InfiniteTarget, IncompleteSystem, BudgetExceeded)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, (UsageError, ParseError, OSError)):
        return USAGE
    if isinstance(exc, UNDECIDED_ERRORS):
        return UNDECIDED
    return INVALID


class Session:
    """A resolved program plus the flags shared by every command."""

    def __init__(self, program: Program, *, fuel: int, seed: int | None, base_dir: str | None,
                 out=None):
        self.program = program
        self.fuel = fuel
        self.seed = seed
        self.env: Environment = resolve(program, base_dir=base_dir, fuel=fuel)
        self.out = out or sys.stdout

    def keys(self) -> KeyGen:
        if self.seed is None:
            return KeyGen()
        return KeyGen(seed=self.seed, mode="guid")

    def emit(self, text: str):
        self.out.write(text if text.endswith("\n") else text + "\n")

    def get(self, table: str, name: str):
        found = getattr(self.env, table)
        if name not in found:
            kind = table[:-1] if table != "queries" else "query"
            raise UsageError(f"no {kind} named {name!r}")
        return found[name]

    def instance(self, ref: str, schema=None) -> Instance:
        """A declared instance, or a JSON file read over ``schema``."""
        if ref in self.env.instances:
            return self.env.instances[ref]
        if schema is None:
            raise UsageError(f"no instance named {ref!r}")
        return Instance.loads(schema, FilePath(ref).read_text(encoding="utf-8"))

    # -- check -------------------------------------------------------------
    def check(self, names=None) -> int:
        status = OK
        for d in self.program.decls:
            if isinstance(d, CommandDecl) or (names and d.name not in names):
                continue
            try:
                lines = self._check_one(d)
                ok = not lines or lines[0] == "ok"
                code = OK if ok else INVALID
            except FqlError as exc:
                lines, code = [f"{type(exc).__name__}: {exc}"], exit_code(exc)
            self.emit(f"{_kind(d)} {d.name}: " + "\n  ".join(lines or ["ok"]))
            status = max(status, code)
        return status

    def _check_one(self, d) -> list:
        if isinstance(d, SchemaDecl):
            S = self.env.schemas[d.name]
            rules = len(S.rewrite.rules)
            cat = saturate(S, self.fuel)
            finite = ("finite, " + f"{len(cat)} morphisms" if not isinstance(cat, Unknown)
                      else "finiteness not certified")
            return ["ok", f"{rules} rewrite rules, {finite}"]
        if isinstance(d, MappingDecl):
            F = self.env.mappings[d.name]
            report = check_morphism(F)
            if not report.ok:
                return str(report).splitlines()
            try:
                why = dop_failure(F, self.fuel) or attribute_square_failure(F)
                sigma = f"not Sigma-ready: {why}" if why else "Sigma-ready"
            except UnknownFiniteness:
                sigma = "Sigma-readiness unknown: source not certified finite"
            pi = "Pi-ready" if is_pi_ready(F) else "not Pi-ready"
            return ["ok", f"{pi}; {sigma}"]
        if isinstance(d, InstanceDecl):
            I = self.env.instances[d.name]
            problems = list(I.conflicts)
            report = validate(I)
            if not report.ok:
                problems += str(report).splitlines()
            return problems or ["ok", f"{sum(I.sizes().values())} rows"]
        if isinstance(d, QueryDecl):
            self.env.queries[d.name].check(self.fuel)
            return ["ok"]
        return ["ok"]

    # -- eval ----------------------------------------------------------------
    def evaluate(self, query: str, instance: str) -> Instance:
        Q = self.get("queries", query)
        Q.check(self.fuel)
        I = self.instance(instance, Q.source)
        if not I.schema.same_as(Q.source):
            raise InvalidInput(f"instance {instance} is not over the source schema of query {query}")
        report = validate(I, Q.source)
        if not report.ok or I.conflicts:
            raise InvalidInput("input instance is not valid:\n" + "\n".join(I.conflicts + [str(report)]))
        return Q.eval(I, self.keys(), self.fuel)

    # -- compose ---------------------------------------------------------------
    def compose(self, first: str, second: str, name: str | None = None) -> str:
        Q1, Q2 = self.get("queries", first), self.get("queries", second)
        Q1.check(self.fuel)
        Q2.check(self.fuel)
        Q = compose_queries(Q1, Q2, self.fuel)
        name = name or f"{first}_{second}"
        return fragment(name, Q, self.env)

    # -- sql ------------------------------------------------------------------
    def sql(self, kind: str, name: str, *, src: str = "in_", dst: str = "out_"):
        """(script, input signature, output signature) for a query, migration or relationalize."""
        if kind == "query":
            Q = self.get("queries", name)
            Q.check(self.fuel)
            return sqlgen.sql_query(Q, src, dst, self.fuel), Q.source, Q.target
        if kind == "relationalize":
            S = self.get("schemas", name)
            return sqlgen.sql_relationalize(S, src, dst), S, S
        F = self.get("mappings", name)
        if kind == "delta":
            return sqlgen.sql_delta(F, src, dst), F.target, F.source
        if kind == "sigma":
            return sqlgen.sql_sigma(F, src, dst, self.fuel), F.source, F.target
        return sqlgen.sql_pi(F, src, dst, self.fuel), F.source, F.target

    # -- in-program commands -------------------------------------------------------
    def run_commands(self, fmt: str = "json") -> int:
        status = OK
        for c in self.program.commands():
            self.emit(f"-- {c.kind} {' '.join(c.args)}")
            try:
                status = max(status, self._command(c, fmt))
            except (FqlError, UsageError, OSError) as exc:
                self.emit(f"error: {exc}")
                status = max(status, exit_code(exc))
        return status

    def _command(self, c: CommandDecl, fmt: str) -> int:
        need = {"check": None, "eval": 2, "compose": 2, "sql": 1, "encode": 1}[c.kind]
        if need is not None and len(c.args) != need:
            raise UsageError(f"{c.kind} takes {need} name(s)")
        if c.kind == "check":
            return self.check(set(c.args) or None)
        if c.kind == "eval":
            self.emit(format_instance(self.evaluate(*c.args), fmt))
        elif c.kind == "compose":
            self.emit(self.compose(*c.args))
        elif c.kind == "sql":
            script, _, _ = self.sql("query", c.args[0])
            self.emit(sqlgen.render(script))
        else:
            db = sqlgen.encode(self.instance(c.args[0]))
            tables = {t: [list(r) for r in db.rows(t)] for t in sorted(db.tables)}
            self.emit(json.dumps(tables, indent=2))
        return OK


class InvalidInput(FqlError):
    """Input data failed validation before a command could run."""


def _kind(d) -> str:
    return {SchemaDecl: "schema", MappingDecl: "mapping", InstanceDecl: "instance",
            QueryDecl: "query"}[type(d)]


def fragment(name: str, Q, env: Environment) -> str:
    """Program text declaring the legs of Q and Q itself.

    The outer signatures reuse existing schema names when the program
    already declares them; the two middle signatures are spelled out.
    """

    def named(S, fallback):
        for n, T in env.schemas.items():
            if T is S:
                return n, False
        for n, T in env.schemas.items():
            if T.same_as(S):
                return n, False
        return fallback, True

    source, new_source = named(Q.source, f"{name}_source")
    target, new_target = named(Q.target, f"{name}_target")
    mid1, mid2 = f"{name}_N", f"{name}_M"
    decls = []
    if new_source:
        decls.append(schema_decl(source, Q.source))
    if new_target:
        decls.append(schema_decl(target, Q.target))
    decls += [schema_decl(mid1, Q.F.source), schema_decl(mid2, Q.G.target),
              mapping_decl(f"{name}_delta", Q.F, mid1, source),
              mapping_decl(f"{name}_pi", Q.G, mid1, mid2),
              mapping_decl(f"{name}_sigma", Q.H, mid2, target),
              QueryDecl(name, {"sigma": f"{name}_sigma", "pi": f"{name}_pi",
                               "delta": f"{name}_delta"})]
    return "\n".join(print_decl(d) for d in decls)


def format_instance(I: Instance, fmt: str) -> str:
    if fmt == "json":
        return I.dumps()
    parts = []
    for node, text in I.to_csv().items():
        parts.append(f"# {node}\n{text}")
    return "".join(parts)


def write_instance(I: Instance, fmt: str, out_dir: str | None, stem: str, stream) -> None:
    if out_dir is None:
        text = format_instance(I, fmt)
        stream.write(text if text.endswith("\n") else text + "\n")
        return
    folder = FilePath(out_dir)
    folder.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        (folder / f"{stem}.json").write_text(I.dumps() + "\n", encoding="utf-8")
    else:
        for node, text in I.to_csv().items():
            (folder / f"{node}.csv").write_text(text, encoding="utf-8")


def default_fuel() -> int:
    raw = os.environ.get("FQL_FUEL")
    if raw is None:
        return DEFAULT_FUEL
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"FQL_FUEL must be an integer, not {raw!r}") from None
    if value <= 0:
        raise UsageError("FQL_FUEL must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fuel", type=int, help="completion and saturation budget "
                        "(default: $FQL_FUEL or 1000)")
    common.add_argument("--seed", type=int, help="seed for random keys (default: counter keys)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="write results into this directory")

    parser = _Parser(prog="fql", description="Functorial data migration on text programs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", parents=[common], help="validate every declaration")
    p.add_argument("program")

    p = sub.add_parser("eval", parents=[common], help="evaluate a query on an instance")
    p.add_argument("program")
    p.add_argument("--query", required=True)
    p.add_argument("--instance", required=True,
                   help="a declared instance name, or a JSON file over the query's source")

    p = sub.add_parser("compose", parents=[common], help="print one query equal to two in sequence")
    p.add_argument("program")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--name")

    p = sub.add_parser("sql", parents=[common], help="compile to SQL or a relational plan")
    p.add_argument("program")
    what = p.add_mutually_exclusive_group(required=True)
    for kind in ("query", "delta", "sigma", "pi", "relationalize"):
        what.add_argument(f"--{kind}", metavar="NAME")
    p.add_argument("--plan", action="store_true", help="print the plan as JSON instead of SQL")
    p.add_argument("--exec", metavar="INSTANCE",
                   help="run the plan on this instance with the built-in executor")

    p = sub.add_parser("encode", parents=[common],
                       help="encode relational CSV files as a pointed instance and back")
    p.add_argument("csv", nargs="+", help="one file per relation; the file stem names it")
    p.add_argument("--domain", default="String")

    p = sub.add_parser("run", parents=[common], help="execute the commands inside a program")
    p.add_argument("program")
    return parser


def _session(args, out) -> Session:
    path = FilePath(args.program)
    text = path.read_text(encoding="utf-8")
    return Session(parse(text), fuel=args.fuel, seed=args.seed, base_dir=str(path.parent), out=out)


def _run(args, out) -> int:
    if args.fuel is None:
        args.fuel = default_fuel()
    elif args.fuel <= 0:
        raise UsageError("--fuel must be positive")

    if args.command == "encode":
        return encode_command(args, out)
    session = _session(args, out)
    if args.command == "check":
        return session.check()
    if args.command == "run":
        return session.run_commands(args.format)
    if args.command == "eval":
        result = session.evaluate(args.query, args.instance)
        write_instance(result, args.format, args.out, args.query, out)
        return OK
    if args.command == "compose":
        text = session.compose(args.first, args.second, args.name)
        _write_text(text, args.out, f"{args.name or args.first + '_' + args.second}.fql", out)
        return OK
    kind = next(k for k in ("query", "delta", "sigma", "pi", "relationalize")
                if getattr(args, k) is not None)
    name = getattr(args, kind)
    script, source, target = session.sql(kind, name)
    if args.exec:
        I = session.instance(args.exec, source)
        if not I.schema.same_as(source):
            raise InvalidInput(f"instance {args.exec} is not over the input schema of {name}")
        result = sqlgen.run(script, I, target)
        write_instance(result, args.format, args.out, name, out)
        return OK
    text = script.dumps() if args.plan else sqlgen.render(script)
    _write_text(text, args.out, f"{name}.{'json' if args.plan else 'sql'}", out)
    return OK


def _write_text(text: str, out_dir: str | None, filename: str, stream) -> None:
    if out_dir is None:
        stream.write(text if text.endswith("\n") else text + "\n")
        return
    folder = FilePath(out_dir)
    folder.mkdir(parents=True, exist_ok=True)
    (folder / filename).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


def encode_command(args, out) -> int:
    relations, db = {}, {}
    for name in args.csv:
        path = FilePath(name)
        cols, rows = read_csv(path.read_text(encoding="utf-8"))
        relations[path.stem] = cols
        db[path.stem] = rows
    R = RelationalSchema(relations, args.domain)
    S = encode_schema(R)
    I = encode_instance(R, db, S)
    back = decode_instance(I, R)
    status = OK
    for r, rows in db.items():
        if sorted(rows) != sorted(back[r]):
            print(f"relation {r} does not round-trip", file=sys.stderr)
            status = INVALID
    if args.out is None:
        out.write(print_decl(schema_decl("encoded", S)))
        out.write(print_decl(instance_decl("data", I, "encoded")))
        return status
    folder = FilePath(args.out)
    folder.mkdir(parents=True, exist_ok=True)
    (folder / "encoded.fql").write_text(
        print_decl(schema_decl("encoded", S)) + "\n" + print_decl(instance_decl("data", I, "encoded")),
        encoding="utf-8")
    (folder / "encoded.json").write_text(I.dumps() + "\n", encoding="utf-8")
    for r, cols in R.relations.items():
        (folder / f"{r}.csv").write_text(write_csv(cols, back[r]), encoding="utf-8")
    return status


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return _run(args, out)
    except UsageError as exc:
        print(f"fql: {exc}", file=sys.stderr)
        return USAGE
    except SystemExit as exc:
        # --help exits 0 through argparse
        return int(exc.code or 0)
    except (FqlError, OSError) as exc:
        label = type(exc).__name__
        print(f"fql: {label}: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
