from __future__ import annotations

from collections import Counter
from dataclasses import fields

import pytest

from conftest import CORPUS_FILES, MOTIVATING, build
from minipta.errors import EntryNotFoundError, IRCheckError, NoEntriesError, ParseError, UnresolvedSymbolError
from minipta.frontend import Kind, Pattern, check_program, classify_statement, load_program
from minipta.frontend.desugar import desugar
from minipta.frontend.entries import collect_entries
from minipta.frontend.ir import IRStatement, Loc
from minipta.frontend.irjson import dump_ir, load_ir
from minipta.frontend import ast as A
from minipta.frontend.parser import parse_module
from minipta.frontend.printer import print_program


def ast_nodes(node):
    """Every AST node reachable from ``node``."""
    if isinstance(node, A.Node) or hasattr(node, "declarations"):
        yield node
        for f in fields(node):
            yield from ast_nodes(getattr(node, f.name))
    elif isinstance(node, (list, tuple)):
        for x in node:
            yield from ast_nodes(x)


def kinds(program, qname):
    return [s.kind for s in program.methods[qname].body]


class TestParse:
    def test_empty_module_has_no_declarations(self):
        assert parse_module("", "e.mats").declarations == []

    def test_motivating_has_three_declarations(self):
        module = parse_module(MOTIVATING.read_text(), str(MOTIVATING))
        assert len(module.declarations) == 3
        assert module.warnings == []

    def test_syntax_error_reports_position_and_expected(self):
        with pytest.raises(ParseError) as err:
            parse_module("let x = ;", "e.mats")
        assert (err.value.line, err.value.col) == (1, 9)
        assert err.value.expected == ("expression",)
        assert str(err.value).startswith("e.mats:1:9:")

    def test_syntax_error_on_later_line(self):
        with pytest.raises(ParseError) as err:
            parse_module("function f() {\n  let a = 1;\n  let = 2;\n}", "e.mats")
        assert err.value.line == 3

    def test_unknown_decorator_is_warning(self):
        module = parse_module("@Fancy\n@Component\nstruct S { build() {} }", "w.mats")
        assert len(module.declarations) == 1
        assert module.warnings == ["w.mats:1:1: unknown decorator @Fancy"]

    def test_control_flow_is_flattened(self):
        program = build(
            "class T {}\nfunction main(): void {\n  let a = new T();\n"
            "  if (a) { let b = new T(); } else { let c = new T(); }\n"
            "  while (a) { let d = new T(); }\n}\n",
            entries=["main"],
        )
        assert kinds(program, "main").count(Kind.ALLOC_OBJECT) == 4


class TestDesugar:
    def test_new_is_alloc_object(self):
        program = build("class T {}\nfunction main(): void { let v = new T(); }", entries=["main"])
        assert kinds(program, "main") == [Kind.ALLOC_OBJECT]
        assert program.methods["main"].body[0].lhs == "v"

    def test_lambda_is_alloc_function(self):
        program = build("function main(): void { let v = () => {}; }", entries=["main"])
        (stmt,) = program.methods["main"].body
        assert stmt.kind == Kind.ALLOC_FUNCTION
        assert stmt.lhs == "v"
        assert stmt.func == "anonymous_method_1"
        assert program.methods["anonymous_method_1"].kind == "lambda"

    def test_assign_is_atomic(self):
        program = build(
            "class T {}\nfunction main(): void { let y = new T(); let x = new T(); x = y; }", entries=["main"]
        )
        last = program.methods["main"].body[-1]
        assert (last.kind, last.lhs, last.rhs) == (Kind.ASSIGN, "x", "y")

    def test_chained_call_is_load_then_dynamic_call(self, motivating):
        body = motivating.methods["FunctionReader.build"].body
        line53 = [s for s in body if s.loc.line == 53]
        get_message = [s for s in line53 if s.kind in (Kind.FIELD_LOAD, Kind.DYNAMIC_CALL)]
        assert [s.kind for s in get_message] == [Kind.FIELD_LOAD, Kind.DYNAMIC_CALL]
        load, call = get_message
        assert (load.base, load.field) == ("this", "sharedFunc")
        assert call.receiver == load.lhs and call.method == "getMessage"

    def test_field_chain_is_two_loads(self):
        program = build(
            "class C { d: D; }\nclass D { e: E; }\nclass E {}\n"
            "function main(): void { let a = new C(); let x = a.d.e; }",
            entries=["main"],
        )
        loads = [s for s in program.methods["main"].body if s.kind == Kind.FIELD_LOAD]
        assert [s.field for s in loads] == ["d", "e"]
        assert loads[1].base == loads[0].lhs

    def test_unresolved_symbol(self):
        with pytest.raises(UnresolvedSymbolError) as err:
            build("function main(): void {\n  let a = nothere;\n}", entries=["main"])
        assert err.value.name == "nothere"
        assert (err.value.line, err.value.col) == (2, 11)

    def test_lambda_names_are_sequential(self, motivating):
        lambdas = sorted(q for q, m in motivating.methods.items() if m.kind == "lambda")
        assert lambdas == [f"anonymous_method_{i}" for i in range(1, 5)]

    def test_nested_namespace_static_call(self):
        program = build(
            "class P {}\nnamespace Geo {\n  namespace Inner {\n    function make(): P { return new P(); }\n  }\n}\n"
            "function main(): void { let p = Geo.Inner.make(); }",
            entries=["main"],
        )
        (call,) = program.methods["main"].body
        assert call.kind == Kind.STATIC_CALL and call.callee == "Geo.Inner.make"

    def test_primitive_locals_are_marked(self):
        program = build("function main(): void { let n: number = 1; }", entries=["main"])
        assert "n" in program.methods["main"].primitive_locals

    def test_ids_are_unique_and_increasing(self, corpus_program):
        _, program = corpus_program
        ids = [s.id for m in program.methods.values() for s in m.body if m.kind != "dummy"]
        assert len(ids) == len(set(ids))

    def test_allocations_match_source_occurrences(self):
        for path in CORPUS_FILES:
            source = path.read_text()
            module = parse_module(source, str(path))
            expected = sum(1 for n in ast_nodes(module) if isinstance(n, (A.New, A.Lambda, A.ArrayLit, A.ObjectLit)))
            program = desugar(module)
            allocs = sum(1 for _, s in program.statements() if s.kind in (Kind.ALLOC_OBJECT, Kind.ALLOC_FUNCTION))
            assert allocs == expected, path.name

    def test_checker_accepts_corpus(self, corpus_program):
        check_program(corpus_program[1])

    def test_checker_rejects_unknown_local(self):
        program = build("class T {}\nfunction main(): void { let v = new T(); }", entries=["main"])
        bad = IRStatement(999, Kind.ASSIGN, Loc("t.mats", 1, 1), lhs="v", rhs="ghost")
        program.methods["main"].body.append(bad)
        with pytest.raises(IRCheckError, match="ghost"):
            check_program(program)


class TestClassify:
    LOC = Loc("t", 1, 1)

    @pytest.mark.parametrize(
        "stmt, pattern",
        [
            (IRStatement(1, Kind.FIELD_STORE, LOC, base="y", field="f", rhs="x"), Pattern.STORE),
            (IRStatement(1, Kind.FIELD_LOAD, LOC, lhs="x", base="y", field="f"), Pattern.LOAD),
            (IRStatement(1, Kind.FUNCTION_POINTER_CALL, LOC, lhs="y", callee="p"), Pattern.FUNCTION_POINTER_CALL),
            (IRStatement(1, Kind.ALLOC_OBJECT, LOC, lhs="v", type_name="T"), Pattern.CREATE_OBJECT),
            (IRStatement(1, Kind.ALLOC_FUNCTION, LOC, lhs="v", func="f"), Pattern.CREATE_FUNCTION),
            (IRStatement(1, Kind.ASSIGN, LOC, lhs="y", rhs="x"), Pattern.ASSIGN),
            (IRStatement(1, Kind.STATIC_CALL, LOC, lhs="y", callee="f"), Pattern.STATIC_CALL),
            (IRStatement(1, Kind.DYNAMIC_CALL, LOC, lhs="y", receiver="x", method="m"), Pattern.DYNAMIC_CALL),
            (IRStatement(1, Kind.RETURN, LOC, rhs="x"), Pattern.RETURN_VALUE),
        ],
    )
    def test_patterns(self, stmt, pattern):
        assert classify_statement(stmt) == pattern

    def test_corpus_covers_all_patterns(self):
        seen = set()
        for path in CORPUS_FILES:
            seen |= {classify_statement(s) for _, s in load_program(path).statements()}
        assert seen == set(Pattern)


class TestEntries:
    def test_motivating_dummy_main(self, motivating):
        assert motivating.entries == ["FunctionWriter.build", "FunctionReader.build"]
        body = motivating.methods[motivating.main].body
        allocs = [s.type_name for s in body if s.kind == Kind.ALLOC_OBJECT]
        assert allocs == ["FunctionWriter", "FunctionReader"]
        calls = [(s.receiver, s.method) for s in body if s.kind == Kind.DYNAMIC_CALL]
        receivers = [s.lhs for s in body if s.kind == Kind.ALLOC_OBJECT]
        assert calls == [(r, "build") for r in receivers]

    def test_two_entry_structs(self):
        program = build(
            "@Entry\n@Component\nstruct A { build() {} }\n@Entry\n@Component\nstruct B { build() {} }\n"
        )
        body = program.methods[program.main].body
        assert [s.type_name for s in body if s.kind == Kind.ALLOC_OBJECT] == ["A", "B"]

    def test_explicit_main(self):
        program = build("function main(): void {}", entries=["main"])
        body = program.methods[program.main].body
        assert [(s.kind, s.callee) for s in body] == [(Kind.STATIC_CALL, "main")]

    def test_no_entries(self):
        with pytest.raises(NoEntriesError, match="--entries"):
            build("class T {}")

    def test_unknown_explicit_entry(self):
        with pytest.raises(EntryNotFoundError):
            build("function main(): void {}", entries=["nope"])


class TestRoundTrip:
    def test_printer_preserves_kind_multiset(self, corpus_program):
        path, program = corpus_program
        reparsed = desugar(parse_module(print_program(program), str(path)))

        def multiset(p):
            return Counter(classify_statement(s) for m, s in p.statements() if m.kind != "dummy")

        assert multiset(reparsed) == multiset(program)

    def test_ir_json_round_trip(self, corpus_program):
        _, program = corpus_program
        text = dump_ir(program)
        again = load_ir(text)
        collect_entries(again)
        assert dump_ir(again) == text
        assert again.statement_index().keys() == program.statement_index().keys()
