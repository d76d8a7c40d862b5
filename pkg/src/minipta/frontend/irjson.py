"""JSON (de)serialization of IRProgram.

Schema, version 1::

    {"version": 1, "files": [...], "main": str|null, "entries": [...], "warnings": [...],
     "classes": [{"name", "superclass", "fields": {name: type}, "methods": {name: qname},
                  "decorators": [[name, [args]]], "is_struct", "loc": [file, line, col]}],
     "globals": [{"operand", "name", "kind", "type", "target"}],
     "methods": [{"qname", "name", "params": [[name, type]], "ret_type", "owner", "kind",
                  "is_static", "loc", "captures": [[name, written]], "local_types": {name: type},
                  "primitive_locals": [...],
                  "statements": [{"id", "kind", "loc": [file, line, col], "operands": {...}}]}]}

Statement operands use the slot names of the statement kind (``lhs``, ``rhs``,
``base``, ``field``, ``callee``, ``receiver``, ``method``, ``type_name``,
``func``, ``args``).
"""

from __future__ import annotations

import json

from ..errors import IRCheckError
from .ir import ClassDecl, GlobalVar, IRProgram, IRStatement, Kind, Loc, MethodDecl

IR_VERSION = 1


def statement_to_json(s: IRStatement) -> dict:
    return {"id": s.id, "kind": s.kind.value, "loc": list(s.loc), "operands": s.operands()}


def statement_from_json(d: dict) -> IRStatement:
    try:
        kind = Kind(d["kind"])
    except ValueError as exc:
        raise IRCheckError(f"unknown statement kind {d.get('kind')!r}") from exc
    ops = dict(d.get("operands", {}))
    allowed = IRStatement._SLOTS[kind]
    extra = set(ops) - set(allowed)
    if extra:
        raise IRCheckError(f"statement {d.get('id')}: unexpected operands {sorted(extra)} for {kind.value}")
    if "args" in ops:
        ops["args"] = tuple(ops["args"])
    return IRStatement(int(d["id"]), kind, Loc(*d["loc"]), **ops)


def dump_ir(program: IRProgram) -> str:
    doc = {
        "version": IR_VERSION,
        "files": program.files,
        "main": program.main,
        "entries": program.entries,
        "warnings": program.warnings,
        "classes": [
            {
                "name": c.name, "superclass": c.superclass, "fields": c.fields, "methods": c.methods,
                "decorators": [[n, list(a)] for n, a in c.decorators], "is_struct": c.is_struct,
                "loc": list(c.loc),
            }
            for c in program.classes.values()
        ],
        "globals": [
            {"operand": op, "name": g.name, "kind": g.kind, "type": g.type, "target": g.target}
            for op, g in program.globals.items()
        ],
        "methods": [
            {
                "qname": m.qname, "name": m.name, "params": [list(p) for p in m.params],
                "ret_type": m.ret_type, "owner": m.owner, "kind": m.kind, "is_static": m.is_static,
                "loc": list(m.loc), "captures": [list(c) for c in m.captures],
                "local_types": m.local_types, "primitive_locals": sorted(m.primitive_locals),
                "statements": [statement_to_json(s) for s in m.body],
            }
            for m in program.methods.values()
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def load_ir(text: str) -> IRProgram:
    """Rebuild an IRProgram from :func:`dump_ir` output (DummyMain is dropped and regenerated)."""
    from .desugar import check_program

    doc = json.loads(text)
    if doc.get("version") != IR_VERSION:
        raise IRCheckError(f"unsupported IR version {doc.get('version')!r}")
    program = IRProgram(files=list(doc.get("files", [])), warnings=list(doc.get("warnings", [])))
    for c in doc.get("classes", []):
        program.classes[c["name"]] = ClassDecl(
            c["name"], c.get("superclass"), dict(c.get("fields", {})), dict(c.get("methods", {})),
            [(n, list(a)) for n, a in c.get("decorators", [])], bool(c.get("is_struct")), Loc(*c["loc"]),
        )
    for g in doc.get("globals", []):
        program.globals[g["operand"]] = GlobalVar(g["name"], g["kind"], g.get("type"), g.get("target"))
    for m in doc.get("methods", []):
        if m["kind"] == "dummy":
            continue
        program.methods[m["qname"]] = MethodDecl(
            m["qname"], m["name"], [tuple(p) for p in m["params"]], m.get("ret_type"),
            body=[statement_from_json(s) for s in m.get("statements", [])],
            owner=m.get("owner"), kind=m["kind"], is_static=bool(m.get("is_static")), loc=Loc(*m["loc"]),
            captures=[(n, bool(w)) for n, w in m.get("captures", [])],
            local_types=dict(m.get("local_types", {})),
            primitive_locals=frozenset(m.get("primitive_locals", [])),
        )
    check_program(program)
    return program
