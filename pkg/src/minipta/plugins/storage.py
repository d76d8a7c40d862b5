"""AppStorage / LocalStorage: key-value cells shared across components.

Each (storage instance, key) pair owns one cell object whose ``value`` field
node holds everything written under that key.  ``Link`` results are wired
both ways to the cell, ``Prop`` results one way only.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from ..frontend.ir import Kind, MethodDecl, string_value
from ..pag import EdgeLabel, HeapObject, ObjKind
from .base import CallSite, Plugin

if TYPE_CHECKING:
    from ..solver import Solver

STORAGE_TYPES = ("AppStorage", "LocalStorage")
WILDCARD = "*"
CELL_FIELD = "value"
WRITES = frozenset({"setOrCreate", "set", "setAndLink", "setAndProp"})
LINKS = frozenset({"Link", "link", "setAndLink"})
PROPS = frozenset({"Prop", "prop", "setAndProp"})


class StoragePlugin(Plugin):
    name = "storage"
    priority = 10

    def __init__(self) -> None:
        self._bound: dict[str, frozenset[str]] = {}

    def match(self, solver: "Solver", call: CallSite, obj: HeapObject) -> bool:
        return obj.type_name in STORAGE_TYPES and obj.kind != ObjKind.STORAGE_CELL

    def cell(self, solver: "Solver", inst: HeapObject, key: str) -> int:
        prefix = "AppStorage" if inst.type_name == "AppStorage" else f"LocalStorage({inst.label})"
        cell = solver.pag.alloc_heap_object(("cell", inst.id, key), ObjKind.STORAGE_CELL, f"{prefix}.{key}")
        return solver.pag.node_for_field(cell, CELL_FIELD)

    def handle(self, solver: "Solver", call: CallSite, obj: HeapObject) -> None:
        op = call.stmt.method
        solver.add_call_edge(call, f"sdk:{obj.type_name}.{op}")
        key = string_value(call.stmt.args[0]) if call.stmt.args else None
        if key is None:
            key = WILDCARD
            solver.diagnose(call.stmt, f"non-constant storage key in {op}; using the wildcard cell")
        cell = self.cell(solver, obj, key)
        value = call.args[1] if len(call.args) > 1 else None
        if op in WRITES and value is not None:
            solver.add_edge(value, cell)
        lhs = call.lhs
        if lhs is None or op in ("setOrCreate", "set"):
            return
        if op == "get" or op in LINKS or op in PROPS:
            solver.add_edge(cell, lhs)
            if key != WILDCARD:
                solver.add_edge(self.cell(solver, obj, WILDCARD), lhs)
        if op in LINKS:
            solver.add_edge(lhs, cell, EdgeLabel.STORAGE_BACKFLOW)

    # `x.set(v)` on a variable bound by Link/Prop in the same method.

    def bound_vars(self, method: MethodDecl) -> frozenset[str]:
        out = self._bound.get(method.qname)
        if out is None:
            out = frozenset(
                s.lhs for s in method.body
                if s.kind == Kind.DYNAMIC_CALL and s.lhs is not None and s.method in LINKS | PROPS
            )
            self._bound[method.qname] = out
        return out

    def match_static(self, solver: "Solver", call: CallSite) -> bool:
        s = call.stmt
        return (s.kind == Kind.DYNAMIC_CALL and s.method == "set" and len(s.args) == 1
                and s.receiver in self.bound_vars(call.method))

    def handle_static(self, solver: "Solver", call: CallSite) -> None:
        if call.args[0] is not None and call.receiver is not None:
            solver.add_edge(call.args[0], call.receiver)
