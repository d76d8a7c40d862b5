"""Opaque framework APIs described by declaration files.

A call matching a declaration returning a reference type gets one stub
object per call site.  Arguments flow into the stub's ``captured`` field so
pointer chains stay connected, and function-typed arguments (event
handlers) are invoked with no arguments.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Optional

from ..frontend.ir import Kind
from ..pag import HeapObject, ObjKind
from ..sdkdecls import SdkDecl, SdkDeclarations
from .base import CallSite, Plugin

if TYPE_CHECKING:
    from ..solver import Solver

CAPTURED = "captured"


class SdkPlugin(Plugin):
    name = "sdk"
    priority = 30

    def __init__(self, decls: Optional[SdkDeclarations]):
        self.decls = decls

    def _lookup(self, qualified: str) -> Optional[SdkDecl]:
        return self.decls.lookup(qualified) if self.decls is not None else None

    def match(self, solver: "Solver", call: CallSite, obj: HeapObject) -> bool:
        return (obj.kind == ObjKind.SDK_STUB and call.stmt.kind == Kind.DYNAMIC_CALL
                and self._lookup(f"{obj.type_name}.{call.stmt.method}") is not None)

    def handle(self, solver: "Solver", call: CallSite, obj: HeapObject) -> None:
        qualified = f"{obj.type_name}.{call.stmt.method}"
        self._apply(solver, call, qualified, self._lookup(qualified), obj)

    def match_static(self, solver: "Solver", call: CallSite) -> bool:
        s = call.stmt
        return (s.kind == Kind.STATIC_CALL and s.callee not in solver.program.methods
                and self._lookup(s.callee) is not None)

    def handle_static(self, solver: "Solver", call: CallSite) -> None:
        self._apply(solver, call, call.stmt.callee, self._lookup(call.stmt.callee), None)

    def _apply(self, solver: "Solver", call: CallSite, qualified: str, decl: SdkDecl,
               receiver: Optional[HeapObject]) -> None:
        solver.add_call_edge(call, f"sdk:{qualified}")
        sink: Optional[int] = None
        if decl.returns_reference:
            stub = solver.pag.alloc_heap_object(
                ("sdk", call.stmt.id), ObjKind.SDK_STUB, decl.ret, solver.heap_context(call.ctx),
                loc=call.stmt.loc,
            )
            if call.lhs is not None:
                solver.add_pts(call.lhs, {stub})
            sink = stub
        elif receiver is not None:
            sink = receiver.id
        callbacks = set(decl.callback_params)
        for i, a in enumerate(call.args):
            if a is None:
                continue
            if sink is not None:
                solver.add_edge(a, solver.pag.node_for_field(sink, CAPTURED))
            if i in callbacks:
                solver.add_pending_call(call, Kind.FUNCTION_POINTER_CALL, a, args=(), lhs=None)
