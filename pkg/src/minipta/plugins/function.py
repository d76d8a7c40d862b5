"""`bind`, `call` and `apply` on function objects.

Each handled (call site, context, function object) gets one clone carrying
the bound receiver and bound arguments.  `bind` hands the clone to the
result; `call` and `apply` invoke it on the spot.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from ..frontend.ir import Kind
from ..pag import HeapObject, ObjKind
from .base import CallSite, Plugin

if TYPE_CHECKING:
    from ..solver import Solver

FUNCTION_METHODS = ("bind", "call", "apply")


class FunctionPlugin(Plugin):
    name = "function"
    priority = 20

    def match(self, solver: "Solver", call: CallSite, obj: HeapObject) -> bool:
        return (obj.kind == ObjKind.FUNCTION_OBJECT and call.stmt.kind == Kind.DYNAMIC_CALL
                and call.stmt.method in FUNCTION_METHODS)

    def handle(self, solver: "Solver", call: CallSite, obj: HeapObject) -> None:
        op = call.stmt.method
        this_arg = call.args[0] if call.args else None
        rest = call.args[1:] if op != "apply" else ()
        # The first binding of `this` sticks; later binds only add arguments.
        if obj.has_bound_this:
            bound_this, has_this = obj.bound_this, True
        else:
            bound_this, has_this = this_arg, bool(call.stmt.args)
        clone = solver.pag.alloc_heap_object(
            ("clone", call.stmt.id, call.ctx, obj.id), ObjKind.FUNCTION_OBJECT, obj.type_name,
            loc=call.stmt.loc, func=obj.func, origin=obj.root, bound_this=bound_this,
            has_bound_this=has_this, bound_args=obj.bound_args + tuple(rest),
        )
        if op == "bind":
            if call.lhs is not None:
                solver.add_pts(call.lhs, {clone})
            return
        spread = call.args[1] if op == "apply" and len(call.args) > 1 else None
        solver.invoke_function(call, solver.pag.object(clone), (), apply_array=spread)
