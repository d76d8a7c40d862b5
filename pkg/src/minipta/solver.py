"""Worklist pointer analysis with on-the-fly call-graph construction.

The outer loop repeats four phases until nothing changes:

1. ``init_work_item`` for each newly reached (method, context): seed
   allocations, add copy edges, record field constraints, bind static calls
   and queue dynamic and function-pointer calls as pending;
2. ``solve_constraints``: difference propagation to a global fixpoint,
   materializing field edges as base pointers gain objects;
3. ``solve_dynamic_call``: dispatch each pending virtual call on the
   receiver objects it has not seen yet (plugins get the first look);
4. ``solve_function_pointer_call``: likewise for calls through function values.
"""

from __future__ import annotations

import logging
import resource
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .callgraph import CallGraph
from .context import EMPTY, ContextInterner, ContextSelector
from .errors import AnalysisTimeout, DispatchError, EntryNotFoundError
from .frontend.ir import (
    ARRAY_ELEM, DUMMY_MAIN, IRProgram, IRStatement, Kind, MethodDecl, is_const, is_global,
)
from .pag import PAG, EdgeLabel, HeapObject, ObjKind
from .plugins import CallSite, PluginManager, default_plugins
from .sdkdecls import SdkDeclarations

log = logging.getLogger(__name__)

RETURN_VAR = "%ret"
CAPTURE_PREFIX = "cap$"
_TIME_CHECK_EVERY = 1024


@dataclass
class AnalysisConfig:
    selector: str = "callsite"
    k: int = 2
    heap_context: bool = False
    disabled_plugins: frozenset[str] = frozenset()
    sdk: Optional[SdkDeclarations] = field(default_factory=SdkDeclarations.builtin)
    timeout: float = 1200.0

    def context_selector(self) -> ContextSelector:
        return ContextSelector(self.selector, self.k)


@dataclass
class PendingCall:
    stmt: IRStatement
    method: MethodDecl
    ctx: int
    kind: Kind
    node: int
    args: tuple[Optional[int], ...]
    lhs: Optional[int]
    seen: set[int] = field(default_factory=set)


@dataclass
class AnalysisResult:
    program: IRProgram
    pag: PAG
    call_graph: CallGraph
    stats: dict
    diagnostics: list[str]

    def var_nodes(self, method: str, local: str) -> list[int]:
        """Every context's node for ``local`` of ``method`` (the single node for a global)."""
        return [n.id for n in self.pag.nodes
                if n.key[0] == "var" and n.key[1] == local and (n.key[2] == method or local.startswith("@"))]

    def pts_of_var(self, method: str, local: str, ctx: Optional[int] = None) -> set[int]:
        """pts of a local in one context, or unioned over all contexts when ``ctx`` is None."""
        if ctx is not None:
            return set(self.pag.pts(self.pag.find_var(local, method, ctx)))
        out: set[int] = set()
        for nid in self.var_nodes(method, local):
            out |= self.pag.nodes[nid].pts
        return out

    def pts_of_field(self, obj: int, name: str) -> set[int]:
        return set(self.pag.pts(self.pag.find_field(obj, name)))

    def object_at(self, stmt_id: int) -> list[int]:
        """Objects allocated by statement ``stmt_id`` (one per heap context)."""
        return [o.id for o in self.pag.objects
                if isinstance(o.site, tuple) and o.site[:2] in (("alloc", stmt_id), ("sdk", stmt_id))]


def dispatch(program: IRProgram, class_name: str, method: str) -> str:
    """Virtual method lookup up the superclass chain."""
    target = program.lookup_method(class_name, method)
    if target is None:
        raise DispatchError(class_name, method)
    return target


class Solver:
    def __init__(self, program: IRProgram, config: Optional[AnalysisConfig] = None,
                 plugins: Optional[PluginManager] = None):
        if program.main is None or program.main not in program.methods:
            raise EntryNotFoundError(DUMMY_MAIN)
        self.program = program
        self.config = config or AnalysisConfig()
        self.selector = self.config.context_selector()
        self.contexts = ContextInterner()
        self.pag = PAG(self.contexts)
        self.plugins = plugins or default_plugins(self.config.sdk, self.config.disabled_plugins)
        self.method_index = {q: i for i, q in enumerate(program.methods)}
        self.call_graph = CallGraph("pta")
        self.reached: set[tuple[str, int]] = set()
        self.worklist: deque[tuple[str, int]] = deque()
        self.loads: dict[int, list[tuple[str, int]]] = {}
        self.stores: dict[int, list[tuple[str, int]]] = {}
        self.pending: dict[tuple, PendingCall] = {}
        self.queue: deque[int] = deque()
        self.delta: dict[int, set[int]] = {}
        self.diagnostics: dict[str, None] = {}
        self.iterations = 0
        self.steps = 0
        self.started = 0.0

    # ---- driver ------------------------------------------------------------

    def run(self) -> AnalysisResult:
        self.started = time.perf_counter()
        self._seed_globals()
        self.enqueue(self.program.main, 0)
        while True:
            self.iterations += 1
            self._check_time()
            while self.worklist:
                self._tick()
                self.init_work_item(*self.worklist.popleft())
            self.solve_constraints()
            self.solve_dynamic_call()
            self.solve_function_pointer_call()
            if not self.worklist and not self.queue and not self._has_unseen():
                break
        elapsed = time.perf_counter() - self.started
        stats = {
            **self.pag.stats,
            "cg_edges": len(self.call_graph.edges),
            "iterations": self.iterations,
            "reached": len(self.reached),
            "contexts": len(self.contexts),
            "diagnostics": len(self.diagnostics),
            "time_ms": round(elapsed * 1000, 3),
            "peak_mem_estimate": _peak_rss_bytes(),
        }
        return AnalysisResult(self.program, self.pag, self.call_graph, stats, list(self.diagnostics))

    def _tick(self) -> None:
        self.steps += 1
        if self.steps % _TIME_CHECK_EVERY == 0:
            self._check_time()

    def _check_time(self) -> None:
        if time.perf_counter() - self.started > self.config.timeout:
            raise AnalysisTimeout(self.config.timeout)

    def _seed_globals(self) -> None:
        """Give each referenced global function or external its single object."""
        used = {op for _, s in self.program.statements() for op in s.used_vars()}
        for op, g in self.program.globals.items():
            if op not in used:
                continue
            if g.kind == "function":
                m = self.program.methods.get(g.target)
                oid = self.pag.alloc_heap_object(("fn", g.target), ObjKind.FUNCTION_OBJECT, "Function",
                                                 loc=m.loc if m else None, func=g.target)
            elif g.kind == "external":
                kind = ObjKind.CLASS_INSTANCE if g.name in ("AppStorage", "globalThis") else ObjKind.SDK_STUB
                oid = self.pag.alloc_heap_object(("global", g.name), kind, g.name)
            else:
                continue
            self.add_pts(self.pag.node_for_var(op, ""), {oid})

    # ---- graph mutation helpers (also used by plugins) ----------------------

    def diagnose(self, stmt: Optional[IRStatement], message: str) -> None:
        text = f"{stmt.loc}: {message}" if stmt is not None else message
        if text not in self.diagnostics:
            self.diagnostics[text] = None
            log.info("%s", text)

    def heap_context(self, ctx: int) -> int:
        return ctx if self.config.heap_context else 0

    def var(self, m: MethodDecl, ctx: int, op: Optional[str]) -> Optional[int]:
        """The node of operand ``op`` in ``m`` under ``ctx``; None for constants and primitives."""
        if is_const(op):
            return None
        if is_global(op):
            return self.pag.node_for_var(op, "")
        if op in m.primitive_locals:
            return None
        return self.pag.node_for_var(op, m.qname, ctx)

    def return_node(self, m: MethodDecl, ctx: int) -> int:
        return self.pag.node_for_var(RETURN_VAR, m.qname, ctx)

    def add_pts(self, node: int, objs: Iterable[int]) -> None:
        new = set(objs) - self.pag.nodes[node].pts
        if new:
            self.pag.nodes[node].pts |= new
            self._push(node, new)

    def _push(self, node: int, new: set[int]) -> None:
        if node in self.delta:
            self.delta[node] |= new
        else:
            self.delta[node] = set(new)
            self.queue.append(node)

    def add_edge(self, src: Optional[int], dst: Optional[int], label: EdgeLabel = EdgeLabel.COPY) -> None:
        if src is None or dst is None:
            return
        if self.pag.add_edge(src, dst, label) and self.pag.nodes[src].pts:
            self.add_pts(dst, self.pag.nodes[src].pts)

    def add_load(self, base: Optional[int], name: str, dst: Optional[int]) -> None:
        if base is None or dst is None:
            return
        self.loads.setdefault(base, []).append((name, dst))
        for o in sorted(self.pag.nodes[base].pts):
            self.add_edge(self.pag.node_for_field(o, name), dst)

    def add_store(self, base: Optional[int], name: str, src: Optional[int]) -> None:
        if base is None or src is None:
            return
        self.stores.setdefault(base, []).append((name, src))
        for o in sorted(self.pag.nodes[base].pts):
            self.add_edge(src, self.pag.node_for_field(o, name))

    def enqueue(self, qname: str, ctx: int) -> None:
        if (qname, ctx) not in self.reached:
            self.reached.add((qname, ctx))
            self.worklist.append((qname, ctx))

    def add_call_edge(self, call: CallSite, target: str) -> None:
        ctx = self.contexts.get(call.ctx) if self.selector.sensitive else None
        self.call_graph.add(call.stmt.id, call.method.qname, target, ctx)

    def add_pending_call(self, call: CallSite, kind: Kind, node: int, args: tuple[Optional[int], ...],
                         lhs: Optional[int]) -> None:
        key = (call.stmt.id, call.ctx, kind, node)
        if key not in self.pending:
            self.pending[key] = PendingCall(call.stmt, call.method, call.ctx, kind, node, args, lhs)

    # ---- call binding ------------------------------------------------------

    def bind_call(self, call: CallSite, target: str, args: tuple[Optional[int], ...],
                  this_obj: Optional[int] = None, this_node: Optional[int] = None) -> int:
        """Wire a resolved call to ``target``; returns the callee context id."""
        callee = self.program.methods[target]
        cctx = self.contexts.intern(self.selector.select(
            call.stmt.id, self.contexts.get(call.ctx), self.method_index[call.method.qname]))
        self.add_call_edge(call, target)
        self.enqueue(target, cctx)
        for formal, a in zip(callee.param_names, args):
            self.add_edge(a, self.var(callee, cctx, formal), EdgeLabel.PARAM_BINDING)
        if call.lhs is not None:
            self.add_edge(self.return_node(callee, cctx), call.lhs, EdgeLabel.RETURN_BINDING)
        this = self.var(callee, cctx, "this")
        if this_obj is not None:
            self.add_pts(this, {this_obj})
        if this_node is not None:
            self.add_edge(this_node, this, EdgeLabel.THIS_BINDING)
        return cctx

    def invoke_function(self, call: CallSite, fn: HeapObject, args: tuple[Optional[int], ...],
                        apply_array: Optional[int] = None) -> None:
        """Call function object ``fn`` (possibly a bound clone) with the call-site ``args``."""
        callee = self.program.methods.get(fn.func)
        if callee is None:
            self.diagnose(call.stmt, f"function object for unknown method {fn.func}")
            return
        all_args = fn.bound_args + tuple(args)
        this_node = fn.bound_this if fn.has_bound_this else None
        cctx = self.bind_call(call, fn.func, all_args, this_node=this_node)
        if apply_array is not None:
            for formal in callee.param_names[len(all_args):]:
                self.add_load(apply_array, ARRAY_ELEM, self.var(callee, cctx, formal))
        for name, written in callee.captures:
            cell = self.pag.node_for_field(fn.root, CAPTURE_PREFIX + name)
            local = self.var(callee, cctx, name)
            self.add_edge(cell, local)
            if written:
                self.add_edge(local, cell)

    # ---- phase 1 -----------------------------------------------------------

    def init_work_item(self, qname: str, ctx: int) -> None:
        m = self.program.methods[qname]
        for st in m.body:
            self._init_statement(m, ctx, st)

    def _callsite(self, m: MethodDecl, ctx: int, st: IRStatement) -> CallSite:
        recv = st.receiver if st.kind == Kind.DYNAMIC_CALL else st.callee if st.kind == Kind.FUNCTION_POINTER_CALL else None
        return CallSite(st, m, ctx, self.var(m, ctx, recv), tuple(self.var(m, ctx, a) for a in st.args),
                        self.var(m, ctx, st.lhs))

    def _init_statement(self, m: MethodDecl, ctx: int, st: IRStatement) -> None:
        k = st.kind
        if k == Kind.ALLOC_OBJECT:
            cls = self.program.classes.get(st.type_name)
            kind = ObjKind.STRUCT_INSTANCE if cls is not None and cls.is_struct else ObjKind.CLASS_INSTANCE
            oid = self.pag.alloc_heap_object(("alloc", st.id), kind, st.type_name, self.heap_context(ctx), loc=st.loc)
            lhs = self.var(m, ctx, st.lhs)
            if lhs is not None:
                self.add_pts(lhs, {oid})
            ctor = self.program.lookup_method(st.type_name, "constructor") if cls is not None else None
            if ctor is not None:
                call = self._callsite(m, ctx, st)
                self.bind_call(CallSite(st, m, ctx, None, call.args, None), ctor, call.args, this_obj=oid)
        elif k == Kind.ALLOC_FUNCTION:
            oid = self.pag.alloc_heap_object(("alloc", st.id), ObjKind.FUNCTION_OBJECT, "Function",
                                             self.heap_context(ctx), loc=st.loc, func=st.func)
            lhs = self.var(m, ctx, st.lhs)
            if lhs is not None:
                self.add_pts(lhs, {oid})
            for name, written in self.program.methods[st.func].captures:
                cell = self.pag.node_for_field(oid, CAPTURE_PREFIX + name)
                local = self.var(m, ctx, name)
                self.add_edge(local, cell)
                if written:
                    self.add_edge(cell, local)
        elif k == Kind.ASSIGN:
            self.add_edge(self.var(m, ctx, st.rhs), self.var(m, ctx, st.lhs))
        elif k == Kind.FIELD_STORE:
            self.add_store(self.var(m, ctx, st.base), st.field, self.var(m, ctx, st.rhs))
        elif k == Kind.FIELD_LOAD:
            self.add_load(self.var(m, ctx, st.base), st.field, self.var(m, ctx, st.lhs))
        elif k == Kind.RETURN:
            self.add_edge(self.var(m, ctx, st.rhs), self.return_node(m, ctx))
        elif k == Kind.STATIC_CALL:
            call = self._callsite(m, ctx, st)
            if st.callee in self.program.methods:
                this_node = self.var(m, ctx, st.receiver) if st.receiver else None
                self.bind_call(call, st.callee, call.args, this_node=this_node)
            elif not self.plugins.dispatch_static(self, call):
                self.diagnose(st, f"unresolved static call to '{st.callee}'")
        elif k in (Kind.DYNAMIC_CALL, Kind.FUNCTION_POINTER_CALL):
            call = self._callsite(m, ctx, st)
            if k == Kind.DYNAMIC_CALL and self.plugins.dispatch_static(self, call):
                return
            if call.receiver is None:
                self.diagnose(st, "call through a primitive value")
                return
            self.add_pending_call(call, k, call.receiver, call.args, call.lhs)

    # ---- phase 2 -----------------------------------------------------------

    def solve_constraints(self) -> None:
        """Propagate deltas until no points-to set changes."""
        pag = self.pag
        while self.queue:
            self._tick()
            n = self.queue.popleft()
            delta = self.delta.pop(n)
            objs = sorted(delta)
            for name, dst in self.loads.get(n, ()):
                for o in objs:
                    self.add_edge(pag.node_for_field(o, name), dst)
            for name, src in self.stores.get(n, ()):
                for o in objs:
                    self.add_edge(src, pag.node_for_field(o, name))
            for d, new in pag.propagate(n, delta).items():
                self._push(d, new)

    # ---- phases 3 and 4 ----------------------------------------------------

    def _has_unseen(self) -> bool:
        return any(self.pag.nodes[pc.node].pts - pc.seen for pc in self.pending.values())

    def _new_objects(self, kind: Kind) -> list[tuple[PendingCall, list[int]]]:
        out = []
        for pc in list(self.pending.values()):
            if pc.kind != kind:
                continue
            new = sorted(self.pag.nodes[pc.node].pts - pc.seen)
            if new:
                pc.seen.update(new)
                out.append((pc, new))
        return out

    def solve_dynamic_call(self) -> bool:
        batch = self._new_objects(Kind.DYNAMIC_CALL)
        for pc, objs in batch:
            call = CallSite(pc.stmt, pc.method, pc.ctx, pc.node, pc.args, pc.lhs)
            for oid in objs:
                obj = self.pag.object(oid)
                if self.plugins.dispatch(self, call, obj):
                    continue
                if obj.type_name not in self.program.classes:
                    self.diagnose(pc.stmt, f"no model for {obj.type_name}.{pc.stmt.method}")
                    continue
                try:
                    target = dispatch(self.program, obj.type_name, pc.stmt.method)
                except DispatchError as exc:
                    self.diagnose(pc.stmt, str(exc))
                    continue
                self.bind_call(call, target, pc.args, this_obj=oid)
        return bool(batch)

    def solve_function_pointer_call(self) -> bool:
        batch = self._new_objects(Kind.FUNCTION_POINTER_CALL)
        for pc, objs in batch:
            call = CallSite(pc.stmt, pc.method, pc.ctx, pc.node, pc.args, pc.lhs)
            for oid in objs:
                obj = self.pag.object(oid)
                if obj.kind != ObjKind.FUNCTION_OBJECT:
                    self.diagnose(pc.stmt, f"called non-function {obj.label} ({obj.type_name})")
                    continue
                self.invoke_function(call, obj, pc.args)
        return bool(batch)


def _peak_rss_bytes() -> int:
    """Peak resident set size of this process (an estimate of analysis memory)."""
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def analyze(program: IRProgram, config: Optional[AnalysisConfig] = None) -> AnalysisResult:
    return Solver(program, config).run()
