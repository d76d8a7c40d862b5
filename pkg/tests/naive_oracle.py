"""Exhaustive reference solver for differential testing.

Every round re-applies every rule to every reached (method, context) using
the full current points-to sets, then copies full sets along every edge,
until a round changes nothing.  Objects and nodes use structural keys so the
result can be compared with the worklist solver independently of the dense
ids it hands out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from minipta.frontend.ir import IRProgram, IRStatement, Kind, MethodDecl
from minipta.sdkdecls import SdkDeclarations

GLOBAL = "<global>"
ELEM = "elem"
RET = "%ret"
CAP = "cap$"
VALUE = "value"
CAPTURED = "captured"
STORAGE = ("AppStorage", "LocalStorage")
WRITES = {"setOrCreate", "set", "setAndLink", "setAndProp"}
LINKS = {"Link", "link", "setAndLink"}
PROPS = {"Prop", "prop", "setAndProp"}


@dataclass(frozen=True)
class Obj:
    key: tuple
    kind: str  # instance | function | stub | cell
    type_name: str
    func: Optional[str] = None
    root: Optional[tuple] = None
    bound_this: Optional[tuple] = None
    has_bound_this: bool = False
    bound_args: tuple = ()


@dataclass
class NaiveResult:
    pts: dict[tuple, set[tuple]] = field(default_factory=dict)
    edges: set[tuple[tuple, tuple]] = field(default_factory=set)
    cg: set[tuple[int, Optional[tuple], str]] = field(default_factory=set)
    reached: set[tuple[str, tuple]] = field(default_factory=set)
    objects: dict[tuple, Obj] = field(default_factory=dict)

    def nonempty(self) -> dict[tuple, frozenset]:
        return {n: frozenset(s) for n, s in self.pts.items() if s}


class NaiveSolver:
    def __init__(self, program: IRProgram, selector: str = "callsite", k: int = 2,
                 heap_context: bool = False, disabled: frozenset[str] = frozenset(),
                 sdk: Optional[SdkDeclarations] = None):
        self.p = program
        self.selector = selector
        self.k = k
        self.heap_context = heap_context
        self.disabled = disabled
        self.sdk = sdk if sdk is not None else SdkDeclarations.builtin()
        self.order = {q: i for i, q in enumerate(program.methods)}
        self.r = NaiveResult()
        self.pending: set[tuple] = set()

    # ---- primitive facts ---------------------------------------------------

    @property
    def sensitive(self) -> bool:
        return self.selector != "insensitive" and self.k > 0

    def node(self, m: MethodDecl, ctx: tuple, op: Optional[str]) -> Optional[tuple]:
        if op is None or op[0] in "'#":
            return None
        if op[0] == "@":
            return ("var", op, GLOBAL, ())
        if op in m.primitive_locals:
            return None
        return ("var", op, m.qname, ctx)

    def pts(self, n: Optional[tuple]) -> set[tuple]:
        return self.r.pts.get(n, set()) if n is not None else set()

    def add_pts(self, n: Optional[tuple], o: tuple) -> None:
        if n is not None:
            self.r.pts.setdefault(n, set()).add(o)

    def edge(self, s: Optional[tuple], d: Optional[tuple]) -> None:
        if s is not None and d is not None and s != d:
            self.r.edges.add((s, d))

    def obj(self, key: tuple, kind: str, type_name: str, **extra) -> tuple:
        self.r.objects.setdefault(key, Obj(key, kind, type_name, **extra))
        return key

    def hctx(self, ctx: tuple) -> tuple:
        return ctx if self.heap_context else ()

    # ---- calls -------------------------------------------------------------

    def callee_ctx(self, st: IRStatement, m: MethodDecl, ctx: tuple) -> tuple:
        if not self.sensitive:
            return ()
        head = st.id if self.selector == "callsite" else self.order[m.qname]
        return ((head,) + ctx)[: self.k]

    def bind(self, st, m, ctx, target, args, lhs, this_obj=None, this_node=None):
        callee = self.p.methods[target]
        cc = self.callee_ctx(st, m, ctx)
        self.r.cg.add((st.id, ctx if self.sensitive else None, target))
        self.r.reached.add((target, cc))
        for formal, a in zip(callee.param_names, args):
            self.edge(a, self.node(callee, cc, formal))
        if lhs is not None:
            self.edge(("var", RET, target, cc), lhs)
        this = self.node(callee, cc, "this")
        if this_obj is not None:
            self.add_pts(this, this_obj)
        if this_node is not None:
            self.edge(this_node, this)
        return cc

    def invoke(self, st, m, ctx, fn: Obj, args, lhs, spread=None):
        callee = self.p.methods.get(fn.func)
        if callee is None:
            return
        all_args = fn.bound_args + tuple(args)
        cc = self.bind(st, m, ctx, fn.func, all_args, lhs,
                       this_node=fn.bound_this if fn.has_bound_this else None)
        if spread is not None:
            for formal in callee.param_names[len(all_args):]:
                for o in self.pts(spread):
                    self.edge(("field", o, ELEM), self.node(callee, cc, formal))
        for name, written in callee.captures:
            cell = ("field", fn.root or fn.key, CAP + name)
            local = self.node(callee, cc, name)
            self.edge(cell, local)
            if written:
                self.edge(local, cell)

    # ---- plugins -----------------------------------------------------------

    def storage(self, st, m, ctx, inst: Obj, args, lhs):
        self.r.cg.add((st.id, ctx if self.sensitive else None, f"sdk:{inst.type_name}.{st.method}"))
        first = st.args[0] if st.args else None
        key = first[1:-1] if first is not None and first.startswith("'") else "*"

        def cell(k):
            return ("field", self.obj(("cell", inst.key, k), "cell", f"{inst.type_name}.{k}"), VALUE)

        value = args[1] if len(args) > 1 else None
        if st.method in WRITES and value is not None:
            self.edge(value, cell(key))
        if lhs is None or st.method in ("setOrCreate", "set"):
            return
        if st.method == "get" or st.method in LINKS or st.method in PROPS:
            self.edge(cell(key), lhs)
            if key != "*":
                self.edge(cell("*"), lhs)
        if st.method in LINKS:
            self.edge(lhs, cell(key))

    def function(self, st, m, ctx, fn: Obj, args, lhs):
        op = st.method
        if fn.has_bound_this:
            bt, has = fn.bound_this, True
        else:
            bt, has = (args[0] if args else None), bool(st.args)
        rest = tuple(args[1:]) if op != "apply" else ()
        key = self.obj(("clone", st.id, ctx, fn.key), "function", fn.type_name, func=fn.func,
                       root=fn.root or fn.key, bound_this=bt, has_bound_this=has,
                       bound_args=fn.bound_args + rest)
        clone = self.r.objects[key]
        if op == "bind":
            self.add_pts(lhs, key)
            return
        spread = args[1] if op == "apply" and len(args) > 1 else None
        self.invoke(st, m, ctx, clone, (), lhs, spread)

    def sdk_call(self, st, m, ctx, qualified, decl, receiver: Optional[Obj], args, lhs):
        self.r.cg.add((st.id, ctx if self.sensitive else None, f"sdk:{qualified}"))
        sink = None
        if decl.returns_reference:
            sink = self.obj(("sdk", st.id, self.hctx(ctx)), "stub", decl.ret)
            self.add_pts(lhs, sink)
        elif receiver is not None:
            sink = receiver.key
        for i, a in enumerate(args):
            if a is None:
                continue
            if sink is not None:
                self.edge(a, ("field", sink, CAPTURED))
            if i in decl.callback_params:
                self.pending.add((st.id, m.qname, ctx, a))

    def sdk_decl(self, qualified):
        return None if "sdk" in self.disabled else self.sdk.lookup(qualified)

    # ---- statements --------------------------------------------------------

    def statement(self, m: MethodDecl, ctx: tuple, st: IRStatement) -> None:
        n = lambda op: self.node(m, ctx, op)
        args = tuple(n(a) for a in st.args)
        lhs = n(st.lhs)
        k = st.kind
        if k == Kind.ALLOC_OBJECT:
            o = self.obj(("alloc", st.id, self.hctx(ctx)), "instance", st.type_name)
            self.add_pts(lhs, o)
            if st.type_name in self.p.classes:
                ctor = self.p.lookup_method(st.type_name, "constructor")
                if ctor is not None:
                    self.bind(st, m, ctx, ctor, args, None, this_obj=o)
        elif k == Kind.ALLOC_FUNCTION:
            o = self.obj(("alloc", st.id, self.hctx(ctx)), "function", "Function", func=st.func)
            self.add_pts(lhs, o)
            for name, written in self.p.methods[st.func].captures:
                self.edge(n(name), ("field", o, CAP + name))
                if written:
                    self.edge(("field", o, CAP + name), n(name))
        elif k == Kind.ASSIGN:
            self.edge(n(st.rhs), lhs)
        elif k == Kind.FIELD_STORE:
            for o in list(self.pts(n(st.base))):
                self.edge(n(st.rhs), ("field", o, st.field))
        elif k == Kind.FIELD_LOAD:
            for o in list(self.pts(n(st.base))):
                self.edge(("field", o, st.field), lhs)
        elif k == Kind.RETURN:
            self.edge(n(st.rhs), ("var", RET, m.qname, ctx))
        elif k == Kind.STATIC_CALL:
            if st.callee in self.p.methods:
                self.bind(st, m, ctx, st.callee, args, lhs, this_node=n(st.receiver) if st.receiver else None)
            else:
                decl = self.sdk_decl(st.callee)
                if decl is not None:
                    self.sdk_call(st, m, ctx, st.callee, decl, None, args, lhs)
        elif k == Kind.DYNAMIC_CALL:
            if ("storage" not in self.disabled and st.method == "set" and len(st.args) == 1
                    and st.receiver in {s.lhs for s in m.body if s.kind == Kind.DYNAMIC_CALL
                                        and s.lhs is not None and s.method in LINKS | PROPS}):
                self.edge(args[0], n(st.receiver))
                return
            for key in sorted(self.pts(n(st.receiver))):
                o = self.r.objects[key]
                if "storage" not in self.disabled and o.type_name in STORAGE and o.kind != "cell":
                    self.storage(st, m, ctx, o, args, lhs)
                elif ("function" not in self.disabled and o.kind == "function"
                      and st.method in ("bind", "call", "apply")):
                    self.function(st, m, ctx, o, args, lhs)
                elif o.kind == "stub" and self.sdk_decl(f"{o.type_name}.{st.method}") is not None:
                    q = f"{o.type_name}.{st.method}"
                    self.sdk_call(st, m, ctx, q, self.sdk_decl(q), o, args, lhs)
                elif o.type_name in self.p.classes:
                    target = self.p.lookup_method(o.type_name, st.method)
                    if target is not None:
                        self.bind(st, m, ctx, target, args, lhs, this_obj=key)
        elif k == Kind.FUNCTION_POINTER_CALL:
            for key in sorted(self.pts(n(st.callee))):
                o = self.r.objects[key]
                if o.kind == "function":
                    self.invoke(st, m, ctx, o, args, lhs)

    # ---- fixpoint ----------------------------------------------------------

    def seed(self) -> None:
        used = {op for _, s in self.p.statements() for op in s.used_vars()}
        for op, g in self.p.globals.items():
            if op not in used:
                continue
            node = ("var", op, GLOBAL, ())
            if g.kind == "function":
                self.add_pts(node, self.obj(("fn", g.target), "function", "Function", func=g.target))
            elif g.kind == "external":
                kind = "instance" if g.name in ("AppStorage", "globalThis") else "stub"
                self.add_pts(node, self.obj(("global", g.name), kind, g.name))

    def snapshot(self) -> tuple:
        return (sum(len(s) for s in self.r.pts.values()), len(self.r.edges), len(self.r.cg),
                len(self.r.reached), len(self.pending), len(self.r.objects))

    def run(self, max_rounds: int = 10_000) -> NaiveResult:
        self.seed()
        self.r.reached.add((self.p.main, ()))
        index = self.p.statement_index()
        for _ in range(max_rounds):
            before = self.snapshot()
            for q, ctx in sorted(self.r.reached, key=repr):
                m = self.p.methods[q]
                for st in m.body:
                    self.statement(m, ctx, st)
            for sid, q, ctx, a in sorted(self.pending, key=repr):
                m = self.p.methods[q]
                for key in sorted(self.pts(a)):
                    o = self.r.objects[key]
                    if o.kind == "function":
                        self.invoke(index[sid][1], m, ctx, o, (), None)
            changed = True
            while changed:
                changed = False
                for s, d in self.r.edges:
                    src = self.r.pts.get(s)
                    if src and not src <= self.r.pts.setdefault(d, set()):
                        self.r.pts[d] |= src
                        changed = True
            if self.snapshot() == before:
                return self.r
        raise RuntimeError("naive solver did not converge")


def naive_solve(program: IRProgram, **kw) -> NaiveResult:
    return NaiveSolver(program, **kw).run()


# ---- translating worklist-solver results to structural keys ---------------

def structural(result) -> tuple[dict[tuple, frozenset], set[tuple]]:
    """(non-empty pts by node key, CG edges) of an AnalysisResult using the oracle's keys."""
    pag = result.pag
    ctx = pag.contexts.get
    memo: dict[int, tuple] = {}

    def okey(oid: int) -> tuple:
        if oid in memo:
            return memo[oid]
        o = pag.object(oid)
        site = o.site
        if site[0] in ("alloc", "sdk"):
            k = (site[0], site[1], ctx(o.heap_ctx))
        elif site[0] == "cell":
            k = ("cell", okey(site[1]), site[2])
        elif site[0] == "clone":
            k = ("clone", site[1], ctx(site[2]), okey(site[3]))
        else:
            k = tuple(site)
        memo[oid] = k
        return k

    def nkey(key: tuple) -> tuple:
        if key[0] == "field":
            return ("field", okey(key[1]), key[2])
        _, local, method, c = key
        return ("var", local, method, ctx(c) if method != GLOBAL else ())

    pts = {nkey(n.key): frozenset(okey(o) for o in n.pts) for n in pag.nodes if n.pts}
    cg = {(e.callsite, e.context, e.target) for e in result.call_graph.edges}
    return pts, cg
