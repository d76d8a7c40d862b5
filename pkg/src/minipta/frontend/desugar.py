"""Lower parsed modules to the three-address IR.

Every expression is split into atomic statements over fresh temporaries
(``$t1``, ``$t2``...).  Each arrow function becomes a method named
``anonymous_method_<n>`` plus one ``AllocFunction`` at its site.  Variables a
lambda reads from enclosing scopes are recorded as captures and bound through
the function object by the solver.  Control flow is flattened.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..errors import DeclarationError, IRCheckError, UnresolvedSymbolError
from ..sdkdecls import SdkDeclarations
from . import ast as A
from .ir import (
    ARRAY_ELEM, ClassDecl, GlobalVar, IRProgram, IRStatement, Kind, Loc, MethodDecl,
    is_const, is_global, is_var, string_const,
)

log = logging.getLogger(__name__)

# Framework singletons that receive a heap object of their own.
SEEDED_GLOBALS = ("AppStorage", "globalThis")
BUILTIN_CLASSES = frozenset({"Array", "Object", "Map", "Set", "Error", "LocalStorage", "Date"})
# Opaque host objects and functions: calls on them produce primitives.
OPAQUE_GLOBALS = frozenset({
    "Math", "JSON", "Number", "String", "Boolean", "Symbol", "Promise", "Reflect",
    "parseInt", "parseFloat", "isNaN", "isFinite",
})
PRIM = "#expr"


@dataclass
class _Scope:
    """Per-method lowering state."""

    method: MethodDecl
    path: str
    ns: tuple[str, ...]
    class_q: Optional[str]
    parent: Optional["_Scope"] = None
    is_init: bool = False
    declared: dict[str, Optional[A.TypeExpr]] = field(default_factory=dict)
    temps: int = 0

    def has_local(self, name: str) -> bool:
        if name == "this":
            return not self.is_init and self.method.kind != "lambda"
        return name in self.declared


def _hoist(stmts: Iterable[A.Stmt], out: dict[str, Optional[A.TypeExpr]]) -> None:
    for s in stmts:
        if isinstance(s, A.VarDecl):
            if s.name not in out or out[s.name] is None:
                out[s.name] = s.type
        elif isinstance(s, A.Block):
            _hoist(s.stmts, out)
        elif isinstance(s, A.If):
            _hoist([s.then] + ([s.other] if s.other else []), out)
        elif isinstance(s, (A.While, A.For)):
            if isinstance(s, A.For) and s.init is not None:
                _hoist([s.init], out)
            _hoist([s.body], out)
        elif isinstance(s, A.ForOf):
            out.setdefault(s.name, s.type)
            _hoist([s.body], out)
        elif isinstance(s, A.ExprStmt) and isinstance(s.expr, A.Call) and s.expr.trailing:
            _hoist(s.expr.trailing.stmts, out)


class Desugarer:
    def __init__(self, modules: list[A.SourceModule], sdk: Optional[SdkDeclarations] = None):
        self.modules = modules
        self.sdk = sdk if sdk is not None else SdkDeclarations.builtin()
        self.program = IRProgram(files=[m.path for m in modules])
        self.program.warnings.extend(w for m in modules for w in m.warnings)
        self.symbols: dict[str, tuple[str, object]] = {}
        self.next_id = 0
        self.lambda_count = 0
        self.sdk_free = self.sdk.free_functions()
        self.sdk_namespaces = self.sdk.namespaces()
        # Field/method name universe, for calls on receivers of unknown type.
        self.any_method: set[str] = set()
        self.any_field: set[str] = set()

    # ---- symbol collection -------------------------------------------------

    def collect(self) -> None:
        for mod in self.modules:
            self._collect_decls(mod.declarations, (), mod.path)
        for q, (kind, node) in list(self.symbols.items()):
            if kind == "class":
                self._declare_class(q, node)
        for cls in self.program.classes.values():
            if cls.superclass and cls.superclass not in self.program.classes:
                raise UnresolvedSymbolError(cls.superclass, cls.loc.file, cls.loc.line, cls.loc.col)
            chain = [c.name for c in self.program.superclasses(cls.name)]
            last = self.program.classes[chain[-1]]
            if last.superclass is not None:
                raise DeclarationError(f"cyclic inheritance through '{cls.name}'", *cls.loc)
        for cls in self.program.classes.values():
            self._plan_constructor(cls)

    def _qual(self, ns: tuple[str, ...], name: str) -> str:
        return ".".join(ns + (name,))

    def _collect_decls(self, decls: list[A.Declaration], ns: tuple[str, ...], path: str) -> None:
        for d in decls:
            if isinstance(d, A.NamespaceDecl):
                q = self._qual(ns, d.name)
                self._define(q, "namespace", d, path)
                self._collect_decls(d.members, ns + (d.name,), path)
            elif isinstance(d, A.ClassAst):
                self._define(self._qual(ns, d.name), "class", (d, ns, path), path)
            elif isinstance(d, A.FunctionDecl):
                self._define(self._qual(ns, d.name), "function", (d, ns, path), path)
            else:
                decls_here: dict[str, Optional[A.TypeExpr]] = {}
                _hoist([d], decls_here)
                for name, t in decls_here.items():
                    q = self._qual(ns, name)
                    if q not in self.symbols:
                        self.symbols[q] = ("var", (t, ns))
                        self.program.globals["@" + q] = GlobalVar(q, "var", None, loc=Loc(path, d.line, d.col))

    def _define(self, q: str, kind: str, node: object, path: str) -> None:
        prev = self.symbols.get(q)
        if prev is not None and not (prev[0] == kind == "namespace"):
            line = getattr(node[0] if isinstance(node, tuple) else node, "line", 0)
            raise DeclarationError(f"duplicate declaration '{q}'", path, line, 0)
        self.symbols[q] = (kind, node)

    def _declare_class(self, q: str, node: tuple) -> None:
        c, ns, path = node
        sup = None
        if c.superclass:
            r = self._resolve_global(c.superclass, ns)
            if r is None or r[0] != "class":
                raise UnresolvedSymbolError(c.superclass, path, c.line, c.col)
            sup = r[1]
        fields = {f.name: self._type_str(f.type, ns) for f in c.fields if not f.is_static}
        methods = {m.name: f"{q}.{m.name}" for m in c.methods}
        decorators = [(d.name, [self._decorator_arg(a) for a in d.args]) for d in c.decorators]
        self.program.classes[q] = ClassDecl(q, sup, fields, methods, decorators, c.is_struct, Loc(path, c.line, c.col))
        self.any_method.update(m.name for m in c.methods if not m.is_static)
        self.any_field.update(fields)
        for f in c.fields:
            if f.is_static:
                self.program.globals[f"@{q}.{f.name}"] = GlobalVar(f"{q}.{f.name}", "var", self._type_str(f.type, ns), loc=Loc(path, f.line, f.col))

    @staticmethod
    def _decorator_arg(e: A.Expr) -> str:
        if isinstance(e, A.Literal):
            return string_const(e.value) if e.kind == "string" else "#" + e.value
        return PRIM

    def _plan_constructor(self, cls: ClassDecl) -> None:
        """Synthesize a constructor when field initializers or storage decorators need one."""
        _, (c, _, _) = self.symbols[cls.name]
        if "constructor" in cls.methods or not self._needs_prologue(c):
            return
        cls.methods["constructor"] = f"{cls.name}.constructor"

    @staticmethod
    def _needs_prologue(c: A.ClassAst) -> bool:
        return any(
            (f.init is not None and not f.is_static)
            or any(d.name in ("StorageProp", "StorageLink") for d in f.decorators)
            for f in c.fields
        )

    def _resolve_global(self, name: str, ns: tuple[str, ...]) -> Optional[tuple[str, str]]:
        for i in range(len(ns), -1, -1):
            q = ".".join(ns[:i] + (name,))
            if q in self.symbols:
                return self.symbols[q][0], q
        return None

    def _type_str(self, t: Optional[A.TypeExpr], ns: tuple[str, ...]) -> Optional[str]:
        if t is None:
            return None
        if isinstance(t, A.TypeRef):
            r = self._resolve_global(t.name, ns)
            if r is not None and r[0] == "class":
                return r[1]
            return t.name
        if isinstance(t, A.FunctionType):
            return "Function"
        if isinstance(t, A.ArrayType):
            return f"{self._type_str(t.elem, ns) or 'any'}[]"
        members = [self._type_str(m, ns) for m in t.members]
        return "(" + "|".join(str(m) for m in members) + ")"

    # ---- lowering ----------------------------------------------------------

    def run(self) -> IRProgram:
        self.collect()
        for mod in self.modules:
            init = MethodDecl(f"%init:{mod.path}", "%init", [], None, kind="init", loc=Loc(mod.path, 1, 1))
            scope = _Scope(init, mod.path, (), None, is_init=True)
            self._lower_decls(mod.declarations, (), mod.path, scope)
            if init.body:
                self._finish(scope)
        return self.program

    def _lower_decls(self, decls: list[A.Declaration], ns: tuple[str, ...], path: str, init: _Scope) -> None:
        for d in decls:
            if isinstance(d, A.NamespaceDecl):
                self._lower_decls(d.members, ns + (d.name,), path, init)
            elif isinstance(d, A.FunctionDecl):
                q = self._qual(ns, d.name)
                m = MethodDecl(q, d.name, [], self._type_str(d.ret_type, ns), kind="function", loc=Loc(path, d.line, d.col))
                self._lower_body(m, d.params, d.body.stmts, path, ns, None)
            elif isinstance(d, A.ClassAst):
                self._lower_class(d, ns, path, init)
            else:
                saved = init.ns
                init.ns = ns
                self.stmt(d, init)
                init.ns = saved

    def _lower_class(self, c: A.ClassAst, ns: tuple[str, ...], path: str, init: _Scope) -> None:
        q = self._qual(ns, c.name)
        cls = self.program.classes[q]
        for m in c.methods:
            kind = "constructor" if m.is_constructor else "method"
            md = MethodDecl(f"{q}.{m.name}", m.name, [], self._type_str(m.ret_type, ns), owner=q,
                            kind=kind, is_static=m.is_static, loc=Loc(path, m.line, m.col))
            prologue = (lambda s, c=c: self._prologue(c, s)) if m.is_constructor else None
            self._lower_body(md, m.params, m.body.stmts, path, ns, None if m.is_static else q, prologue)
        if "constructor" not in [m.name for m in c.methods] and "constructor" in cls.methods:
            inherited = self.program.lookup_method(cls.superclass, "constructor") if cls.superclass else None
            params = self._ctor_params(inherited)
            md = MethodDecl(f"{q}.constructor", "constructor", [], None, owner=q, kind="constructor", loc=Loc(path, c.line, c.col))

            def prologue(s: _Scope, c=c, inherited=inherited, params=params) -> None:
                self._prologue(c, s)
                if inherited:
                    self.emit(s, Kind.STATIC_CALL, c, callee=inherited, receiver="this",
                              args=tuple(p.name for p in params))
            self._lower_body(md, params, [], path, ns, q, prologue)
        for f in c.fields:
            if f.is_static and f.init is not None:
                saved = init.ns
                init.ns = ns
                self.eval(f.init, init, dst=f"@{q}.{f.name}")
                init.ns = saved

    def _ctor_params(self, ctor_q: Optional[str]) -> list[A.Param]:
        """Formals of a (possibly synthesized) constructor, read from the declarations."""
        while ctor_q is not None:
            class_q = ctor_q.rsplit(".", 1)[0]
            c = self.symbols[class_q][1][0]
            for m in c.methods:
                if m.is_constructor:
                    return [A.Param(p.name, p.type) for p in m.params]
            sup = self.program.classes[class_q].superclass
            ctor_q = self.program.lookup_method(sup, "constructor") if sup else None
        return []

    def _prologue(self, c: A.ClassAst, s: _Scope) -> None:
        for f in c.fields:
            if f.is_static:
                continue
            for d in f.decorators:
                if d.name in ("StorageProp", "StorageLink"):
                    key = self._decorator_arg(d.args[0]) if d.args else PRIM
                    t = self.temp(s, self.program.classes[s.class_q].fields.get(f.name))
                    api = "Prop" if d.name == "StorageProp" else "Link"
                    self.emit(s, Kind.DYNAMIC_CALL, d, lhs=t, receiver="@AppStorage", method=api, args=(key,))
                    self.emit(s, Kind.FIELD_STORE, d, base="this", field=f.name, rhs=t)
                    if api == "Link":
                        back = self.temp(s, self.program.classes[s.class_q].fields.get(f.name))
                        self.emit(s, Kind.FIELD_LOAD, d, lhs=back, base="this", field=f.name)
                        self.emit(s, Kind.DYNAMIC_CALL, d, receiver="@AppStorage", method="setOrCreate", args=(key, back))
                elif d.name in ("LocalStorageProp", "LocalStorageLink"):
                    msg = f"{s.path}:{d.line}:{d.col}: @{d.name} is not modelled; field left unbound"
                    self.program.warnings.append(msg)
                    log.warning(msg)
            if f.init is not None:
                v = self.eval(f.init, s)
                if is_var(v):
                    self.emit(s, Kind.FIELD_STORE, f, base="this", field=f.name, rhs=v)

    def _lower_body(self, m: MethodDecl, params: list[A.Param], stmts: list[A.Stmt], path: str,
                    ns: tuple[str, ...], class_q: Optional[str], prologue=None,
                    parent: Optional[_Scope] = None) -> _Scope:
        s = _Scope(m, path, ns, class_q, parent=parent)
        m.params = [(p.name, self._type_str(p.type, ns)) for p in params]
        for p in params:
            s.declared[p.name] = p.type
        _hoist(stmts, s.declared)
        for name, t in s.declared.items():
            if name not in m.param_names:
                m.local_types[name] = self._type_str(t, ns)
        if m.kind == "lambda" and class_q is not None:
            m.local_types["this"] = class_q
        self.program.methods[m.qname] = m
        if prologue is not None:
            prologue(s)
        for st in stmts:
            self.stmt(st, s)
        self._finish(s)
        return s

    def _finish(self, s: _Scope) -> None:
        m = s.method
        if s.is_init:
            self.program.methods[m.qname] = m
        m.primitive_locals = frozenset(n for n, t in s.declared.items() if A.is_primitive(t))

    # ---- emission helpers --------------------------------------------------

    def emit(self, s: _Scope, kind: Kind, node: A.Node, **kw) -> IRStatement:
        self.next_id += 1
        st = IRStatement(self.next_id, kind, Loc(s.path, node.line, node.col), **kw)
        s.method.body.append(st)
        return st

    def temp(self, s: _Scope, type_name: Optional[str] = None) -> str:
        s.temps += 1
        name = f"$t{s.temps}"
        s.method.local_types[name] = type_name
        return name

    # ---- names -------------------------------------------------------------

    def resolve(self, name: str, s: _Scope, node: A.Node, write: bool = False) -> tuple[str, str]:
        """Classify an identifier: (local|global|function|class|namespace|external|sdkfunc|opaque, operand)."""
        if s.has_local(name):
            return "local", name
        # Enclosing lambdas' scopes: the variable is captured.
        chain = [s]
        p = s.parent
        while p is not None:
            if p.has_local(name):
                t = self._scope_type(name, p) if name != "this" else None
                for lam in chain:
                    self._add_capture(lam.method, name, write)
                    if t is not None:
                        lam.method.local_types.setdefault(name, t)
                return "local", name
            chain.append(p)
            p = p.parent
        if name == "this":
            return "const", "#undefined"
        r = self._resolve_global(name, s.ns)
        if r is not None:
            kind, q = r
            if kind == "var":
                return "global", "@" + q
            if kind == "function":
                g = "@" + q
                if g not in self.program.globals:
                    self.program.globals[g] = GlobalVar(q, "function", "Function", target=q)
                return "function", q
            return kind, q
        if name in SEEDED_GLOBALS or name in self.sdk_namespaces:
            g = "@" + name
            self.program.globals.setdefault(g, GlobalVar(name, "external", name))
            return "external", g
        if name in self.sdk_free:
            return "sdkfunc", name
        if name in BUILTIN_CLASSES:
            return "class", name
        if name in OPAQUE_GLOBALS:
            return "opaque", name
        raise UnresolvedSymbolError(name, s.path, node.line, node.col)

    @staticmethod
    def _add_capture(m: MethodDecl, name: str, write: bool) -> None:
        for i, (n, w) in enumerate(m.captures):
            if n == name:
                if write and not w:
                    m.captures[i] = (n, True)
                return
        m.captures.append((name, write))

    def _scope_type(self, name: str, s: _Scope) -> Optional[str]:
        p: Optional[_Scope] = s
        while p is not None:
            if name == "this" and not p.is_init and p.method.kind != "lambda":
                return p.class_q
            if name != "this" and name in p.declared:
                t = p.declared[name]
                return self._type_str(t, p.ns) if t is not None else p.method.local_types.get(name)
            p = p.parent
        return None

    def type_of(self, e: A.Expr, s: _Scope) -> Optional[str]:
        """Best-effort static class of ``e``; None when unknown."""
        if isinstance(e, A.This):
            return self._scope_type("this", s)
        if isinstance(e, A.Name):
            t = self._scope_type(e.ident, s)
            if t is not None:
                return t
            r = self._resolve_global(e.ident, s.ns)
            if r is not None and r[0] == "var":
                g = self.program.globals.get("@" + r[1])
                return g.type if g else None
            if r is None and (e.ident in SEEDED_GLOBALS or e.ident in self.sdk_namespaces):
                return e.ident
            return None
        if isinstance(e, A.New):
            r = self._resolve_global(e.type_name, s.ns)
            return r[1] if r is not None and r[0] == "class" else e.type_name
        if isinstance(e, A.Member):
            static = self._static_member(e, s) if self._static_path(e.obj, s) else None
            if static is not None and static in self.program.globals:
                return self.program.globals[static].type
            t = self.type_of(e.obj, s)
            if t in self.program.classes:
                return self.program.lookup_field(t, e.name) or None
            return None
        if isinstance(e, A.Call):
            if isinstance(e.callee, A.Member) and self._static_path(e.callee.obj, s) is not None:
                kind, q = self._static_path(e.callee.obj, s)
                target = (self.program.lookup_method(q, e.callee.name) if kind == "class"
                          else f"{q}.{e.callee.name}")
                if target in self.program.methods:
                    return self.program.methods[target].ret_type
                if target is not None and self.symbols.get(target, (None,))[0] == "class":
                    return target
                return None
            if isinstance(e.callee, A.Member):
                t = self.type_of(e.callee.obj, s)
                if t in self.program.classes:
                    q = self.program.lookup_method(t, e.callee.name)
                    if q and q in self.program.methods:
                        return self.program.methods[q].ret_type
                    return None
            if isinstance(e.callee, A.Name):
                r = self._resolve_global(e.callee.ident, s.ns)
                if r is not None and r[0] == "class":
                    return r[1]
                if r is not None and r[0] == "function":
                    _, (fd, ns, _) = self.symbols[r[1]]
                    return self._type_str(fd.ret_type, ns)
                d = self.sdk.lookup(e.callee.ident)
                if d is not None and d.returns_reference:
                    return d.ret
        return None

    def _lookup_class_method(self, class_q: Optional[str], name: str, node: A.Node, s: _Scope) -> str:
        q = self.program.lookup_method(class_q, name) if class_q else None
        if q is None:
            raise UnresolvedSymbolError(f"{class_q}.{name}", s.path, node.line, node.col)
        return q

    # ---- expressions -------------------------------------------------------

    def eval(self, e: A.Expr, s: _Scope, dst: Optional[str] = None) -> str:
        """Lower ``e``; the result lands in ``dst`` when given.  Returns the result operand."""
        if isinstance(e, A.Literal):
            return string_const(e.value) if e.kind == "string" else "#" + e.value
        if isinstance(e, (A.Name, A.This)):
            name = "this" if isinstance(e, A.This) else e.ident
            kind, op = self.resolve(name, s, e)
            if kind == "function":
                op = "@" + op
            elif kind not in ("local", "global", "external"):
                return PRIM
            return self._move(s, e, op, dst)
        if isinstance(e, A.New):
            return self._new(e.type_name, e.args, e, s, dst)
        if isinstance(e, A.Lambda):
            q = self._lambda(e, s)
            lhs = dst or self.temp(s, "Function")
            self.emit(s, Kind.ALLOC_FUNCTION, e, lhs=lhs, func=q)
            return lhs
        if isinstance(e, A.Member):
            static = self._static_member(e, s)
            if static is not None:
                return self._move(s, e, static, dst) if is_var(static) else PRIM
            base = self.eval(e.obj, s)
            if is_const(base):
                return PRIM
            lhs = dst or self.temp(s, self.type_of(e, s))
            self.emit(s, Kind.FIELD_LOAD, e, lhs=lhs, base=base, field=e.name)
            return lhs
        if isinstance(e, A.Index):
            base = self.eval(e.obj, s)
            self.eval(e.index, s)
            if is_const(base):
                return PRIM
            lhs = dst or self.temp(s)
            self.emit(s, Kind.FIELD_LOAD, e, lhs=lhs, base=base, field=ARRAY_ELEM)
            return lhs
        if isinstance(e, A.Call):
            return self.call(e, s, dst, want=True)
        if isinstance(e, (A.ArrayLit, A.ObjectLit)):
            type_name = "Array" if isinstance(e, A.ArrayLit) else "Object"
            t = self.temp(s, type_name)
            self.emit(s, Kind.ALLOC_OBJECT, e, lhs=t, type_name=type_name, args=())
            items = [(ARRAY_ELEM, x) for x in e.items] if isinstance(e, A.ArrayLit) else e.entries
            for fname, x in items:
                v = self.eval(x, s)
                if is_var(v):
                    self.emit(s, Kind.FIELD_STORE, x, base=t, field=fname, rhs=v)
            return self._move(s, e, t, dst)
        if isinstance(e, A.Binary):
            self.eval(e.left, s)
            if not (e.op == "instanceof"):
                self.eval(e.right, s)
            return PRIM
        if isinstance(e, A.Unary):
            self.eval(e.operand, s)
            return PRIM
        if isinstance(e, (A.Logical, A.Conditional)):
            if isinstance(e, A.Conditional):
                self.eval(e.cond, s)
                branches = [e.then, e.other]
            else:
                branches = [e.left, e.right]
            ops = [self.eval(b, s) for b in branches]
            live = [o for o in ops if is_var(o)]
            if not live:
                return PRIM
            lhs = dst or self.temp(s, self.type_of(branches[0], s))
            for o in live:
                if o != lhs:
                    self.emit(s, Kind.ASSIGN, e, lhs=lhs, rhs=o)
            return lhs
        if isinstance(e, A.Super):
            return self._move(s, e, "this", dst)
        raise DeclarationError(f"unsupported expression {type(e).__name__}", s.path, e.line, e.col)

    def _move(self, s: _Scope, node: A.Node, op: str, dst: Optional[str]) -> str:
        if dst is not None and dst != op:
            self.emit(s, Kind.ASSIGN, node, lhs=dst, rhs=op)
            return dst
        return op

    def _static_path(self, e: A.Expr, s: _Scope) -> Optional[tuple[str, str]]:
        """(namespace|class, qualified name) when ``e`` names one statically, e.g. ``A.B``."""
        if isinstance(e, A.Name):
            if s.has_local(e.ident) or self._is_captured_name(e.ident, s):
                return None
            r = self._resolve_global(e.ident, s.ns)
        elif isinstance(e, A.Member):
            outer = self._static_path(e.obj, s)
            if outer is None or outer[0] != "namespace":
                return None
            q = f"{outer[1]}.{e.name}"
            r = (self.symbols[q][0], q) if q in self.symbols else None
        else:
            return None
        return r if r is not None and r[0] in ("namespace", "class") else None

    def _static_member(self, e: A.Member, s: _Scope) -> Optional[str]:
        """`Namespace.x` / `Class.staticField` as a global operand; None for ordinary field access."""
        r = self._static_path(e.obj, s)
        if r is None:
            return None
        q = f"{r[1]}.{e.name}"
        if q in self.symbols:
            kind = self.symbols[q][0]
            if kind == "var":
                return "@" + q
            if kind == "function":
                self.program.globals.setdefault("@" + q, GlobalVar(q, "function", "Function", target=q))
                return "@" + q
            return PRIM
        if "@" + q in self.program.globals:
            return "@" + q
        raise UnresolvedSymbolError(q, s.path, e.line, e.col)

    def _is_captured_name(self, name: str, s: _Scope) -> bool:
        p = s.parent
        while p is not None:
            if p.has_local(name):
                return True
            p = p.parent
        return False

    def _new(self, type_name: str, args: list[A.Expr], node: A.Node, s: _Scope, dst: Optional[str]) -> str:
        r = self._resolve_global(type_name, s.ns)
        if r is not None and r[0] == "class":
            q = r[1]
        elif type_name in BUILTIN_CLASSES:
            q = type_name
        else:
            raise UnresolvedSymbolError(type_name, s.path, node.line, node.col)
        ops = tuple(self.eval(a, s) for a in args)
        lhs = dst or self.temp(s, q)
        self.emit(s, Kind.ALLOC_OBJECT, node, lhs=lhs, type_name=q, args=ops)
        return lhs

    def _lambda(self, e: A.Lambda, s: _Scope) -> str:
        self.lambda_count += 1
        q = f"anonymous_method_{self.lambda_count}"
        m = MethodDecl(q, q, [], self._type_str(e.ret_type, s.ns), owner=None, kind="lambda",
                       loc=Loc(s.path, e.line, e.col))
        if isinstance(e.body, A.Block):
            stmts: list[A.Stmt] = e.body.stmts
        else:
            stmts = [A.Return(e.body, line=e.body.line, col=e.body.col)]
        self._lower_body(m, e.params, stmts, s.path, s.ns, s.class_q, parent=s)
        return q

    def call(self, e: A.Call, s: _Scope, dst: Optional[str], want: bool) -> str:
        out = self._call(e, s, dst, want)
        if e.trailing is not None:
            for st in e.trailing.stmts:
                self.stmt(st, s)
        return out

    def _result(self, s: _Scope, e: A.Call, dst: Optional[str], want: bool) -> Optional[str]:
        if dst is not None:
            return dst
        return self.temp(s, self.type_of(e, s)) if want else None

    def _call(self, e: A.Call, s: _Scope, dst: Optional[str], want: bool) -> str:
        callee = e.callee
        if isinstance(callee, A.Super):
            sup = self.program.classes[s.class_q].superclass if s.class_q else None
            args = tuple(self.eval(a, s) for a in e.args)
            target = self.program.lookup_method(sup, "constructor") if sup else None
            if target is not None:
                self.emit(s, Kind.STATIC_CALL, e, callee=target, receiver="this", args=args)
            return PRIM
        if isinstance(callee, A.Name):
            kind, op = self.resolve(callee.ident, s, callee)
            if kind == "class":
                # ArkUI-style construction without `new`.
                return self._new(callee.ident, e.args, e, s, dst)
            if kind == "opaque":
                for a in e.args:
                    self.eval(a, s)
                return PRIM
            args = tuple(self.eval(a, s) for a in e.args)
            lhs = self._result(s, e, dst, want)
            if kind in ("function", "sdkfunc"):
                self.emit(s, Kind.STATIC_CALL, e, lhs=lhs, callee=op, args=args)
            elif kind in ("local", "global", "external"):
                self.emit(s, Kind.FUNCTION_POINTER_CALL, e, lhs=lhs, callee=op, args=args)
            else:
                raise UnresolvedSymbolError(callee.ident, s.path, callee.line, callee.col)
            return lhs or PRIM
        if isinstance(callee, A.Member):
            obj = callee.obj
            if isinstance(obj, A.Super):
                sup = self.program.classes[s.class_q].superclass if s.class_q else None
                target = self._lookup_class_method(sup, callee.name, callee, s)
                args = tuple(self.eval(a, s) for a in e.args)
                lhs = self._result(s, e, dst, want)
                self.emit(s, Kind.STATIC_CALL, e, lhs=lhs, callee=target, receiver="this", args=args)
                return lhs or PRIM
            r = self._static_path(obj, s)
            if r is not None:
                return self._qualified_call(r, callee, e, s, dst, want)
            if isinstance(obj, A.Name) and not s.has_local(obj.ident) and not self._is_captured_name(obj.ident, s):
                if self._resolve_global(obj.ident, s.ns) is None and obj.ident in OPAQUE_GLOBALS:
                    for a in e.args:
                        self.eval(a, s)
                    return PRIM
            base = self.eval(obj, s)
            if is_const(base):
                for a in e.args:
                    self.eval(a, s)
                return PRIM
            mode = self._call_mode(self.type_of(obj, s), callee.name)
            if mode == "field":
                fn = self.temp(s, "Function")
                self.emit(s, Kind.FIELD_LOAD, callee, lhs=fn, base=base, field=callee.name)
                args = tuple(self.eval(a, s) for a in e.args)
                lhs = self._result(s, e, dst, want)
                self.emit(s, Kind.FUNCTION_POINTER_CALL, e, lhs=lhs, callee=fn, args=args)
                return lhs or PRIM
            args = tuple(self.eval(a, s) for a in e.args)
            lhs = self._result(s, e, dst, want)
            self.emit(s, Kind.DYNAMIC_CALL, e, lhs=lhs, receiver=base, method=callee.name, args=args)
            return lhs or PRIM
        fn = self.eval(callee, s)
        args = tuple(self.eval(a, s) for a in e.args)
        if is_const(fn):
            return PRIM
        lhs = self._result(s, e, dst, want)
        self.emit(s, Kind.FUNCTION_POINTER_CALL, e, lhs=lhs, callee=fn, args=args)
        return lhs or PRIM

    def _qualified_call(self, r: tuple[str, str], callee: A.Member, e: A.Call, s: _Scope,
                        dst: Optional[str], want: bool) -> str:
        kind, q = r
        if kind == "class":
            target = self.program.lookup_method(q, callee.name)
            if target is None:
                raise UnresolvedSymbolError(f"{q}.{callee.name}", s.path, callee.line, callee.col)
            args = tuple(self.eval(a, s) for a in e.args)
            lhs = self._result(s, e, dst, want)
            self.emit(s, Kind.STATIC_CALL, e, lhs=lhs, callee=target, args=args)
            return lhs or PRIM
        member_q = f"{q}.{callee.name}"
        mk = self.symbols.get(member_q, (None,))[0]
        if mk == "class":
            return self._new(member_q, e.args, e, s, dst)
        args = tuple(self.eval(a, s) for a in e.args)
        lhs = self._result(s, e, dst, want)
        if mk == "function":
            self.emit(s, Kind.STATIC_CALL, e, lhs=lhs, callee=member_q, args=args)
        elif mk == "var":
            self.emit(s, Kind.FUNCTION_POINTER_CALL, e, lhs=lhs, callee="@" + member_q, args=args)
        else:
            raise UnresolvedSymbolError(member_q, s.path, callee.line, callee.col)
        return lhs or PRIM

    def _call_mode(self, recv_type: Optional[str], name: str) -> str:
        """'method' for a virtual call, 'field' for invoking a function stored in a field."""
        if recv_type == "globalThis":
            return "field"
        if recv_type in self.program.classes:
            if self.program.lookup_method(recv_type, name):
                return "method"
            if self.program.lookup_field(recv_type, name) is not None:
                return "field"
            return "method"
        if name in self.any_method:
            return "method"
        if name in self.any_field:
            return "field"
        return "method"

    # ---- statements --------------------------------------------------------

    def stmt(self, st: A.Stmt, s: _Scope) -> None:
        if isinstance(st, A.VarDecl):
            if st.init is None:
                return
            target = st.name
            if s.is_init:
                r = self._resolve_global(st.name, s.ns)
                target = "@" + r[1]
                g = self.program.globals[target]
                if g.type is None:
                    g.type = self._type_str(st.type, s.ns) or self.type_of(st.init, s)
            elif s.method.local_types.get(st.name) is None and st.type is None:
                s.method.local_types[st.name] = self.type_of(st.init, s)
            self.eval(st.init, s, dst=target)
        elif isinstance(st, A.AssignStmt):
            self._assign(st, s)
        elif isinstance(st, A.ExprStmt):
            if isinstance(st.expr, A.Call):
                self.call(st.expr, s, None, want=False)
            else:
                self.eval(st.expr, s)
        elif isinstance(st, A.Return):
            if st.value is not None:
                v = self.eval(st.value, s)
                if is_var(v):
                    self.emit(s, Kind.RETURN, st, rhs=v)
        elif isinstance(st, A.Block):
            for x in st.stmts:
                self.stmt(x, s)
        elif isinstance(st, A.If):
            self.eval(st.cond, s)
            self.stmt(st.then, s)
            if st.other is not None:
                self.stmt(st.other, s)
        elif isinstance(st, A.While):
            self.eval(st.cond, s)
            self.stmt(st.body, s)
        elif isinstance(st, A.For):
            if st.init is not None:
                self.stmt(st.init, s)
            if st.cond is not None:
                self.eval(st.cond, s)
            if st.update is not None:
                self.stmt(st.update, s)
            self.stmt(st.body, s)
        elif isinstance(st, A.ForOf):
            it = self.eval(st.iterable, s)
            if is_var(it):
                target = st.name
                if s.is_init:
                    target = "@" + self._resolve_global(st.name, s.ns)[1]
                self.emit(s, Kind.FIELD_LOAD, st, lhs=target, base=it, field=ARRAY_ELEM)
            self.stmt(st.body, s)
        elif isinstance(st, A.Jump):
            pass
        else:  # pragma: no cover - parser never produces other nodes here
            raise DeclarationError(f"unexpected statement {type(st).__name__}", s.path, st.line, st.col)

    def _assign(self, st: A.AssignStmt, s: _Scope) -> None:
        t = st.target
        if st.op != "=":
            if isinstance(t, (A.Member, A.Index)):
                self.eval(t.obj, s)
            self.eval(st.value, s)
            return
        if isinstance(t, A.Name):
            kind, op = self.resolve(t.ident, s, t, write=True)
            if kind in ("local", "global"):
                self.eval(st.value, s, dst=op)
            else:
                self.eval(st.value, s)
            return
        if isinstance(t, A.Member):
            static = self._static_member(t, s)
            if static is not None:
                if is_var(static):
                    self.eval(st.value, s, dst=static)
                return
            base = self.eval(t.obj, s)
            v = self.eval(st.value, s)
            if is_var(base) and is_var(v):
                self.emit(s, Kind.FIELD_STORE, st, base=base, field=t.name, rhs=v)
            return
        base = self.eval(t.obj, s)
        self.eval(t.index, s)
        v = self.eval(st.value, s)
        if is_var(base) and is_var(v):
            self.emit(s, Kind.FIELD_STORE, st, base=base, field=ARRAY_ELEM, rhs=v)


def desugar(modules: A.SourceModule | list[A.SourceModule], sdk: Optional[SdkDeclarations] = None) -> IRProgram:
    """Lower one or more parsed modules (a flat shared namespace) to an IRProgram."""
    if isinstance(modules, A.SourceModule):
        modules = [modules]
    program = Desugarer(modules, sdk).run()
    check_program(program)
    return program


def check_program(program: IRProgram) -> None:
    """Reject operands that are neither locals of their method nor known globals."""
    bad = []
    for m, st in program.statements():
        known = m.locals()
        for op in st.used_vars():
            if is_global(op):
                if op not in program.globals:
                    bad.append(f"{st.loc}: unknown global {op}")
            elif op not in known:
                bad.append(f"{st.loc}: '{op}' is not a local of {m.qname}")
        if st.kind == Kind.ALLOC_FUNCTION and st.func not in program.methods:
            bad.append(f"{st.loc}: unknown function {st.func}")
    if bad:
        raise IRCheckError("; ".join(bad))
