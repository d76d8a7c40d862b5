"""Render an IRProgram back to mini-ArkTS source.

The output re-parses and re-desugars to a statement stream with the same
multiset of statement kinds.  Lambdas are printed inline at their
``AllocFunction`` site; storage decorators are not printed because their
registration calls are already part of the constructor bodies.
"""

from __future__ import annotations

from typing import Optional

from .ir import IRProgram, IRStatement, Kind, MethodDecl

_INDENT = "  "


def _op(op: Optional[str]) -> str:
    if op is None:
        return "undefined"
    if op.startswith("@"):
        return op[1:]
    if op.startswith("#"):
        return "0" if op == "#expr" else op[1:]
    return op


class _Printer:
    def __init__(self, program: IRProgram):
        self.program = program
        self.lines: list[str] = []

    def out(self, depth: int, text: str) -> None:
        self.lines.append(_INDENT * depth + text)

    # ---- declarations ------------------------------------------------------

    def namespace_of(self, qname: str) -> tuple[str, ...]:
        parts = qname.split(".")[:-1]
        return tuple(parts)

    def run(self) -> str:
        tree: dict[tuple[str, ...], list[tuple[str, object]]] = {(): []}
        for c in self.program.classes.values():
            self._place(tree, self.namespace_of(c.name), ("class", c))
        for m in self.program.methods.values():
            if m.kind == "function":
                self._place(tree, self.namespace_of(m.qname), ("function", m))
        for op, g in self.program.globals.items():
            if g.kind == "var" and self.namespace_of(g.name) not in [tuple(c.split(".")) for c in self.program.classes]:
                self._place(tree, self.namespace_of(g.name), ("var", g))
        self._emit_ns(tree, (), 0)
        for m in self.program.methods.values():
            if m.kind == "init":
                self._locals(m, 0)
                for s in m.body:
                    self.stmt(s, m, 0)
        return "\n".join(self.lines) + "\n"

    def _place(self, tree, ns, item) -> None:
        for i in range(len(ns) + 1):
            tree.setdefault(ns[:i], [])
        tree[ns].append(item)

    def _emit_ns(self, tree, ns: tuple[str, ...], depth: int) -> None:
        for kind, item in tree[ns]:
            if kind == "var":
                t = f": {item.type}" if item.type else ""
                self.out(depth, f"let {item.name.split('.')[-1]}{t}")
            elif kind == "function":
                self.function(item, depth)
            else:
                self.klass(item, depth)
        for child in sorted(k for k in tree if len(k) == len(ns) + 1 and k[: len(ns)] == ns):
            self.out(depth, f"namespace {child[-1]} {{")
            self._emit_ns(tree, child, depth + 1)
            self.out(depth, "}")

    def klass(self, c, depth: int) -> None:
        for name, args in c.decorators:
            self.out(depth, f"@{name}" + (f"({', '.join(_op(a) for a in args)})" if args else ""))
        head = "struct" if c.is_struct else "class"
        ext = f" extends {c.superclass}" if c.superclass else ""
        self.out(depth, f"{head} {c.name.split('.')[-1]}{ext} {{")
        for fname, ftype in c.fields.items():
            self.out(depth + 1, f"{fname}: {ftype or 'any'}")
        for op, g in self.program.globals.items():
            if g.kind == "var" and g.name.rsplit(".", 1)[0] == c.name:
                self.out(depth + 1, f"static {g.name.split('.')[-1]}: {g.type or 'any'}")
        for qname in c.methods.values():
            m = self.program.methods.get(qname)
            if m is None or m.owner != c.name:
                continue
            prefix = "static " if m.is_static else ""
            self.out(depth + 1, f"{prefix}{m.name}({self.params(m)}){self.ret(m)} {{")
            self.body(m, depth + 2)
            self.out(depth + 1, "}")
        self.out(depth, "}")

    def function(self, m: MethodDecl, depth: int) -> None:
        self.out(depth, f"function {m.name}({self.params(m)}){self.ret(m)} {{")
        self.body(m, depth + 1)
        self.out(depth, "}")

    @staticmethod
    def params(m: MethodDecl) -> str:
        return ", ".join(f"{p}: {t}" if t else p for p, t in m.params)

    @staticmethod
    def ret(m: MethodDecl) -> str:
        return f": {m.ret_type}" if m.ret_type else ""

    def _locals(self, m: MethodDecl, depth: int) -> None:
        skip = set(m.param_names) | {n for n, _ in m.captures}
        for name, t in m.local_types.items():
            if name in skip or name == "this":
                continue
            self.out(depth, f"let {name}" + (f": {t}" if t else ""))

    def body(self, m: MethodDecl, depth: int) -> None:
        self._locals(m, depth)
        for s in m.body:
            self.stmt(s, m, depth)

    # ---- statements --------------------------------------------------------

    def stmt(self, s: IRStatement, m: MethodDecl, depth: int) -> None:
        args = ", ".join(_op(a) for a in s.args)
        assign = f"{_op(s.lhs)} = " if s.lhs is not None else ""
        k = s.kind
        if k == Kind.ALLOC_OBJECT:
            self.out(depth, f"{assign}new {s.type_name}({args})")
        elif k == Kind.ALLOC_FUNCTION:
            lam = self.program.methods[s.func]
            self.out(depth, f"{assign}({self.params(lam)}){self.ret(lam)} => {{")
            self.body(lam, depth + 1)
            self.out(depth, "}")
        elif k == Kind.ASSIGN:
            self.out(depth, f"{assign}{_op(s.rhs)}")
        elif k == Kind.FIELD_STORE:
            self.out(depth, f"{_op(s.base)}.{s.field} = {_op(s.rhs)}")
        elif k == Kind.FIELD_LOAD:
            self.out(depth, f"{assign}{_op(s.base)}.{s.field}")
        elif k == Kind.STATIC_CALL:
            if s.receiver == "this" and s.callee in self.program.methods:
                name = self.program.methods[s.callee].name
                callee = "super" if name == "constructor" else f"super.{name}"
            else:
                callee = s.callee
            self.out(depth, f"{assign}{callee}({args})")
        elif k == Kind.DYNAMIC_CALL:
            self.out(depth, f"{assign}{_op(s.receiver)}.{s.method}({args})")
        elif k == Kind.FUNCTION_POINTER_CALL:
            self.out(depth, f"{assign}{_op(s.callee)}({args})")
        elif k == Kind.RETURN:
            self.out(depth, f"return {_op(s.rhs)}")


def print_program(program: IRProgram) -> str:
    """Source text for every user method (DummyMain is regenerated on reload)."""
    return _Printer(program).run()
