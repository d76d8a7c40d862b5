"""Syntax tree for mini-ArkTS.

The grammar is a small TypeScript/ArkTS subset: namespaces, free functions,
classes and decorated structs, `let`/`const` declarations, field access,
`new`, arrow functions, calls, assignment and `return`.  Control-flow
statements parse but carry no meaning beyond the statements they contain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

PRIMITIVE_TYPES = frozenset({"number", "string", "boolean", "void", "bigint", "symbol", "never"})


@dataclass(kw_only=True)
class Node:
    line: int = 0
    col: int = 0


# ---- types -----------------------------------------------------------------

@dataclass
class TypeRef(Node):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass
class ArrayType(Node):
    elem: "TypeExpr"

    def __str__(self) -> str:
        return f"{self.elem}[]"


@dataclass
class UnionType(Node):
    members: list["TypeExpr"]

    def __str__(self) -> str:
        return "(" + " | ".join(str(m) for m in self.members) + ")"


@dataclass
class FunctionType(Node):
    params: list["TypeExpr"]
    ret: "TypeExpr"

    def __str__(self) -> str:
        ps = ", ".join(f"p{i}: {t}" for i, t in enumerate(self.params))
        return f"(({ps}) => {self.ret})"


TypeExpr = Union[TypeRef, ArrayType, UnionType, FunctionType]


def is_primitive(t: Optional[TypeExpr]) -> bool:
    """True only when every alternative of ``t`` is a primitive type."""
    if t is None:
        return False
    if isinstance(t, TypeRef):
        return t.name in PRIMITIVE_TYPES
    if isinstance(t, UnionType):
        return all(is_primitive(m) for m in t.members)
    return False


def class_name_of(t: Optional[TypeExpr]) -> Optional[str]:
    if isinstance(t, TypeRef) and t.name not in PRIMITIVE_TYPES and t.name not in ("any", "unknown", "object"):
        return t.name
    return None


# ---- expressions -----------------------------------------------------------

@dataclass
class Name(Node):
    ident: str


@dataclass
class This(Node):
    pass


@dataclass
class Super(Node):
    pass


@dataclass
class Literal(Node):
    kind: str  # number | string | boolean | null | undefined
    value: str


@dataclass
class Member(Node):
    obj: "Expr"
    name: str


@dataclass
class Index(Node):
    obj: "Expr"
    index: "Expr"


@dataclass
class Call(Node):
    callee: "Expr"
    args: list["Expr"]
    # ArkUI container syntax: `Column() { ... }`.
    trailing: Optional["Block"] = None


@dataclass
class New(Node):
    type_name: str
    args: list["Expr"]


@dataclass
class Param(Node):
    name: str
    type: Optional[TypeExpr] = None


@dataclass
class Lambda(Node):
    params: list[Param]
    body: Union["Expr", "Block"]
    ret_type: Optional[TypeExpr] = None


@dataclass
class ArrayLit(Node):
    items: list["Expr"]


@dataclass
class ObjectLit(Node):
    entries: list[tuple[str, "Expr"]]


@dataclass
class Binary(Node):
    op: str
    left: "Expr"
    right: "Expr"


@dataclass
class Logical(Node):
    """`a || b`, `a && b`, `a ?? b`: the value may come from either side."""
    op: str
    left: "Expr"
    right: "Expr"


@dataclass
class Conditional(Node):
    cond: "Expr"
    then: "Expr"
    other: "Expr"


@dataclass
class Unary(Node):
    op: str
    operand: "Expr"


Expr = Union[Name, This, Super, Literal, Member, Index, Call, New, Lambda, ArrayLit,
             ObjectLit, Binary, Logical, Conditional, Unary]


# ---- statements ------------------------------------------------------------

@dataclass
class VarDecl(Node):
    kind: str  # let | const | var
    name: str
    type: Optional[TypeExpr] = None
    init: Optional[Expr] = None


@dataclass
class ExprStmt(Node):
    expr: Expr


@dataclass
class AssignStmt(Node):
    target: Expr
    op: str
    value: Expr


@dataclass
class Return(Node):
    value: Optional[Expr] = None


@dataclass
class Block(Node):
    stmts: list["Stmt"] = field(default_factory=list)


@dataclass
class If(Node):
    cond: Expr
    then: "Stmt"
    other: Optional["Stmt"] = None


@dataclass
class While(Node):
    cond: Expr
    body: "Stmt"


@dataclass
class For(Node):
    init: Optional["Stmt"]
    cond: Optional[Expr]
    update: Optional["Stmt"]
    body: "Stmt"


@dataclass
class ForOf(Node):
    name: str
    type: Optional[TypeExpr]
    iterable: Expr
    body: "Stmt"


@dataclass
class Jump(Node):
    keyword: str  # break | continue


Stmt = Union[VarDecl, ExprStmt, AssignStmt, Return, Block, If, While, For, ForOf, Jump]


# ---- declarations ----------------------------------------------------------

@dataclass
class Decorator(Node):
    name: str
    args: list[Expr] = field(default_factory=list)


@dataclass
class FunctionDecl(Node):
    name: str
    params: list[Param]
    ret_type: Optional[TypeExpr]
    body: Block


@dataclass
class FieldDecl(Node):
    name: str
    type: Optional[TypeExpr] = None
    init: Optional[Expr] = None
    decorators: list[Decorator] = field(default_factory=list)
    is_static: bool = False


@dataclass
class MethodAst(Node):
    name: str
    params: list[Param]
    ret_type: Optional[TypeExpr]
    body: Block
    is_static: bool = False
    decorators: list[Decorator] = field(default_factory=list)

    @property
    def is_constructor(self) -> bool:
        return self.name == "constructor"


@dataclass
class ClassAst(Node):
    name: str
    superclass: Optional[str]
    fields: list[FieldDecl]
    methods: list[MethodAst]
    decorators: list[Decorator] = field(default_factory=list)
    is_struct: bool = False


@dataclass
class NamespaceDecl(Node):
    name: str
    members: list["Declaration"]


Declaration = Union[FunctionDecl, ClassAst, NamespaceDecl, VarDecl, ExprStmt, AssignStmt,
                    Return, Block, If, While, For, ForOf, Jump]


@dataclass
class SourceModule:
    path: str
    declarations: list[Declaration] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def type_declarations(self) -> list[ClassAst]:
        out: list[ClassAst] = []

        def walk(decls: list[Declaration]) -> None:
            for d in decls:
                if isinstance(d, ClassAst):
                    out.append(d)
                elif isinstance(d, NamespaceDecl):
                    walk(d.members)

        walk(self.declarations)
        return out
