"""Recursive-descent parser producing :class:`SourceModule` trees."""

from __future__ import annotations

import logging
from typing import Optional

from ..errors import DeclarationError, ParseError
from . import ast as A
from .lexer import MODIFIERS, Token, tokenize

log = logging.getLogger(__name__)

KNOWN_DECORATORS = frozenset({
    "Entry", "Component", "StorageProp", "StorageLink", "LocalStorageProp", "LocalStorageLink",
    "State", "Prop", "Link", "Provide", "Consume", "Observed", "ObjectLink", "Watch",
    "Builder", "BuilderParam", "CustomDialog", "Preview", "Reusable", "Track", "Styles",
    "Extend", "Concurrent", "Sendable",
})

_ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=")


class _Backtrack(Exception):
    pass


class Parser:
    def __init__(self, source: str, path: str = "<input>"):
        self.path = path
        self.toks = tokenize(source, path)
        self.pos = 0
        self.warnings: list[str] = []

    # ---- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.toks[min(self.pos + offset, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, message: str, *expected: str) -> ParseError:
        t = self.tok
        got = "end of input" if t.kind == "eof" else repr(t.value)
        return ParseError(f"{message}, got {got}", self.path, t.line, t.col, expected)

    def at(self, value: str) -> bool:
        t = self.tok
        return t.kind in ("punct", "keyword") and t.value == value

    def at_word(self, value: str) -> bool:
        return self.tok.kind == "ident" and self.tok.value == value

    def accept(self, value: str) -> bool:
        if self.at(value):
            self.advance()
            return True
        return False

    def expect(self, value: str) -> Token:
        if not self.at(value):
            raise self.error("syntax error", value)
        return self.advance()

    def ident(self) -> Token:
        t = self.tok
        # `constructor`, `of`, modifiers etc. are plain identifiers to the lexer.
        if t.kind != "ident":
            raise self.error("syntax error", "identifier")
        return self.advance()

    def end_statement(self) -> None:
        if self.accept(";"):
            return
        t = self.tok
        if t.nl_before or t.kind == "eof" or self.at("}"):
            return
        raise self.error("syntax error", ";", "newline", "}")

    # ---- declarations ------------------------------------------------------

    def parse_module(self) -> A.SourceModule:
        decls = self.declarations(top=True)
        if self.tok.kind != "eof":
            raise self.error("syntax error", "declaration", "statement", "end of input")
        _check_unique(decls, self.path)
        return A.SourceModule(self.path, decls, self.warnings)

    def declarations(self, top: bool) -> list[A.Declaration]:
        out: list[A.Declaration] = []
        while not (self.tok.kind == "eof" or (not top and self.at("}"))):
            out.append(self.declaration())
        return out

    def skip_modifiers(self) -> set[str]:
        seen: set[str] = set()
        while self.tok.kind == "ident" and self.tok.value in MODIFIERS and self.peek().kind in ("ident", "keyword"):
            seen.add(self.advance().value)
        return seen

    def decorators(self) -> list[A.Decorator]:
        decs: list[A.Decorator] = []
        while self.at("@"):
            at = self.advance()
            name = self.ident().value
            args: list[A.Expr] = []
            if self.at("(") and not self.tok.nl_before:
                args = self.arguments()
            if name not in KNOWN_DECORATORS:
                msg = f"{self.path}:{at.line}:{at.col}: unknown decorator @{name}"
                self.warnings.append(msg)
                log.warning(msg)
            decs.append(A.Decorator(name, args, line=at.line, col=at.col))
        return decs

    def declaration(self) -> A.Declaration:
        decs = self.decorators()
        self.skip_modifiers()
        t = self.tok
        if self.at("function"):
            if decs:
                raise self.error("decorators are not allowed on functions")
            return self.function_decl()
        if self.at("class") or self.at("struct"):
            return self.class_decl(decs)
        if self.at("namespace"):
            self.advance()
            name = self.ident().value
            self.expect("{")
            members = self.declarations(top=False)
            self.expect("}")
            _check_unique(members, self.path)
            return A.NamespaceDecl(name, members, line=t.line, col=t.col)
        if decs:
            raise self.error("decorators must precede a class or struct", "class", "struct")
        return self.statement()

    def function_decl(self) -> A.FunctionDecl:
        t = self.expect("function")
        name = self.ident().value
        params = self.params()
        ret = self.type_annotation()
        body = self.block()
        return A.FunctionDecl(name, params, ret, body, line=t.line, col=t.col)

    def class_decl(self, decs: list[A.Decorator]) -> A.ClassAst:
        t = self.advance()
        is_struct = t.value == "struct"
        name = self.ident().value
        superclass = None
        if self.accept("extends"):
            superclass = self.ident().value
            if self.at("<"):
                self.type_args()
        if self.at_word("implements"):
            self.advance()
            self.ident()
            while self.accept(","):
                self.ident()
        self.expect("{")
        fields: list[A.FieldDecl] = []
        methods: list[A.MethodAst] = []
        while not self.at("}"):
            if self.accept(";"):
                continue
            member = self.member()
            if isinstance(member, A.FieldDecl):
                fields.append(member)
            else:
                methods.append(member)
        self.expect("}")
        seen: dict[str, A.Node] = {}
        for m in [*fields, *methods]:
            if m.name in seen:
                raise DeclarationError(f"duplicate member '{m.name}' in {name}", self.path, m.line, m.col)
            seen[m.name] = m
        return A.ClassAst(name, superclass, fields, methods, decs, is_struct, line=t.line, col=t.col)

    def member(self) -> A.FieldDecl | A.MethodAst:
        decs = self.decorators()
        mods = self.skip_modifiers()
        t = self.tok
        is_static = "static" in mods
        if t.kind == "ident" and self.peek().is_punct("(") or (
            t.kind == "ident" and self.peek().is_punct("<")
        ):
            name = self.advance().value
            if self.at("<"):
                self.type_args()
            params = self.params()
            ret = self.type_annotation()
            body = self.block()
            return A.MethodAst(name, params, ret, body, is_static, decs, line=t.line, col=t.col)
        name = self.ident().value
        self.accept("?") or self.accept("!")
        ftype = self.type_annotation()
        init = self.expression() if self.accept("=") else None
        self.end_statement()
        return A.FieldDecl(name, ftype, init, decs, is_static, line=t.line, col=t.col)

    def params(self) -> list[A.Param]:
        self.expect("(")
        out: list[A.Param] = []
        while not self.at(")"):
            self.accept("...")
            t = self.ident()
            self.accept("?")
            ptype = self.type_annotation()
            if self.accept("="):
                self.expression()
            out.append(A.Param(t.value, ptype, line=t.line, col=t.col))
            if not self.accept(","):
                break
        self.expect(")")
        names = [p.name for p in out]
        if len(set(names)) != len(names):
            raise DeclarationError("duplicate parameter name", self.path, out[0].line, out[0].col)
        return out

    # ---- types -------------------------------------------------------------

    def type_annotation(self) -> Optional[A.TypeExpr]:
        if self.accept(":"):
            return self.type_expr()
        return None

    def type_args(self) -> list[A.TypeExpr]:
        self.expect("<")
        args = [self.type_expr()]
        while self.accept(","):
            args.append(self.type_expr())
        self.expect(">")
        return args

    def type_expr(self) -> A.TypeExpr:
        t = self.tok
        self.accept("|")
        members = [self.postfix_type()]
        while self.accept("|"):
            members.append(self.postfix_type())
        if len(members) == 1:
            return members[0]
        return A.UnionType(members, line=t.line, col=t.col)

    def postfix_type(self) -> A.TypeExpr:
        base = self.primary_type()
        while self.at("[") and self.peek().is_punct("]"):
            self.advance()
            self.advance()
            base = A.ArrayType(base, line=base.line, col=base.col)
        return base

    def primary_type(self) -> A.TypeExpr:
        t = self.tok
        if self.at("("):
            saved = self.pos
            try:
                return self.function_type()
            except (ParseError, _Backtrack):
                self.pos = saved
            self.advance()
            inner = self.type_expr()
            self.expect(")")
            return inner
        if t.kind == "keyword" and t.value in ("null", "undefined", "void"):
            self.advance()
            return A.TypeRef(t.value, line=t.line, col=t.col)
        if t.kind == "string":
            self.advance()
            return A.TypeRef("string", line=t.line, col=t.col)
        if t.kind == "number":
            self.advance()
            return A.TypeRef("number", line=t.line, col=t.col)
        if self.at("{"):
            # Object type literal: structurally opaque for pointer purposes.
            depth = 0
            while True:
                if self.at("{"):
                    depth += 1
                elif self.at("}"):
                    depth -= 1
                    if depth == 0:
                        self.advance()
                        break
                elif self.tok.kind == "eof":
                    raise self.error("unterminated object type", "}")
                self.advance()
            return A.TypeRef("object", line=t.line, col=t.col)
        name = self.ident().value
        while self.at(".") and self.peek().kind == "ident":
            self.advance()
            name += "." + self.advance().value
        if self.at("<"):
            args = self.type_args()
            if name == "Array" and len(args) == 1:
                return A.ArrayType(args[0], line=t.line, col=t.col)
        return A.TypeRef(name, line=t.line, col=t.col)

    def function_type(self) -> A.FunctionType:
        t = self.expect("(")
        ptypes: list[A.TypeExpr] = []
        while not self.at(")"):
            self.accept("...")
            self.ident()
            self.accept("?")
            ptypes.append(self.type_annotation() or A.TypeRef("any"))
            if not self.accept(","):
                break
        self.expect(")")
        if not self.at("=>"):
            raise _Backtrack()
        self.advance()
        return A.FunctionType(ptypes, self.type_expr(), line=t.line, col=t.col)

    # ---- statements --------------------------------------------------------

    def block(self) -> A.Block:
        t = self.expect("{")
        stmts: list[A.Stmt] = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated block", "}")
            stmts.append(self.statement())
        self.expect("}")
        return A.Block(stmts, line=t.line, col=t.col)

    def statement(self) -> A.Stmt:
        t = self.tok
        if self.at("{"):
            return self.block()
        if self.accept(";"):
            return A.Block([], line=t.line, col=t.col)
        if self.at("let") or self.at("const") or self.at("var"):
            decl = self.var_decl()
            self.end_statement()
            return decl
        if self.at("return"):
            self.advance()
            value = None
            if not (self.at(";") or self.at("}") or self.tok.nl_before or self.tok.kind == "eof"):
                value = self.expression()
            self.end_statement()
            return A.Return(value, line=t.line, col=t.col)
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            then = self.statement()
            other = self.statement() if self.accept("else") else None
            return A.If(cond, then, other, line=t.line, col=t.col)
        if self.at("while"):
            self.advance()
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            return A.While(cond, self.statement(), line=t.line, col=t.col)
        if self.at("do"):
            self.advance()
            body = self.statement()
            self.expect("while")
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            self.end_statement()
            return A.While(cond, body, line=t.line, col=t.col)
        if self.at("for"):
            return self.for_statement()
        if self.at("break") or self.at("continue"):
            self.advance()
            self.end_statement()
            return A.Jump(t.value, line=t.line, col=t.col)
        if self.at("function") or self.at("class") or self.at("struct"):
            raise self.error("nested declarations are not supported", "statement")
        stmt = self.simple_statement()
        self.end_statement()
        return stmt

    def var_decl(self) -> A.Stmt:
        t = self.advance()
        decls: list[A.Stmt] = []
        while True:
            n = self.ident()
            vtype = self.type_annotation()
            init = self.expression() if self.accept("=") else None
            decls.append(A.VarDecl(t.value, n.value, vtype, init, line=n.line, col=n.col))
            if not self.accept(","):
                break
        if len(decls) == 1:
            return decls[0]
        return A.Block(decls, line=t.line, col=t.col)

    def simple_statement(self) -> A.Stmt:
        t = self.tok
        target = self.expression()
        if self.tok.kind == "punct" and self.tok.value in _ASSIGN_OPS:
            op = self.advance().value
            if not isinstance(target, (A.Name, A.Member, A.Index)):
                raise ParseError("invalid assignment target", self.path, t.line, t.col)
            value = self.expression()
            return A.AssignStmt(target, op, value, line=t.line, col=t.col)
        if (self.at("++") or self.at("--")) and not self.tok.nl_before:
            self.advance()
        return A.ExprStmt(target, line=t.line, col=t.col)

    def for_statement(self) -> A.Stmt:
        t = self.expect("for")
        self.expect("(")
        if (self.at("let") or self.at("const") or self.at("var")) and self.peek(2).kind == "ident" and self.peek(2).value in ("of", "in"):
            self.advance()
            n = self.ident()
            self.advance()
            iterable = self.expression()
            self.expect(")")
            return A.ForOf(n.value, None, iterable, self.statement(), line=t.line, col=t.col)
        init: Optional[A.Stmt] = None
        if not self.at(";"):
            init = self.var_decl() if (self.at("let") or self.at("const") or self.at("var")) else self.simple_statement()
        self.expect(";")
        cond = None if self.at(";") else self.expression()
        self.expect(";")
        update = None if self.at(")") else self.simple_statement()
        self.expect(")")
        return A.For(init, cond, update, self.statement(), line=t.line, col=t.col)

    # ---- expressions -------------------------------------------------------

    def expression(self) -> A.Expr:
        return self.conditional()

    def conditional(self) -> A.Expr:
        cond = self.logical_or()
        if self.at("?"):
            t = self.advance()
            then = self.expression()
            self.expect(":")
            other = self.expression()
            return A.Conditional(cond, then, other, line=t.line, col=t.col)
        return cond

    def logical_or(self) -> A.Expr:
        left = self.logical_and()
        while self.at("||") or self.at("??"):
            op = self.advance()
            left = A.Logical(op.value, left, self.logical_and(), line=op.line, col=op.col)
        return left

    def logical_and(self) -> A.Expr:
        left = self.binary(0)
        while self.at("&&"):
            op = self.advance()
            left = A.Logical(op.value, left, self.binary(0), line=op.line, col=op.col)
        return left

    _LEVELS = (
        ("==", "!=", "===", "!=="),
        ("<", ">", "<=", ">=", "instanceof"),
        ("+", "-"),
        ("*", "/", "%"),
    )

    def binary(self, level: int) -> A.Expr:
        if level == len(self._LEVELS):
            return self.unary()
        left = self.binary(level + 1)
        ops = self._LEVELS[level]
        while (self.tok.kind == "punct" or self.at_word("instanceof")) and self.tok.value in ops:
            op = self.advance()
            if op.value == "instanceof":
                rt = self.ident()
                right: A.Expr = A.Name(rt.value, line=rt.line, col=rt.col)
            else:
                right = self.binary(level + 1)
            left = A.Binary(op.value, left, right, line=op.line, col=op.col)
        return left

    def unary(self) -> A.Expr:
        t = self.tok
        if (t.kind == "punct" and t.value in ("!", "-", "+", "++", "--")) or t.is_keyword("typeof"):
            self.advance()
            return A.Unary(t.value, self.unary(), line=t.line, col=t.col)
        return self.postfix()

    def postfix(self) -> A.Expr:
        expr = self.primary()
        while True:
            t = self.tok
            if self.at(".") or self.at("?."):
                self.advance()
                n = self.tok
                if n.kind not in ("ident", "keyword"):
                    raise self.error("syntax error", "property name")
                self.advance()
                expr = A.Member(expr, n.value, line=n.line, col=n.col)
            elif self.at("[") and not t.nl_before:
                self.advance()
                index = self.expression()
                self.expect("]")
                expr = A.Index(expr, index, line=t.line, col=t.col)
            elif self.at("(") and not t.nl_before:
                args = self.arguments()
                trailing = None
                if self.at("{") and not self.tok.nl_before:
                    trailing = self.block()
                expr = A.Call(expr, args, trailing, line=expr.line, col=expr.col)
            elif self.at("!") and not t.nl_before and not self.peek().is_punct("="):
                self.advance()
            elif self.at_word("as") and not t.nl_before:
                self.advance()
                self.type_expr()
            else:
                return expr

    def arguments(self) -> list[A.Expr]:
        self.expect("(")
        args: list[A.Expr] = []
        while not self.at(")"):
            self.accept("...")
            args.append(self.expression())
            if not self.accept(","):
                break
        self.expect(")")
        return args

    def primary(self) -> A.Expr:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return A.Literal("number", t.value, line=t.line, col=t.col)
        if t.kind == "string":
            self.advance()
            return A.Literal("string", t.value, line=t.line, col=t.col)
        if t.kind == "keyword":
            if t.value in ("true", "false"):
                self.advance()
                return A.Literal("boolean", t.value, line=t.line, col=t.col)
            if t.value in ("null", "undefined"):
                self.advance()
                return A.Literal(t.value, t.value, line=t.line, col=t.col)
            if t.value == "this":
                self.advance()
                return A.This(line=t.line, col=t.col)
            if t.value == "super":
                self.advance()
                return A.Super(line=t.line, col=t.col)
            if t.value == "new":
                self.advance()
                n = self.ident()
                name = n.value
                while self.at(".") and self.peek().kind == "ident":
                    self.advance()
                    name += "." + self.advance().value
                if self.at("<"):
                    self.type_args()
                args = self.arguments() if self.at("(") else []
                return A.New(name, args, line=t.line, col=t.col)
            if t.value == "function":
                raise self.error("function expressions are not supported; use an arrow function")
        if t.kind == "ident" and self.peek().is_punct("=>"):
            self.advance()
            self.advance()
            return A.Lambda([A.Param(t.value, line=t.line, col=t.col)], self.lambda_body(), line=t.line, col=t.col)
        if t.kind == "ident":
            self.advance()
            return A.Name(t.value, line=t.line, col=t.col)
        if self.at("("):
            saved = self.pos
            try:
                return self.lambda_expr()
            except (ParseError, _Backtrack):
                self.pos = saved
            self.advance()
            inner = self.expression()
            self.expect(")")
            return inner
        if self.at("["):
            self.advance()
            items: list[A.Expr] = []
            while not self.at("]"):
                self.accept("...")
                items.append(self.expression())
                if not self.accept(","):
                    break
            self.expect("]")
            return A.ArrayLit(items, line=t.line, col=t.col)
        if self.at("{"):
            self.advance()
            entries: list[tuple[str, A.Expr]] = []
            while not self.at("}"):
                k = self.tok
                if k.kind not in ("ident", "string", "keyword", "number"):
                    raise self.error("syntax error", "property name")
                self.advance()
                if self.accept(":"):
                    value = self.expression()
                else:
                    value = A.Name(k.value, line=k.line, col=k.col)
                entries.append((k.value, value))
                if not self.accept(","):
                    break
            self.expect("}")
            return A.ObjectLit(entries, line=t.line, col=t.col)
        raise self.error("syntax error", "expression")

    def lambda_expr(self) -> A.Lambda:
        t = self.tok
        params = self.params()
        ret = self.type_annotation()
        if not self.at("=>"):
            raise _Backtrack()
        self.advance()
        return A.Lambda(params, self.lambda_body(), ret, line=t.line, col=t.col)

    def lambda_body(self) -> A.Expr | A.Block:
        if self.at("{"):
            return self.block()
        return self.expression()


def _check_unique(decls: list[A.Declaration], path: str) -> None:
    seen: set[str] = set()
    for d in decls:
        if isinstance(d, (A.FunctionDecl, A.ClassAst, A.NamespaceDecl)):
            if d.name in seen:
                raise DeclarationError(f"duplicate declaration '{d.name}'", path, d.line, d.col)
            seen.add(d.name)


def parse_module(source_text: str, path: str = "<input>") -> A.SourceModule:
    """Parse one mini-ArkTS file.

    Raises :class:`ParseError` with line, column and the expected-token set on
    malformed input.  Unknown decorators only produce warnings.
    """
    return Parser(source_text, path).parse_module()
