"""Three-address IR consumed by the pointer analysis and the baselines.

Operands are plain strings:

* ``name`` -- a local variable, formal, ``this`` or a generated temp (``$t3``);
* ``@name`` -- a global (namespace-level variable, function object, or an
  external singleton such as ``AppStorage``);
* ``'text'`` -- a string constant;
* ``#lit`` -- any other primitive constant (``#1``, ``#true``, ``#null``).

Constants never get PAG nodes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional


class Kind(str, enum.Enum):
    ALLOC_OBJECT = "AllocObject"
    ALLOC_FUNCTION = "AllocFunction"
    ASSIGN = "Assign"
    FIELD_STORE = "FieldStore"
    FIELD_LOAD = "FieldLoad"
    STATIC_CALL = "StaticCall"
    DYNAMIC_CALL = "DynamicCall"
    FUNCTION_POINTER_CALL = "FunctionPointerCall"
    RETURN = "Return"


class Pattern(str, enum.Enum):
    """The eight pointer-operation patterns, plus return-value flow."""

    CREATE_OBJECT = "alloc/create-object"
    CREATE_FUNCTION = "alloc/create-function-pointer"
    ASSIGN = "assign"
    STORE = "store"
    LOAD = "load"
    STATIC_CALL = "call/static"
    DYNAMIC_CALL = "call/dynamic"
    FUNCTION_POINTER_CALL = "call/function-pointer"
    RETURN_VALUE = "call/return-value"

    @property
    def rule(self) -> str:
        return self.value.split("/")[0]


_PATTERNS = {
    Kind.ALLOC_OBJECT: Pattern.CREATE_OBJECT,
    Kind.ALLOC_FUNCTION: Pattern.CREATE_FUNCTION,
    Kind.ASSIGN: Pattern.ASSIGN,
    Kind.FIELD_STORE: Pattern.STORE,
    Kind.FIELD_LOAD: Pattern.LOAD,
    Kind.STATIC_CALL: Pattern.STATIC_CALL,
    Kind.DYNAMIC_CALL: Pattern.DYNAMIC_CALL,
    Kind.FUNCTION_POINTER_CALL: Pattern.FUNCTION_POINTER_CALL,
    Kind.RETURN: Pattern.RETURN_VALUE,
}

CALL_KINDS = frozenset({Kind.STATIC_CALL, Kind.DYNAMIC_CALL, Kind.FUNCTION_POINTER_CALL})
CALLSITE_KINDS = CALL_KINDS | {Kind.ALLOC_OBJECT}

ARRAY_ELEM = "elem"
DUMMY_MAIN = "%DummyMain"


def classify_statement(stmt: "IRStatement") -> Pattern:
    return _PATTERNS[stmt.kind]


# ---- operands ----------------------------------------------------------------

def is_const(op: Optional[str]) -> bool:
    return op is None or op[:1] in ("'", "#")


def is_global(op: Optional[str]) -> bool:
    return op is not None and op.startswith("@")


def is_var(op: Optional[str]) -> bool:
    return not is_const(op)


def string_const(text: str) -> str:
    return "'" + text.replace("\\", "\\\\").replace("'", "\\'") + "'"


def string_value(op: Optional[str]) -> Optional[str]:
    """The text of a string-constant operand, else None."""
    if op is None or not op.startswith("'"):
        return None
    out, i, body = [], 0, op[1:-1]
    while i < len(body):
        if body[i] == "\\" and i + 1 < len(body):
            out.append(body[i + 1])
            i += 2
        else:
            out.append(body[i])
            i += 1
    return "".join(out)


# ---- statements and declarations -------------------------------------------

class Loc(NamedTuple):
    file: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


@dataclass(frozen=True)
class IRStatement:
    id: int
    kind: Kind
    loc: Loc
    lhs: Optional[str] = None
    rhs: Optional[str] = None
    base: Optional[str] = None
    field: Optional[str] = None
    callee: Optional[str] = None      # StaticCall: method qname or external name; FP call: callee operand
    receiver: Optional[str] = None    # DynamicCall receiver; StaticCall explicit `this`
    method: Optional[str] = None      # DynamicCall method name
    type_name: Optional[str] = None   # AllocObject class
    func: Optional[str] = None        # AllocFunction target method
    args: tuple[str, ...] = ()

    _SLOTS = {
        Kind.ALLOC_OBJECT: ("lhs", "type_name", "args"),
        Kind.ALLOC_FUNCTION: ("lhs", "func"),
        Kind.ASSIGN: ("lhs", "rhs"),
        Kind.FIELD_STORE: ("base", "field", "rhs"),
        Kind.FIELD_LOAD: ("lhs", "base", "field"),
        Kind.STATIC_CALL: ("lhs", "callee", "receiver", "args"),
        Kind.DYNAMIC_CALL: ("lhs", "receiver", "method", "args"),
        Kind.FUNCTION_POINTER_CALL: ("lhs", "callee", "args"),
        Kind.RETURN: ("rhs",),
    }

    def operands(self) -> dict:
        out = {}
        for slot in self._SLOTS[self.kind]:
            value = getattr(self, slot)
            if slot == "args":
                out[slot] = list(value)
            elif value is not None:
                out[slot] = value
        return out

    def used_vars(self) -> Iterator[str]:
        """Every variable operand (locals and globals) the statement mentions."""
        for slot in ("lhs", "rhs", "base", "receiver"):
            v = getattr(self, slot)
            if is_var(v):
                yield v
        if self.kind == Kind.FUNCTION_POINTER_CALL and is_var(self.callee):
            yield self.callee
        for a in self.args:
            if is_var(a):
                yield a

    @property
    def is_call(self) -> bool:
        return self.kind in CALL_KINDS


@dataclass
class MethodDecl:
    qname: str
    name: str
    params: list[tuple[str, Optional[str]]]
    ret_type: Optional[str]
    body: list[IRStatement] = field(default_factory=list)
    owner: Optional[str] = None
    kind: str = "method"  # function | method | constructor | lambda | init | dummy
    is_static: bool = False
    loc: Loc = Loc("<synthetic>", 0, 0)
    # Variables captured from enclosing scopes: (name, written inside the lambda).
    captures: list[tuple[str, bool]] = field(default_factory=list)
    local_types: dict[str, Optional[str]] = field(default_factory=dict)
    primitive_locals: frozenset[str] = frozenset()

    @property
    def param_names(self) -> list[str]:
        return [p for p, _ in self.params]

    @property
    def arity(self) -> int:
        return len(self.params)

    def locals(self) -> set[str]:
        names = set(self.local_types) | set(self.param_names) | {"this"}
        names.update(c for c, _ in self.captures)
        return names


@dataclass
class ClassDecl:
    name: str
    superclass: Optional[str]
    fields: dict[str, Optional[str]]
    methods: dict[str, str]  # simple name -> qname
    decorators: list[tuple[str, list[str]]] = field(default_factory=list)
    is_struct: bool = False
    loc: Loc = Loc("<synthetic>", 0, 0)

    def has_decorator(self, name: str) -> bool:
        return any(d == name for d, _ in self.decorators)


@dataclass
class GlobalVar:
    name: str
    kind: str  # var | function | external
    type: Optional[str] = None
    target: Optional[str] = None  # function qname for kind == function
    loc: Loc = Loc("<synthetic>", 0, 0)


@dataclass
class IRProgram:
    classes: dict[str, ClassDecl] = field(default_factory=dict)
    methods: dict[str, MethodDecl] = field(default_factory=dict)
    globals: dict[str, GlobalVar] = field(default_factory=dict)
    files: list[str] = field(default_factory=list)
    main: Optional[str] = None
    entries: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def statements(self) -> Iterator[tuple[MethodDecl, IRStatement]]:
        for m in self.methods.values():
            for s in m.body:
                yield m, s

    def statement_index(self) -> dict[int, tuple[MethodDecl, IRStatement]]:
        return {s.id: (m, s) for m, s in self.statements()}

    def superclasses(self, name: str) -> Iterator[ClassDecl]:
        seen: set[str] = set()
        cur = self.classes.get(name)
        while cur is not None and cur.name not in seen:
            seen.add(cur.name)
            yield cur
            cur = self.classes.get(cur.superclass) if cur.superclass else None

    def lookup_method(self, class_name: str, method: str) -> Optional[str]:
        for c in self.superclasses(class_name):
            if method in c.methods:
                return c.methods[method]
        return None

    def lookup_field(self, class_name: str, name: str) -> Optional[str]:
        """The declared type of field ``name`` ('' when untyped), or None if undeclared."""
        for c in self.superclasses(class_name):
            if name in c.fields:
                return c.fields[name] or ""
        return None

    def subclasses(self, name: str) -> list[str]:
        """``name`` and every class that transitively extends it."""
        out = [name] if name in self.classes else []
        frontier = list(out)
        while frontier:
            cur = frontier.pop()
            for c in self.classes.values():
                if c.superclass == cur and c.name not in out:
                    out.append(c.name)
                    frontier.append(c.name)
        return sorted(out)

    def callsite_locations(self) -> dict[tuple[int, int], list[int]]:
        """(line, col) -> call statement ids, used to resolve ground-truth labels."""
        out: dict[tuple[int, int], list[int]] = {}
        for _, s in self.statements():
            if s.kind in CALLSITE_KINDS:
                out.setdefault((s.loc.line, s.loc.col), []).append(s.id)
        return out
