"""Entry-point collection and the synthetic DummyMain method."""

from __future__ import annotations

from typing import Iterable, Optional

from ..errors import EntryNotFoundError, NoEntriesError
from .ir import DUMMY_MAIN, IRProgram, IRStatement, Kind, Loc, MethodDecl

# Framework callbacks of a page/component, in the order the runtime drives them.
LIFECYCLE_METHODS = (
    "aboutToAppear", "build", "onPageShow", "onPageHide", "onBackPress", "aboutToDisappear",
)
COMPONENT_DECORATORS = ("Entry", "Component")


def _next_id(program: IRProgram) -> int:
    return max((s.id for _, s in program.statements()), default=0) + 1


def collect_entries(program: IRProgram, explicit: Optional[Iterable[str]] = None) -> list[MethodDecl]:
    """Build DummyMain and return the methods it invokes directly.

    Components (structs decorated @Entry or @Component) are instantiated once
    each and their lifecycle methods called on the fresh receiver.  ``explicit``
    names extra entries: free functions (``main``, ``N.main``) or ``Class.method``.
    File initializers always run first.
    """
    if program.main is not None:
        program.methods.pop(program.main, None)
    next_id = _next_id(program)
    body: list[IRStatement] = []
    entries: list[MethodDecl] = []
    temp_types: dict[str, str] = {}

    def emit(kind: Kind, loc: Loc, **kw) -> None:
        nonlocal next_id
        body.append(IRStatement(next_id, kind, loc, **kw))
        next_id += 1

    def fresh(type_name: str) -> str:
        name = f"$c{len(temp_types) + 1}"
        temp_types[name] = type_name
        return name

    for m in list(program.methods.values()):
        if m.kind == "init":
            emit(Kind.STATIC_CALL, m.loc, callee=m.qname)
            entries.append(m)

    for cls in program.classes.values():
        if not any(cls.has_decorator(d) for d in COMPONENT_DECORATORS):
            continue
        recv = fresh(cls.name)
        emit(Kind.ALLOC_OBJECT, cls.loc, lhs=recv, type_name=cls.name)
        for name in LIFECYCLE_METHODS:
            target = program.lookup_method(cls.name, name)
            if target is not None:
                emit(Kind.DYNAMIC_CALL, cls.loc, receiver=recv, method=name)
                entries.append(program.methods[target])

    for name in explicit or ():
        m = program.methods.get(name)
        if m is not None and m.kind in ("function", "method") and (m.owner is None or m.is_static):
            emit(Kind.STATIC_CALL, m.loc, callee=m.qname)
            entries.append(m)
            continue
        cls_name, _, meth = name.rpartition(".")
        target = program.lookup_method(cls_name, meth) if cls_name in program.classes else None
        if target is None:
            raise EntryNotFoundError(name)
        recv = fresh(cls_name)
        emit(Kind.ALLOC_OBJECT, program.classes[cls_name].loc, lhs=recv, type_name=cls_name)
        emit(Kind.DYNAMIC_CALL, program.classes[cls_name].loc, receiver=recv, method=meth)
        entries.append(program.methods[target])

    if not entries:
        raise NoEntriesError()
    main = MethodDecl(DUMMY_MAIN, DUMMY_MAIN, [], None, body=body, kind="dummy",
                      local_types=temp_types)
    program.methods[DUMMY_MAIN] = main
    program.main = DUMMY_MAIN
    program.entries = [m.qname for m in entries]
    return entries
