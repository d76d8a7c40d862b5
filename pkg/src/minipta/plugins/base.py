"""Plugin interface and the priority-ordered manager."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional

from ..errors import MiniPTAError
from ..frontend.ir import IRStatement, MethodDecl
from ..pag import HeapObject

if TYPE_CHECKING:
    from ..solver import Solver

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CallSite:
    """A call statement under one caller context, with its operands mapped to PAG nodes."""

    stmt: IRStatement
    method: MethodDecl
    ctx: int
    receiver: Optional[int]
    args: tuple[Optional[int], ...]
    lhs: Optional[int]

    @property
    def name(self) -> str:
        return self.stmt.method or self.stmt.callee or ""


class Plugin:
    """A framework model.  ``match`` sees each receiver object of a pending
    dynamic call once; ``match_static`` sees calls whose callee is known
    without points-to information."""

    name = "plugin"
    priority = 100

    def match(self, solver: "Solver", call: CallSite, obj: HeapObject) -> bool:
        return False

    def handle(self, solver: "Solver", call: CallSite, obj: HeapObject) -> None:
        raise NotImplementedError

    def match_static(self, solver: "Solver", call: CallSite) -> bool:
        return False

    def handle_static(self, solver: "Solver", call: CallSite) -> None:
        raise NotImplementedError


class PluginManager:
    def __init__(self, plugins: Iterable[Plugin], disabled: Iterable[str] = ()):
        off = set(disabled)
        self.all = sorted(plugins, key=lambda p: p.priority)
        self.active = [p for p in self.all if p.name not in off]

    def dispatch(self, solver: "Solver", call: CallSite, obj: HeapObject) -> bool:
        """Let the first matching plugin handle ``call`` for receiver ``obj``."""
        for p in self.active:
            if p.match(solver, call, obj):
                return self._run(solver, call, p, lambda: p.handle(solver, call, obj))
        return False

    def dispatch_static(self, solver: "Solver", call: CallSite) -> bool:
        for p in self.active:
            if p.match_static(solver, call):
                return self._run(solver, call, p, lambda: p.handle_static(solver, call))
        return False

    @staticmethod
    def _run(solver: "Solver", call: CallSite, plugin: Plugin, action) -> bool:
        try:
            action()
        except MiniPTAError as exc:
            solver.diagnose(call.stmt, f"{plugin.name} plugin failed: {exc}")
            return False
        return True
