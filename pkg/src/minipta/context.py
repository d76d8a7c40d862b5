"""Calling contexts: k-limited call strings, interned to dense ids."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .frontend.ir import is_global

Context = tuple[int, ...]
EMPTY: Context = ()
MAX_K = 5
SELECTORS = ("insensitive", "callsite", "function")


@dataclass
class ContextInterner:
    """Maps each distinct context to one dense id; id 0 is the empty context."""

    _ids: dict[Context, int] = field(default_factory=lambda: {EMPTY: 0})
    _contexts: list[Context] = field(default_factory=lambda: [EMPTY])

    def intern(self, ctx: Context) -> int:
        cid = self._ids.get(ctx)
        if cid is None:
            cid = len(self._contexts)
            self._ids[ctx] = cid
            self._contexts.append(ctx)
        return cid

    def get(self, cid: int) -> Context:
        return self._contexts[cid]

    def __len__(self) -> int:
        return len(self._contexts)


@dataclass(frozen=True)
class ContextSelector:
    """How a callee's context derives from its caller's.

    ``callsite`` prepends the call statement id, ``function`` prepends the
    caller's method index; both keep the ``k`` most recent elements.
    ``insensitive`` always yields the empty context.
    """

    name: str = "callsite"
    k: int = 2

    def __post_init__(self) -> None:
        if self.name not in SELECTORS:
            raise ValueError(f"unknown context selector {self.name!r}; expected one of {SELECTORS}")
        if not 0 <= self.k <= MAX_K:
            raise ValueError(f"k must be in [0, {MAX_K}], got {self.k}")

    @property
    def sensitive(self) -> bool:
        return self.name != "insensitive" and self.k > 0

    def select(self, callsite: int, caller_ctx: Context, caller_method: int) -> Context:
        if not self.sensitive:
            return EMPTY
        head = callsite if self.name == "callsite" else caller_method
        return ((head,) + caller_ctx)[: self.k]


def select_callee_context(selector: ContextSelector, callsite: int, caller_ctx: Context,
                          caller_method: int, interner: Optional[ContextInterner] = None) -> int | Context:
    """Select and, when an interner is given, intern the callee context."""
    ctx = selector.select(callsite, caller_ctx, caller_method)
    return interner.intern(ctx) if interner is not None else ctx


def should_suppress_context(operand: Optional[str]) -> bool:
    """Globals (globalThis, AppStorage, namespace variables, function objects) share one node across contexts."""
    return is_global(operand)
