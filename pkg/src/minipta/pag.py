"""Pointer Assignment Graph: pointers, abstract objects and inclusion edges.

Nodes are either variable pointers ``(local, method, context)`` or field
pointers ``(object, field)``.  An edge ``s -> d`` states ``pts(s) ⊆ pts(d)``.
Points-to sets hold dense object ids.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional

from .context import EMPTY, ContextInterner
from .frontend.ir import Loc

GLOBAL_SCOPE = "<global>"


class ObjKind(str, enum.Enum):
    CLASS_INSTANCE = "ClassInstance"
    STRUCT_INSTANCE = "StructInstance"
    FUNCTION_OBJECT = "FunctionObject"
    SDK_STUB = "SdkStub"
    STORAGE_CELL = "StorageCell"


class EdgeLabel(str, enum.Enum):
    COPY = "Copy"
    STORAGE_BACKFLOW = "StorageBackflow"
    THIS_BINDING = "ThisBinding"
    PARAM_BINDING = "ParamBinding"
    RETURN_BINDING = "ReturnBinding"


@dataclass(frozen=True)
class HeapObject:
    id: int
    site: Hashable
    kind: ObjKind
    type_name: str
    heap_ctx: int = 0
    loc: Optional[Loc] = None
    # Function objects: the method they run, and for clones the original
    # object plus bound receiver/argument nodes (None marks a primitive argument).
    func: Optional[str] = None
    origin: Optional[int] = None
    bound_this: Optional[int] = None
    has_bound_this: bool = False
    bound_args: tuple[Optional[int], ...] = ()

    @property
    def label(self) -> str:
        return f"o{self.id}"

    @property
    def root(self) -> int:
        """The object whose captured variables this (possibly cloned) function object shares."""
        return self.id if self.origin is None else self.origin


@dataclass
class PagNode:
    id: int
    key: tuple
    pts: set[int] = field(default_factory=set)

    @property
    def is_field(self) -> bool:
        return self.key[0] == "field"


class PAG:
    def __init__(self, contexts: Optional[ContextInterner] = None):
        self.contexts = contexts or ContextInterner()
        self.objects: list[HeapObject] = []
        self._object_ids: dict[tuple[Hashable, int], int] = {}
        self.nodes: list[PagNode] = []
        self._node_ids: dict[tuple, int] = {}
        self.succ: list[list[int]] = []
        self.edges: dict[tuple[int, int], EdgeLabel] = {}

    # ---- objects and nodes -------------------------------------------------

    def alloc_heap_object(self, site: Hashable, kind: ObjKind, type_name: str, heap_ctx: int = 0,
                          **extra) -> int:
        """Get-or-create the abstract object for ``(site, heap_ctx)``."""
        key = (site, heap_ctx)
        oid = self._object_ids.get(key)
        if oid is None:
            oid = len(self.objects) + 1
            self.objects.append(HeapObject(oid, site, kind, type_name, heap_ctx, **extra))
            self._object_ids[key] = oid
        return oid

    def object(self, oid: int) -> HeapObject:
        return self.objects[oid - 1]

    def find_object(self, site: Hashable, heap_ctx: int = 0) -> Optional[int]:
        return self._object_ids.get((site, heap_ctx))

    def _node(self, key: tuple) -> int:
        nid = self._node_ids.get(key)
        if nid is None:
            nid = len(self.nodes)
            self.nodes.append(PagNode(nid, key))
            self.succ.append([])
            self._node_ids[key] = nid
        return nid

    def node_for_var(self, local: str, method: str, context: int = 0) -> int:
        if local.startswith("@"):
            return self._node(("var", local, GLOBAL_SCOPE, 0))
        return self._node(("var", local, method, context))

    def node_for_field(self, obj: int, name: str) -> int:
        return self._node(("field", obj, name))

    def find_var(self, local: str, method: str, context: int = 0) -> Optional[int]:
        if local.startswith("@"):
            return self._node_ids.get(("var", local, GLOBAL_SCOPE, 0))
        return self._node_ids.get(("var", local, method, context))

    def find_field(self, obj: int, name: str) -> Optional[int]:
        return self._node_ids.get(("field", obj, name))

    def pts(self, node: Optional[int]) -> set[int]:
        return self.nodes[node].pts if node is not None else set()

    # ---- edges and propagation ---------------------------------------------

    def add_edge(self, src: int, dst: int, label: EdgeLabel = EdgeLabel.COPY) -> bool:
        """Insert ``src -> dst``; False if it already existed.  Propagation is the caller's job."""
        if (src, dst) in self.edges or src == dst:
            return False
        self.edges[(src, dst)] = label
        self.succ[src].append(dst)
        return True

    def propagate(self, src: int, delta: Iterable[int]) -> dict[int, set[int]]:
        """Push ``delta`` one step along src's out-edges; return each successor's strictly new objects."""
        out: dict[int, set[int]] = {}
        delta = set(delta)
        for d in self.succ[src]:
            new = delta - self.nodes[d].pts
            if new:
                self.nodes[d].pts |= new
                out[d] = new
        return out

    def check_subset_invariant(self) -> list[tuple[int, int]]:
        """Edges violating pts(src) ⊆ pts(dst); empty at a fixpoint."""
        return [(s, d) for (s, d) in self.edges if not self.nodes[s].pts <= self.nodes[d].pts]

    # ---- presentation ------------------------------------------------------

    def context_label(self, cid: int) -> str:
        return "[" + ",".join(str(c) for c in self.contexts.get(cid)) + "]"

    def node_label(self, nid: int) -> str:
        key = self.nodes[nid].key
        if key[0] == "field":
            obj = self.object(key[1])
            if obj.kind == ObjKind.STORAGE_CELL and key[2] == "value":
                return obj.type_name
            return f"{obj.label}.{key[2]}"
        _, local, method, ctx = key
        if method == GLOBAL_SCOPE:
            return local[1:]
        return f"{method}:{local}" + (self.context_label(ctx) if ctx else "")

    def object_label(self, oid: int) -> str:
        o = self.object(oid)
        where = f"@{o.loc.line}:{o.loc.col}" if o.loc is not None else ""
        detail = o.func if o.kind == ObjKind.FUNCTION_OBJECT else o.type_name
        return f"{o.label}\\n{detail}{where}"

    def emit_dot(self) -> str:
        lines = ["digraph PAG {", "  rankdir=LR;", "  node [fontname=\"Helvetica\"];"]
        for o in self.objects:
            lines.append(f"  {o.label} [shape=doublecircle, label=\"{self.object_label(o.id)}\"];")
        for n in self.nodes:
            shape = "box" if n.is_field else "ellipse"
            lines.append(f"  n{n.id} [shape={shape}, label=\"{_esc(self.node_label(n.id))}\"];")
        for (s, d), label in sorted(self.edges.items()):
            style = ", style=bold" if label == EdgeLabel.STORAGE_BACKFLOW else ""
            lines.append(f"  n{s} -> n{d} [label=\"{label.value}\"{style}];")
        for n in self.nodes:
            for oid in sorted(n.pts):
                lines.append(f"  o{oid} -> n{n.id} [style=dashed, arrowhead=none];")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "objects": [
                {"id": o.id, "kind": o.kind.value, "type": o.type_name, "site": _site_json(o.site),
                 "heap_ctx": list(self.contexts.get(o.heap_ctx)), "func": o.func,
                 "loc": list(o.loc) if o.loc else None}
                for o in self.objects
            ],
            "nodes": [
                {"id": n.id, "label": self.node_label(n.id), "kind": "field" if n.is_field else "var",
                 "pts": sorted(n.pts)}
                for n in self.nodes
            ],
            "edges": [[s, d, label.value] for (s, d), label in sorted(self.edges.items())],
        }

    def dump_json(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    @property
    def stats(self) -> dict:
        return {
            "nodes": len(self.nodes),
            "edges": len(self.edges),
            "objects": len(self.objects),
            "peak_pts": max((len(n.pts) for n in self.nodes), default=0),
        }


def _esc(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\"", "\\\"")


def _site_json(site: Hashable):
    if isinstance(site, tuple):
        return [_site_json(x) for x in site]
    return site


__all__ = ["EMPTY", "EdgeLabel", "GLOBAL_SCOPE", "HeapObject", "ObjKind", "PAG", "PagNode"]
