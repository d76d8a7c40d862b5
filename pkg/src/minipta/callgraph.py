"""Call graphs, the CHA/RTA baselines and precision/recall scoring."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Optional

from .errors import LabelMismatchError
from .frontend.ir import CALLSITE_KINDS, IRProgram, IRStatement, Kind, MethodDecl, is_global
from .sdkdecls import SdkDeclarations

SDK_PREFIX = "sdk:"
ALGORITHMS = ("pta", "cha", "rta")


class CGEdge(NamedTuple):
    callsite: int
    context: Optional[tuple[int, ...]]
    target: str


@dataclass
class CallGraph:
    algorithm: str
    edges: dict[CGEdge, None] = field(default_factory=dict)
    callers: dict[int, str] = field(default_factory=dict)

    def add(self, callsite: int, caller: str, target: str, context: Optional[tuple[int, ...]] = None) -> bool:
        edge = CGEdge(callsite, context, target)
        if edge in self.edges:
            return False
        self.edges[edge] = None
        self.callers[callsite] = caller
        return True

    @property
    def nodes(self) -> list[str]:
        return sorted(set(self.callers.values()) | {e.target for e in self.edges})

    def sorted_edges(self) -> list[CGEdge]:
        return sorted(self.edges, key=lambda e: (e.callsite, e.context or (), e.target))

    def erased(self, include_sdk: bool = False) -> set[tuple[int, str]]:
        """Context-free (callsite, target) pairs; SDK pseudo-targets dropped unless asked for."""
        return {(e.callsite, e.target) for e in self.edges if include_sdk or not e.target.startswith(SDK_PREFIX)}

    def targets(self, callsite: int) -> set[str]:
        return {t for c, t in self.erased() if c == callsite}

    def to_json(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "nodes": self.nodes,
            "edges": [
                {"callsite": e.callsite, "caller": self.callers[e.callsite],
                 "context": list(e.context) if e.context is not None else None, "target": e.target}
                for e in self.sorted_edges()
            ],
        }

    def to_dot(self) -> str:
        lines = [f"digraph CG_{self.algorithm} {{", "  node [shape=box, fontname=\"Helvetica\"];"]
        for n in self.nodes:
            style = ", style=dashed" if n.startswith(SDK_PREFIX) else ""
            lines.append(f"  \"{n}\" [label=\"{n}\"{style}];")
        for e in self.sorted_edges():
            ctx = "" if e.context is None else " [" + ",".join(map(str, e.context)) + "]"
            lines.append(f"  \"{self.callers[e.callsite]}\" -> \"{e.target}\" [label=\"s{e.callsite}{ctx}\"];")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        return "".join(
            f"s{e.callsite} {self.callers[e.callsite]} -> {e.target}"
            + ("" if e.context is None else " [" + ",".join(map(str, e.context)) + "]") + "\n"
            for e in self.sorted_edges()
        )


# ---- class-hierarchy baselines -------------------------------------------------

def declared_types(program: IRProgram, m: MethodDecl, op: Optional[str]) -> Optional[list[str]]:
    """Program classes an operand may hold by its declaration; None when the type is unknown."""
    if op is None:
        return None
    if is_global(op):
        g = program.globals.get(op)
        t = g.type if g is not None else None
    elif op == "this":
        t = m.local_types.get("this") or m.owner
    else:
        t = dict(m.params).get(op) if op in m.param_names else m.local_types.get(op)
    if t is None or t in ("any", "unknown", "object", "Object"):
        return None
    members = t[1:-1].split("|") if t.startswith("(") and t.endswith(")") else [t]
    return [x for x in members if x in program.classes]


class _Hierarchy:
    def __init__(self, program: IRProgram, rapid: bool, sdk: Optional[SdkDeclarations] = None):
        self.program = program
        self.rapid = rapid
        self.callbacks = (sdk if sdk is not None else SdkDeclarations.builtin()).callback_methods()
        self.graph = CallGraph("rta" if rapid else "cha")
        self.instantiated: set[str] = set()
        self.fn_values: set[str] = set()
        self.callables = [m for m in program.methods.values() if m.kind in ("function", "lambda")]

    def run(self) -> CallGraph:
        while True:
            before = (len(self.instantiated), len(self.fn_values))
            self.graph = CallGraph(self.graph.algorithm)
            reached = self._reach()
            if not self.rapid:
                return self.graph
            for q in reached:
                for s in self.program.methods[q].body:
                    if s.kind == Kind.ALLOC_OBJECT:
                        self.instantiated.add(s.type_name)
                    elif s.kind == Kind.ALLOC_FUNCTION:
                        self.fn_values.add(s.func)
                    for op in s.used_vars():
                        g = self.program.globals.get(op)
                        if g is not None and g.kind == "function":
                            self.fn_values.add(g.target)
            if (len(self.instantiated), len(self.fn_values)) == before:
                return self.graph

    def _reach(self) -> list[str]:
        main = self.program.main
        order, seen = [main], {main}
        i = 0
        while i < len(order):
            m = self.program.methods[order[i]]
            i += 1
            for s in m.body:
                for t in self._targets(m, s):
                    self.graph.add(s.id, m.qname, t)
                    if t not in seen:
                        seen.add(t)
                        order.append(t)
        return order

    def _allowed_class(self, c: str) -> bool:
        return not self.rapid or c in self.instantiated

    def _fn_targets(self, nargs: int) -> list[str]:
        return sorted(f.qname for f in self.callables
                      if f.arity >= nargs and (not self.rapid or f.qname in self.fn_values))

    def _registers_callback(self, m: MethodDecl, s: IRStatement) -> bool:
        """An SDK call handed a callback, which the framework later invokes with no arguments."""
        p = self.program
        if s.kind == Kind.STATIC_CALL:
            if s.callee in p.methods:
                return False
            name = s.callee
        elif s.kind == Kind.DYNAMIC_CALL:
            types = declared_types(p, m, s.receiver)
            if types or any(p.lookup_method(c, s.method) for c in p.classes):
                return False
            name = s.method
        else:
            return False
        return any(i < len(s.args) and not s.args[i].startswith("#") and not s.args[i].startswith("'")
                   for i in self.callbacks.get(name.rsplit(".", 1)[-1], ()))

    def _targets(self, m: MethodDecl, s: IRStatement) -> list[str]:
        if self._registers_callback(m, s):
            return self._fn_targets(0)
        p = self.program
        if s.kind == Kind.ALLOC_OBJECT:
            ctor = p.lookup_method(s.type_name, "constructor") if s.type_name in p.classes else None
            return [ctor] if ctor else []
        if s.kind == Kind.STATIC_CALL:
            return [s.callee] if s.callee in p.methods else []
        if s.kind == Kind.DYNAMIC_CALL:
            types = declared_types(p, m, s.receiver)
            if types is None:
                cone = sorted(p.classes)
            else:
                cone = sorted({c for t in types for c in p.subclasses(t)})
            out = {p.lookup_method(c, s.method) for c in cone if self._allowed_class(c)}
            return sorted(t for t in out if t is not None)
        if s.kind == Kind.FUNCTION_POINTER_CALL:
            return self._fn_targets(len(s.args))
        return []


def run_cha(program: IRProgram, sdk: Optional[SdkDeclarations] = None) -> CallGraph:
    """Class-hierarchy analysis from DummyMain; function pointers may reach any function of sufficient arity."""
    return _Hierarchy(program, rapid=False, sdk=sdk).run()


def run_rta(program: IRProgram, sdk: Optional[SdkDeclarations] = None) -> CallGraph:
    """CHA restricted to classes instantiated and functions materialized in reachable code."""
    return _Hierarchy(program, rapid=True, sdk=sdk).run()


# ---- ground truth and scoring --------------------------------------------------

@dataclass
class GroundTruth:
    labels: dict[int, set[str]]

    @classmethod
    def load(cls, path: str | Path, program: IRProgram) -> "GroundTruth":
        return cls.parse(json.loads(Path(path).read_text(encoding="utf-8")), program)

    @classmethod
    def parse(cls, doc: dict, program: IRProgram) -> "GroundTruth":
        """Keys are call statement ids or ``line:col`` of the call; targets are method
        names or ``lambda@line:col`` for the lambda written at that position."""
        by_loc = program.callsite_locations()
        index = program.statement_index()
        lambdas = {(m.loc.line, m.loc.col): m.qname for m in program.methods.values() if m.kind == "lambda"}
        labels: dict[int, set[str]] = {}
        for key, targets in doc.items():
            if key.startswith("_"):
                continue
            if ":" in key:
                line, col = (int(x) for x in key.split(":"))
                ids = by_loc.get((line, col), [])
                if len(ids) != 1:
                    raise LabelMismatchError(f"label {key!r} matches {len(ids)} call sites")
                sid = ids[0]
            else:
                sid = int(key)
                if sid not in index or index[sid][1].kind not in CALLSITE_KINDS:
                    raise LabelMismatchError(f"label {key!r} is not a call site of the program")
            resolved = set()
            for t in targets:
                if t.startswith("lambda@"):
                    line, col = (int(x) for x in t[len("lambda@"):].split(":"))
                    if (line, col) not in lambdas:
                        raise LabelMismatchError(f"no lambda at {line}:{col}")
                    t = lambdas[(line, col)]
                elif t not in program.methods:
                    raise LabelMismatchError(f"unknown target method {t!r}")
                resolved.add(t)
            if not resolved:
                raise LabelMismatchError(f"label {key!r} has no targets")
            labels[sid] = resolved
        return cls(labels)

    def pairs(self) -> set[tuple[int, str]]:
        return {(c, t) for c, ts in self.labels.items() for t in ts}


@dataclass(frozen=True)
class Score:
    precision: float
    recall: float
    found: int
    reported: int
    expected: int

    def row(self) -> tuple[str, str]:
        return f"{self.precision * 100:.1f}%", f"{self.recall * 100:.1f}%"


def compare(cg: CallGraph, truth: GroundTruth) -> Score:
    """Precision over edges at labeled call sites, recall over labeled edges."""
    edges = {(c, t) for c, t in cg.erased() if c in truth.labels}
    expected = truth.pairs()
    hit = len(edges & expected)
    precision = hit / len(edges) if edges else 1.0
    recall = hit / len(expected) if expected else 1.0
    return Score(precision, recall, hit, len(edges), len(expected))


def edge_counts(cgs: Iterable[CallGraph]) -> dict:
    """Total context-erased edges per algorithm and PTA's relative change against each baseline."""
    totals: dict[str, int] = {}
    for cg in cgs:
        totals[cg.algorithm] = totals.get(cg.algorithm, 0) + len(cg.erased())
    out: dict = {"totals": totals, "deltas": {}}
    pta = totals.get("pta")
    for base in ("cha", "rta"):
        if pta is not None and totals.get(base):
            out["deltas"][f"pta_vs_{base}"] = round((pta - totals[base]) / totals[base] * 100, 1)
    return out
