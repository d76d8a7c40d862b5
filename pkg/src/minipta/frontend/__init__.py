"""Source frontend: lexing, parsing, desugaring to IR and entry collection."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Optional

from ..sdkdecls import SdkDeclarations
from .desugar import check_program, desugar
from .entries import collect_entries
from .ir import IRProgram, IRStatement, Kind, MethodDecl, Pattern, classify_statement
from .parser import parse_module

__all__ = [
    "IRProgram", "IRStatement", "Kind", "MethodDecl", "Pattern", "check_program", "classify_statement",
    "collect_entries", "desugar", "load_program", "parse_module", "source_files",
]


def source_files(path: str | Path) -> list[Path]:
    """A directory contributes all its ``.mats`` files (sorted); a file is itself."""
    p = Path(path)
    if p.is_dir():
        return sorted(p.glob("*.mats"))
    return [p]


def load_program(path: str | Path, entries: Optional[Iterable[str]] = None,
                 sdk: Optional[SdkDeclarations] = None) -> IRProgram:
    """Parse, desugar and attach DummyMain for one program (a file, directory or IR JSON)."""
    p = Path(path)
    if p.suffix == ".json":
        from .irjson import load_ir

        program = load_ir(p.read_text(encoding="utf-8"))
    else:
        modules = [parse_module(f.read_text(encoding="utf-8"), str(f)) for f in source_files(p)]
        program = desugar(modules, sdk)
    collect_entries(program, entries)
    return program
