"""Line-oriented SDK declaration files.

Each non-blank, non-comment line declares one API::

    qualified.name(paramType, ...) -> ReturnType

``Type.*(...) -> R`` declares a fallback for every otherwise undeclared
method of ``Type``.  Function-typed parameters (anything containing ``=>``,
or ``Function``) are framework callbacks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .errors import SourceError

log = logging.getLogger(__name__)

PRIMITIVE_RETURNS = frozenset({"number", "string", "boolean", "void", "undefined", "null", "never", "bigint"})


@dataclass(frozen=True)
class SdkDecl:
    name: str
    params: tuple[str, ...]
    ret: str

    @property
    def returns_reference(self) -> bool:
        parts = [p.strip() for p in self.ret.strip("()").split("|")]
        return not all(p in PRIMITIVE_RETURNS for p in parts)

    @property
    def callback_params(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.params) if "=>" in p or p.strip() == "Function")


def _split_params(text: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in text:
        if ch in "([{<":
            depth += 1
        elif ch in ")]}>" and not (ch == ">" and cur and cur[-1] == "="):
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        out.append("".join(cur).strip())
    return out


def parse_line(line: str, path: str = "<decls>", lineno: int = 0) -> SdkDecl:
    open_at = line.find("(")
    arrow = line.rfind("->")
    if open_at <= 0 or arrow < open_at:
        raise SourceError(f"malformed SDK declaration: {line.strip()!r}", path, lineno, 1)
    name = line[:open_at].strip()
    close_at = line.rfind(")", 0, arrow)
    params = tuple(_split_params(line[open_at + 1:close_at]))
    return SdkDecl(name, params, line[arrow + 2:].strip())


class SdkDeclarations:
    def __init__(self, decls: Iterable[SdkDecl] = ()):
        self.decls: dict[str, SdkDecl] = {}
        for d in decls:
            self.decls[d.name] = d

    @classmethod
    def parse(cls, text: str, path: str = "<decls>") -> "SdkDeclarations":
        out = []
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if line:
                out.append(parse_line(line, path, n))
        return cls(out)

    @classmethod
    def builtin(cls) -> "SdkDeclarations":
        text = resources.files("minipta.data").joinpath("builtin.decl").read_text()
        return cls.parse(text, "builtin.decl")

    @classmethod
    def load(cls, path: Optional[str], include_builtin: bool = True) -> Optional["SdkDeclarations"]:
        """Builtin declarations plus ``path``; None (plugin inert) when ``path`` is missing."""
        base = cls.builtin() if include_builtin else cls()
        if path is None:
            return base
        p = Path(path)
        if not p.is_file():
            log.warning("SDK declaration file %s not found; SDK plugin is inert", path)
            return None
        extra = cls.parse(p.read_text(), str(p))
        base.decls.update(extra.decls)
        return base

    def lookup(self, qualified: str) -> Optional[SdkDecl]:
        d = self.decls.get(qualified)
        if d is None and "." in qualified:
            head = qualified.rsplit(".", 1)[0]
            d = self.decls.get(head + ".*")
        return d

    def heads(self) -> set[str]:
        """Top-level identifiers the declarations introduce (functions and namespaces)."""
        return {name.split(".", 1)[0] for name in self.decls}

    def type_names(self) -> set[str]:
        return {d.ret for d in self.decls.values() if d.returns_reference}

    def namespaces(self) -> set[str]:
        """Heads that are objects in their own right (e.g. ``userFileManager``), not types."""
        types = self.type_names()
        free = {n for n in self.decls if "." not in n}
        return {h for h in self.heads() if h not in types and h not in free}

    def callback_methods(self) -> dict[str, set[int]]:
        """Unqualified API name -> argument positions any declaration of it treats as a callback."""
        out: dict[str, set[int]] = {}
        for name, d in self.decls.items():
            if d.callback_params:
                out.setdefault(name.rsplit(".", 1)[-1], set()).update(d.callback_params)
        return out

    def free_functions(self) -> set[str]:
        return {n for n in self.decls if "." not in n}
