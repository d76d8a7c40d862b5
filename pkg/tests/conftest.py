from __future__ import annotations

from pathlib import Path

import pytest

from minipta.frontend import load_program
from minipta.frontend.desugar import desugar
from minipta.frontend.entries import collect_entries
from minipta.frontend.parser import parse_module

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
CORPUS_FILES = sorted(CORPUS.glob("*.mats"))
LABELED = sorted(p for p in CORPUS_FILES if p.with_suffix(".truth.json").exists())
MOTIVATING = CORPUS / "motivating.mats"


def build(source: str, entries=None, path: str = "t.mats"):
    """Parse, desugar and add DummyMain for an inline program."""
    program = desugar(parse_module(source, path))
    collect_entries(program, entries)
    return program


@pytest.fixture
def motivating():
    return load_program(str(MOTIVATING))


@pytest.fixture(params=CORPUS_FILES, ids=lambda p: p.stem)
def corpus_program(request):
    return request.param, load_program(str(request.param))


def pathological_source(depth: int = 10, fanout: int = 6) -> str:
    """A call chain where each function calls the next ``fanout`` times: contexts grow as fanout**k."""
    lines = ["class T {}"]
    for i in range(depth - 1):
        calls = " ".join([f"f{i + 1}(x);"] * fanout)
        lines.append(f"function f{i}(x: T): T {{ {calls} return x; }}")
    lines.append(f"function f{depth - 1}(x: T): T {{ let y = new T(); return y; }}")
    lines.append("function main(): void { let t = new T(); " + "f0(t); " * fanout + "}")
    lines.append("main();")
    return "\n".join(lines) + "\n"


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
