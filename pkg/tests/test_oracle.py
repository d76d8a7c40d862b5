from __future__ import annotations

import pytest

from conftest import CORPUS_FILES, build
from minipta.frontend import load_program
from minipta.solver import AnalysisConfig, analyze
from naive_oracle import naive_solve, structural

CONFIGS = [
    ("callsite", 0, False),
    ("callsite", 1, False),
    ("callsite", 2, False),
    ("callsite", 2, True),
    ("function", 2, False),
    ("insensitive", 0, False),
]


@pytest.mark.parametrize("selector, k, heap", CONFIGS, ids=lambda v: str(v))
@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.stem)
def test_worklist_matches_naive(path, selector, k, heap):
    program = load_program(str(path))
    pts, cg = structural(analyze(program, AnalysisConfig(selector=selector, k=k, heap_context=heap)))
    naive = naive_solve(program, selector=selector, k=k, heap_context=heap)
    assert pts == naive.nonempty()
    assert cg == naive.cg


class TestOracleSanity:
    def test_detects_difference(self):
        """The comparison is not vacuous: different programs give different oracle results."""
        a = build("class T {}\nfunction main(): void { let v = new T(); }", ["main"])
        b = build("class T {}\nfunction main(): void { let v = new T(); let w = v; }", ["main"])
        assert naive_solve(a).nonempty() != naive_solve(b).nonempty()

    def test_disabled_plugins(self):
        program = load_program(str(CORPUS_FILES[0]))
        off = frozenset({"storage", "function", "sdk"})
        pts, cg = structural(analyze(program, AnalysisConfig(disabled_plugins=off)))
        naive = naive_solve(program, disabled=off)
        assert pts == naive.nonempty() and cg == naive.cg
