from __future__ import annotations

import json
import os
from pathlib import Path

import pytest

from conftest import CORPUS, CORPUS_FILES, LABELED, ROOT, pathological_source
from minipta.cli import main

GOLDEN = Path(__file__).resolve().parent / "golden"
UPDATE = os.environ.get("MINIPTA_UPDATE_GOLDEN") == "1"

MOTIVATING_REL = "corpus/motivating.mats"


@pytest.fixture
def in_root(monkeypatch):
    monkeypatch.chdir(ROOT)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def stats_lines(out):
    return [json.loads(line) for line in out.splitlines() if line.startswith("{")]


class TestAnalyze:
    def test_motivating_dot(self, capsys, tmp_path):
        dot = tmp_path / "cg.dot"
        code, out, _ = run(capsys, "analyze", str(CORPUS / "motivating.mats"), "--k", "2", "--dump-cg", str(dot))
        assert code == 0
        text = dot.read_text()
        assert text.startswith("digraph CG_pta")
        assert '"Func.getMessage" -> "anonymous_method_2"' in text
        assert '"Func.getMessage" -> "anonymous_method_4"' in text
        (stats,) = stats_lines(out)
        assert set(stats) >= {"nodes", "edges", "cg_edges", "iterations", "time_ms", "peak_mem_estimate"}

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "analyze", str(tmp_path / "missing.mats"))
        assert code == 2
        assert "error:" in err

    def test_syntax_error_is_fatal_with_position(self, capsys, tmp_path):
        bad = tmp_path / "bad.mats"
        bad.write_text("function main(): void {\n  let = 1;\n}\n")
        code, _, err = run(capsys, "analyze", str(bad), "--entries", "main")
        assert code == 2
        assert f"{bad}:2:7:" in err

    def test_no_entries_is_fatal(self, capsys, tmp_path):
        src = tmp_path / "none.mats"
        src.write_text("class T {}\n")
        code, _, err = run(capsys, "analyze", str(src))
        assert code == 2 and "--entries" in err

    def test_diagnostics_exit_1(self, capsys):
        code, _, err = run(capsys, "analyze", str(CORPUS / "local_storage.mats"))
        assert code == 1
        assert "non-constant storage key" in err

    def test_cha_json_one_record_per_file(self, capsys):
        paths = [str(p) for p in CORPUS_FILES]
        code, out, _ = run(capsys, "analyze", *paths, "--algo", "cha", "--format", "json")
        assert code == 0
        records = stats_lines(out)
        assert [r["program"] for r in records] == paths
        for r in records:
            assert r["algorithm"] == "cha"
            assert r["call_graph"]["algorithm"] == "cha"
            assert all(e["context"] is None for e in r["call_graph"]["edges"])

    def test_output_file(self, capsys, tmp_path):
        out_file = tmp_path / "all.json"
        paths = [str(p) for p in LABELED[:2]]
        code, _, _ = run(capsys, "analyze", *paths, "--format", "json", "--output", str(out_file))
        assert code == 0
        doc = json.loads(out_file.read_text())
        assert [d["program"] for d in doc] == paths

    def test_many_inputs_dump_directory(self, capsys, tmp_path):
        paths = [str(p) for p in LABELED[:2]]
        run(capsys, "analyze", *paths, "--dump-cg", str(tmp_path / "cg"), "--dump-pag", str(tmp_path / "pag"))
        assert sorted(p.name for p in (tmp_path / "cg").iterdir()) == sorted(f"{Path(p).stem}.cg.dot" for p in paths)
        assert len(list((tmp_path / "pag").iterdir())) == 2

    def test_jobs_match_sequential(self, capsys, tmp_path):
        paths = [str(p) for p in LABELED[:3]]
        run(capsys, "analyze", *paths, "--format", "json", "--output", str(tmp_path / "a.json"))
        run(capsys, "analyze", *paths, "--format", "json", "--output", str(tmp_path / "b.json"), "--jobs", "2")
        assert (tmp_path / "a.json").read_text() == (tmp_path / "b.json").read_text()

    def test_disable_storage_changes_cg(self, capsys, tmp_path):
        motivating = str(CORPUS / "motivating.mats")
        run(capsys, "analyze", motivating, "--dump-cg", str(tmp_path / "on.txt"))
        run(capsys, "analyze", motivating, "--disable-plugin", "storage", "--dump-cg", str(tmp_path / "off.txt"))
        on, off = (tmp_path / "on.txt").read_text(), (tmp_path / "off.txt").read_text()
        assert "anonymous_method_2" in on and "anonymous_method_2" not in off

    def test_timeout_exit_2(self, capsys, tmp_path):
        src = tmp_path / "patho.mats"
        src.write_text(pathological_source())
        code, _, err = run(capsys, "analyze", str(src), "--k", "5", "--heap-context", "--timeout", "1")
        assert code == 2
        assert "timeout" in err

    @pytest.mark.parametrize("argv", [["--k", "6"], ["--context", "object"], ["--disable-plugin", "nope"]])
    def test_rejected_flags(self, capsys, argv):
        with pytest.raises(SystemExit) as exc:
            main(["analyze", str(CORPUS / "motivating.mats"), *argv])
        assert exc.value.code == 2

    def test_nonpositive_timeout(self, capsys):
        code, _, err = run(capsys, "analyze", str(CORPUS / "motivating.mats"), "--timeout", "0")
        assert code == 2 and "--timeout" in err

    def test_sdk_decls_missing_makes_plugin_inert(self, capsys, tmp_path):
        src = str(CORPUS / "sdk_calls.mats")
        run(capsys, "analyze", src, "--dump-pag", str(tmp_path / "on.json"))
        run(capsys, "analyze", src, "--sdk-decls", str(tmp_path / "nope.decl"), "--dump-pag", str(tmp_path / "off.json"))
        kinds = lambda p: {o["kind"] for o in json.loads(p.read_text())["objects"]}
        assert "SdkStub" in kinds(tmp_path / "on.json")
        on_stubs = [o for o in json.loads((tmp_path / "on.json").read_text())["objects"] if o["site"][0] == "sdk"]
        off_stubs = [o for o in json.loads((tmp_path / "off.json").read_text())["objects"] if o["site"][0] == "sdk"]
        assert on_stubs and not off_stubs


class TestIrDump:
    def test_reload_from_json(self, capsys, tmp_path):
        ir = tmp_path / "motivating.json"
        assert run(capsys, "ir", "dump", str(CORPUS / "motivating.mats"), "--output", str(ir))[0] == 0
        run(capsys, "analyze", str(CORPUS / "motivating.mats"), "--dump-cg", str(tmp_path / "a.json"))
        run(capsys, "analyze", str(ir), "--dump-cg", str(tmp_path / "b.json"))
        assert (tmp_path / "a.json").read_text() == (tmp_path / "b.json").read_text()


class TestCompare:
    def test_rows(self, capsys):
        paths = [str(p) for p in LABELED]
        code, out, _ = run(capsys, "compare", *paths, "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert len(doc["rows"]) == 3 * len(paths)
        assert set(doc["edge_counts"]["deltas"]) == {"pta_vs_cha", "pta_vs_rta"}

    def test_text_table(self, capsys):
        paths = [str(p) for p in LABELED]
        code, out, _ = run(capsys, "compare", *paths)
        lines = out.splitlines()
        assert len([l for l in lines if l.split()[0] in {p.stem for p in LABELED}]) == 3 * len(paths)
        assert lines[-2].startswith("total edges: pta=")
        assert lines[-1].startswith("PTA vs CHA:")

    def test_trivial_program_all_100(self, capsys, tmp_path):
        src = tmp_path / "t.mats"
        src.write_text("function f(): void {}\nfunction main(): void {\n  f();\n}\n")
        (tmp_path / "t.truth.json").write_text('{"3:3": ["f"]}')
        code, out, _ = run(capsys, "compare", str(src), "--entries", "main", "--format", "json")
        assert code == 0
        rows = json.loads(out)["rows"]
        assert [(r["precision"], r["recall"]) for r in rows] == [(100.0, 100.0)] * 3

    def test_missing_sidecar(self, capsys):
        code, _, err = run(capsys, "compare", str(CORPUS / "sdk_calls.mats"), str(LABELED[0]))
        assert code == 1
        assert "no ground truth" in err


class TestGolden:
    """Byte-for-byte dumps of the motivating example (regenerate with MINIPTA_UPDATE_GOLDEN=1)."""

    CASES = {
        "motivating.cg.dot": ["analyze", MOTIVATING_REL, "--dump-cg", "{out}"],
        "motivating.cg.json": ["analyze", MOTIVATING_REL, "--dump-cg", "{out}"],
        "motivating.cg.txt": ["analyze", MOTIVATING_REL, "--dump-cg", "{out}"],
        "motivating.pag.dot": ["analyze", MOTIVATING_REL, "--dump-pag", "{out}"],
        "motivating.pag.json": ["analyze", MOTIVATING_REL, "--dump-pag", "{out}"],
        "motivating.cha.txt": ["analyze", MOTIVATING_REL, "--algo", "cha", "--dump-cg", "{out}"],
        "motivating.rta.txt": ["analyze", MOTIVATING_REL, "--algo", "rta", "--dump-cg", "{out}"],
        "motivating.ir.json": ["ir", "dump", MOTIVATING_REL, "--output", "{out}"],
        "storage_link.pag.dot": ["analyze", "corpus/storage_link.mats", "--dump-pag", "{out}"],
    }

    @pytest.mark.parametrize("name", sorted(CASES))
    def test_dump(self, name, capsys, tmp_path, in_root):
        out = tmp_path / name
        run(capsys, *[a.format(out=out) for a in self.CASES[name]])
        golden = GOLDEN / name
        if UPDATE:
            GOLDEN.mkdir(exist_ok=True)
            golden.write_text(out.read_text())
        assert out.read_text() == golden.read_text()

    def test_compare_json(self, capsys, in_root):
        _, out, _ = run(capsys, "compare", *[str(p.relative_to(ROOT)) for p in LABELED], "--format", "json")
        golden = GOLDEN / "compare.json"
        if UPDATE:
            golden.write_text(out)
        assert out == golden.read_text()
