"""Command-line entry point.

Exit codes: 0 success, 1 finished with diagnostics (or a compare input lacked
ground truth), 2 fatal error (unreadable input, syntax error, no entries,
timeout).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .callgraph import ALGORITHMS, CallGraph, GroundTruth, compare, edge_counts, run_cha, run_rta
from .context import MAX_K, SELECTORS
from .errors import MiniPTAError
from .frontend import load_program
from .frontend.irjson import dump_ir
from .plugins import PLUGIN_NAMES
from .sdkdecls import SdkDeclarations
from .solver import AnalysisConfig, Solver

log = logging.getLogger("minipta")

EXIT_OK, EXIT_DIAGNOSTICS, EXIT_FATAL = 0, 1, 2
FORMATS = ("dot", "json", "text")


@dataclass
class RunConfig:
    inputs: list[str]
    entries: list[str] = field(default_factory=list)
    selector: str = "callsite"
    k: int = 2
    algorithm: str = "pta"
    disabled_plugins: frozenset[str] = frozenset()
    sdk_decls: Optional[str] = None
    timeout: float = 1200.0
    heap_context: bool = False
    output_format: str = "text"
    output: Optional[str] = None
    dump_cg: Optional[str] = None
    dump_pag: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.inputs:
            raise ValueError("at least one input is required")
        if not 0 <= self.k <= MAX_K:
            raise ValueError(f"--k must be in [0, {MAX_K}]")
        if self.timeout <= 0:
            raise ValueError("--timeout must be positive")

    def sdk(self) -> Optional[SdkDeclarations]:
        """Declarations for the SDK plugin; a missing path leaves the plugin without any."""
        if self.sdk_decls is None:
            return SdkDeclarations.builtin()
        if not Path(self.sdk_decls).exists():
            log.warning("SDK declaration file %s not found; SDK plugin inert", self.sdk_decls)
            return None
        return SdkDeclarations.load(self.sdk_decls)

    def frontend_sdk(self) -> SdkDeclarations:
        """Names the frontend resolves, independent of whether the plugin models them."""
        if self.sdk_decls is not None and Path(self.sdk_decls).exists():
            return SdkDeclarations.load(self.sdk_decls)
        return SdkDeclarations.builtin()


def render_cg(cg: CallGraph, fmt: str) -> str:
    if fmt == "dot":
        return cg.to_dot()
    if fmt == "json":
        return json.dumps(cg.to_json(), indent=2) + "\n"
    return cg.to_text()


def _format_for(path: str, default: str) -> str:
    suffix = Path(path).suffix.lstrip(".")
    suffix = "text" if suffix == "txt" else suffix
    return suffix if suffix in FORMATS else default


def _dump_path(path: str, program: str, many: bool, kind: str, fmt: str) -> Path:
    if not many:
        return Path(path)
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d / f"{Path(program).stem}.{kind}.{fmt}"


def analyze_one(cfg: RunConfig, program_path: str, many: bool) -> dict:
    """Run one program; returns a JSON-ready record (never raises for analysis errors)."""
    record: dict = {"program": program_path, "algorithm": cfg.algorithm}
    try:
        program = load_program(program_path, cfg.entries or None, cfg.frontend_sdk())
        if cfg.algorithm == "pta":
            acfg = AnalysisConfig(cfg.selector, cfg.k, cfg.heap_context, cfg.disabled_plugins, cfg.sdk(),
                                  cfg.timeout)
            result = Solver(program, acfg).run()
            cg, pag, diagnostics = result.call_graph, result.pag, result.diagnostics
            s = result.stats
            stats = {"nodes": s["nodes"], "edges": s["edges"], "cg_edges": s["cg_edges"],
                     "iterations": s["iterations"], "time_ms": s["time_ms"],
                     "peak_mem_estimate": s["peak_mem_estimate"]}
        else:
            baseline = run_cha if cfg.algorithm == "cha" else run_rta
            cg = baseline(program, cfg.sdk())
            pag, diagnostics = None, []
            stats = {"nodes": 0, "edges": 0, "cg_edges": len(cg.edges), "iterations": 1,
                     "time_ms": 0.0, "peak_mem_estimate": 0}
    except (MiniPTAError, OSError, ValueError) as exc:
        record["error"] = str(exc)
        return record
    record["stats"] = stats
    record["diagnostics"] = program.warnings + diagnostics
    record["call_graph"] = cg.to_json()
    if cfg.dump_cg:
        fmt = _format_for(cfg.dump_cg, "dot") if not many else "dot"
        _dump_path(cfg.dump_cg, program_path, many, "cg", fmt).write_text(render_cg(cg, fmt), encoding="utf-8")
    if cfg.dump_pag and pag is not None:
        fmt = "json" if _format_for(cfg.dump_pag, "dot") == "json" and not many else "dot"
        text = pag.dump_json() if fmt == "json" else pag.emit_dot()
        _dump_path(cfg.dump_pag, program_path, many, "pag", fmt).write_text(text, encoding="utf-8")
    return record


def _run_many(cfg: RunConfig, jobs: int) -> list[dict]:
    many = len(cfg.inputs) > 1
    if jobs > 1 and many:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(analyze_one, [cfg] * len(cfg.inputs), cfg.inputs, [many] * len(cfg.inputs)))
    return [analyze_one(cfg, p, many) for p in cfg.inputs]


def cmd_analyze(cfg: RunConfig, jobs: int = 1) -> int:
    records = _run_many(cfg, jobs)
    code = EXIT_OK
    outputs = []
    for rec in records:
        if "error" in rec:
            print(f"error: {rec['error']}", file=sys.stderr)
            code = EXIT_FATAL
            continue
        for d in rec["diagnostics"]:
            print(f"warning: {d}", file=sys.stderr)
        if rec["diagnostics"] and code == EXIT_OK:
            code = EXIT_DIAGNOSTICS
        line = {"program": rec["program"], "algorithm": rec["algorithm"], **rec["stats"]}
        if cfg.output_format == "json" and not cfg.output:
            line["call_graph"] = rec["call_graph"]
        print(json.dumps(line))
        outputs.append(rec)
    if cfg.output:
        if cfg.output_format == "json":
            text = json.dumps([{"program": r["program"], "call_graph": r["call_graph"]} for r in outputs],
                              indent=2) + "\n"
        else:
            parts = []
            for r in outputs:
                cg = _cg_from_json(r["call_graph"])
                parts.append(render_cg(cg, cfg.output_format))
            text = "".join(parts)
        Path(cfg.output).write_text(text, encoding="utf-8")
    return code


def _cg_from_json(doc: dict) -> CallGraph:
    cg = CallGraph(doc["algorithm"])
    for e in doc["edges"]:
        ctx = tuple(e["context"]) if e["context"] is not None else None
        cg.add(e["callsite"], e["caller"], e["target"], ctx)
    return cg


def cmd_ir_dump(inputs: list[str], entries: list[str], output: Optional[str], sdk: SdkDeclarations) -> int:
    texts = []
    try:
        for path in inputs:
            texts.append(dump_ir(load_program(path, entries or None, sdk)))
    except (MiniPTAError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    text = "".join(texts)
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def truth_path(program: str, truth_dir: Optional[str]) -> Path:
    p = Path(program)
    stem = p.stem if p.is_file() else p.name
    return Path(truth_dir or p.parent) / f"{stem}.truth.json"


def cmd_compare(cfg: RunConfig, truth_dir: Optional[str], fmt: str) -> int:
    code = EXIT_OK
    rows = []
    graphs: list[CallGraph] = []
    for path in cfg.inputs:
        sidecar = truth_path(path, truth_dir)
        if not sidecar.exists():
            print(f"warning: no ground truth {sidecar} for {path}; skipped", file=sys.stderr)
            code = EXIT_DIAGNOSTICS
            continue
        try:
            program = load_program(path, cfg.entries or None, cfg.frontend_sdk())
            truth = GroundTruth.load(sidecar, program)
            acfg = AnalysisConfig(cfg.selector, cfg.k, cfg.heap_context, cfg.disabled_plugins, cfg.sdk(),
                                  cfg.timeout)
            cgs = {"pta": Solver(program, acfg).run().call_graph,
                   "cha": run_cha(program, cfg.sdk()), "rta": run_rta(program, cfg.sdk())}
        except (MiniPTAError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FATAL
        for algo in ALGORITHMS:
            score = compare(cgs[algo], truth)
            rows.append({"program": Path(path).stem, "algorithm": algo,
                         "precision": round(score.precision * 100, 1), "recall": round(score.recall * 100, 1),
                         "edges": len(cgs[algo].erased())})
            graphs.append(cgs[algo])
    summary = edge_counts(graphs)
    if fmt == "json":
        print(json.dumps({"rows": rows, "edge_counts": summary}, indent=2))
        return code
    print(f"{'program':<24} {'algo':<5} {'precision':>9} {'recall':>8} {'edges':>6}")
    for r in rows:
        print(f"{r['program']:<24} {r['algorithm']:<5} {r['precision']:>8.1f}% {r['recall']:>7.1f}% {r['edges']:>6}")
    totals = summary["totals"]
    print("total edges: " + ", ".join(f"{a}={totals.get(a, 0)}" for a in ALGORITHMS))
    deltas = summary["deltas"]
    if deltas:
        print("PTA vs CHA: {:+.1f}%  PTA vs RTA: {:+.1f}%".format(deltas.get("pta_vs_cha", 0.0),
                                                                deltas.get("pta_vs_rta", 0.0)))
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minipta", description="Pointer analysis and call graphs for mini-ArkTS.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("inputs", nargs="+", help=".mats file, directory of .mats files, or IR JSON")
        p.add_argument("--entries", default="", help="comma-separated explicit entry functions")
        p.add_argument("--k", type=int, default=2, choices=range(0, MAX_K + 1), metavar="{0..5}")
        p.add_argument("--context", choices=SELECTORS, default="callsite")
        p.add_argument("--sdk-decls", help="extra SDK declaration file (missing file disables SDK models)")
        p.add_argument("--disable-plugin", action="append", default=[], choices=PLUGIN_NAMES)
        p.add_argument("--timeout", type=float, default=1200.0, help="seconds per program (default 1200)")
        p.add_argument("--heap-context", action="store_true", help="clone objects per allocating context")

    a = sub.add_parser("analyze", help="run PTA, CHA or RTA and print stats")
    common(a)
    a.add_argument("--algo", choices=ALGORITHMS, default="pta")
    a.add_argument("--dump-cg", help="write the call graph (format from extension; a directory for many inputs)")
    a.add_argument("--dump-pag", help="write the PAG as DOT (or JSON for a .json path)")
    a.add_argument("--format", choices=FORMATS, default="text", help="format for --output / stdout call graphs")
    a.add_argument("--output", help="write all call graphs to this file in --format")
    a.add_argument("--jobs", type=int, default=1)

    ir = sub.add_parser("ir", help="IR utilities")
    irsub = ir.add_subparsers(dest="ir_command", required=True)
    dump = irsub.add_parser("dump", help="print the JSON IR")
    dump.add_argument("inputs", nargs="+")
    dump.add_argument("--entries", default="")
    dump.add_argument("--sdk-decls")
    dump.add_argument("--output")

    c = sub.add_parser("compare", help="precision/recall of pta, cha and rta against ground truth")
    common(c)
    c.add_argument("--truth-dir", help="directory of <program>.truth.json sidecars (default: next to each input)")
    c.add_argument("--format", choices=("text", "json"), default="text")
    return parser


def _configure_logging() -> None:
    level = os.environ.get("MINIPTA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    entries = [e.strip() for e in getattr(args, "entries", "").split(",") if e.strip()]
    if args.command == "ir":
        sdk = SdkDeclarations.load(args.sdk_decls) if args.sdk_decls and Path(args.sdk_decls).exists() \
            else SdkDeclarations.builtin()
        return cmd_ir_dump(args.inputs, entries, args.output, sdk)
    try:
        cfg = RunConfig(
            inputs=args.inputs, entries=entries, selector=args.context, k=args.k,
            algorithm=getattr(args, "algo", "pta"), disabled_plugins=frozenset(args.disable_plugin),
            sdk_decls=args.sdk_decls, timeout=args.timeout, heap_context=args.heap_context,
            output_format=args.format, output=getattr(args, "output", None),
            dump_cg=getattr(args, "dump_cg", None), dump_pag=getattr(args, "dump_pag", None),
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    if args.command == "analyze":
        return cmd_analyze(cfg, max(1, args.jobs))
    return cmd_compare(cfg, args.truth_dir, args.format)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
