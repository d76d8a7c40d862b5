"""Context-sensitive pointer analysis and call-graph construction for mini-ArkTS."""

from __future__ import annotations

from .callgraph import CallGraph, GroundTruth, compare, edge_counts, run_cha, run_rta
from .context import ContextSelector
from .frontend import desugar, load_program, parse_module
from .solver import AnalysisConfig, AnalysisResult, analyze

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig", "AnalysisResult", "CallGraph", "ContextSelector", "GroundTruth", "analyze", "compare",
    "desugar", "edge_counts", "load_program", "parse_module", "run_cha", "run_rta",
]
