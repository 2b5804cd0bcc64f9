"""Bundle in, decoded prediction out."""

from __future__ import annotations

from ..grounding import build_factor_graph
from ..inference import BpConfig, bp_marginals, exact_marginals
from ..inference.exact import effective_size, plan_units
from .builder import build_sentence_mln
from .decode import decode
from .weights import WeightStrategy

INFERENCE_METHODS = ("exact", "bp", "auto")
AUTO_CAP = 20


def run_inference(graph, inference="auto", cap=AUTO_CAP, bp_config=None):
    """Exact or BP marginals; ``auto`` enumerates when at most 2**cap worlds remain."""
    if inference not in INFERENCE_METHODS:
        raise ValueError(f"inference must be one of {INFERENCE_METHODS}, got {inference!r}")
    if inference == "auto":
        inference = "exact" if effective_size(plan_units(graph)) <= cap else "bp"
    if inference == "exact":
        return exact_marginals(graph, cap=cap)
    return bp_marginals(graph, bp_config or BpConfig())


def run_sentence(
    bundle,
    table,
    strategy: WeightStrategy | None = None,
    semantic_rules=True,
    exactly_one=True,
    inference="auto",
    cap=AUTO_CAP,
    bp_config=None,
    keep_marginals=False,
):
    """Build, ground, infer and decode one sentence; returns ``(prediction, marginals)``."""
    program, evidence = build_sentence_mln(bundle, table, strategy, semantic_rules, exactly_one)
    graph = build_factor_graph(program, evidence)
    marginals = run_inference(graph, inference, cap, bp_config)
    return decode(marginals, bundle, table, keep_marginals), marginals
