"""Joint entity and relation extraction on top of the MLN engine."""

from .builder import build_sentence_mln, sentence_evidence
from .decode import JointPrediction, consistency_report, decode, decode_pipeline
from .pipeline import run_inference, run_sentence
from .rules import (
    gen_entity_rules,
    gen_generic_rules,
    gen_relation_rules,
    gen_semantic_rules,
    gen_validity_rules,
)
from .schema import (
    ENTITY_TYPES,
    RELATION_TYPES,
    CompatibilityTable,
    GoldAnnotation,
    GoldRelation,
    MentionCandidate,
    MentionPair,
    SentenceBundle,
    data_path,
    dump_bundles,
    load_bundles,
    load_compatibility,
)
from .weights import WeightStrategy, cm_weight, lor_weight, pipeline_reliability

__all__ = [
    "ENTITY_TYPES",
    "RELATION_TYPES",
    "CompatibilityTable",
    "GoldAnnotation",
    "GoldRelation",
    "JointPrediction",
    "MentionCandidate",
    "MentionPair",
    "SentenceBundle",
    "WeightStrategy",
    "build_sentence_mln",
    "cm_weight",
    "consistency_report",
    "data_path",
    "decode",
    "decode_pipeline",
    "dump_bundles",
    "gen_entity_rules",
    "gen_generic_rules",
    "gen_relation_rules",
    "gen_semantic_rules",
    "gen_validity_rules",
    "load_bundles",
    "load_compatibility",
    "lor_weight",
    "pipeline_reliability",
    "run_inference",
    "run_sentence",
    "sentence_evidence",
]
