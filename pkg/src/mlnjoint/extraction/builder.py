"""Assemble one MLN program and its evidence per sentence."""

from __future__ import annotations

from ..grounding import EvidenceSet
from ..logic import DomainDecl, GroundAtom, MlnProgram, PredicateDecl, validate_program
from .rules import (
    gen_entity_rules,
    gen_generic_rules,
    gen_pair_rules,
    gen_relation_rules,
    gen_semantic_rules,
    gen_structure_rules,
    gen_validity_rules,
)
from .schema import ENTITY_TYPES, RELATION_TYPES, CompatibilityTable, SentenceBundle, load_compatibility
from .weights import WeightStrategy

EVIDENCE_PREDICATES = ("ET", "RTP", "RTL", "CONS", "CONJ")
QUERY_PREDICATES = ("ETFinal", "RTFinal")


def sentence_declarations(bundle: SentenceBundle):
    """Domains and predicates sized to ``bundle``."""
    domains = (
        DomainDecl("entity", tuple(str(m.id) for m in bundle.mentions)),
        DomainDecl("etype", ENTITY_TYPES),
        DomainDecl("rtype", RELATION_TYPES),
    )
    predicates = (
        PredicateDecl("ET", ("entity", "etype"), "evidence"),
        PredicateDecl("RTP", ("entity", "entity", "rtype"), "evidence"),
        PredicateDecl("RTL", ("entity", "entity", "rtype"), "evidence"),
        PredicateDecl("CONS", ("entity", "entity"), "evidence"),
        PredicateDecl("CONJ", ("entity", "entity"), "evidence"),
        PredicateDecl("ETFinal", ("entity", "etype"), "query"),
        PredicateDecl("RTFinal", ("entity", "entity", "rtype"), "query"),
    )
    return domains, predicates


def sentence_evidence(bundle: SentenceBundle) -> EvidenceSet:
    atoms = []
    for m in bundle.mentions:
        atoms.append(GroundAtom("ET", (str(m.id), m.max_type)))
    for p in bundle.pairs:
        i, j = str(p.arg1), str(p.arg2)
        atoms.append(GroundAtom("RTP", (i, j, p.pipeline_max)))
        atoms.append(GroundAtom("RTL", (i, j, p.local_max)))
        if p.cons:
            atoms.append(GroundAtom("CONS", (i, j)))
        if p.conj:
            atoms.append(GroundAtom("CONJ", (i, j)))
    return EvidenceSet.from_atoms(atoms, closed=EVIDENCE_PREDICATES)


def build_sentence_mln(
    bundle: SentenceBundle,
    table: CompatibilityTable | None = None,
    strategy: WeightStrategy | None = None,
    semantic_rules=True,
    exactly_one=True,
):
    """Return ``(program, evidence)`` for one sentence.

    Rule order: generic hard rules, pair structure, entity rules, relation
    rules, validity rules, then the semantic rules when enabled.
    """
    if not bundle.mentions:
        raise ValueError(f"sentence {bundle.sentence_id} has no candidate mentions")
    table = load_compatibility() if table is None else table
    strategy = strategy or WeightStrategy()
    mentions = bundle.mention_map
    rules = gen_generic_rules(table, exactly_one) + gen_structure_rules()
    rules += gen_pair_rules(bundle, exactly_one)
    for m in bundle.mentions:
        rules += gen_entity_rules(m, strategy)
    for p in bundle.pairs:
        rules += gen_relation_rules(p, mentions, strategy)
    rules += gen_validity_rules(bundle.mentions, bundle.pairs, strategy, bundle.overlapping_pairs())
    if semantic_rules:
        rules += gen_semantic_rules(bundle)
    domains, predicates = sentence_declarations(bundle)
    program = validate_program(MlnProgram(domains, predicates, tuple(rules)))
    return program, sentence_evidence(bundle)
