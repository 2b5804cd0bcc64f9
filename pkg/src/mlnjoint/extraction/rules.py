"""Rule families of the per-sentence extraction MLN.

Rules are written as rule-file text and parsed, which keeps every generated
formula identical to what ``print_program`` would emit for it.
"""

from __future__ import annotations

import logging

from ..logic import HARD, WeightedFormula
from ..parser import parse_formula
from .schema import ENTITY_TYPES, RELATION_TYPES, CompatibilityTable, SentenceBundle
from .weights import WeightStrategy, pipeline_reliability

logger = logging.getLogger(__name__)


def _rule(text, weight=HARD):
    return WeightedFormula(parse_formula(text), weight)


def _any_type(var, types):
    return " v ".join(f"ETFinal({var},{t})" for t in types)


def gen_compatibility_rules(table: CompatibilityTable) -> list[WeightedFormula]:
    """Both argument roles of every compatibility row."""
    out = []
    for row in table.rows:
        allowed = [t for t in ENTITY_TYPES if t in row.allowed_other]
        for fixed, other in (("x", "y"), ("y", "x")):
            out.append(
                _rule(
                    f"RTFinal(x,y,{row.relation}) ^ ETFinal({fixed},{row.fixed_type}) "
                    f"=> ({_any_type(other, allowed)})"
                )
            )
    return out


def gen_identity_rules() -> list[WeightedFormula]:
    """Co-referent mentions share their type, in both directions."""
    return [
        _rule("RTFinal(x,y,IDN) ^ ETFinal(x,z) => ETFinal(y,z)"),
        _rule("RTFinal(x,y,IDN) ^ ETFinal(y,z) => ETFinal(x,z)"),
    ]


def gen_exactly_one_rules() -> list[WeightedFormula]:
    """One type per mention, and at most one relation type per mention pair.

    The at-least-one half for relations is per candidate pair and lives in
    :func:`gen_pair_rules`, since non-pairs take no relation at all.
    """
    return [
        _rule(_any_type("x", ENTITY_TYPES)),
        _rule("(s != t) ^ ETFinal(x,s) => !ETFinal(x,t)"),
        _rule("(r != s) ^ RTFinal(x,y,r) => !RTFinal(x,y,s)"),
    ]


def gen_structure_rules() -> list[WeightedFormula]:
    """Relations hold between unordered pairs of distinct mentions."""
    return [
        _rule("RTFinal(x,y,r) <=> RTFinal(y,x,r)"),
        _rule("!RTFinal(x,x,r)"),
    ]


def gen_generic_rules(table: CompatibilityTable, exactly_one=True) -> list[WeightedFormula]:
    """Hard rules shared by every sentence MLN."""
    if not table.rows:
        logger.warning("compatibility table is empty; no type constraints on relations")
    rules = gen_compatibility_rules(table) + gen_identity_rules()
    if exactly_one:
        rules += gen_exactly_one_rules()
    return rules


def gen_entity_rules(mention, strategy: WeightStrategy) -> list[WeightedFormula]:
    emax = mention.max_type
    return [
        _rule(f"ET({mention.id},{emax}) <=> ETFinal({mention.id},{t})", strategy.weight(p))
        for t, p in mention.entity_scores.items()
    ]


def gen_relation_rules(pair, mentions, strategy: WeightStrategy) -> list[WeightedFormula]:
    i, j = pair.ids
    wt_p = pipeline_reliability(mentions[i], mentions[j])
    rp, rl = pair.pipeline_max, pair.local_max
    out = []
    for r in RELATION_TYPES:
        out.append(
            _rule(
                f"RTP({i},{j},{rp}) <=> RTFinal({i},{j},{r})",
                strategy.pipeline_weight(pair.pipeline_scores[r], wt_p),
            )
        )
        out.append(_rule(f"RTL({i},{j},{rl}) <=> RTFinal({i},{j},{r})", strategy.weight(pair.local_scores[r])))
    return out


def gen_validity_rules(mentions, pairs, strategy: WeightStrategy, overlaps=()) -> list[WeightedFormula]:
    """Soft validity priors, overlap exclusion and second-sequence coupling.

    ``overlaps`` lists unordered id pairs whose spans intersect.
    """
    out = []
    for m in mentions:
        if m.sequence == 1:
            out.append(_rule(f"!ETFinal({m.id},NONE)", strategy.weight(m.max_score)))
        else:
            out.append(_rule(f"ETFinal({m.id},NONE)", strategy.invalid_weight(m.max_score)))
    for i, j in overlaps:
        out.append(_rule(f"!ETFinal({i},NONE) => ETFinal({j},NONE)"))
        out.append(_rule(f"!ETFinal({j},NONE) => ETFinal({i},NONE)"))
    seq = {m.id: m.sequence for m in mentions}
    for pair in pairs:
        a, b = pair.ids
        for i in (a, b):
            if seq[i] == 2:
                out.append(_rule(f"!RTFinal({a},{b},NULL) => !ETFinal({i},NONE)"))
                out.append(_rule(f"ETFinal({i},NONE) => RTFinal({a},{b},NULL)"))
    return out


def gen_pair_rules(bundle: SentenceBundle, exactly_one=True) -> list[WeightedFormula]:
    """Rule out relations on overlapping candidates; one type per real pair."""
    out = [_rule(f"!RTFinal({i},{j},r)") for i, j in bundle.overlapping_pairs()]
    if exactly_one:
        for p in bundle.pairs:
            out.append(_rule(" v ".join(f"RTFinal({p.arg1},{p.arg2},{r})" for r in RELATION_TYPES)))
    return out


PHYS_CONJUNCTION_RULES = (
    "RTFinal(x,y,PHYS) ^ ((CONJ(y,z) ^ CONS(y,z)) v (CONJ(z,y) ^ CONS(z,y))) "
    "^ ET(y,t) ^ ET(z,t) => RTFinal(x,z,PHYS)",
    "RTFinal(x,y,PHYS) ^ ((CONJ(w,x) ^ CONS(w,x)) v (CONJ(x,w) ^ CONS(x,w))) "
    "^ ET(w,t) ^ ET(x,t) => RTFinal(w,y,PHYS)",
)

EMPLOYER_UNIQUENESS_RULE = (
    "RTFinal(x,y,EMPORG) ^ (y != z) ^ !RTFinal(y,z,IDN) ^ !RTFinal(z,y,IDN) "
    "^ ETFinal(x,PER) => !RTFinal(x,z,EMPORG) ^ !RTFinal(z,x,EMPORG)"
)


def gen_semantic_rules(bundle: SentenceBundle) -> list[WeightedFormula]:
    out = [_rule(t) for t in PHYS_CONJUNCTION_RULES]
    for p in bundle.pairs:
        if p.hearst:
            out.append(_rule(f"ETFinal({p.arg1},x) <=> ETFinal({p.arg2},x)"))
    out.append(_rule(EMPLOYER_UNIQUENESS_RULE))
    return out
