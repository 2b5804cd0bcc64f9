import math
from types import SimpleNamespace

import pytest

import oracles
from mlnjoint.errors import MissingMarginal
from mlnjoint.extraction import (
    ENTITY_TYPES,
    RELATION_TYPES,
    CompatibilityTable,
    MentionCandidate,
    MentionPair,
    SentenceBundle,
    WeightStrategy,
    build_sentence_mln,
    cm_weight,
    consistency_report,
    decode,
    decode_pipeline,
    gen_entity_rules,
    gen_generic_rules,
    gen_relation_rules,
    gen_semantic_rules,
    gen_validity_rules,
    load_bundles,
    load_compatibility,
    lor_weight,
    pipeline_reliability,
    run_sentence,
)
from mlnjoint.extraction.rules import gen_exactly_one_rules, gen_identity_rules, gen_pair_rules, gen_structure_rules
from mlnjoint.extraction.schema import bundle_from_dict, bundle_to_dict, data_path
from mlnjoint.grounding import build_factor_graph, ground_formula
from mlnjoint.inference import exact_marginals
from mlnjoint.logic import GroundAtom, MlnProgram
from mlnjoint.parser import format_formula, parse_program

EMPTY = CompatibilityTable()

PRINTED_WEIGHTS = [6.13, 0.71, 0.15, -0.53, -0.71, -0.89, -0.93, 3.37, 2.99, 1.52, -1.66, 0.35, -1.63, -1.80, -1.09, 0.24, -0.46]


def scores(**kw):
    rest = 1.0 - sum(kw.values())
    others = [t for t in ENTITY_TYPES[:-1] if t not in kw]
    return {**kw, **{t: rest / len(others) for t in others}} if others else kw


def rscores(**kw):
    rest = 1.0 - sum(kw.values())
    others = [t for t in RELATION_TYPES if t not in kw]
    return {**kw, **{t: rest / len(others) for t in others}}


def mention(i, start=None, sequence=1, **kw):
    start = 2 * i if start is None else start
    return MentionCandidate(i, start, start + 1, sequence, scores(**kw))


def weights_by_text(rules):
    return {format_formula(w.formula): w.weight for w in rules}


# -- weights ----------------------------------------------------------------


def test_lor_examples():
    assert lor_weight(0.5) == 0.0
    assert lor_weight(0.99782) == pytest.approx(6.13, abs=0.01)
    assert lor_weight(0.33) == pytest.approx(-0.708, abs=0.01)


def test_lor_clamps_extremes():
    assert math.isfinite(lor_weight(0.0))
    assert math.isfinite(lor_weight(1.0))
    assert lor_weight(1.0) == pytest.approx(-lor_weight(0.0), abs=1e-9)


def test_cm_examples():
    assert cm_weight(0.5, 10) == 5.0
    assert cm_weight(0.0) == 0.0
    assert cm_weight(0.9978, 10) == pytest.approx(9.978, abs=1e-12)


def test_pipeline_reliability():
    a = mention(1, PER=0.9978)
    b = mention(2, PER=0.537)
    assert pipeline_reliability(a, b) == pytest.approx(0.5358, abs=1e-4)
    one = mention(3, ORG=1.0)
    assert pipeline_reliability(one, one) == 1.0


def test_weight_strategy_validation():
    with pytest.raises(ValueError):
        WeightStrategy("bogus")
    with pytest.raises(ValueError):
        WeightStrategy("cm", k=0.0)
    assert WeightStrategy("LOR").kind == "lor"


def test_lor_inverse_consistency():
    for w in PRINTED_WEIGHTS:
        p = 1.0 / (1.0 + math.exp(-w))
        assert lor_weight(p) == pytest.approx(w, abs=1e-6)


# -- rule families ----------------------------------------------------------


def test_entity_rules_for_mention_three(example_bundle):
    m = example_bundle.mention(3)
    got = weights_by_text(gen_entity_rules(m, WeightStrategy()))
    assert got["ET(3,PER) <=> ETFinal(3,PER)"] == pytest.approx(0.15, abs=0.01)
    assert got["ET(3,PER) <=> ETFinal(3,ORG)"] == pytest.approx(-0.53, abs=0.01)
    assert len(got) == 7


def test_entity_rules_uniform_scores():
    m = MentionCandidate(1, 0, 1, 1, {t: 1 / 7 for t in ENTITY_TYPES[:-1]})
    rules = gen_entity_rules(m, WeightStrategy())
    assert len(rules) == 7
    for r in rules:
        assert r.weight == pytest.approx(-math.log(6), abs=1e-9)


def test_entity_rules_cm_are_scaled_scores():
    m = mention(1, PER=0.6, ORG=0.3)
    got = gen_entity_rules(m, WeightStrategy.cm(10))
    for r in got:
        t = str(r.formula.right.args[1])
        assert r.weight == pytest.approx(10 * m.entity_scores[t], abs=1e-12)


def test_relation_rules_local_weight(example_bundle):
    pair = [p for p in example_bundle.pairs if p.ids == (2, 3)][0]
    got = weights_by_text(gen_relation_rules(pair, example_bundle.mention_map, WeightStrategy()))
    assert got["RTL(2,3,EMPORG) <=> RTFinal(2,3,EMPORG)"] == pytest.approx(0.24, abs=0.02)
    assert len(got) == 2 * len(RELATION_TYPES)


def test_relation_rules_reliability_one_reduces_to_lor():
    ms = {1: mention(1, PER=1.0), 2: mention(2, ORG=1.0)}
    pair = MentionPair(1, 2, rscores(NULL=0.5), rscores(EMPORG=0.7))
    for r in gen_relation_rules(pair, ms, WeightStrategy()):
        text = format_formula(r.formula)
        if text.startswith("RTP"):
            rel = text.split(",")[-1].rstrip(")")
            assert r.weight == pytest.approx(lor_weight(pair.pipeline_scores[rel]), abs=1e-9)


def test_zero_reliability():
    zero = SimpleNamespace(max_score=0.0)
    assert pipeline_reliability(zero, mention(1, PER=0.9)) == 0.0
    cm = WeightStrategy.cm()
    assert all(cm.pipeline_weight(p, 0.0) == 0.0 for p in (0.0, 0.3, 1.0))
    assert math.isfinite(WeightStrategy().pipeline_weight(0.3, 0.0))


def test_validity_rules_example(example_bundle):
    rules = gen_validity_rules(example_bundle.mentions, example_bundle.pairs, WeightStrategy())
    got = weights_by_text([r for r in rules if not r.is_hard])
    assert got["!ETFinal(1,NONE)"] == pytest.approx(6.13, abs=0.01)
    assert got["ETFinal(2,NONE)"] == pytest.approx(0.71, abs=0.02)
    hard = {format_formula(r.formula) for r in rules if r.is_hard}
    assert "!RTFinal(1,2,NULL) => !ETFinal(2,NONE)" in hard
    assert "ETFinal(2,NONE) => RTFinal(2,3,NULL)" in hard


def test_validity_rules_overlap_exclusion():
    ms = [mention(1, start=0, PER=0.9), mention(2, start=5, PER=0.9)]
    assert all(not r.is_hard for r in gen_validity_rules(ms, [], WeightStrategy()))
    rules = gen_validity_rules(ms, [], WeightStrategy(), overlaps=[(1, 2)])
    hard = {format_formula(r.formula) for r in rules if r.is_hard}
    assert hard == {"!ETFinal(1,NONE) => ETFinal(2,NONE)", "!ETFinal(2,NONE) => ETFinal(1,NONE)"}


def test_generic_rules_emporg_row(compat):
    texts = {format_formula(r.formula) for r in gen_generic_rules(compat)}
    assert "RTFinal(x,y,EMPORG) ^ ETFinal(x,PER) => ETFinal(y,ORG) v ETFinal(y,GPE)" in texts
    assert "RTFinal(x,y,EMPORG) ^ ETFinal(y,PER) => ETFinal(x,ORG) v ETFinal(x,GPE)" in texts
    assert "RTFinal(x,y,IDN) ^ ETFinal(x,z) => ETFinal(y,z)" in texts
    assert all(r.is_hard for r in gen_generic_rules(compat))


def test_generic_rules_empty_table_warns(caplog):
    rules = gen_generic_rules(EMPTY)
    assert len(rules) == len(gen_identity_rules()) + len(gen_exactly_one_rules())
    assert "empty" in caplog.text


def _semantic_program(bundle, rules):
    program, _ = build_sentence_mln(bundle, EMPTY, semantic_rules=False)
    return MlnProgram(program.domains, program.predicates, tuple(rules))


def test_semantic_rules_without_flags():
    b = SentenceBundle("s", (), (mention(1, PER=0.9), mention(2, ORG=0.9)), (MentionPair(1, 2, rscores(NULL=0.5), rscores(NULL=0.5)),))
    assert len(gen_semantic_rules(b)) == 3


def test_semantic_hearst_rule_grounds_per_etype():
    ms = tuple(mention(i, PER=0.9) for i in (4, 5))
    b = SentenceBundle("s", (), ms, (MentionPair(4, 5, rscores(NULL=0.5), rscores(NULL=0.5), hearst=True),))
    rules = gen_semantic_rules(b)
    assert len(rules) == 4
    hearst = [r for r in rules if format_formula(r.formula) == "ETFinal(4,x) <=> ETFinal(5,x)"]
    assert len(hearst) == 1
    program = _semantic_program(b, hearst)
    assert len(ground_formula(hearst[0], program)) == len(ENTITY_TYPES)


def test_semantic_phys_propagation_grounding():
    ms = (mention(1, PER=0.9), mention(2, GPE=0.9), mention(3, GPE=0.9))
    pairs = tuple(
        MentionPair(a, b, rscores(NULL=0.5), rscores(NULL=0.5), cons=(a, b) == (2, 3), conj=(a, b) == (2, 3))
        for a, b in ((1, 2), (1, 3), (2, 3))
    )
    b = SentenceBundle("s", (), ms, pairs)
    program, evidence = build_sentence_mln(b, EMPTY)
    graph = build_factor_graph(program, evidence)
    scopes = [
        {str(a) for a in f.scope}
        for f in graph.factors
        if f.is_hard and {"RTFinal(1,2,PHYS)", "RTFinal(1,3,PHYS)"} <= {str(a) for a in f.scope}
    ]
    assert scopes, "no feature ties PHYS(1,2) to PHYS(1,3)"


# -- builder ----------------------------------------------------------------


def test_builder_matches_printed_weights(example_bundle):
    program, _ = build_sentence_mln(example_bundle)
    built = weights_by_text([w for w in program.formulas if not w.is_hard])
    worked_example = parse_program(data_path("worked_example.mln").read_text())
    soft = [w for w in worked_example.formulas if not w.is_hard]
    assert {round(w.weight, 2) for w in soft} == set(PRINTED_WEIGHTS)
    for w in soft:
        assert built[format_formula(w.formula)] == pytest.approx(w.weight, abs=0.02)


def test_builder_lor_cm_same_structure(example_bundle):
    lor, ev1 = build_sentence_mln(example_bundle, strategy=WeightStrategy.lor())
    cm, ev2 = build_sentence_mln(example_bundle, strategy=WeightStrategy.cm())
    assert [w.formula for w in lor.formulas] == [w.formula for w in cm.formulas]
    assert [w.weight for w in lor.formulas] != [w.weight for w in cm.formulas]
    assert ev1 == ev2


def test_builder_single_mention():
    b = SentenceBundle("s", (), (mention(1, PER=0.8),))
    program, evidence = build_sentence_mln(b, EMPTY, semantic_rules=False)
    soft = [w for w in program.formulas if not w.is_hard]
    assert len(soft) == 8
    m = exact_marginals(build_factor_graph(program, evidence))
    assert sum(m.get_prob("ETFinal", 1, t) for t in ENTITY_TYPES) == pytest.approx(1.0, abs=1e-9)


def test_builder_evidence(example_bundle):
    _, evidence = build_sentence_mln(example_bundle)
    assert evidence.lookup(GroundAtom("ET", ("3", "PER"))) is True
    assert evidence.lookup(GroundAtom("RTL", ("2", "3", "EMPORG"))) is True
    assert evidence.lookup(GroundAtom("RTP", ("2", "3", "EMPORG"))) is False
    assert evidence.lookup(GroundAtom("CONS", ("2", "3"))) is True
    assert evidence.lookup(GroundAtom("CONJ", ("2", "3"))) is False


def test_builder_rejects_empty_bundle():
    with pytest.raises(ValueError):
        build_sentence_mln(SentenceBundle("s"))


def test_all_none_world_is_satisfying(synthetic_bundles, example_bundle, compat):
    for bundle in [example_bundle] + synthetic_bundles[:4]:
        program, evidence = build_sentence_mln(bundle, compat)
        graph = build_factor_graph(program, evidence, prune=False)
        world = {}
        for a in graph.variables:
            if a.predicate == "ETFinal":
                world[a] = a.args[1] == "NONE"
            else:
                world[a] = a.args[2] == "NULL" and a.args[0] != a.args[1] and _is_pair(bundle, a)
        for f in graph.factors:
            if f.is_hard:
                assert f.evaluate(world), f"{bundle.sentence_id}: {f.source}"


def _is_pair(bundle, atom):
    i, j = int(atom.args[0]), int(atom.args[1])
    return (min(i, j), max(i, j)) in {p.ids for p in bundle.pairs}


def test_entity_marginals_sum_to_one(example_bundle, compat):
    program, evidence = build_sentence_mln(example_bundle, compat)
    m = exact_marginals(build_factor_graph(program, evidence))
    for mention_ in example_bundle.mentions:
        total = sum(m.get_prob("ETFinal", mention_.id, t) for t in ENTITY_TYPES)
        assert total == pytest.approx(1.0, abs=1e-9)
    for p in example_bundle.pairs:
        total = sum(m.get_prob("RTFinal", p.arg1, p.arg2, r) for r in RELATION_TYPES)
        assert total == pytest.approx(1.0, abs=1e-9)


def test_local_pooling_without_cross_mention_rules():
    ms = (mention(1, PER=0.6, ORG=0.3), mention(2, sequence=2, ORG=0.5, GPE=0.4))
    b = SentenceBundle("s", (), ms, (MentionPair(1, 2, rscores(EMPORG=0.6), rscores(IDN=0.6)),))
    program, evidence = build_sentence_mln(b, EMPTY, semantic_rules=False)
    # exactly-one and pair structure are the only hard rules left
    keep = set(gen_exactly_one_rules()) | set(gen_structure_rules()) | set(gen_pair_rules(b))
    keep |= {w for w in program.formulas if not w.is_hard}
    program = program.with_formulas([w for w in program.formulas if w in keep])
    m = exact_marginals(build_factor_graph(program, evidence))
    for mc in ms:
        logits = {}
        for t in ENTITY_TYPES:
            if t == "NONE":
                logits[t] = lor_weight(1 - mc.max_score) if mc.sequence == 2 else 0.0
            else:
                logits[t] = lor_weight(mc.entity_scores[t]) + (lor_weight(mc.max_score) if mc.sequence == 1 else 0.0)
        z = sum(math.exp(v) for v in logits.values())
        for t in ENTITY_TYPES:
            assert m.get_prob("ETFinal", mc.id, t) == pytest.approx(math.exp(logits[t]) / z, abs=1e-9)
        best = max(ENTITY_TYPES, key=lambda t: logits[t])
        got = decode(m, b, EMPTY).entity_label(mc.id)
        assert got == best


# -- decode -----------------------------------------------------------------


def _uniform_marginals(bundle, value=0.3):
    out = {}
    for m in bundle.mentions:
        for t in ENTITY_TYPES:
            out[GroundAtom("ETFinal", (str(m.id), t))] = value
    for p in bundle.pairs:
        for r in RELATION_TYPES:
            out[GroundAtom("RTFinal", (str(p.arg1), str(p.arg2), r))] = value
    return out


def test_decode_ties_use_declaration_order(example_bundle, compat):
    pred = decode(_uniform_marginals(example_bundle), example_bundle, compat)
    assert set(pred.entities.values()) == {"PER"}
    assert set(pred.relations.values()) == {"EMPORG"}


def test_decode_scale_invariance(example_bundle, compat):
    program, evidence = build_sentence_mln(example_bundle, compat)
    m = exact_marginals(build_factor_graph(program, evidence))
    scaled = {a: 0.37 * p for a, p in m.items()}
    a = decode(m, example_bundle, compat)
    b = decode(scaled, example_bundle, compat)
    assert (a.entities, a.relations) == (b.entities, b.relations)


def test_decode_missing_marginal(example_bundle, compat):
    marg = _uniform_marginals(example_bundle)
    del marg[GroundAtom("ETFinal", ("1", "PER"))]
    with pytest.raises(MissingMarginal):
        decode(marg, example_bundle, compat)


def test_decode_keeps_marginals(example_bundle, compat):
    pred = decode(_uniform_marginals(example_bundle), example_bundle, compat, keep_marginals=True)
    assert pred.marginals["ETFinal(1)"]["PER"] == 0.3
    assert "RTFinal(2,3)" in pred.marginals


def test_prediction_dict_round_trip(example_bundle, compat):
    pred = decode(_uniform_marginals(example_bundle), example_bundle, compat)
    again = type(pred).from_dict(pred.to_dict())
    assert again.entities == pred.entities
    assert again.relations == pred.relations


def test_consistency_report_flags(compat):
    b = SentenceBundle("s", (), (mention(1, PER=0.9), mention(2, PER=0.9), mention(3, PER=0.9)))
    report = consistency_report(b, {1: "PER", 2: None, 3: "LOC"}, {(1, 2): "EMPORG"}, compat)
    assert any("invalid mention 2" in r for r in report)
    report = consistency_report(b, {1: "PER", 2: "ORG"}, {(1, 2): "IDN"}, compat)
    assert any("IDN" in r for r in report)
    report = consistency_report(b, {1: "PER", 2: "LOC"}, {(1, 2): "EMPORG"}, compat)
    assert any("not allowed" in r for r in report)
    assert consistency_report(b, {1: "PER", 2: None}, {(1, 2): "NULL"}, compat) == ()


def test_decode_pipeline_ablation():
    ms = (mention(1, PER=0.9), mention(2, sequence=2, ORG=0.6), mention(3, sequence=2, LOC=0.6))
    pairs = (
        MentionPair(1, 2, rscores(NULL=0.6), rscores(EMPORG=0.6)),
        MentionPair(1, 3, rscores(NULL=0.6), rscores(NULL=0.6)),
        MentionPair(2, 3, rscores(NULL=0.6), rscores(NULL=0.6)),
    )
    pred = decode_pipeline(SentenceBundle("s", (), ms, pairs), EMPTY)
    assert pred.entities == {1: "PER", 2: "ORG", 3: None}
    assert pred.relations[(1, 2)] == "EMPORG"


# -- schema -----------------------------------------------------------------


def test_mention_validation():
    with pytest.raises(ValueError):
        MentionCandidate(1, 0, 1, 1, {"PER": 0.5})
    with pytest.raises(ValueError):
        MentionCandidate(1, 2, 2, 1, scores(PER=1.0))
    with pytest.raises(ValueError):
        MentionCandidate(1, 0, 1, 3, scores(PER=1.0))
    with pytest.raises(ValueError):
        MentionCandidate(1, 0, 1, 1, {"NONE": 1.0})


def test_bundle_validation():
    a, b = mention(1, start=0, PER=1.0), mention(2, start=0, PER=1.0)
    with pytest.raises(ValueError):
        SentenceBundle("s", (), (a, b), (MentionPair(1, 2, rscores(NULL=1.0), rscores(NULL=1.0)),))
    with pytest.raises(ValueError):
        SentenceBundle("s", (), (a,), (MentionPair(1, 9, rscores(NULL=1.0), rscores(NULL=1.0)),))
    with pytest.raises(ValueError):
        MentionPair(2, 1, rscores(NULL=1.0), rscores(NULL=1.0))


def test_bundle_json_round_trip(example_bundle, synthetic_bundles):
    for b in [example_bundle] + synthetic_bundles:
        assert bundle_from_dict(bundle_to_dict(b)) == b


def test_compatibility_both_roles(compat):
    assert compat.allows("EMPORG", "PER", "ORG")
    assert compat.allows("EMPORG", "ORG", "PER")
    assert not compat.allows("EMPORG", "PER", "PER")
    assert not compat.allows("EMPORG", "LOC", "PER")
    assert load_compatibility(compat.to_dict()) == compat


# -- end to end -------------------------------------------------------------


def test_exact_matches_oracle_on_two_mention_bundles(synthetic_bundles):
    oracle_compat = {}
    table = load_compatibility()
    for row in table.rows:
        oracle_compat.setdefault(row.relation, []).append((row.fixed_type, set(row.allowed_other)))
    checked = 0
    for b in synthetic_bundles:
        if len(b.mentions) != 2 or any(p.cons or p.conj or p.hearst for p in b.pairs):
            continue
        expected = oracles.sentence_type_marginals(b, oracle_compat)
        _, m = run_sentence(b, table, semantic_rules=False, inference="exact", cap=25)
        for mid, probs in expected.items():
            for t, p in probs.items():
                assert m.get_prob("ETFinal", mid, t) == pytest.approx(p, abs=1e-9)
        checked += 1
    assert checked >= 10


def test_joint_corrects_entity_errors(synthetic_bundles, compat):
    fixed = 0
    for b in synthetic_bundles:
        pipe = decode_pipeline(b, compat)
        joint, _ = run_sentence(b, compat, inference="exact", cap=25)
        for mid, gold in b.gold.entities.items():
            if pipe.entities[mid] != gold and joint.entities[mid] == gold:
                fixed += 1
    assert fixed >= 3


def test_run_sentence_bp_agrees_on_small_bundle(synthetic_bundles, compat):
    b = synthetic_bundles[0]
    exact, _ = run_sentence(b, compat, inference="exact")
    bp, m = run_sentence(b, compat, inference="bp")
    assert m.method == "bp"
    assert (exact.entities, exact.relations) == (bp.entities, bp.relations)


def test_run_sentence_rejects_unknown_inference(synthetic_bundles, compat):
    with pytest.raises(ValueError):
        run_sentence(synthetic_bundles[0], compat, inference="gibbs")
