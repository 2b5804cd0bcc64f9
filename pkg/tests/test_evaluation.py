import json
import random

import pytest

from micro import FIXTURES, hand_prf
from mlnjoint.errors import IdMismatch
from mlnjoint.evaluation import TASKS, ScoreReport, TaskScore, score
from mlnjoint.extraction import GoldAnnotation, GoldRelation, JointPrediction, SentenceBundle


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_micro_fixture_counts(name):
    bundles, preds, counts = FIXTURES[name]()
    report = score(preds, bundles)
    for task, (tp, fp, fn) in counts.items():
        s = report[task]
        assert (s.tp, s.fp, s.fn) == (tp, fp, fn), task
        assert (s.precision, s.recall, s.f1) == hand_prf(tp, fp, fn), task


def test_perfect_is_all_ones():
    bundles, preds, _ = FIXTURES["perfect"]()
    report = score(preds, bundles)
    for task in TASKS:
        assert (report[task].precision, report[task].recall, report[task].f1) == (1.0, 1.0, 1.0)


def test_double_penalty_relation_still_correct():
    bundles, preds, _ = FIXTURES["double-penalty"]()
    report = score(preds, bundles)
    assert report["relation"].f1 == 1.0
    assert report["entity+relation"].f1 == 0.0


def test_zero_denominators():
    s = TaskScore()
    assert (s.precision, s.recall, s.f1) == (0.0, 0.0, 0.0)


def test_pooled_counts_and_permutation_invariance():
    bundles, preds = [], []
    for make in FIXTURES.values():
        b, p, _ = make()
        bundles += b
        preds += p
    report = score(preds, bundles)
    assert report["entity"].tp == 7
    assert report["relation"].fn == 3
    order = list(range(len(bundles)))
    random.Random(3).shuffle(order)
    again = score([preds[i] for i in order], [bundles[i] for i in order])
    assert again.to_dict() == report.to_dict()
    for task in TASKS:
        s = report[task]
        assert 0.0 <= s.precision <= 1.0 and 0.0 <= s.recall <= 1.0
    assert report["entity+relation"].tp <= report["relation"].tp


def test_idn_and_null_are_abstentions():
    bundles, preds, _ = FIXTURES["perfect"]()
    pred = preds[0]
    rels = dict(pred.relations)
    rels[(1, 2)] = "IDN"
    report = score([JointPrediction(pred.sentence_id, pred.entities, rels)], bundles)
    assert report["relation"].fp == 0


def test_implicit_gold_is_skipped():
    bundles, preds, _ = FIXTURES["perfect"]()
    b = bundles[0]
    gold = GoldAnnotation(b.gold.entities, b.gold.relations + (GoldRelation(1, 3, "EMPORG", implicit=True),))
    b = SentenceBundle(b.sentence_id, b.tokens, b.mentions, b.pairs, gold)
    rels = dict(preds[0].relations)
    rels[(1, 3)] = "EMPORG"
    report = score([JointPrediction(b.sentence_id, preds[0].entities, rels)], [b])
    assert (report["relation"].tp, report["relation"].fp, report["relation"].fn) == (1, 0, 0)


def test_invalid_prediction_of_valid_mention_is_a_miss():
    bundles, preds, _ = FIXTURES["perfect"]()
    ents = dict(preds[0].entities)
    ents[1] = None
    report = score([JointPrediction("perfect", ents, preds[0].relations)], bundles)
    assert (report["entity"].tp, report["entity"].fp, report["entity"].fn) == (2, 0, 1)


def test_id_mismatch():
    bundles, preds, _ = FIXTURES["perfect"]()
    with pytest.raises(IdMismatch):
        score([JointPrediction("other", preds[0].entities, preds[0].relations)], bundles)
    with pytest.raises(IdMismatch):
        score([JointPrediction("perfect", {1: "PER"}, {})], bundles)
    with pytest.raises(IdMismatch):
        score([], bundles)


def test_report_serialisation():
    bundles, preds, _ = FIXTURES["double-penalty"]()
    report = score(preds, bundles)
    data = json.loads(json.dumps(report.to_dict()))
    assert data["entity+relation"]["fp"] == 1
    text = report.to_text()
    assert len(text.splitlines()) == 4
    assert text.splitlines()[3].startswith("entity+relation")
    assert isinstance(ScoreReport().to_text(), str)
