"""Micro-averaged precision, recall and F1 for joint predictions."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import IdMismatch

ABSTAIN = frozenset({"NULL", "IDN"})
TASKS = ("entity", "relation", "entity+relation")


@dataclass
class TaskScore:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self):
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self):
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self):
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def to_dict(self):
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


@dataclass
class ScoreReport:
    tasks: dict = field(default_factory=lambda: {t: TaskScore() for t in TASKS})

    def __getitem__(self, task) -> TaskScore:
        return self.tasks[task]

    def to_dict(self):
        return {t: s.to_dict() for t, s in self.tasks.items()}

    def to_text(self):
        rows = [("task", "P", "R", "F1", "TP", "FP", "FN")]
        for t, s in self.tasks.items():
            rows.append(
                (t, f"{s.precision:.4f}", f"{s.recall:.4f}", f"{s.f1:.4f}", str(s.tp), str(s.fp), str(s.fn))
            )
        widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
        lines = []
        for r in rows:
            cells = [r[0].ljust(widths[0])] + [v.rjust(w) for v, w in zip(r[1:], widths[1:])]
            lines.append("  ".join(cells))
        return "\n".join(lines)


def _score_sentence(pred, gold, report: ScoreReport):
    ent, rel, comb = report["entity"], report["relation"], report["entity+relation"]
    gold_types = gold.entities
    for mid, t in pred.entities.items():
        g = gold_types.get(mid)
        if t is not None:
            if t == g:
                ent.tp += 1
            else:
                ent.fp += 1
        if g is not None and g != t:
            ent.fn += 1

    def typed(ids, types):
        return (types.get(ids[0]), types.get(ids[1]))

    explicit = {(r.arg1, r.arg2): r.type for r in gold.relations if not r.implicit and r.type not in ABSTAIN}
    implicit = {(r.arg1, r.arg2): r.type for r in gold.relations if r.implicit}
    matched = set()
    for ids, r in pred.relations.items():
        if r in ABSTAIN or implicit.get(ids) == r:
            continue
        if explicit.get(ids) == r:
            rel.tp += 1
            matched.add(ids)
            if typed(ids, pred.entities) == typed(ids, gold_types):
                comb.tp += 1
            else:
                # wrong argument types: the predicted triple is spurious and
                # the true one is missed
                comb.fp += 1
                comb.fn += 1
        else:
            rel.fp += 1
            comb.fp += 1
    for ids in explicit:
        if ids not in matched:
            rel.fn += 1
            comb.fn += 1


def score(predictions, bundles) -> ScoreReport:
    """Pool counts over sentences; ``bundles`` supply the gold annotations.

    Gold relations flagged ``implicit`` are left out of every count, and a
    prediction that matches one is ignored rather than counted as spurious.
    """
    predictions, bundles = list(predictions), list(bundles)
    if len(predictions) != len(bundles):
        raise IdMismatch(f"{len(predictions)} predictions for {len(bundles)} sentences")
    report = ScoreReport()
    for pred, bundle in zip(predictions, bundles):
        if pred.sentence_id != bundle.sentence_id:
            raise IdMismatch(f"prediction {pred.sentence_id!r} aligned with sentence {bundle.sentence_id!r}")
        if bundle.gold is None:
            raise IdMismatch(f"sentence {bundle.sentence_id!r} carries no gold annotation")
        ids = {m.id for m in bundle.mentions}
        if set(pred.entities) != ids:
            raise IdMismatch(f"sentence {bundle.sentence_id!r}: mention ids differ from the bundle")
        unknown = set(bundle.gold.entities) - ids
        if unknown or set(pred.relations) - {p.ids for p in bundle.pairs}:
            raise IdMismatch(f"sentence {bundle.sentence_id!r}: ids not found among the candidates")
        _score_sentence(pred, bundle.gold, report)
    return report
