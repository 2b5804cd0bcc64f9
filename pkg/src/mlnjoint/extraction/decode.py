"""Turn marginals into final entity and relation labels."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import MissingMarginal
from ..logic import GroundAtom
from .schema import ENTITY_TYPES, RELATION_TYPES, CompatibilityTable, SentenceBundle, load_compatibility

# marginals closer than this are treated as tied; ties go to declaration order
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class JointPrediction:
    """Final labels for one sentence.

    ``entities`` maps mention id to a type, or ``None`` for an invalid
    mention.  ``relations`` maps canonical id pairs to a relation type.
    """

    sentence_id: str
    entities: dict = field(default_factory=dict)
    relations: dict = field(default_factory=dict)
    consistency_report: tuple = ()
    marginals: dict | None = None

    def entity_label(self, mention_id):
        t = self.entities[mention_id]
        return "NONE" if t is None else t

    def to_dict(self):
        out = {
            "sentence_id": self.sentence_id,
            "entities": {str(k): v for k, v in self.entities.items()},
            "relations": [{"arg1": i, "arg2": j, "type": r} for (i, j), r in self.relations.items()],
            "consistency_report": list(self.consistency_report),
        }
        if self.marginals is not None:
            out["marginals"] = self.marginals
        return out

    @classmethod
    def from_dict(cls, d):
        return cls(
            str(d["sentence_id"]),
            {int(k): v for k, v in d.get("entities", {}).items()},
            {(int(r["arg1"]), int(r["arg2"])): r["type"] for r in d.get("relations", [])},
            tuple(d.get("consistency_report", ())),
            d.get("marginals"),
        )


def _argmax(probs, order):
    top = max(probs[t] for t in order)
    for t in order:
        if probs[t] >= top - TIE_TOLERANCE:
            return t
    raise AssertionError("unreachable")


def _lookup(marginals, atom):
    try:
        return marginals[atom]
    except KeyError:
        raise MissingMarginal(atom) from None


def consistency_report(bundle, entities, relations, table: CompatibilityTable):
    """Human-readable list of decoded labels that break the hard-rule intent."""
    issues = []
    for (i, j), r in relations.items():
        if r == "NULL":
            continue
        for m in (i, j):
            if entities.get(m) is None:
                issues.append(f"invalid mention {m} takes part in {r}({i},{j})")
        ti, tj = entities.get(i), entities.get(j)
        if ti is None or tj is None:
            continue
        if r == "IDN":
            if ti != tj:
                issues.append(f"IDN({i},{j}) joins types {ti} and {tj}")
        elif not table.allows(r, ti, tj):
            issues.append(f"{r}({i},{j}) is not allowed between {ti} and {tj}")
    return tuple(issues)


def decode(marginals, bundle: SentenceBundle, table: CompatibilityTable | None = None, keep_marginals=False):
    """Per-mention and per-pair argmax of the query marginals."""
    table = load_compatibility() if table is None else table
    entities, relations = {}, {}
    dump = {} if keep_marginals else None
    for m in bundle.mentions:
        probs = {t: _lookup(marginals, GroundAtom("ETFinal", (str(m.id), t))) for t in ENTITY_TYPES}
        best = _argmax(probs, ENTITY_TYPES)
        entities[m.id] = None if best == "NONE" else best
        if dump is not None:
            dump[f"ETFinal({m.id})"] = probs
    for p in bundle.pairs:
        i, j = str(p.arg1), str(p.arg2)
        probs = {r: _lookup(marginals, GroundAtom("RTFinal", (i, j, r))) for r in RELATION_TYPES}
        relations[p.ids] = _argmax(probs, RELATION_TYPES)
        if dump is not None:
            dump[f"RTFinal({i},{j})"] = probs
    report = consistency_report(bundle, entities, relations, table)
    return JointPrediction(bundle.sentence_id, entities, relations, report, dump)


def decode_pipeline(bundle: SentenceBundle, table: CompatibilityTable | None = None):
    """Ablation without joint inference.

    Entity types are the local argmax, relations are the pipeline argmax, and
    a second-sequence candidate is valid only when some pipeline relation
    involving it is not NULL.
    """
    table = load_compatibility() if table is None else table
    relations = {p.ids: p.pipeline_max for p in bundle.pairs}
    linked = {i for ids, r in relations.items() if r != "NULL" for i in ids}
    entities = {}
    for m in bundle.mentions:
        valid = m.sequence == 1 or m.id in linked
        entities[m.id] = m.max_type if valid else None
    report = consistency_report(bundle, entities, relations, table)
    return JointPrediction(bundle.sentence_id, entities, relations, report)
