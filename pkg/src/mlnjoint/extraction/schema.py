"""Sentence-level data model and its JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

ENTITY_TYPES = ("PER", "ORG", "LOC", "GPE", "WEA", "FAC", "VEH", "NONE")
SCORED_ENTITY_TYPES = ENTITY_TYPES[:-1]
RELATION_TYPES = ("EMPORG", "GPEAFF", "OTHERAFF", "PERSOC", "PHYS", "ART", "NULL", "IDN")
SEMANTIC_RELATION_TYPES = RELATION_TYPES[:6]

SCORE_TOLERANCE = 1e-6


def _check_scores(scores, allowed, what):
    scores = {str(k): float(v) for k, v in scores.items()}
    unknown = set(scores) - set(allowed)
    if unknown:
        raise ValueError(f"{what}: unknown type(s) {sorted(unknown)}")
    for k, v in scores.items():
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{what}: probability of {k} is {v}, outside [0, 1]")
    total = sum(scores.values())
    if abs(total - 1.0) > SCORE_TOLERANCE:
        raise ValueError(f"{what}: probabilities sum to {total:.8f}, not 1")
    return {k: scores.get(k, 0.0) for k in allowed}


def argmax_type(scores: Mapping[str, float], order: Sequence[str]) -> str:
    """Highest-probability type; ties go to the earliest type in ``order``."""
    best = order[0]
    for t in order[1:]:
        if scores.get(t, 0.0) > scores.get(best, 0.0):
            best = t
    return best


@dataclass(frozen=True)
class MentionCandidate:
    id: int
    start: int
    end: int
    sequence: int = 1
    entity_scores: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.id) < 1:
            raise ValueError(f"mention id must be a positive integer, got {self.id}")
        if not self.end > self.start >= 0:
            raise ValueError(f"mention {self.id}: empty or negative span [{self.start}, {self.end})")
        if self.sequence not in (1, 2):
            raise ValueError(f"mention {self.id}: sequence must be 1 or 2")
        if "NONE" in self.entity_scores:
            raise ValueError(f"mention {self.id}: NONE is never scored")
        scores = _check_scores(self.entity_scores, SCORED_ENTITY_TYPES, f"mention {self.id}")
        object.__setattr__(self, "entity_scores", scores)

    @property
    def max_type(self):
        return argmax_type(self.entity_scores, SCORED_ENTITY_TYPES)

    @property
    def max_score(self):
        return self.entity_scores[self.max_type]

    def overlaps(self, other: "MentionCandidate"):
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class MentionPair:
    arg1: int
    arg2: int
    local_scores: Mapping[str, float] = field(default_factory=dict)
    pipeline_scores: Mapping[str, float] = field(default_factory=dict)
    cons: bool = False
    conj: bool = False
    hearst: bool = False

    def __post_init__(self):
        if not self.arg1 < self.arg2:
            raise ValueError(f"pair ({self.arg1},{self.arg2}) must list the lower id first")
        where = f"pair ({self.arg1},{self.arg2})"
        object.__setattr__(self, "local_scores", _check_scores(self.local_scores, RELATION_TYPES, where))
        object.__setattr__(
            self, "pipeline_scores", _check_scores(self.pipeline_scores, RELATION_TYPES, where)
        )

    @property
    def ids(self):
        return (self.arg1, self.arg2)

    @property
    def local_max(self):
        return argmax_type(self.local_scores, RELATION_TYPES)

    @property
    def pipeline_max(self):
        return argmax_type(self.pipeline_scores, RELATION_TYPES)


@dataclass(frozen=True)
class GoldRelation:
    arg1: int
    arg2: int
    type: str
    implicit: bool = False

    def __post_init__(self):
        if self.arg1 > self.arg2:
            a, b = self.arg2, self.arg1
            object.__setattr__(self, "arg1", a)
            object.__setattr__(self, "arg2", b)
        if self.type not in RELATION_TYPES:
            raise ValueError(f"unknown relation type {self.type!r}")


@dataclass(frozen=True)
class GoldAnnotation:
    """Gold types of valid mentions (others are invalid) and gold relations."""

    entities: Mapping[int, str] = field(default_factory=dict)
    relations: tuple[GoldRelation, ...] = ()

    def __post_init__(self):
        ents = {}
        for k, v in self.entities.items():
            if v not in ENTITY_TYPES:
                raise ValueError(f"unknown gold entity type {v!r}")
            if v != "NONE":
                ents[int(k)] = v
        object.__setattr__(self, "entities", ents)
        object.__setattr__(self, "relations", tuple(self.relations))


@dataclass(frozen=True)
class SentenceBundle:
    sentence_id: str
    tokens: tuple[str, ...] = ()
    mentions: tuple[MentionCandidate, ...] = ()
    pairs: tuple[MentionPair, ...] = ()
    gold: GoldAnnotation | None = None

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "mentions", tuple(sorted(self.mentions, key=lambda m: m.id)))
        object.__setattr__(self, "pairs", tuple(sorted(self.pairs, key=lambda p: p.ids)))
        by_id = {}
        for m in self.mentions:
            if m.id in by_id:
                raise ValueError(f"sentence {self.sentence_id}: duplicate mention id {m.id}")
            by_id[m.id] = m
        seen = set()
        for p in self.pairs:
            for i in p.ids:
                if i not in by_id:
                    raise ValueError(f"sentence {self.sentence_id}: pair refers to unknown mention {i}")
            if p.ids in seen:
                raise ValueError(f"sentence {self.sentence_id}: duplicate pair {p.ids}")
            if by_id[p.arg1].overlaps(by_id[p.arg2]):
                raise ValueError(f"sentence {self.sentence_id}: pair {p.ids} joins overlapping mentions")
            seen.add(p.ids)

    def mention(self, mention_id) -> MentionCandidate:
        for m in self.mentions:
            if m.id == mention_id:
                return m
        raise KeyError(mention_id)

    @property
    def mention_map(self):
        return {m.id: m for m in self.mentions}

    def overlapping_pairs(self):
        """Unordered id pairs of candidates whose spans intersect."""
        out = []
        ms = self.mentions
        for a in range(len(ms)):
            for b in range(a + 1, len(ms)):
                if ms[a].overlaps(ms[b]):
                    out.append((ms[a].id, ms[b].id))
        return out


# -- JSON -----------------------------------------------------------------


def bundle_from_dict(d) -> SentenceBundle:
    mentions = [
        MentionCandidate(
            id=int(m["id"]),
            start=int(m["start"]),
            end=int(m["end"]),
            sequence=int(m.get("sequence", 1)),
            entity_scores=m["entity_scores"],
        )
        for m in d.get("mentions", [])
    ]
    pairs = [
        MentionPair(
            arg1=int(p["arg1"]),
            arg2=int(p["arg2"]),
            local_scores=p["local_scores"],
            pipeline_scores=p["pipeline_scores"],
            cons=bool(p.get("cons", False)),
            conj=bool(p.get("conj", False)),
            hearst=bool(p.get("hearst", False)),
        )
        for p in d.get("pairs", [])
    ]
    gold = None
    if d.get("gold") is not None:
        g = d["gold"]
        gold = GoldAnnotation(
            entities={int(k): v for k, v in g.get("entities", {}).items()},
            relations=tuple(
                GoldRelation(int(r["arg1"]), int(r["arg2"]), r["type"], bool(r.get("implicit", False)))
                for r in g.get("relations", [])
            ),
        )
    return SentenceBundle(str(d["sentence_id"]), tuple(d.get("tokens", ())), tuple(mentions), tuple(pairs), gold)


def bundle_to_dict(b: SentenceBundle) -> dict:
    out = {
        "sentence_id": b.sentence_id,
        "tokens": list(b.tokens),
        "mentions": [
            {"id": m.id, "start": m.start, "end": m.end, "sequence": m.sequence, "entity_scores": dict(m.entity_scores)}
            for m in b.mentions
        ],
        "pairs": [
            {
                "arg1": p.arg1,
                "arg2": p.arg2,
                "local_scores": dict(p.local_scores),
                "pipeline_scores": dict(p.pipeline_scores),
                "cons": p.cons,
                "conj": p.conj,
                "hearst": p.hearst,
            }
            for p in b.pairs
        ],
    }
    if b.gold is not None:
        out["gold"] = {
            "entities": {str(k): v for k, v in b.gold.entities.items()},
            "relations": [
                {"arg1": r.arg1, "arg2": r.arg2, "type": r.type, "implicit": r.implicit} for r in b.gold.relations
            ],
        }
    return out


def load_bundles(source) -> list[SentenceBundle]:
    """Read a bundle file (path) or parsed JSON list."""
    if isinstance(source, (str, Path)):
        source = json.loads(Path(source).read_text(encoding="utf-8"))
    if not isinstance(source, list):
        raise ValueError("a bundle file holds a JSON list of sentence objects")
    return [bundle_from_dict(d) for d in source]


def dump_bundles(bundles, path=None):
    data = [bundle_to_dict(b) for b in bundles]
    text = json.dumps(data, indent=2)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


def data_path(name) -> Path:
    """Path of a file shipped in ``mlnjoint/data``."""
    return Path(str(resources.files("mlnjoint") / "data" / name))


# -- compatibility table ----------------------------------------------------


@dataclass(frozen=True)
class CompatibilityRow:
    relation: str
    fixed_arg: int
    fixed_type: str
    allowed_other: frozenset

    def __post_init__(self):
        if self.relation not in SEMANTIC_RELATION_TYPES:
            raise ValueError(f"compatibility rows cover semantic relation types, not {self.relation!r}")
        if self.fixed_arg not in (1, 2):
            raise ValueError("fixed_arg must be 1 or 2")
        if self.fixed_type not in SCORED_ENTITY_TYPES:
            raise ValueError(f"bad fixed_type {self.fixed_type!r}")
        allowed = frozenset(self.allowed_other)
        if not allowed or not allowed <= set(SCORED_ENTITY_TYPES):
            raise ValueError(f"bad allowed_other for {self.relation}/{self.fixed_type}")
        object.__setattr__(self, "allowed_other", allowed)


@dataclass(frozen=True)
class CompatibilityTable:
    """Allowed argument types per relation.

    Candidate pairs are unordered, so every row constrains both argument
    roles; ``fixed_arg`` only records the direction the row was written in.
    """

    rows: tuple[CompatibilityRow, ...] = ()

    def allows(self, relation, type1, type2) -> bool:
        for row in self.rows:
            if row.relation != relation:
                continue
            if type1 == row.fixed_type and type2 not in row.allowed_other:
                return False
            if type2 == row.fixed_type and type1 not in row.allowed_other:
                return False
        return True

    def to_dict(self):
        out: dict = {}
        for r in self.rows:
            out.setdefault(r.relation, []).append(
                {"fixed_arg": r.fixed_arg, "fixed_type": r.fixed_type, "allowed_other": sorted(r.allowed_other, key=ENTITY_TYPES.index)}
            )
        return out


def load_compatibility(source=None) -> CompatibilityTable:
    """Load a table from a path or mapping; ``None`` loads the shipped default."""
    if source is None:
        source = data_path("compatibility.json")
    if isinstance(source, (str, Path)):
        source = json.loads(Path(source).read_text(encoding="utf-8"))
    rows = []
    for relation, entries in source.items():
        if relation.startswith("_"):
            continue
        for e in entries:
            rows.append(CompatibilityRow(relation, int(e.get("fixed_arg", 1)), e["fixed_type"], e["allowed_other"]))
    return CompatibilityTable(tuple(rows))
