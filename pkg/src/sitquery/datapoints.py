"""Situational datapoint model and validity predicates.

A datapoint bundles a natural-language situational query with the consensus
object states and relationships that answering it requires. Validity is the
conjunction of three predicates: the query names no object (abstraction),
has a Yes/No surface form (binary), and genuinely requires assessing object
states (contextual). The contextual predicate defaults to deferred because
it is ultimately settled by human validation.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable, Optional, Protocol, Sequence, Union

from sitquery import scene as sg
from sitquery.errors import ProviderError, SchemaError

# Yes/No questions open with one of these (configurable in BinaryConfig).
AUXILIARIES = frozenset(
    "is are was were has have had does do did can could should will would".split()
)

CONTEXTUAL_PASS = "pass"
CONTEXTUAL_FAIL = "fail"
CONTEXTUAL_DEFERRED = "deferred"


@dataclass(frozen=True)
class Provenance:
    iteration: int = 0
    batch_index: int = 0
    model_id: str = ""
    regenerations: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "Provenance":
        data = data or {}
        return cls(
            iteration=int(data.get("iteration", 0)),
            batch_index=int(data.get("batch_index", 0)),
            model_id=str(data.get("model_id", "")),
            regenerations=int(data.get("regenerations", 0)),
        )


@dataclass(frozen=True)
class CategoryLabels:
    room: Optional[str] = None  # kitchen/livingroom/bedroom/bathroom/multi-room/no-room
    situational: Optional[str] = None  # yes/no/deferred
    temporal: Optional[str] = None  # spatial/temporal/deferred

    def to_dict(self) -> dict:
        return {"room": self.room, "situational": self.situational, "temporal": self.temporal}


@dataclass(frozen=True)
class SituationalDatapoint:
    id: str
    query_text: str
    consensus_states: tuple[tuple[str, str], ...]  # (class_name, canonical state value)
    consensus_relations: tuple[tuple[str, str, str], ...]  # (subject, relation, target)
    provenance: Provenance = field(default_factory=Provenance)
    labels: Optional[CategoryLabels] = None

    def to_record(self) -> dict:
        """JSONL interchange record. Key names are the cross-module contract."""
        return {
            "id": self.id,
            "query": self.query_text,
            "states": [list(pair) for pair in self.consensus_states],
            "relations": [list(triple) for triple in self.consensus_relations],
            "provenance": self.provenance.to_dict(),
            "labels": self.labels.to_dict() if self.labels else None,
        }

    @classmethod
    def from_record(cls, record: dict) -> "SituationalDatapoint":
        for key in ("id", "query", "states"):
            if key not in record:
                raise SchemaError(f"datapoint record missing key {key!r}: {record!r}")
        labels = record.get("labels")
        return cls(
            id=str(record["id"]),
            query_text=str(record["query"]),
            consensus_states=tuple((str(c), str(s)) for c, s in record["states"]),
            consensus_relations=tuple(
                (str(a), str(r), str(b)) for a, r, b in record.get("relations", [])
            ),
            provenance=Provenance.from_dict(record.get("provenance")),
            labels=CategoryLabels(**labels) if labels else None,
        )


def write_jsonl(datapoints: Iterable[SituationalDatapoint], path: Union[str, Path]) -> None:
    with open(path, "w") as fh:
        for d in datapoints:
            fh.write(json.dumps(d.to_record()) + "\n")


def read_jsonl(path: Union[str, Path]) -> list[SituationalDatapoint]:
    out = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            out.append(SituationalDatapoint.from_record(record))
    return out


class Blocklist:
    """The word set whose members a situational query must not mention.

    Always contains "object"; built from the scene vocabulary plus configured
    synonyms. Matching is case-insensitive on whole words with a simple plural
    fold (token, token+"s", token+"es"); multi-word synonyms match as phrases
    with the fold applied to their last word.
    """

    def __init__(self, words: Iterable[str] = ()):
        self.words: set[str] = {"object"}
        for word in words:
            word = word.strip().lower()
            if word:
                self.words.add(word)
        self._pattern = self._compile()

    @classmethod
    def from_scene(cls, graph: sg.SceneGraph, synonyms: Iterable[str] = ()) -> "Blocklist":
        return cls(set(graph.vocabulary()) | set(synonyms))

    def _compile(self) -> re.Pattern:
        alternatives = []
        for entry in sorted(self.words, key=len, reverse=True):
            parts = [re.escape(p) for p in entry.split()]
            parts[-1] += "(?:s|es)?"
            alternatives.append(r"\s+".join(parts))
        return re.compile(r"\b(?:" + "|".join(alternatives) + r")\b", re.IGNORECASE)

    def hits(self, text: str) -> list[str]:
        return [m.group(0).lower() for m in self._pattern.finditer(text)]

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.words

    def __len__(self) -> int:
        return len(self.words)


class ContextualClassifier(Protocol):
    """Decides whether a query genuinely requires assessing object states."""

    def classify_contextual(self, query_text: str) -> bool: ...


def check_abstraction(query_text: str, blocklist: Blocklist) -> bool:
    """False iff the query mentions any blocked word (it references an object)."""
    return not blocklist.hits(query_text)


def check_binary(query_text: str, auxiliaries: frozenset[str] = AUXILIARIES) -> bool:
    """True iff the query ends with "?" and opens with a Yes/No auxiliary."""
    text = query_text.strip().strip("\"'").strip()
    if not text.endswith("?"):
        return False
    tokens = text.split()
    if not tokens:
        return False
    first = tokens[0].lower()
    return first in auxiliaries


def check_contextual(
    query_text: str,
    classifier: Optional[ContextualClassifier] = None,
    datapoint_id: str = "",
) -> str:
    """Tri-state contextual predicate: pass/fail with a classifier, deferred without."""
    if classifier is None:
        return CONTEXTUAL_DEFERRED
    try:
        verdict = classifier.classify_contextual(query_text)
    except ProviderError as exc:
        raise ProviderError(f"contextual classification failed for {datapoint_id!r}: {exc}") from exc
    return CONTEXTUAL_PASS if verdict else CONTEXTUAL_FAIL


@dataclass(frozen=True)
class ValidityVerdict:
    abstraction_ok: bool
    binary_ok: bool
    contextual_ok: str  # pass / fail / deferred
    structure_ok: bool
    reasons: tuple[str, ...] = ()

    @property
    def accepted(self) -> bool:
        return (
            self.abstraction_ok
            and self.binary_ok
            and self.contextual_ok != CONTEXTUAL_FAIL
            and self.structure_ok
        )


def validate(
    datapoint: SituationalDatapoint,
    graph: sg.SceneGraph,
    blocklist: Blocklist,
    classifier: Optional[ContextualClassifier] = None,
) -> ValidityVerdict:
    """Compose the three predicates with structural checks against the scene.

    The verdict carries every failure reason; it never raises on bad data.
    """
    reasons: list[str] = []
    text = datapoint.query_text.strip()

    abstraction_ok = check_abstraction(text, blocklist)
    if not abstraction_ok:
        hits = sorted(set(blocklist.hits(text)))
        reasons.append("abstraction: query mentions " + ", ".join(hits))

    binary_ok = check_binary(text)
    if not binary_ok:
        reasons.append("binary: query is not a Yes/No question")

    contextual_ok = check_contextual(text, classifier, datapoint.id)
    if contextual_ok == CONTEXTUAL_FAIL:
        reasons.append("contextual: classifier judged the query non-situational")

    structure_ok = True
    if not text or not text.endswith("?"):
        structure_ok = False
        reasons.append("structure: query must be nonempty and end with '?'")
    if not datapoint.consensus_states:
        structure_ok = False
        reasons.append("structure: consensus states are empty")

    vocabulary = graph.vocabulary()
    for class_name, value in datapoint.consensus_states:
        if class_name != class_name.lower():
            structure_ok = False
            reasons.append(f"structure: class {class_name!r} is not lowercase")
            continue
        try:
            value = sg.canonical_state(value)
        except Exception:
            structure_ok = False
            reasons.append(f"structure: unknown state {value!r} for class {class_name!r}")
            continue
        if class_name not in vocabulary:
            # An absent class queried for NONE is trivially satisfiable; anything
            # else references an object the scene cannot provide.
            if value != "NONE":
                structure_ok = False
                reasons.append(f"structure: unknown class {class_name!r}")
            continue
        domain = sg.VALUE_DOMAIN[value]
        if not any(domain in obj.domains for obj in graph.by_class(class_name)):
            structure_ok = False
            reasons.append(f"structure: class {class_name!r} has no {domain} domain")

    for subject, relation, target in datapoint.consensus_relations:
        relation = relation.upper()
        if relation not in sg.RELATIONS:
            structure_ok = False
            reasons.append(f"structure: unknown relation {relation!r}")
            continue
        for token, side in ((subject, "subject"), (target, "target")):
            known = token in vocabulary or token in graph.objects or token in sg.ROOMS
            if not known:
                structure_ok = False
                reasons.append(f"structure: unknown relation {side} {token!r}")
        if not sg.relation_allowed(graph, subject, relation, target):
            structure_ok = False
            reasons.append(f"structure: relation ({subject}, {relation}, {target}) is infeasible")

    return ValidityVerdict(
        abstraction_ok=abstraction_ok,
        binary_ok=binary_ok,
        contextual_ok=contextual_ok,
        structure_ok=structure_ok,
        reasons=tuple(reasons),
    )
