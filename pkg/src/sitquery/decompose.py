"""Decomposition of situational queries into per-object consensus questions.

A situational query like "Was someone working in the bedroom?" carries a
consensus state set such as [computer: On, lightswitch: On]. Each pair turns
into a direct binary question about one object, and room mentions in parent
queries can be genericized so the question no longer names a specific room.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from sitquery.datapoints import SituationalDatapoint
from sitquery.errors import DomainMismatchError, SchemaError
from sitquery.scene import canonical_state

# Canonical state value -> question surface form.
SURFACE_FORMS = {
    "ON": "On",
    "OFF": "Off",
    "OPEN": "Open",
    "CLOSED": "Closed",
    "PRESENT": "Present",
    "NONE": "Absent",
}

_ROOM_MENTION = re.compile(
    r"\b(?:the\s+)?(?:living\s*room|kitchen|bedroom|bathroom)s?\b",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class ConsensusQuery:
    """One object-level question split out of a situational query."""

    parent_id: str
    class_name: str
    state: str
    text: str

    def to_record(self) -> dict:
        return {
            "parent_id": self.parent_id,
            "class": self.class_name,
            "state": self.state,
            "text": self.text,
        }

    @classmethod
    def from_record(cls, record: dict) -> "ConsensusQuery":
        try:
            return cls(
                parent_id=record["parent_id"],
                class_name=record["class"],
                state=record["state"],
                text=record["text"],
            )
        except KeyError as exc:
            raise SchemaError(f"consensus query record is missing {exc}") from exc


def surface_form(state: str) -> str:
    value = canonical_state(state)
    return SURFACE_FORMS[value]


def consensus_question(class_name: str, state: str) -> str:
    return f"Is the {class_name} {surface_form(state)}?"


def decompose(datapoint: SituationalDatapoint) -> list[ConsensusQuery]:
    """One ConsensusQuery per consensus state pair, in stored order."""
    queries = []
    for class_name, state in datapoint.consensus_states:
        value = canonical_state(state)
        queries.append(
            ConsensusQuery(
                parent_id=datapoint.id,
                class_name=class_name,
                state=value,
                text=consensus_question(class_name, value),
            )
        )
    return queries


def decompose_all(datapoints: Iterable[SituationalDatapoint]) -> list[ConsensusQuery]:
    out = []
    for datapoint in datapoints:
        out.extend(decompose(datapoint))
    return out


def genericize_room(query_text: str) -> str:
    """Replace room mentions with "this place"; already-generic text is unchanged."""

    def replace(match: re.Match) -> str:
        if match.start() == 0:
            return "This place"
        return "this place"

    out = _ROOM_MENTION.sub(replace, query_text)
    # Collapse doubled articles left by phrasings like "the living rooms".
    out = re.sub(r"\s{2,}", " ", out)
    return out


def write_consensus_jsonl(queries: Iterable[ConsensusQuery], path) -> int:
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        for query in queries:
            fh.write(json.dumps(query.to_record(), ensure_ascii=True) + "\n")
            count += 1
    return count


def read_consensus_jsonl(path) -> list[ConsensusQuery]:
    path = Path(path)
    queries = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            queries.append(ConsensusQuery.from_record(record))
    return queries


def validate_decomposition(datapoint: SituationalDatapoint, queries: list[ConsensusQuery]) -> None:
    """Every stored pair must appear exactly once with matching parent id."""
    expected = [(c, canonical_state(s)) for c, s in datapoint.consensus_states]
    got = [(q.class_name, q.state) for q in queries]
    if expected != got:
        raise DomainMismatchError(
            f"decomposition of {datapoint.id} does not cover its consensus states"
        )
    for query in queries:
        if query.parent_id != datapoint.id:
            raise DomainMismatchError(
                f"consensus query for {query.parent_id} attached to {datapoint.id}"
            )
