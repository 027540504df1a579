"""Assistant-response parsing.

The generation prompt asks for a JSON array of {query, states, relations}
objects, so that is the primary path. Models occasionally fall back to the
loose bracketed-line format the conversation also describes, so a tolerant
line parser backs it up. Malformed elements become ParseFailure records with
byte offsets; a bad element never aborts the rest of the batch.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional

from sitquery import scene as sg
from sitquery.datapoints import Provenance, SituationalDatapoint
from sitquery.errors import DomainMismatchError

_RELATION_RE = re.compile(r"^\s*(\S+)\s+(inside|on)\s+(\S+)\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class ParseFailure:
    offset: int
    reason: str


def parse_response(raw: str) -> tuple[list[SituationalDatapoint], list[ParseFailure]]:
    """Parse one assistant response into datapoints plus per-element failures.

    Returned datapoints carry provisional ids ("parsed-0", ...); the generation
    loop re-mints ids and provenance on acceptance.
    """
    array_start = _find_json_array(raw)
    if array_start is not None:
        records, failures = _parse_json_elements(raw, array_start)
    else:
        records, failures = _recover_truncated_array(raw)
        if records is None:
            records, failures = _parse_bracketed_lines(raw)

    datapoints = []
    for i, (query, states, relations) in enumerate(records):
        datapoints.append(
            SituationalDatapoint(
                id=f"parsed-{i}",
                query_text=query,
                consensus_states=tuple(states),
                consensus_relations=tuple(relations),
                provenance=Provenance(),
            )
        )
    return datapoints, failures


def _find_json_array(raw: str) -> Optional[int]:
    """Offset of the first decodable JSON array containing at least one object."""
    decoder = json.JSONDecoder()
    for match in re.finditer(r"\[", raw):
        start = match.start()
        try:
            value, _end = decoder.raw_decode(raw, start)
        except json.JSONDecodeError:
            continue
        if isinstance(value, list) and any(isinstance(v, dict) for v in value):
            return start
    return None


def _recover_truncated_array(raw):
    """Salvage the decodable prefix of an array that never closes.

    Returns (None, []) when no bracket position yields at least one object
    element, signalling the caller to try the bracketed-line fallback.
    """
    for match in re.finditer(r"\[", raw):
        records, failures, saw_object = _walk_elements(raw, match.start())
        if saw_object:
            return records, failures
    return None, []


def _parse_json_elements(raw, array_start):
    records, failures, _ = _walk_elements(raw, array_start)
    return records, failures


def _walk_elements(raw, array_start):
    """Walk the array element by element so each failure gets a byte offset."""
    decoder = json.JSONDecoder()
    records = []
    failures = []
    saw_object = False
    pos = array_start + 1
    end = len(raw)
    while pos < end:
        while pos < end and raw[pos] in " \t\r\n,":
            pos += 1
        if pos >= end or raw[pos] == "]":
            break
        offset = pos
        try:
            element, pos = decoder.raw_decode(raw, pos)
        except json.JSONDecodeError as exc:
            failures.append(ParseFailure(offset, f"invalid JSON element: {exc.msg}"))
            nxt = raw.find("{", offset + 1)
            if nxt == -1:
                break
            pos = nxt
            continue
        if isinstance(element, dict):
            saw_object = True
        result = _element_to_record(element, offset)
        if isinstance(result, ParseFailure):
            failures.append(result)
        else:
            records.append(result)
    return records, failures, saw_object


def _element_to_record(element, offset):
    if not isinstance(element, dict):
        return ParseFailure(offset, "element is not an object")
    query = element.get("query") or element.get("question")
    if not query or not isinstance(query, str):
        return ParseFailure(offset, "missing query")
    if "states" not in element:
        return ParseFailure(offset, "missing states")

    raw_states = element["states"]
    if isinstance(raw_states, dict):
        raw_states = list(raw_states.items())
    if not isinstance(raw_states, list):
        return ParseFailure(offset, "states is neither an array nor a mapping")
    states = []
    for item in raw_states:
        if isinstance(item, dict) and "object" in item and "state" in item:
            item = (item["object"], item["state"])
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            return ParseFailure(offset, f"bad state entry {item!r}")
        class_name, value = item
        if isinstance(value, (list, tuple)):
            if not value:
                return ParseFailure(offset, f"empty state list for {class_name!r}")
            value = value[0]
        try:
            states.append((str(class_name).strip().lower(), sg.canonical_state(value)))
        except DomainMismatchError as exc:
            return ParseFailure(offset, str(exc))

    relations = []
    for item in element.get("relations", element.get("relationships", [])) or []:
        if isinstance(item, str):
            match = _RELATION_RE.match(item)
            if not match:
                return ParseFailure(offset, f"bad relation {item!r}")
            item = match.groups()
        if not isinstance(item, (list, tuple)) or len(item) != 3:
            return ParseFailure(offset, f"bad relation {item!r}")
        subject, relation, target = (str(x).strip() for x in item)
        relations.append((subject.lower(), relation.upper(), target.lower()))

    return (query.strip(), states, relations)


def _split_top_level(text: str) -> list[str]:
    """Split on commas outside brackets and quotes."""
    parts = []
    depth = 0
    quote = ""
    current = []
    for ch in text:
        if quote:
            if ch == quote:
                quote = ""
            current.append(ch)
            continue
        if ch in "\"'":
            quote = ch
            current.append(ch)
        elif ch in "[({":
            depth += 1
            current.append(ch)
        elif ch in "])}":
            depth -= 1
            current.append(ch)
        elif ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    if current:
        parts.append("".join(current))
    return [p.strip() for p in parts if p.strip()]


def _strip_wrapping(text: str) -> str:
    text = text.strip()
    while len(text) >= 2 and text[0] in "[(" and text[-1] in "])":
        text = text[1:-1].strip()
    return text.strip("\"'").strip()


def _parse_bracketed_lines(raw):
    """Fallback parser for [Question, Object-State Pairs, Relationships] lines."""
    records = []
    failures = []
    offset = 0
    for line in raw.splitlines(keepends=True):
        line_offset = offset
        offset += len(line)
        stripped = line.strip()
        if not stripped.startswith("[") or not stripped.endswith("]"):
            continue
        segments = _split_top_level(stripped[1:-1])
        if len(segments) < 2:
            failures.append(ParseFailure(line_offset, "bracketed line has no state section"))
            continue
        query = _strip_wrapping(segments[0])
        if not query:
            failures.append(ParseFailure(line_offset, "bracketed line has an empty query"))
            continue
        states = []
        relations = []
        bad_reason = None
        for segment in segments[1:]:
            inner = segment.strip()
            if inner.startswith("[") and inner.endswith("]"):
                inner = inner[1:-1]
            for item in _split_top_level(inner):
                parsed = _parse_line_item(item)
                if parsed is None:
                    bad_reason = f"unparseable item {item!r}"
                    break
                kind, value = parsed
                (states if kind == "state" else relations).append(value)
            if bad_reason:
                break
        if bad_reason:
            failures.append(ParseFailure(line_offset, bad_reason))
            continue
        records.append((query, states, relations))
    return records, failures


def _parse_line_item(item: str):
    """One item of a bracketed line: "class: [State]" or "a INSIDE b"."""
    if ":" in item:
        class_name, _, value = item.partition(":")
        value = _strip_wrapping(value)
        if not value:
            return None
        try:
            return ("state", (class_name.strip().strip("\"'").lower(), sg.canonical_state(value)))
        except DomainMismatchError:
            return None
    match = _RELATION_RE.match(_strip_wrapping(item))
    if match:
        subject, relation, target = match.groups()
        return ("relation", (subject.lower(), relation.upper(), target.lower()))
    return None
