"""Dataset analysis: room scope, optional LLM labels, and length statistics."""

from __future__ import annotations

import dataclasses
import re
import statistics
from dataclasses import dataclass
from typing import Iterable, Optional

from sitquery import scene as sg
from sitquery.datapoints import CategoryLabels, SituationalDatapoint
from sitquery.errors import EmptyInputError

ROOM_CATEGORY = "room"
MULTI_ROOM_CATEGORY = "multi-room"
NO_ROOM_CATEGORY = "no-room"

_ROOM_PATTERNS = {
    "kitchen": re.compile(r"\bkitchens?\b", re.IGNORECASE),
    "livingroom": re.compile(r"\bliving\s*rooms?\b", re.IGNORECASE),
    "bedroom": re.compile(r"\bbedrooms?\b", re.IGNORECASE),
    "bathroom": re.compile(r"\bbathrooms?\b", re.IGNORECASE),
}


def mentioned_rooms(text: str) -> set:
    return {room for room, pattern in _ROOM_PATTERNS.items() if pattern.search(text)}


def inferred_rooms(datapoint: SituationalDatapoint, graph: sg.SceneGraph) -> set:
    """Rooms touched by the consensus objects and relation endpoints."""
    rooms = set()
    for class_name, _state in datapoint.consensus_states:
        rooms |= sg.resolve_rooms(graph, class_name)
    for subject, _relation, target in datapoint.consensus_relations:
        if target in sg.ROOMS:
            rooms.add(target)
        else:
            rooms |= sg.resolve_rooms(graph, target)
        rooms |= sg.resolve_rooms(graph, subject)
    return rooms


def categorize_room(datapoint: SituationalDatapoint, graph: sg.SceneGraph) -> str:
    """Explicit room mentions win; otherwise fall back to object placement."""
    mentioned = mentioned_rooms(datapoint.query_text)
    if len(mentioned) == 1:
        return ROOM_CATEGORY
    if len(mentioned) >= 2:
        return MULTI_ROOM_CATEGORY
    inferred = inferred_rooms(datapoint, graph)
    if len(inferred) == 1:
        return ROOM_CATEGORY
    if len(inferred) >= 2:
        return MULTI_ROOM_CATEGORY
    return NO_ROOM_CATEGORY


@dataclass(frozen=True)
class LengthStats:
    count: int
    char_median: float
    char_mean: float
    word_median: float
    word_mean: float
    char_histogram: list
    word_histogram: list

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _histogram(values: list, bin_width: int) -> list:
    """Fixed-width bins [start, start + width) from zero through the maximum."""
    if bin_width < 1:
        raise ValueError("bin_width must be positive")
    top = max(values)
    bins = []
    start = 0
    while start <= top:
        end = start + bin_width
        bins.append({
            "start": start,
            "end": end,
            "count": sum(1 for v in values if start <= v < end),
        })
        start = end
    return bins


def length_stats(
    texts: Iterable[str],
    char_bin_width: int = 10,
    word_bin_width: int = 2,
) -> LengthStats:
    """Character counts ignore the trailing question mark; words split on whitespace."""
    texts = list(texts)
    if not texts:
        raise EmptyInputError("no query texts to measure")
    chars = []
    words = []
    for text in texts:
        body = text[:-1] if text.endswith("?") else text
        chars.append(len(body))
        words.append(len(text.split()))
    return LengthStats(
        count=len(texts),
        char_median=float(statistics.median(chars)),
        char_mean=float(statistics.fmean(chars)),
        word_median=float(statistics.median(words)),
        word_mean=float(statistics.fmean(words)),
        char_histogram=_histogram(chars, char_bin_width),
        word_histogram=_histogram(words, word_bin_width),
    )


def label_datapoint(
    datapoint: SituationalDatapoint,
    graph: sg.SceneGraph,
    situational_classifier=None,
    temporal_classifier=None,
) -> SituationalDatapoint:
    """Attach room/situational/temporal labels; classifier-less labels defer."""
    labels = CategoryLabels(
        room=categorize_room(datapoint, graph),
        situational=_classify(situational_classifier, datapoint.query_text),
        temporal=_classify(temporal_classifier, datapoint.query_text),
    )
    return dataclasses.replace(datapoint, labels=labels)


def _classify(classifier, text: str) -> Optional[bool]:
    if classifier is None:
        return None
    return bool(classifier.classify_contextual(text))


def analyze_dataset(
    datapoints: list,
    graph: sg.SceneGraph,
    situational_classifier=None,
    temporal_classifier=None,
) -> dict:
    """Full analysis report as a JSON-ready dict."""
    if not datapoints:
        raise EmptyInputError("no datapoints to analyze")
    labeled = [
        label_datapoint(dp, graph, situational_classifier, temporal_classifier)
        for dp in datapoints
    ]
    room_counts = {ROOM_CATEGORY: 0, MULTI_ROOM_CATEGORY: 0, NO_ROOM_CATEGORY: 0}
    for dp in labeled:
        room_counts[dp.labels.room] += 1

    def label_counts(attr: str) -> dict:
        counts = {"yes": 0, "no": 0, "deferred": 0}
        for dp in labeled:
            value = getattr(dp.labels, attr)
            if value is None:
                counts["deferred"] += 1
            elif value:
                counts["yes"] += 1
            else:
                counts["no"] += 1
        return counts

    stats = length_stats([dp.query_text for dp in labeled])
    total = len(labeled)
    return {
        "datapoints": total,
        "room_categories": {
            "counts": room_counts,
            "percent": {k: 100.0 * v / total for k, v in room_counts.items()},
        },
        "situational": label_counts("situational"),
        "temporal": label_counts("temporal"),
        "lengths": stats.to_dict(),
        "per_datapoint": [
            {
                "id": dp.id,
                "room": dp.labels.room,
                "situational": dp.labels.situational,
                "temporal": dp.labels.temporal,
            }
            for dp in labeled
        ],
    }
