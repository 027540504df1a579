"""Answer types, oracles, answerers, and evaluation metrics.

Evaluation happens at two levels. Room level asks the situational query
itself (optionally genericized); object level asks each decomposed consensus
question. A datapoint counts as jointly solved when either level succeeds.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from sitquery import prompts as prompting
from sitquery import scene as sg
from sitquery.datapoints import SituationalDatapoint
from sitquery.decompose import ConsensusQuery, decompose, genericize_room
from sitquery.errors import (
    IdMismatchError,
    SchemaError,
    UnparseableAnswerError,
)
from sitquery.providers import ChatParams, ChatProvider

REASONING_FOLLOWUP = (
    "Your answer is: {ANSWER}.\n"
    "Can you provide a brief reason for your answer focusing only on the "
    "object states and relationships provided?"
)

ANSWER_SYSTEM_TEMPLATE = (
    "You are answering questions about the current situation in a household.\n"
    "Object states are listed in OBJ_STATE_DICT and relationships in OBJ_REL_DICT.\n"
    "OBJ_STATE_DICT :-\n{OBJ_STATE_DICT}\n"
    "OBJ_REL_DICT :-\n{OBJ_REL_DICT}\n"
    "Answer each question with a single word: Yes, No, or CannotAnswer."
)

_FIRST_WORD = re.compile(r"[A-Za-z]+")


class Answer(enum.Enum):
    YES = "Yes"
    NO = "No"
    CANNOT_ANSWER = "CannotAnswer"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def from_json(cls, value: str) -> "Answer":
        for member in cls:
            if member.value == value:
                return member
        raise SchemaError(f"unknown answer label {value!r}")

    @classmethod
    def from_bool(cls, value: bool) -> "Answer":
        return cls.YES if value else cls.NO

    @classmethod
    def from_text(cls, text: str) -> "Answer":
        """Normalize free-form model output by its first alphabetic token."""
        match = _FIRST_WORD.search(text or "")
        if not match:
            raise UnparseableAnswerError(f"no answer token in {text!r}")
        token = match.group(0).lower()
        if token == "yes":
            return cls.YES
        if token == "no":
            return cls.NO
        if token in ("cannot", "cant", "unanswerable", "unknown", "unsure"):
            return cls.CANNOT_ANSWER
        raise UnparseableAnswerError(f"unrecognized answer token {token!r}")


# ---------------------------------------------------------------------------
# Oracles


def oracle_consensus(graph: sg.SceneGraph, class_name: str, state: str) -> bool:
    return sg.query_state(graph, class_name, state)


def oracle_situational(graph: sg.SceneGraph, datapoint: SituationalDatapoint) -> bool:
    """True when every consensus state and relation holds in the graph."""
    for class_name, state in datapoint.consensus_states:
        if not sg.query_state(graph, class_name, state):
            return False
    for subject, relation, target in datapoint.consensus_relations:
        if not graph.has_relationship(subject, relation, target):
            return False
    return True


class OracleAnswerer:
    """Answers directly from the scene graph; never says CannotAnswer."""

    def __init__(self, graph: sg.SceneGraph):
        self.graph = graph

    def answer_room(self, datapoint: SituationalDatapoint) -> Answer:
        return Answer.from_bool(oracle_situational(self.graph, datapoint))

    def answer_object(self, query: ConsensusQuery) -> Answer:
        return Answer.from_bool(oracle_consensus(self.graph, query.class_name, query.state))


class LlmAnswerer:
    """Asks a chat provider, then collects a short reasoning follow-up."""

    def __init__(
        self,
        graph: sg.SceneGraph,
        chat: ChatProvider,
        params: Optional[ChatParams] = None,
        collect_reasoning: bool = True,
    ):
        self.graph = graph
        self.chat = chat
        self.params = params or ChatParams()
        self.collect_reasoning = collect_reasoning
        self.reasonings: dict = {}
        self._system = ANSWER_SYSTEM_TEMPLATE.format(
            OBJ_STATE_DICT="\n".join(prompting.state_dict_lines(graph)),
            OBJ_REL_DICT="\n".join(prompting.rel_dict_lines(graph)),
        )

    def _ask(self, key, question: str) -> Answer:
        conversation = [
            {"role": "system", "content": self._system},
            {"role": "user", "content": question},
        ]
        reply = self.chat.complete(conversation, self.params)
        answer = Answer.from_text(reply)
        if self.collect_reasoning:
            conversation.append({"role": "assistant", "content": reply})
            conversation.append({
                "role": "user",
                "content": REASONING_FOLLOWUP.format(ANSWER=answer.value),
            })
            self.reasonings[key] = self.chat.complete(conversation, self.params).strip()
        return answer

    def answer_room(self, datapoint: SituationalDatapoint) -> Answer:
        return self._ask((datapoint.id, "room"), genericize_room(datapoint.query_text))

    def answer_object(self, query: ConsensusQuery) -> Answer:
        return self._ask((query.parent_id, query.text), query.text)


class RecordedAnswerer:
    """Replays predictions stored as JSONL rows.

    Row shape: {"datapoint_id": ..., "unit_id": ..., "level": "room"|"object",
    "answer": "Yes"|"No"|"CannotAnswer"}. Room-level rows use unit_id "room";
    object-level rows use "cq-<index>" in decomposition order.
    """

    def __init__(self, rows: Iterable[dict]):
        self._answers = {}
        for row in rows:
            try:
                key = (row["datapoint_id"], row["level"], row["unit_id"])
                answer = Answer.from_json(row["answer"])
            except KeyError as exc:
                raise SchemaError(f"prediction row is missing {exc}") from exc
            if row["level"] not in ("room", "object"):
                raise SchemaError(f"prediction level must be room or object, got {row['level']!r}")
            if key in self._answers:
                raise SchemaError(f"duplicate prediction for {key}")
            self._answers[key] = answer

    @classmethod
    def from_jsonl(cls, path) -> "RecordedAnswerer":
        rows = []
        with Path(path).open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rows.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
        return cls(rows)

    def lookup(self, datapoint_id: str, level: str, unit_id: str) -> Answer:
        try:
            return self._answers[(datapoint_id, level, unit_id)]
        except KeyError:
            raise IdMismatchError(
                f"no recorded answer for datapoint {datapoint_id!r} {level} unit {unit_id!r}"
            ) from None

    def answer_room(self, datapoint: SituationalDatapoint) -> Answer:
        return self.lookup(datapoint.id, "room", "room")

    def answer_object(self, query: ConsensusQuery) -> Answer:
        raise NotImplementedError("use lookup with an explicit unit id")


# ---------------------------------------------------------------------------
# Joint success


@dataclass(frozen=True)
class SuccessFlags:
    room: bool
    object: bool

    @property
    def joint(self) -> bool:
        return joint_success(self.room, self.object)


def joint_success(room_ok: bool, object_ok: bool) -> bool:
    """A datapoint is solved when either evaluation level succeeds."""
    return bool(room_ok) or bool(object_ok)


def flags_from_scores(room_score: float, object_score: float, threshold: float = 0.5) -> SuccessFlags:
    return SuccessFlags(room=room_score >= threshold, object=object_score >= threshold)


@dataclass(frozen=True)
class JointResult:
    datapoint_id: str
    room_score: float
    object_score: float
    flags: SuccessFlags

    def to_dict(self) -> dict:
        return {
            "datapoint_id": self.datapoint_id,
            "room_score": self.room_score,
            "object_score": self.object_score,
            "room_success": self.flags.room,
            "object_success": self.flags.object,
            "joint_success": self.flags.joint,
        }


# ---------------------------------------------------------------------------
# Metrics


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    pred_cannot: int = 0
    gt_cannot: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn + self.pred_cannot + self.gt_cannot


@dataclass(frozen=True)
class MetricSet:
    """Percentages over one set of (ground truth, prediction) pairs.

    Agreement and accuracy exclude pairs whose ground truth is CannotAnswer.
    Ratios with an empty denominator report 0.0.
    """

    pairs: int
    confusion: ConfusionCounts
    agreement_percent: float
    accuracy_percent: float
    f1_percent: float
    answerability_percent: float
    cannot_answer_percent: float


def compute_metrics(pairs: list) -> MetricSet:
    """pairs is a list of (ground_truth: Answer, prediction: Answer)."""
    tp = fp = fn = tn = pred_cannot = gt_cannot = 0
    agree = 0
    for gt, pred in pairs:
        if gt is Answer.CANNOT_ANSWER:
            gt_cannot += 1
            continue
        if pred is Answer.CANNOT_ANSWER:
            pred_cannot += 1
            continue
        if gt is Answer.YES:
            if pred is Answer.YES:
                tp += 1
                agree += 1
            else:
                fn += 1
        else:
            if pred is Answer.YES:
                fp += 1
            else:
                tn += 1
                agree += 1

    answerable = len(pairs) - gt_cannot
    decided = tp + fp + fn + tn
    confusion = ConfusionCounts(tp, fp, fn, tn, pred_cannot, gt_cannot)
    return MetricSet(
        pairs=len(pairs),
        confusion=confusion,
        agreement_percent=_percent(agree, answerable),
        accuracy_percent=_percent(tp + tn, decided),
        f1_percent=_percent(2 * tp, 2 * tp + fp + fn),
        answerability_percent=_percent(answerable, len(pairs)),
        cannot_answer_percent=_percent(gt_cannot, len(pairs)),
    )


def _percent(numerator: int, denominator: int) -> float:
    if denominator <= 0:
        return 0.0
    return 100.0 * numerator / denominator


@dataclass
class EvaluationReport:
    room: MetricSet
    object: MetricSet
    joint_results: list = field(default_factory=list)

    @property
    def room_success_percent(self) -> float:
        return _percent(sum(1 for r in self.joint_results if r.flags.room), len(self.joint_results))

    @property
    def object_success_percent(self) -> float:
        return _percent(sum(1 for r in self.joint_results if r.flags.object), len(self.joint_results))

    @property
    def joint_success_percent(self) -> float:
        return _percent(sum(1 for r in self.joint_results if r.flags.joint), len(self.joint_results))

    def to_dict(self) -> dict:
        return {
            "room": _metricset_dict(self.room),
            "object": _metricset_dict(self.object),
            "joint": {
                "datapoints": len(self.joint_results),
                "room_success_percent": self.room_success_percent,
                "object_success_percent": self.object_success_percent,
                "joint_success_percent": self.joint_success_percent,
                "per_datapoint": [r.to_dict() for r in self.joint_results],
            },
        }


def _metricset_dict(metrics: MetricSet) -> dict:
    c = metrics.confusion
    return {
        "pairs": metrics.pairs,
        "confusion": {"tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn,
                      "pred_cannot": c.pred_cannot, "gt_cannot": c.gt_cannot},
        "agreement_percent": metrics.agreement_percent,
        "accuracy_percent": metrics.accuracy_percent,
        "f1_percent": metrics.f1_percent,
        "answerability_percent": metrics.answerability_percent,
        "cannot_answer_percent": metrics.cannot_answer_percent,
    }


# ---------------------------------------------------------------------------
# Dataset evaluation


def evaluate_recorded(
    datapoints: list,
    graph: sg.SceneGraph,
    recorded: RecordedAnswerer,
    threshold: float = 0.5,
) -> EvaluationReport:
    """Score recorded predictions against the scene oracle at both levels."""
    oracle = OracleAnswerer(graph)
    room_pairs = []
    object_pairs = []
    joint_results = []
    for datapoint in datapoints:
        gt_room = oracle.answer_room(datapoint)
        pred_room = recorded.lookup(datapoint.id, "room", "room")
        room_pairs.append((gt_room, pred_room))
        room_score = 1.0 if pred_room is gt_room else 0.0

        queries = decompose(datapoint)
        correct = 0
        for i, query in enumerate(queries):
            gt = oracle.answer_object(query)
            pred = recorded.lookup(datapoint.id, "object", f"cq-{i}")
            object_pairs.append((gt, pred))
            if pred is gt:
                correct += 1
        object_score = correct / len(queries) if queries else 0.0

        joint_results.append(
            JointResult(
                datapoint_id=datapoint.id,
                room_score=room_score,
                object_score=object_score,
                flags=flags_from_scores(room_score, object_score, threshold),
            )
        )
    return EvaluationReport(
        room=compute_metrics(room_pairs),
        object=compute_metrics(object_pairs),
        joint_results=joint_results,
    )


def evaluate_llm(
    datapoints: list,
    graph: sg.SceneGraph,
    answerer: LlmAnswerer,
    threshold: float = 0.5,
) -> EvaluationReport:
    """Like evaluate_recorded but querying a live (or replayed) model."""
    oracle = OracleAnswerer(graph)
    room_pairs = []
    object_pairs = []
    joint_results = []
    for datapoint in datapoints:
        gt_room = oracle.answer_room(datapoint)
        pred_room = answerer.answer_room(datapoint)
        room_pairs.append((gt_room, pred_room))
        room_score = 1.0 if pred_room is gt_room else 0.0

        queries = decompose(datapoint)
        correct = 0
        for query in queries:
            gt = oracle.answer_object(query)
            pred = answerer.answer_object(query)
            object_pairs.append((gt, pred))
            if pred is gt:
                correct += 1
        object_score = correct / len(queries) if queries else 0.0

        joint_results.append(
            JointResult(
                datapoint_id=datapoint.id,
                room_score=room_score,
                object_score=object_score,
                flags=flags_from_scores(room_score, object_score, threshold),
            )
        )
    return EvaluationReport(
        room=compute_metrics(room_pairs),
        object=compute_metrics(object_pairs),
        joint_results=joint_results,
    )


def compare_to_groundtruth(ground_truths: dict, predictions: dict) -> MetricSet:
    """Metrics for annotated ground truth labels vs predicted answers.

    Both arguments map task id to Answer; the key sets must match exactly.
    """
    missing = sorted(set(ground_truths) - set(predictions))
    extra = sorted(set(predictions) - set(ground_truths))
    if missing or extra:
        raise IdMismatchError(
            f"prediction ids do not match ground truth (missing {missing[:5]}, extra {extra[:5]})"
        )
    pairs = [(ground_truths[task_id], predictions[task_id]) for task_id in sorted(ground_truths)]
    return compute_metrics(pairs)


def format_report(report: EvaluationReport) -> str:
    """Plain-text table for terminal output."""
    rows = [
        ("level", "pairs", "agree%", "acc%", "f1%", "answerable%", "cannot%"),
    ]
    for name, metrics in (("room", report.room), ("object", report.object)):
        rows.append((
            name,
            str(metrics.pairs),
            f"{metrics.agreement_percent:.2f}",
            f"{metrics.accuracy_percent:.2f}",
            f"{metrics.f1_percent:.2f}",
            f"{metrics.answerability_percent:.2f}",
            f"{metrics.cannot_answer_percent:.2f}",
        ))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in rows]
    lines.append("")
    lines.append(
        f"joint over {len(report.joint_results)} datapoints: "
        f"room {report.room_success_percent:.2f}%  "
        f"object {report.object_success_percent:.2f}%  "
        f"joint {report.joint_success_percent:.2f}%"
    )
    return "\n".join(lines)
