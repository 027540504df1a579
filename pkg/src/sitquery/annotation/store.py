"""Annotation task bookkeeping with an append-only JSONL log.

Every accepted annotation is one JSON line on disk; the in-memory index is
rebuilt by replaying that log, so restarting the service (or a crash between
requests) never loses accepted votes.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from sitquery.datapoints import SituationalDatapoint
from sitquery.decompose import decompose, genericize_room
from sitquery.errors import (
    DuplicateAnnotationError,
    IncompleteTaskError,
    InvariantError,
    SchemaError,
    UnknownTaskError,
)
from sitquery.evaluate import Answer

TASK_LEVELS = ("room", "object")


@dataclass(frozen=True)
class AnnotationTask:
    task_id: str
    text: str
    level: str = "room"
    datapoint_id: str = ""
    unit_id: str = ""
    # Context shown to the worker: the consensus behind a room-level task,
    # and optional image references. Object-level tasks carry neither.
    states: tuple = ()
    relations: tuple = ()
    image_refs: tuple = ()

    def __post_init__(self):
        if self.level not in TASK_LEVELS:
            raise SchemaError(f"task level must be one of {TASK_LEVELS}, got {self.level!r}")
        object.__setattr__(self, "states", tuple(tuple(s) for s in self.states))
        object.__setattr__(self, "relations", tuple(tuple(r) for r in self.relations))
        object.__setattr__(self, "image_refs", tuple(self.image_refs))

    def to_record(self) -> dict:
        return {
            "task_id": self.task_id,
            "text": self.text,
            "level": self.level,
            "datapoint_id": self.datapoint_id,
            "unit_id": self.unit_id,
            "states": [list(s) for s in self.states],
            "relations": [list(r) for r in self.relations],
            "image_refs": list(self.image_refs),
        }

    @classmethod
    def from_record(cls, record: dict) -> "AnnotationTask":
        try:
            return cls(
                task_id=record["task_id"],
                text=record["text"],
                level=record.get("level", "room"),
                datapoint_id=record.get("datapoint_id", ""),
                unit_id=record.get("unit_id", ""),
                states=record.get("states", ()),
                relations=record.get("relations", ()),
                image_refs=record.get("image_refs", ()),
            )
        except KeyError as exc:
            raise SchemaError(f"task record is missing {exc}") from exc


def tasks_from_dataset(
    datapoints: Iterable[SituationalDatapoint],
    include_objects: bool = True,
    genericize: bool = True,
) -> list[AnnotationTask]:
    """One room-level task per datapoint plus one per consensus question."""
    tasks = []
    for datapoint in datapoints:
        text = genericize_room(datapoint.query_text) if genericize else datapoint.query_text
        tasks.append(
            AnnotationTask(
                task_id=f"{datapoint.id}:room",
                text=text,
                level="room",
                datapoint_id=datapoint.id,
                unit_id="room",
                states=datapoint.consensus_states,
                relations=datapoint.consensus_relations,
            )
        )
        if not include_objects:
            continue
        for i, query in enumerate(decompose(datapoint)):
            tasks.append(
                AnnotationTask(
                    task_id=f"{datapoint.id}:cq-{i}",
                    text=query.text,
                    level="object",
                    datapoint_id=datapoint.id,
                    unit_id=f"cq-{i}",
                )
            )
    return tasks


def aggregate_votes(votes: list) -> Answer:
    """Any CannotAnswer vote wins; otherwise strict Yes/No majority."""
    if not votes:
        raise IncompleteTaskError("cannot aggregate an empty vote list")
    if any(v is Answer.CANNOT_ANSWER for v in votes):
        return Answer.CANNOT_ANSWER
    yes = sum(1 for v in votes if v is Answer.YES)
    no = len(votes) - yes
    if yes == no:
        raise InvariantError("tied Yes/No vote; use an odd number of votes per task")
    return Answer.YES if yes > no else Answer.NO


class AnnotationStore:
    """Thread-safe vote collection over a fixed task list."""

    def __init__(self, tasks: Iterable[AnnotationTask], log_path, votes_required: int = 5):
        if votes_required < 1:
            raise InvariantError("votes_required must be positive")
        if votes_required % 2 == 0:
            raise InvariantError("votes_required must be odd so majorities cannot tie")
        self.votes_required = votes_required
        self.log_path = Path(log_path)
        self._lock = threading.Lock()
        self._tasks: dict = {}
        for task in tasks:
            if task.task_id in self._tasks:
                raise InvariantError(f"duplicate task id {task.task_id!r}")
            self._tasks[task.task_id] = task
        # task_id -> list of (worker, Answer) in arrival order
        self._votes: dict = {tid: [] for tid in self._tasks}
        if self.log_path.exists():
            self._replay_log()

    def _replay_log(self) -> None:
        with self.log_path.open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                    worker = row["worker"]
                    task_id = row["task_id"]
                    answer = Answer.from_json(row["answer"])
                except (json.JSONDecodeError, KeyError) as exc:
                    raise SchemaError(f"{self.log_path}:{line_no}: bad annotation row: {exc}") from exc
                self._apply(worker, task_id, answer)

    def _apply(self, worker: str, task_id: str, answer: Answer) -> int:
        if task_id not in self._tasks:
            raise UnknownTaskError(f"unknown task {task_id!r}")
        votes = self._votes[task_id]
        if any(w == worker for w, _ in votes):
            raise DuplicateAnnotationError(f"worker {worker!r} already annotated {task_id!r}")
        votes.append((worker, answer))
        return len(votes)

    # -- write path --------------------------------------------------------

    def submit(self, worker: str, task_id: str, answer: Answer) -> int:
        """Record one vote; returns the task's vote count. Log first, then index."""
        if not worker:
            raise SchemaError("worker id must be nonempty")
        with self._lock:
            if task_id not in self._tasks:
                raise UnknownTaskError(f"unknown task {task_id!r}")
            votes = self._votes[task_id]
            if any(w == worker for w, _ in votes):
                raise DuplicateAnnotationError(f"worker {worker!r} already annotated {task_id!r}")
            row = {
                "worker": worker,
                "task_id": task_id,
                "answer": answer.value,
                "ts": time.time(),
            }
            with self.log_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(row, ensure_ascii=True) + "\n")
                fh.flush()
            votes.append((worker, answer))
            return len(votes)

    # -- read path ---------------------------------------------------------

    def next_task(self, worker: str) -> Optional[AnnotationTask]:
        """Least-annotated open task the worker has not voted on; ties by id."""
        with self._lock:
            best = None
            best_key = None
            for task_id in self._tasks:
                votes = self._votes[task_id]
                if len(votes) >= self.votes_required:
                    continue
                if any(w == worker for w, _ in votes):
                    continue
                key = (len(votes), task_id)
                if best_key is None or key < best_key:
                    best_key = key
                    best = self._tasks[task_id]
            return best

    def vote_count(self, task_id: str) -> int:
        with self._lock:
            if task_id not in self._tasks:
                raise UnknownTaskError(f"unknown task {task_id!r}")
            return len(self._votes[task_id])

    def task(self, task_id: str) -> AnnotationTask:
        if task_id not in self._tasks:
            raise UnknownTaskError(f"unknown task {task_id!r}")
        return self._tasks[task_id]

    def progress(self) -> dict:
        with self._lock:
            total = len(self._tasks)
            completed = sum(
                1 for votes in self._votes.values() if len(votes) >= self.votes_required
            )
            collected = sum(len(votes) for votes in self._votes.values())
            return {
                "total_tasks": total,
                "completed_tasks": completed,
                "votes_required": self.votes_required,
                "annotations_collected": collected,
                "annotations_remaining": total * self.votes_required - collected,
            }

    def label(self, task_id: str) -> Answer:
        """Aggregated label; raises IncompleteTaskError until all votes are in."""
        with self._lock:
            if task_id not in self._tasks:
                raise UnknownTaskError(f"unknown task {task_id!r}")
            votes = self._votes[task_id]
            if len(votes) < self.votes_required:
                raise IncompleteTaskError(
                    f"task {task_id!r} has {len(votes)}/{self.votes_required} votes"
                )
            return aggregate_votes([answer for _, answer in votes])

    def groundtruth_rows(self) -> list:
        """Aggregated rows for completed tasks, sorted by task id."""
        with self._lock:
            rows = []
            for task_id in sorted(self._tasks):
                votes = self._votes[task_id]
                if len(votes) < self.votes_required:
                    continue
                answers = [answer for _, answer in votes]
                rows.append({
                    "task_id": task_id,
                    "label": aggregate_votes(answers).value,
                    "votes": [a.value for a in answers],
                })
            return rows

    def export_groundtruth(self, path) -> int:
        rows = self.groundtruth_rows()
        with Path(path).open("w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, ensure_ascii=True) + "\n")
        return len(rows)

    def study_summary(self) -> dict:
        """Progress plus label statistics over the completed tasks."""
        rows = self.groundtruth_rows()
        progress = self.progress()
        labels = [row["label"] for row in rows]
        histogram = {answer.value: 0 for answer in Answer}
        for value in labels:
            histogram[value] += 1
        per_level = {}
        with self._lock:
            for row in rows:
                level = self._tasks[row["task_id"]].level
                bucket = per_level.setdefault(
                    level, {answer.value: 0 for answer in Answer}
                )
                bucket[row["label"]] += 1
            workers = {}
            for votes in self._votes.values():
                for worker, _ in votes:
                    workers[worker] = workers.get(worker, 0) + 1
        completed = len(labels)
        cannot = histogram[Answer.CANNOT_ANSWER.value]
        answerable = completed - cannot
        return {
            "progress": progress,
            "labels": histogram,
            "labels_by_level": per_level,
            "answerability_percent": 100.0 * answerable / completed if completed else 0.0,
            "cannot_answer_percent": 100.0 * cannot / completed if completed else 0.0,
            "annotations_per_worker": dict(sorted(workers.items())),
        }


def write_tasks_jsonl(tasks: Iterable[AnnotationTask], path) -> int:
    count = 0
    with Path(path).open("w", encoding="utf-8") as fh:
        for task in tasks:
            fh.write(json.dumps(task.to_record(), ensure_ascii=True) + "\n")
            count += 1
    return count


def read_tasks_jsonl(path) -> list:
    tasks = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            tasks.append(AnnotationTask.from_record(record))
    return tasks
