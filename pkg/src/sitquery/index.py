"""Query database: similarity gating and cluster-representative selection.

The database holds every accepted query with its embedding. New batches are
gated by maximum cosine similarity against existing entries; representatives
come from average-linkage agglomerative clustering (cosine distance), picking
per cluster the entry closest to the cluster's mean embedding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from sitquery import kernels
from sitquery.errors import DimensionMismatchError, DuplicateIdError


@dataclass(frozen=True)
class Entry:
    datapoint_id: str
    query_text: str
    embedding: np.ndarray


@dataclass
class QueryDatabase:
    entries: list[Entry] = field(default_factory=list)
    representatives: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> list[str]:
        return [e.datapoint_id for e in self.entries]

    def matrix(self) -> np.ndarray:
        if not self.entries:
            return np.empty((0, 0), dtype=np.float64)
        return np.vstack([e.embedding for e in self.entries])

    def entry(self, datapoint_id: str) -> Entry:
        for e in self.entries:
            if e.datapoint_id == datapoint_id:
                return e
        raise KeyError(datapoint_id)


@dataclass(frozen=True)
class SimilarityReport:
    per_query_max_sim: tuple[float, ...]
    batch_percent_similar: float
    threshold_tau: float
    batch_threshold_x: float

    def similar_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.per_query_max_sim) if s > self.threshold_tau]

    def to_dict(self) -> dict:
        return {
            "per_query_max_sim": list(self.per_query_max_sim),
            "batch_percent_similar": self.batch_percent_similar,
            "tau": self.threshold_tau,
            "X": self.batch_threshold_x,
        }


def insert(db: QueryDatabase, datapoint_id: str, query_text: str, embedding) -> QueryDatabase:
    """Append one entry; representatives are untouched until the next clustering."""
    embedding = np.asarray(embedding, dtype=np.float64).reshape(-1)
    if any(e.datapoint_id == datapoint_id for e in db.entries):
        raise DuplicateIdError(f"datapoint id {datapoint_id!r} already in database")
    if db.entries and db.entries[0].embedding.shape != embedding.shape:
        raise DimensionMismatchError(
            f"embedding dimension {embedding.shape[0]} != {db.entries[0].embedding.shape[0]}"
        )
    db.entries.append(Entry(datapoint_id, query_text, embedding))
    return db


def max_similarity(
    batch: Sequence[np.ndarray] | np.ndarray,
    db: QueryDatabase,
    tau: float = 0.90,
    batch_threshold_x: float = 30.0,
) -> SimilarityReport:
    """Max cosine of each batch vector against the database; empty db yields -1."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch.reshape(1, -1)
    n = batch.shape[0]
    if len(db) == 0:
        sims = [-1.0] * n
    else:
        matrix = db.matrix()
        if matrix.shape[1] != batch.shape[1]:
            raise DimensionMismatchError(
                f"batch dimension {batch.shape[1]} != database dimension {matrix.shape[1]}"
            )
        dots = kernels.pairwise_dots(batch, matrix)
        sims = [float(np.max(dots[i])) for i in range(n)]
    similar = sum(1 for s in sims if s > tau)
    percent = 100.0 * similar / n if n else 0.0
    return SimilarityReport(
        per_query_max_sim=tuple(sims),
        batch_percent_similar=percent,
        threshold_tau=tau,
        batch_threshold_x=batch_threshold_x,
    )


def _cut_to_clusters(merges, n: int, k: int) -> list[list[int]]:
    """Apply the first n-k merges of a linkage sequence; return member index lists."""
    members = {i: [i] for i in range(n)}
    for step, (la, lb, _dist) in enumerate(merges[: n - k]):
        members[n + step] = members.pop(la) + members.pop(lb)
    return [sorted(m) for m in members.values()]


def cluster_representatives(db: QueryDatabase, k: int) -> list[str]:
    """Ids of the entries nearest each cluster's mean embedding.

    Agglomerative clustering, average linkage, cosine distance, cut at
    min(k, |db|) clusters. Within a cluster the representative minimizes
    cosine distance to the mean; ties break toward the lowest datapoint id.
    Output is sorted by datapoint id.
    """
    n = len(db)
    if n == 0:
        return []
    k = max(1, min(k, n))
    matrix = db.matrix()
    if k == n:
        clusters = [[i] for i in range(n)]
    else:
        dots = kernels.pairwise_dots(matrix, matrix)
        dist = 1.0 - dots
        merges = kernels.linkage_average(dist)
        clusters = _cut_to_clusters(merges, n, k)

    chosen: list[str] = []
    for members in clusters:
        mean = matrix[members].mean(axis=0)
        norm = np.linalg.norm(mean)
        if norm > 0.0:
            mean = mean / norm
        best_id = None
        best_dist = None
        for i in members:
            d = 1.0 - float(np.dot(matrix[i], mean))
            entry_id = db.entries[i].datapoint_id
            if best_dist is None or d < best_dist or (d == best_dist and entry_id < best_id):
                best_dist = d
                best_id = entry_id
        chosen.append(best_id)
    return sorted(chosen)


def export_embeddings(db: QueryDatabase, path: Union[str, Path]) -> int:
    """Embedding cache file: JSONL of {id, text, vector} for external projection plots."""
    count = 0
    with open(path, "w") as fh:
        for e in db.entries:
            fh.write(
                json.dumps(
                    {"id": e.datapoint_id, "text": e.query_text, "vector": e.embedding.tolist()}
                )
                + "\n"
            )
            count += 1
    return count


def load_embeddings(path: Union[str, Path]) -> QueryDatabase:
    db = QueryDatabase()
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            insert(db, record["id"], record["text"], record["vector"])
    return db
