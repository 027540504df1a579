"""Iterative prompt-generate-evaluate loop.

Each iteration renders a system prompt seeded with cluster representatives of
everything generated so far, asks the chat provider for a batch of candidate
queries, and filters the batch through validation plus an embedding-similarity
gate. Batches that are too similar to the database trigger an in-conversation
regeneration request instead of a fresh conversation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from sitquery import index as qidx
from sitquery import prompts as prompting
from sitquery.datapoints import (
    Blocklist,
    ContextualClassifier,
    Provenance,
    SituationalDatapoint,
    validate,
)
from sitquery.errors import InvariantError, ProviderError
from sitquery.parsing import parse_response
from sitquery.providers import ChatParams, ChatProvider
from sitquery.scene import SceneGraph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenerationConfig:
    """Loop parameters.

    batch_size is the number of queries requested per prompt (n), and
    max_iterations (m) bounds the database at n * m entries. target_size
    cuts generation off early once enough datapoints accumulate.
    """

    batch_size: int = 15
    max_iterations: int = 140
    num_clusters: int = 10
    similarity_tau: float = 0.90
    batch_threshold_x: float = 30.0
    max_regenerations: int = 2
    target_size: int = 2000
    model_id: str = "replay"
    temperature: float = 1.0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.batch_size < 1 or self.max_iterations < 1:
            raise InvariantError("batch_size and max_iterations must be positive")
        if self.num_clusters < 1:
            raise InvariantError("num_clusters must be positive")
        if not 0.0 <= self.similarity_tau <= 1.0:
            raise InvariantError("similarity_tau must lie in [0, 1]")
        if not 0.0 <= self.batch_threshold_x <= 100.0:
            raise InvariantError("batch_threshold_x is a percentage")
        if self.max_regenerations < 0 or self.target_size < 1:
            raise InvariantError("max_regenerations and target_size must be sane")

    def chat_params(self) -> ChatParams:
        return ChatParams(model_id=self.model_id, temperature=self.temperature, seed=self.seed)


@dataclass
class BatchLog:
    """What happened during one iteration of the loop."""

    iteration: int
    regenerations: int = 0
    percent_similar_history: list = field(default_factory=list)
    parse_failures: int = 0
    rejected_invalid: int = 0
    rejected_similar: int = 0
    accepted_ids: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "regenerations": self.regenerations,
            "percent_similar_history": list(self.percent_similar_history),
            "parse_failures": self.parse_failures,
            "rejected_invalid": self.rejected_invalid,
            "rejected_similar": self.rejected_similar,
            "accepted_ids": list(self.accepted_ids),
        }


@dataclass
class GenerationLog:
    batches: list = field(default_factory=list)
    aborted_reason: Optional[str] = None

    @property
    def total_regenerations(self) -> int:
        return sum(b.regenerations for b in self.batches)

    @property
    def total_accepted(self) -> int:
        return sum(len(b.accepted_ids) for b in self.batches)

    def to_dict(self) -> dict:
        return {
            "batches": [b.to_dict() for b in self.batches],
            "total_regenerations": self.total_regenerations,
            "total_accepted": self.total_accepted,
            "aborted_reason": self.aborted_reason,
        }


def run_generation(
    graph: SceneGraph,
    chat: ChatProvider,
    embedder,
    config: GenerationConfig,
    blocklist: Optional[Blocklist] = None,
    classifier: Optional[ContextualClassifier] = None,
    bundle: prompting.PromptBundle = prompting.DEFAULT_BUNDLE,
) -> tuple[qidx.QueryDatabase, list[SituationalDatapoint], GenerationLog]:
    """Run the full loop and return the database, datapoints, and a log.

    Provider failures abort the run but still return everything accepted so
    far, with the reason recorded on the log.
    """
    if blocklist is None:
        blocklist = Blocklist.from_scene(graph)
    db = qidx.QueryDatabase()
    datapoints: list[SituationalDatapoint] = []
    run_log = GenerationLog()
    params = config.chat_params()

    try:
        for iteration in range(1, config.max_iterations + 1):
            if len(datapoints) >= config.target_size:
                break
            batch_log = BatchLog(iteration=iteration)
            run_log.batches.append(batch_log)
            _run_iteration(
                graph, chat, embedder, config, blocklist, classifier, bundle,
                params, db, datapoints, batch_log,
            )
            log.info(
                "iteration %d: accepted %d (db size %d, %d regenerations)",
                iteration, len(batch_log.accepted_ids), len(db), batch_log.regenerations,
            )
    except ProviderError as exc:
        run_log.aborted_reason = f"{type(exc).__name__}: {exc}"
        log.warning("generation aborted: %s", run_log.aborted_reason)

    if len(db) > config.batch_size * config.max_iterations:
        raise InvariantError("database exceeded batch_size * max_iterations")
    return db, datapoints, run_log


def _run_iteration(
    graph, chat, embedder, config, blocklist, classifier, bundle,
    params, db, datapoints, batch_log,
):
    representatives = []
    if len(db) > 0:
        rep_ids = qidx.cluster_representatives(db, config.num_clusters)
        representatives = [db.entry(rid).query_text for rid in rep_ids]

    conversation = [
        {"role": "system", "content": prompting.render_system_prompt(graph, representatives, bundle)},
        {"role": "user", "content": prompting.render_user_prompt(config.batch_size, bundle)},
    ]

    while True:
        response = chat.complete(conversation, params)
        conversation.append({"role": "assistant", "content": response})

        candidates, failures = parse_response(response)
        batch_log.parse_failures += len(failures)
        for failure in failures:
            log.debug("parse failure at byte %d: %s", failure.offset, failure.reason)

        valid = []
        for candidate in candidates:
            verdict = validate(candidate, graph, blocklist, classifier=classifier)
            if verdict.accepted:
                valid.append(candidate)
            else:
                batch_log.rejected_invalid += 1
                log.debug("rejected %r: %s", candidate.query_text, "; ".join(verdict.reasons))

        if not valid:
            batch_log.percent_similar_history.append(0.0)
            return

        vectors = embedder.embed([c.query_text for c in valid])
        report = qidx.max_similarity(
            vectors, db, tau=config.similarity_tau, batch_threshold_x=config.batch_threshold_x
        )
        batch_log.percent_similar_history.append(report.batch_percent_similar)

        if (
            report.batch_percent_similar > config.batch_threshold_x
            and batch_log.regenerations < config.max_regenerations
        ):
            offending = [valid[i].query_text for i in report.similar_indices()]
            conversation.append({
                "role": "user",
                "content": prompting.render_regen_prompt(
                    report.batch_percent_similar, offending, config.batch_size, bundle
                ),
            })
            batch_log.regenerations += 1
            continue

        _accept_batch(valid, vectors, report, config, db, datapoints, batch_log)
        return


def _accept_batch(valid, vectors, report, config, db, datapoints, batch_log):
    """Admit candidates one at a time so same-batch near-duplicates also gate."""
    for batch_index, (candidate, sim) in enumerate(zip(valid, report.per_query_max_sim)):
        if len(datapoints) >= config.target_size:
            return
        vector = vectors[batch_index]
        if sim > config.similarity_tau:
            batch_log.rejected_similar += 1
            continue
        if len(db) > 0:
            recheck = qidx.max_similarity(
                vector.reshape(1, -1), db,
                tau=config.similarity_tau, batch_threshold_x=config.batch_threshold_x,
            )
            if recheck.per_query_max_sim[0] > config.similarity_tau:
                batch_log.rejected_similar += 1
                continue
        new_id = f"dp-{len(datapoints) + 1:05d}"
        accepted = SituationalDatapoint(
            id=new_id,
            query_text=candidate.query_text,
            consensus_states=candidate.consensus_states,
            consensus_relations=candidate.consensus_relations,
            provenance=Provenance(
                iteration=batch_log.iteration,
                batch_index=batch_index,
                model_id=config.model_id,
                regenerations=batch_log.regenerations,
            ),
            labels=candidate.labels,
        )
        qidx.insert(db, new_id, accepted.query_text, vector)
        datapoints.append(accepted)
        batch_log.accepted_ids.append(new_id)
