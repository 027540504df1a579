"""Human annotation collection: durable store plus HTTP service."""

from sitquery.annotation.store import (
    AnnotationStore,
    AnnotationTask,
    aggregate_votes,
    tasks_from_dataset,
)

__all__ = [
    "AnnotationStore",
    "AnnotationTask",
    "aggregate_votes",
    "tasks_from_dataset",
]
