"""Exception types shared across the pipeline."""


class SitQueryError(Exception):
    """Base class for all domain errors raised by this package."""


class SchemaError(SitQueryError):
    """A document does not conform to its schema."""


class InvariantError(SitQueryError):
    """A structural invariant is violated (dangling id, duplicate id, forbidden relation)."""


class UnknownObjectError(SitQueryError):
    """A class name does not resolve to any object in the scene vocabulary."""


class InfeasibleRelationError(SitQueryError):
    """A relationship matches the scene's feasibility denylist."""


class DomainMismatchError(SitQueryError):
    """A state value does not belong to any domain declared by the target object."""


class DimensionMismatchError(SitQueryError):
    """Embedding dimensions disagree."""


class DuplicateIdError(SitQueryError):
    """An id is already present in the query database."""


class ProviderError(SitQueryError):
    """A remote provider (chat or embedding) failed."""


class TranscriptExhausted(ProviderError):
    """A replay transcript ran out of scripted responses."""


class ReplayMismatchError(ProviderError):
    """A replay transcript entry expected a different prompt than the one served."""


class UnparseableAnswerError(SitQueryError):
    """An answerer response carries no recognizable Yes/No/Cannot Answer verdict."""


class IdMismatchError(SitQueryError):
    """Prediction and ground-truth id sets do not align."""


class DuplicateAnnotationError(SitQueryError):
    """A worker already annotated this task."""


class UnknownTaskError(SitQueryError):
    """A task id does not exist in the study."""


class IncompleteTaskError(SitQueryError):
    """A task does not yet have the required number of annotations."""


class EmptyInputError(SitQueryError):
    """An operation requiring a nonempty input received an empty one."""
