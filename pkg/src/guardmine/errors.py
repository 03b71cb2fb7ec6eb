"""Exception hierarchy shared across the pipeline stages.

Every error carries a ``stage`` tag so the CLI can surface module-tagged
messages without inspecting tracebacks.
"""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for all stage failures."""

    stage = "pipeline"

    def tagged(self) -> str:
        return f"[{self.stage}] {self}"


class CorpusError(PipelineError):
    """Corpus-level violation, e.g. a duplicate transaction hash."""

    stage = "corpus"


class RecordParseError(CorpusError):
    """A corpus line that does not parse into a valid record."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SourceParseError(PipelineError):
    """Unbalanced delimiters or otherwise unparseable source text."""

    stage = "extract"


class ExtractionFailure(PipelineError):
    """No recognizable guard statement at the requested location.

    This is a classification signal, not necessarily a fatal error: the
    ingest stage turns it into the ExtractionFailure failure class.
    """

    stage = "extract"


class DegeneratePredicateError(PipelineError):
    """Predicate text that normalizes to the empty string."""

    stage = "extract"


class DegenerateDocumentError(PipelineError):
    """A view text that tokenizes to nothing and cannot be embedded."""

    stage = "embedding"


class VectorFormatError(PipelineError):
    """External vector file violates the ``n d`` format contract."""

    stage = "embedding"


class MetricUndefinedError(PipelineError):
    """Validity metric has no defined value for this clustering."""

    stage = "metrics"


class EmptySelectionError(PipelineError):
    """No admissible configuration survived the grid search."""

    stage = "search"


class DegenerateProjectionError(PipelineError):
    """PCA requested on data with zero total variance."""

    stage = "report"
