"""Event-extraction benchmark harness.

Normalizes corpora under the loosest data assumptions, generates balanced
document-level splits, scores predictions with six tuple-match metrics
(including the attachment-aware AI+/AC+), and runs few-shot LLM evaluations
against any OpenAI-compatible chat endpoint.
"""

__version__ = "0.1.0"

from .model import (
    AnnotatedInstance,
    DatasetProfile,
    EventMention,
    Instance,
    Span,
    TaskKind,
    span_text,
)
from .scorer import MetricCounts, MetricKind, MetricReport, micro_f1, score_instance

__all__ = [
    "AnnotatedInstance",
    "DatasetProfile",
    "EventMention",
    "Instance",
    "MetricCounts",
    "MetricKind",
    "MetricReport",
    "Span",
    "TaskKind",
    "micro_f1",
    "score_instance",
    "span_text",
    "__version__",
]
