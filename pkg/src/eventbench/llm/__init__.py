"""Few-shot LLM evaluation: prompts, response parsing, transport, and the runner."""

from .client import ChatClient, EvalConfig, RequestFailed, ResponseCache, RetryPolicy
from .prompts import (
    BuiltPrompt,
    EAEDemo,
    EDDemo,
    PromptConfig,
    build_eae_prompt,
    build_ed_prompt,
    mark_trigger,
    select_demos,
    select_eae_demos,
)
from .responses import (
    ErrorCategory,
    GoldItem,
    GroundedSpan,
    ParsedEAEResponse,
    ParsedEDResponse,
    PredItem,
    categorize,
    ground_span,
    parse_eae_response,
    parse_ed_response,
)
from .runner import Ontology, PromptBundle, RunResult, run_eval

__all__ = [
    "BuiltPrompt",
    "ChatClient",
    "EAEDemo",
    "EDDemo",
    "ErrorCategory",
    "EvalConfig",
    "GoldItem",
    "GroundedSpan",
    "Ontology",
    "ParsedEAEResponse",
    "ParsedEDResponse",
    "PredItem",
    "PromptBundle",
    "PromptConfig",
    "RequestFailed",
    "ResponseCache",
    "RetryPolicy",
    "RunResult",
    "build_eae_prompt",
    "build_ed_prompt",
    "categorize",
    "ground_span",
    "mark_trigger",
    "parse_eae_response",
    "parse_ed_response",
    "run_eval",
    "select_demos",
    "select_eae_demos",
]
