"""Parsing model responses, grounding strings to token spans, and error triage.

Both parsers are total: any byte string comes back as a (possibly flagged)
parse, never an exception. Grounded spans are found by leftmost substring
match and snapped to token boundaries; candidates absent from the text are
hallucinations and never reach the scorer.
"""

from __future__ import annotations

import re
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum

from ..ingest import NoCoveringTokenError, align_char_span
from ..model import Instance, Span

_NO_RE = re.compile(r"^[\s\"'`*_\[\(]*no\b", re.IGNORECASE)
_TRIGGER_RE = re.compile(r"event\s+trigger\s+is\s+(.+?)\s+in\s+the\s+text", re.IGNORECASE | re.DOTALL)
_ROLE_LINE_RE = re.compile(r"^\s*([^:\n]+?)\s*:\s*(.*?)\s*$")

_QUOTE_CHARS = "\"'`*_"


def _trim_candidate(text: str) -> str:
    return text.strip().strip(_QUOTE_CHARS).strip()


@dataclass(frozen=True)
class ParsedEDResponse:
    """decision True means an event was found and trigger_string is set."""

    decision: bool
    trigger_string: str | None = None
    unparseable: bool = False

    def __post_init__(self) -> None:
        if self.decision != (self.trigger_string is not None):
            raise ValueError("trigger_string must be present exactly when decision is Yes")


def parse_ed_response(raw: str) -> ParsedEDResponse:
    """Total parser for the Yes/No trigger answer format.

    A leading "No" wins even if pattern-like text follows; anything that
    neither says No nor contains the trigger pattern falls back to a flagged
    No.
    """
    if _NO_RE.match(raw):
        return ParsedEDResponse(decision=False)
    match = _TRIGGER_RE.search(raw)
    if match:
        trigger = _trim_candidate(match.group(1))
        if trigger:
            return ParsedEDResponse(decision=True, trigger_string=trigger)
    return ParsedEDResponse(decision=False, unparseable=True)


@dataclass(frozen=True)
class ParsedEAEResponse:
    """Per-role extracted values; None means no argument for that role."""

    values: dict[str, str | None]
    missing_roles: tuple[str, ...] = ()
    duplicate_roles: tuple[str, ...] = ()
    unknown_lines: int = 0


def parse_eae_response(raw: str, roles: Sequence[str]) -> ParsedEAEResponse:
    """Total parser for "Role: value" lines; first occurrence of a role wins."""
    if not roles:
        raise ValueError("roles must be nonempty")
    by_fold = {role.casefold(): role for role in roles}
    values: dict[str, str | None] = {}
    duplicates: list[str] = []
    unknown = 0
    for line in raw.splitlines():
        match = _ROLE_LINE_RE.match(line)
        if not match:
            continue
        role = by_fold.get(match.group(1).casefold())
        if role is None:
            unknown += 1
            continue
        if role in values:
            duplicates.append(role)
            continue
        value = _trim_candidate(match.group(2))
        values[role] = value or None
    missing = tuple(role for role in roles if role not in values)
    return ParsedEAEResponse(
        values={role: values.get(role) for role in roles},
        missing_roles=missing,
        duplicate_roles=tuple(duplicates),
        unknown_lines=unknown,
    )


# ---------------------------------------------------------------------------
# Span grounding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundedSpan:
    span: Span
    exact: bool
    case_insensitive: bool = False


def ground_span(instance: Instance, candidate: str) -> GroundedSpan | None:
    """Leftmost occurrence of candidate in the text, snapped to token bounds.

    Case-sensitive first, then a case-insensitive retry; None means the
    string is absent (a hallucination). The regex retry keeps character
    offsets honest for case folds that would change string length.
    """
    candidate = candidate.strip()
    if not candidate:
        return None
    start = instance.text.find(candidate)
    case_insensitive = False
    if start < 0:
        match = re.search(re.escape(candidate), instance.text, re.IGNORECASE)
        if match is None:
            return None
        start, end = match.span()
        case_insensitive = True
    else:
        end = start + len(candidate)
    try:
        outcome = align_char_span(instance, start, end)
    except NoCoveringTokenError:
        return None
    return GroundedSpan(outcome.span, outcome.exact, case_insensitive)


# ---------------------------------------------------------------------------
# Error taxonomy
# ---------------------------------------------------------------------------

class ErrorCategory(Enum):
    CORRECT = "Correct"
    BOUNDARY_MISMATCH = "BoundaryMismatch"
    OVER_AGGRESSIVE = "OverAggressive"
    HALLUCINATION = "Hallucination"
    PARAPHRASE = "Paraphrase"
    MISS = "Miss"


PARAPHRASE_JACCARD = 0.5


@dataclass(frozen=True)
class GoldItem:
    """A gold trigger or argument, with its surface text for paraphrase checks."""

    span: Span
    event_type: str
    role: str | None
    text: str


@dataclass(frozen=True)
class PredItem:
    """A model output after grounding; span None means grounding failed."""

    event_type: str
    role: str | None
    candidate: str
    span: Span | None


def _token_jaccard(a: str, b: str) -> float:
    sa = set(a.casefold().split())
    sb = set(b.casefold().split())
    if not sa or not sb:
        return 0.0
    return len(sa & sb) / len(sa | sb)


def categorize(gold: Iterable[GoldItem], preds: Iterable[PredItem]) -> Counter:
    """Exactly one category per outcome.

    Exact tuple matches are Correct; overlapping same-label spans are
    BoundaryMismatch; ungrounded candidates are Hallucination, or Paraphrase
    when they share most of their tokens with some gold span's text; any
    remaining false positive is OverAggressive; unmatched gold is Miss.
    """
    gold = list(gold)
    counts: Counter = Counter({cat: 0 for cat in ErrorCategory})
    matched_gold: set[int] = set()

    remaining: list[PredItem] = []
    for pred in preds:
        if pred.span is None:
            paraphrase = any(
                _token_jaccard(pred.candidate, g.text) > PARAPHRASE_JACCARD for g in gold
            )
            counts[ErrorCategory.PARAPHRASE if paraphrase else ErrorCategory.HALLUCINATION] += 1
            continue
        remaining.append(pred)

    boundary_pass: list[PredItem] = []
    for pred in remaining:
        hit = next(
            (
                i
                for i, g in enumerate(gold)
                if i not in matched_gold
                and g.span == pred.span
                and g.event_type == pred.event_type
                and g.role == pred.role
            ),
            None,
        )
        if hit is None:
            boundary_pass.append(pred)
        else:
            matched_gold.add(hit)
            counts[ErrorCategory.CORRECT] += 1

    for pred in boundary_pass:
        hit = next(
            (
                i
                for i, g in enumerate(gold)
                if i not in matched_gold
                and g.event_type == pred.event_type
                and g.role == pred.role
                and g.span != pred.span
                and g.span.overlaps(pred.span)
            ),
            None,
        )
        if hit is not None:
            matched_gold.add(hit)
            counts[ErrorCategory.BOUNDARY_MISMATCH] += 1
        else:
            counts[ErrorCategory.OVER_AGGRESSIVE] += 1

    counts[ErrorCategory.MISS] += len(gold) - len(matched_gold)
    return counts
