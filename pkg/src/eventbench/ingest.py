"""Corpus I/O, character-to-token alignment, document windowing, and statistics.

The canonical corpus is JSONL, one instance per line:

    {"instance_id": ..., "doc_id": ..., "window_index": 0,
     "tokens": [...], "text": ..., "char_offsets": [[s, e], ...],
     "events": [{"trigger": [s, e], "event_type": ...,
                 "arguments": [{"span": [s, e], "role": ...}]}]}

Predictions use the same event schema under {"instance_id", "events"}.
Nothing is ever filtered on ingestion: multi-word triggers, overlapping
arguments, and very long instances are all retained and merely reported.
"""

from __future__ import annotations

import json
from collections.abc import Callable, Iterable, Iterator
from dataclasses import dataclass, field

from .model import AnnotatedInstance, DatasetProfile, EventMention, Instance, Span, TaskKind

# Length caps some pipelines apply (tokens / subtokens); we only count, never drop.
LENGTH_CAPS = (300, 500)


class ParseError(ValueError):
    """A corpus or prediction line that cannot be turned into model objects."""

    def __init__(self, line_no: int, field_name: str, message: str):
        self.line_no = line_no
        self.field_name = field_name
        super().__init__(f"line {line_no}: field {field_name!r}: {message}")


class NoCoveringTokenError(ValueError):
    """A character span that touches no token (whitespace-only annotation)."""


# ---------------------------------------------------------------------------
# Whitespace tokenizer (fixture helper; real corpora arrive pre-tokenized)
# ---------------------------------------------------------------------------

def whitespace_tokenize(text: str) -> tuple[tuple[str, ...], tuple[tuple[int, int], ...]]:
    """Split on whitespace runs, returning tokens and their char offsets."""
    tokens: list[str] = []
    offsets: list[tuple[int, int]] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        tokens.append(text[i:j])
        offsets.append((i, j))
        i = j
    return tuple(tokens), tuple(offsets)


def instance_from_text(instance_id: str, doc_id: str, text: str, window_index: int = 0) -> Instance:
    tokens, offsets = whitespace_tokenize(text)
    return Instance(instance_id, doc_id, window_index, tokens, text, offsets)


# ---------------------------------------------------------------------------
# JSONL corpus and prediction parsing
# ---------------------------------------------------------------------------

def _as_span(value: object, line_no: int, field_name: str) -> Span:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        raise ParseError(line_no, field_name, f"expected [start, end] pair, got {value!r}")
    try:
        return Span(value[0], value[1])
    except ValueError as exc:
        raise ParseError(line_no, field_name, str(exc)) from exc


def _event_from_obj(obj: object, line_no: int, index: int) -> EventMention:
    where = f"events[{index}]"
    if not isinstance(obj, dict):
        raise ParseError(line_no, where, "expected an object")
    for key in ("trigger", "event_type"):
        if key not in obj:
            raise ParseError(line_no, f"{where}.{key}", "missing required field")
    trigger = _as_span(obj["trigger"], line_no, f"{where}.trigger")
    event_type = obj["event_type"]
    if not isinstance(event_type, str) or not event_type:
        raise ParseError(line_no, f"{where}.event_type", "expected nonempty string")
    arguments = []
    for j, arg in enumerate(obj.get("arguments", [])):
        aw = f"{where}.arguments[{j}]"
        if not isinstance(arg, dict) or "span" not in arg or "role" not in arg:
            raise ParseError(line_no, aw, "expected {'span': [s, e], 'role': ...}")
        span = _as_span(arg["span"], line_no, f"{aw}.span")
        role = arg["role"]
        if not isinstance(role, str) or not role:
            raise ParseError(line_no, f"{aw}.role", "expected nonempty string")
        arguments.append((span, role))
    return EventMention(trigger, event_type, tuple(arguments))


def _events_from_obj(obj: dict, line_no: int) -> tuple[EventMention, ...]:
    events = obj.get("events", [])
    if not isinstance(events, list):
        raise ParseError(line_no, "events", "expected a list")
    return tuple(_event_from_obj(ev, line_no, i) for i, ev in enumerate(events))


def iter_jsonl(lines: Iterable[str]) -> Iterator[tuple[int, dict]]:
    """Yield (line_no, object) for every nonempty line; malformed JSON raises ParseError."""
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(line_no, "<json>", f"malformed JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ParseError(line_no, "<json>", "expected a JSON object")
        yield line_no, obj


def parse_dataset(lines: Iterable[str], task: TaskKind = TaskKind.E2E) -> list[AnnotatedInstance]:
    """Parse the canonical corpus JSONL; every model invariant is enforced here."""
    dataset: list[AnnotatedInstance] = []
    seen_ids: set[str] = set()
    for line_no, obj in iter_jsonl(lines):
        for key in ("instance_id", "doc_id", "tokens", "text", "char_offsets"):
            if key not in obj:
                raise ParseError(line_no, key, "missing required field")
        instance_id = obj["instance_id"]
        if instance_id in seen_ids:
            raise ParseError(line_no, "instance_id", f"duplicate instance_id {instance_id!r}")
        seen_ids.add(instance_id)
        try:
            instance = Instance(
                instance_id=instance_id,
                doc_id=obj["doc_id"],
                window_index=obj.get("window_index", 0),
                tokens=tuple(obj["tokens"]),
                text=obj["text"],
                char_offsets=tuple((s, e) for s, e in obj["char_offsets"]),
            )
            dataset.append(AnnotatedInstance(instance, _events_from_obj(obj, line_no), task))
        except ParseError:
            raise
        except (TypeError, ValueError) as exc:
            raise ParseError(line_no, "instance", str(exc)) from exc
    return dataset


def parse_predictions(lines: Iterable[str]) -> dict[str, tuple[EventMention, ...]]:
    """Parse prediction JSONL into instance_id -> events. Later lines override earlier ones."""
    preds: dict[str, tuple[EventMention, ...]] = {}
    for line_no, obj in iter_jsonl(lines):
        if "instance_id" not in obj:
            raise ParseError(line_no, "instance_id", "missing required field")
        preds[obj["instance_id"]] = _events_from_obj(obj, line_no)
    return preds


def event_to_obj(event: EventMention) -> dict:
    return {
        "trigger": [event.trigger.start, event.trigger.end],
        "event_type": event.event_type,
        "arguments": [{"span": [s.start, s.end], "role": r} for s, r in event.arguments],
    }


def instance_to_obj(annotated: AnnotatedInstance) -> dict:
    inst = annotated.instance
    return {
        "instance_id": inst.instance_id,
        "doc_id": inst.doc_id,
        "window_index": inst.window_index,
        "tokens": list(inst.tokens),
        "text": inst.text,
        "char_offsets": [[s, e] for s, e in inst.char_offsets],
        "events": [event_to_obj(ev) for ev in annotated.events],
    }


def serialize_dataset(dataset: Iterable[AnnotatedInstance]) -> str:
    return "".join(
        json.dumps(instance_to_obj(ai), ensure_ascii=False, sort_keys=True) + "\n" for ai in dataset
    )


def serialize_predictions(preds: dict[str, Iterable[EventMention]]) -> str:
    lines = []
    for instance_id in sorted(preds):
        obj = {"instance_id": instance_id, "events": [event_to_obj(e) for e in preds[instance_id]]}
        lines.append(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")
    return "".join(lines)


# ---------------------------------------------------------------------------
# Character-span to token-span alignment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlignmentOutcome:
    """A token span covering a character span; exact means boundaries coincide."""

    span: Span
    exact: bool


def align_char_span(instance: Instance, char_start: int, char_end: int) -> AlignmentOutcome:
    """Minimal token span whose character extent covers [char_start, char_end).

    Boundaries inside tokens snap outward, and a boundary in inter-token
    whitespace pulls in the neighboring token so the extent still covers the
    request; both snaps come back with exact=False. A span touching no token
    at all raises NoCoveringTokenError.
    """
    if not (0 <= char_start < char_end <= len(instance.text)):
        raise ValueError(f"char span ({char_start}, {char_end}) out of range for text")
    offsets = instance.char_offsets
    overlapping = [
        i for i, (s, e) in enumerate(offsets) if char_start < e and char_end > s
    ]
    if not overlapping:
        raise NoCoveringTokenError(
            f"char span ({char_start}, {char_end}) covers no token of {instance.instance_id!r}"
        )
    first, last = overlapping[0], overlapping[-1]
    # A boundary in a gap extends the span by one token so the extent covers it.
    if offsets[first][0] > char_start and first > 0:
        first -= 1
    if offsets[last][1] < char_end and last < len(offsets) - 1:
        last += 1
    exact = offsets[first][0] == char_start and offsets[last][1] == char_end
    return AlignmentOutcome(Span(first, last + 1), exact)


# ---------------------------------------------------------------------------
# Document windowing
# ---------------------------------------------------------------------------

def unit_cost(token: str) -> int:
    """Default subtoken counter: one unit per token (tokenizer-free)."""
    return 1


@dataclass(frozen=True)
class WindowConfig:
    """Budgeted windowing policy.

    The budget is measured in the counter's units; supply a real subtokenizer's
    per-token counts to reproduce neural-pipeline windows bit for bit, or keep
    the default one-unit-per-token counter. The counter choice is recorded in
    every stats report.
    """

    subtoken_budget: int = 480
    counter: Callable[[str], int] = unit_cost
    counter_name: str = "constant-1"
    respect_sentence_boundaries: bool = True

    def __post_init__(self) -> None:
        if self.subtoken_budget < 1:
            raise ValueError("subtoken_budget must be >= 1")


@dataclass(frozen=True)
class CharSpanAnnotation:
    """A raw character-level label, as found in unconverted source corpora."""

    char_start: int
    char_end: int
    payload: object = None

    def __post_init__(self) -> None:
        if not (0 <= self.char_start < self.char_end):
            raise ValueError(f"invalid char span ({self.char_start}, {self.char_end})")


@dataclass(frozen=True)
class Document:
    """A full document before windowing; same shape as Instance plus events."""

    doc_id: str
    tokens: tuple[str, ...]
    text: str
    char_offsets: tuple[tuple[int, int], ...]
    events: tuple[EventMention, ...] = ()
    sentence_starts: tuple[int, ...] | None = None
    task: TaskKind = TaskKind.E2E

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "char_offsets", tuple((s, e) for s, e in self.char_offsets))
        object.__setattr__(self, "events", tuple(self.events))
        # Reuse Instance validation for the token/text/offset invariants.
        probe = Instance(self.doc_id, self.doc_id, 0, self.tokens, self.text, self.char_offsets)
        AnnotatedInstance(probe, self.events, self.task)
        if self.sentence_starts is not None:
            starts = tuple(sorted(set(self.sentence_starts)))
            if starts and (starts[0] < 0 or starts[-1] >= len(self.tokens)):
                raise ValueError("sentence_starts out of token range")
            object.__setattr__(self, "sentence_starts", starts)


@dataclass
class WindowReport:
    """What windowing lost or bent: dropped cross-boundary events and flags."""

    dropped_events: int = 0
    by_doc: dict[str, int] = field(default_factory=dict)
    oversized_windows: int = 0
    hard_cut_sentences: int = 0

    def record_drop(self, doc_id: str, count: int = 1) -> None:
        self.dropped_events += count
        self.by_doc[doc_id] = self.by_doc.get(doc_id, 0) + count

    def merge(self, other: "WindowReport") -> None:
        self.dropped_events += other.dropped_events
        for doc_id, count in other.by_doc.items():
            self.by_doc[doc_id] = self.by_doc.get(doc_id, 0) + count
        self.oversized_windows += other.oversized_windows
        self.hard_cut_sentences += other.hard_cut_sentences

    def to_dict(self) -> dict:
        return {
            "dropped_events": self.dropped_events,
            "by_doc": dict(sorted(self.by_doc.items())),
            "oversized_windows": self.oversized_windows,
            "hard_cut_sentences": self.hard_cut_sentences,
        }


def _window_boundaries(doc: Document, cfg: WindowConfig, report: WindowReport) -> list[tuple[int, int]]:
    costs = [cfg.counter(tok) for tok in doc.tokens]
    for i, c in enumerate(costs):
        if c < 1:
            raise ValueError(f"counter returned {c} for token {i}; counts must be >= 1")
    starts = doc.sentence_starts if cfg.respect_sentence_boundaries else None
    windows: list[tuple[int, int]] = []
    n = len(doc.tokens)
    i = 0
    while i < n:
        if costs[i] > cfg.subtoken_budget:
            # One token alone blows the budget: it becomes its own flagged window.
            windows.append((i, i + 1))
            report.oversized_windows += 1
            i += 1
            continue
        total = 0
        j = i
        while j < n and total + costs[j] <= cfg.subtoken_budget:
            total += costs[j]
            j += 1
        if j < n and starts:
            snapped = max((s for s in starts if i < s <= j), default=None)
            if snapped is None:
                report.hard_cut_sentences += 1  # one sentence exceeds the budget
            else:
                j = snapped
        windows.append((i, j))
        i = j
    return windows


def window_document(doc: Document, cfg: WindowConfig) -> tuple[list[AnnotatedInstance], WindowReport]:
    """Greedy left-to-right windowing under a subtoken budget.

    Concatenating the returned windows reproduces the document's token
    sequence exactly. Events fully inside one window are reassigned
    window-local indices; events crossing a window boundary are dropped and
    counted in the report, never silently lost.
    """
    report = WindowReport()
    if not doc.tokens:
        return [], report
    windows = _window_boundaries(doc, cfg, report)
    window_of_token = [0] * len(doc.tokens)
    for w, (lo, hi) in enumerate(windows):
        for t in range(lo, hi):
            window_of_token[t] = w

    events_per_window: list[list[EventMention]] = [[] for _ in windows]
    for ev in doc.events:
        spans = ev.spans()
        lo = min(sp.start for sp in spans)
        hi = max(sp.end for sp in spans)
        w = window_of_token[lo]
        wlo, whi = windows[w]
        if hi > whi:
            report.record_drop(doc.doc_id)
            continue
        shifted = EventMention(
            trigger=Span(ev.trigger.start - wlo, ev.trigger.end - wlo),
            event_type=ev.event_type,
            arguments=tuple((Span(s.start - wlo, s.end - wlo), r) for s, r in ev.arguments),
        )
        events_per_window[w].append(shifted)

    out: list[AnnotatedInstance] = []
    for w, (lo, hi) in enumerate(windows):
        char_lo = doc.char_offsets[lo][0]
        char_hi = doc.char_offsets[hi - 1][1]
        inst = Instance(
            instance_id=f"{doc.doc_id}-w{w}",
            doc_id=doc.doc_id,
            window_index=w,
            tokens=doc.tokens[lo:hi],
            text=doc.text[char_lo:char_hi],
            char_offsets=tuple((s - char_lo, e - char_lo) for s, e in doc.char_offsets[lo:hi]),
        )
        out.append(AnnotatedInstance(inst, tuple(events_per_window[w]), doc.task))
    return out, report


# ---------------------------------------------------------------------------
# Statistics and data-assumption audit
# ---------------------------------------------------------------------------

def compute_stats(dataset: Iterable[AnnotatedInstance]) -> DatasetProfile:
    """Counts in the usual corpus-table layout: #Docs, #Inst, #ET, #Evt, #RT, #Arg."""
    docs: set[str] = set()
    event_types: set[str] = set()
    role_types: set[str] = set()
    n_instances = 0
    n_events = 0
    n_arguments = 0
    for ai in dataset:
        n_instances += 1
        docs.add(ai.doc_id)
        for ev in ai.events:
            n_events += 1
            event_types.add(ev.event_type)
            for _, role in ev.arguments:
                n_arguments += 1
                role_types.add(role)
    return DatasetProfile(
        n_docs=len(docs),
        n_instances=n_instances,
        n_event_types=len(event_types),
        n_events=n_events,
        n_role_types=len(role_types),
        n_arguments=n_arguments,
        event_type_set=frozenset(event_types),
        role_type_set=frozenset(role_types),
    )


@dataclass(frozen=True)
class ComplianceReport:
    """Audit of loose-assumption data the harness keeps (and some pipelines drop)."""

    n_instances: int
    multi_token_triggers: int
    overlapping_argument_pairs: int
    long_instances: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "n_instances": self.n_instances,
            "multi_token_triggers": self.multi_token_triggers,
            "overlapping_argument_pairs": self.overlapping_argument_pairs,
            "long_instances": {str(cap): n for cap, n in sorted(self.long_instances.items())},
            "filtering": "none",
        }


def validate_assumptions(dataset: Iterable[AnnotatedInstance]) -> ComplianceReport:
    """Report (never reject) multi-word triggers, overlapping arguments, long instances."""
    n_instances = 0
    multi = 0
    overlapping = 0
    long_counts = {cap: 0 for cap in LENGTH_CAPS}
    for ai in dataset:
        n_instances += 1
        for cap in LENGTH_CAPS:
            if len(ai.instance.tokens) > cap:
                long_counts[cap] += 1
        for ev in ai.events:
            if len(ev.trigger) > 1:
                multi += 1
            args = [s for s, _ in ev.arguments]
            for i in range(len(args)):
                for j in range(i + 1, len(args)):
                    if args[i].overlaps(args[j]):
                        overlapping += 1
    return ComplianceReport(
        n_instances=n_instances,
        multi_token_triggers=multi,
        overlapping_argument_pairs=overlapping,
        long_instances=long_counts,
    )
