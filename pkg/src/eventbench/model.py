"""Core domain types shared by every part of the harness.

Everything here is immutable after construction and safe to share across
threads. Spans are half-open token intervals; event types and roles are
opaque case-sensitive strings (no ontology normalization happens anywhere
in this package).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class TaskKind(Enum):
    E2E = "e2e"
    ED = "ed"
    EAE = "eae"


@dataclass(frozen=True, order=True)
class Span:
    """Half-open token interval [start, end). Multi-token spans are legal."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span ({self.start}, {self.end}): need 0 <= start < end")

    def __len__(self) -> int:
        return self.end - self.start

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class Instance:
    """One evaluable text unit: tokens plus the raw text they came from.

    char_offsets[i] is the (char_start, char_end) extent of tokens[i] in
    text. Offsets must be strictly increasing and non-overlapping, and each
    text slice must reproduce its token, so that token-level annotations can
    always be mapped back to the original characters.
    """

    instance_id: str
    doc_id: str
    window_index: int
    tokens: tuple[str, ...]
    text: str
    char_offsets: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "char_offsets", tuple((s, e) for s, e in self.char_offsets))
        if self.window_index < 0:
            raise ValueError(f"window_index must be nonnegative, got {self.window_index}")
        if len(self.tokens) != len(self.char_offsets):
            raise ValueError(
                f"{len(self.tokens)} tokens but {len(self.char_offsets)} char offsets"
            )
        prev_end = 0
        for i, (s, e) in enumerate(self.char_offsets):
            if s < prev_end or s >= e or e > len(self.text):
                raise ValueError(f"char offsets for token {i} out of order or out of range: ({s}, {e})")
            if self.text[s:e] != self.tokens[i]:
                raise ValueError(
                    f"token {i} {self.tokens[i]!r} != text slice {self.text[s:e]!r} at ({s}, {e})"
                )
            prev_end = e

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class EventMention:
    """A trigger span, its event type, and (argument span, role) pairs.

    Argument spans may overlap each other and the trigger, and the same
    argument may be listed twice; nothing is deduplicated or filtered at
    this layer.
    """

    trigger: Span
    event_type: str
    arguments: tuple[tuple[Span, str], ...] = ()

    def __post_init__(self) -> None:
        if not self.event_type:
            raise ValueError("event_type must be nonempty")
        object.__setattr__(self, "arguments", tuple((s, r) for s, r in self.arguments))

    def spans(self) -> tuple[Span, ...]:
        return (self.trigger,) + tuple(s for s, _ in self.arguments)


@dataclass(frozen=True)
class AnnotatedInstance:
    """An instance plus its event annotations (gold or predicted).

    Multiple events may share an event type, and arguments always attach to
    a trigger of this same instance. Any span outside the instance's token
    bounds is rejected at construction.
    """

    instance: Instance
    events: tuple[EventMention, ...]
    task: TaskKind = TaskKind.E2E

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))
        n = len(self.instance.tokens)
        for k, ev in enumerate(self.events):
            for what, sp in [("trigger", ev.trigger)] + [("argument", s) for s, _ in ev.arguments]:
                if sp.end > n:
                    raise ValueError(
                        f"event {k}: {what} span ({sp.start}, {sp.end}) out of bounds "
                        f"for {n}-token instance {self.instance.instance_id!r}"
                    )

    @property
    def instance_id(self) -> str:
        return self.instance.instance_id

    @property
    def doc_id(self) -> str:
        return self.instance.doc_id


@dataclass(frozen=True)
class DatasetProfile:
    """Corpus statistics: #Docs, #Inst, #ET, #Evt, #RT, #Arg plus the label sets."""

    n_docs: int
    n_instances: int
    n_event_types: int
    n_events: int
    n_role_types: int
    n_arguments: int
    event_type_set: frozenset[str] = field(default_factory=frozenset)
    role_type_set: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.n_event_types != len(self.event_type_set):
            raise ValueError("n_event_types inconsistent with event_type_set")
        if self.n_role_types != len(self.role_type_set):
            raise ValueError("n_role_types inconsistent with role_type_set")

    def to_dict(self) -> dict:
        return {
            "n_docs": self.n_docs,
            "n_instances": self.n_instances,
            "n_event_types": self.n_event_types,
            "n_events": self.n_events,
            "n_role_types": self.n_role_types,
            "n_arguments": self.n_arguments,
            "event_types": sorted(self.event_type_set),
            "role_types": sorted(self.role_type_set),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetProfile":
        return cls(
            n_docs=d["n_docs"],
            n_instances=d["n_instances"],
            n_event_types=d["n_event_types"],
            n_events=d["n_events"],
            n_role_types=d["n_role_types"],
            n_arguments=d["n_arguments"],
            event_type_set=frozenset(d.get("event_types", ())),
            role_type_set=frozenset(d.get("role_types", ())),
        )


def span_text(instance: Instance, span: Span) -> str:
    """Raw-text substring covered by a token span, inter-token characters included."""
    if span.end > len(instance.tokens):
        raise IndexError(
            f"span ({span.start}, {span.end}) out of bounds for {len(instance.tokens)} tokens"
        )
    return instance.text[instance.char_offsets[span.start][0] : instance.char_offsets[span.end - 1][1]]
