"""Few-shot prompt construction for event detection and argument extraction.

Prompts are built per event type: an instruction block, numbered
demonstration examples drawn from the train split, then the query. ED
answers follow the fixed pattern "Yes, the event trigger is X in the text."
or "No."; EAE answers are one "Role: value" line per role of interest, with
the query trigger marked between [t] and [/t].
"""

from __future__ import annotations

import hashlib
import math
import random
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass

from ..model import AnnotatedInstance, EventMention, Instance, Span, span_text

ED_INSTRUCTION = (
    "You are an event extractor designed to check for the presence of a specific event "
    "in a sentence and to locate the corresponding event trigger.\n"
    "Task Description: Identify all triggers related to the event of interest in the "
    "sentence. A trigger is the key word in the sentence that most explicitly conveys "
    "the occurrence of the event. If yes, please answer 'Yes, the event trigger is "
    "[trigger] in the text.'; otherwise, answer 'No.'\n"
    "The event of interest is {event_type}. {description}"
)

ED_POSITIVE_ANSWER = "Yes, the event trigger is {trigger} in the text."
ED_NEGATIVE_ANSWER = "No."

EAE_INSTRUCTION = (
    "You are an argument extractor designed to check for the presence of arguments "
    "regarding specific roles for an event in a sentence.\n"
    "Task Description: Identify all arguments related to the role {roles} in the "
    "sentence. These arguments should have the semantic role corresponding to the "
    "given event trigger by the word span between [t] and [/t]. Follow the format of "
    "below examples. Your answer should only contain the answer string and nothing "
    "else.\n"
    "The event of interest is {event_type}. {description} Roles of interest: {roles}"
)

TRIGGER_OPEN = "[t]"
TRIGGER_CLOSE = "[/t]"

# Substring of the fixed ED answer pattern; demo texts containing it get flagged.
ANSWER_PATTERN_PREFIX = "the event trigger is"


@dataclass(frozen=True)
class PromptConfig:
    """Few-shot settings; prompting is always per event type."""

    k_shot: int = 2
    demo_seed: int = 0
    max_prompt_units: int | None = None
    per_event_type: bool = True

    def __post_init__(self) -> None:
        if self.k_shot < 0:
            raise ValueError("k_shot must be >= 0")
        if not self.per_event_type:
            raise ValueError("per_event_type is fixed true; prompts are built per event type")


@dataclass(frozen=True)
class EDDemo:
    """One ED demonstration; trigger=None renders the negative 'No.' answer."""

    text: str
    trigger: str | None = None


@dataclass(frozen=True)
class EAEDemo:
    """One EAE demonstration: trigger-marked text plus role values (None = empty)."""

    marked_text: str
    values: Mapping[str, str | None]


@dataclass(frozen=True)
class BuiltPrompt:
    text: str
    flags: tuple[str, ...] = ()


def default_type_description(event_type: str) -> str:
    """Fallback description derived from the type name itself."""
    words = event_type.replace(".", " ").replace(":", " ").replace("-", " ").replace("_", " ")
    return f"This event is related to {' '.join(words.split()).lower()}."


def word_units(text: str, counter: Callable[[str], int] | None = None) -> int:
    """Prompt length in the counter's units (whitespace words by default)."""
    if counter is None:
        return len(text.split())
    return sum(counter(tok) for tok in text.split())


def mark_trigger(instance: Instance, trigger: Span) -> str:
    """Raw text with [t] ... [/t] around the trigger, single-spaced at the seams."""
    char_start = instance.char_offsets[trigger.start][0]
    char_end = instance.char_offsets[trigger.end - 1][1]
    before = instance.text[:char_start].rstrip()
    middle = instance.text[char_start:char_end]
    after = instance.text[char_end:].lstrip()
    pieces = [p for p in (before, TRIGGER_OPEN, middle, TRIGGER_CLOSE, after) if p]
    return " ".join(pieces)


def _render_ed_demo(index: int, demo: EDDemo) -> str:
    if demo.trigger is None:
        answer = ED_NEGATIVE_ANSWER
    else:
        answer = ED_POSITIVE_ANSWER.format(trigger=demo.trigger)
    return f"Examples {index}\nText: {demo.text}\nAnswer: {answer}"


def _render_eae_demo(index: int, demo: EAEDemo, roles: Sequence[str]) -> str:
    lines = [f"Examples {index}", f"Text: {demo.marked_text}"]
    for role in roles:
        value = demo.values.get(role)
        lines.append(f"{role}: {value}" if value else f"{role}:")
    return "\n".join(lines)


def _assemble(
    instruction: str,
    demos: Sequence,
    render: Callable[[int, object], str],
    query_block: str,
    max_units: int | None,
    counter: Callable[[str], int] | None,
    flags: list[str],
) -> str:
    remaining = list(demos)
    while True:
        blocks = [instruction]
        blocks += [render(i + 1, demo) for i, demo in enumerate(remaining)]
        blocks.append(query_block)
        text = "\n\n".join(blocks)
        if max_units is None or word_units(text, counter) <= max_units or not remaining:
            break
        remaining.pop(0)  # oldest demo goes first when over budget
        flags.append("truncated-demo")
    return text


def build_ed_prompt(
    event_type: str,
    type_description: str,
    demos: Sequence[EDDemo],
    query_text: str,
    max_units: int | None = None,
    counter: Callable[[str], int] | None = None,
) -> BuiltPrompt:
    """Instruction, numbered Yes/No examples, then the query ending in 'Answer: '."""
    flags: list[str] = []
    for demo in demos:
        if ANSWER_PATTERN_PREFIX in demo.text.lower():
            flags.append("answer-pattern-in-demo")
    instruction = ED_INSTRUCTION.format(event_type=event_type, description=type_description)
    query_block = f"Question\nText: {query_text}\nAnswer: "
    text = _assemble(instruction, demos, _render_ed_demo, query_block, max_units, counter, flags)
    return BuiltPrompt(text, tuple(flags))


def build_eae_prompt(
    event_type: str,
    type_description: str,
    roles: Sequence[str],
    demos: Sequence[EAEDemo],
    marked_query: str,
    max_units: int | None = None,
    counter: Callable[[str], int] | None = None,
) -> BuiltPrompt:
    """Instruction naming the roles of interest, role-line demos, then the marked query."""
    if not roles:
        raise ValueError("EAE prompt needs at least one role of interest")
    flags: list[str] = []
    role_list = ", ".join(roles)
    instruction = EAE_INSTRUCTION.format(
        event_type=event_type, description=type_description, roles=role_list
    )
    query_block = f"Question\nText: {marked_query}"
    text = _assemble(
        instruction,
        demos,
        lambda i, d: _render_eae_demo(i, d, roles),
        query_block,
        max_units,
        counter,
        flags,
    )
    return BuiltPrompt(text, tuple(flags))


# ---------------------------------------------------------------------------
# Demonstration selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DemoSelection:
    positives: tuple[AnnotatedInstance, ...]
    negatives: tuple[AnnotatedInstance, ...]
    flags: tuple[str, ...] = ()


def _type_rng(seed: int, event_type: str) -> random.Random:
    # Stable across processes (never the salted builtin hash).
    digest = hashlib.sha256(f"{seed}|{event_type}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _has_type(instance: AnnotatedInstance, event_type: str) -> bool:
    return any(ev.event_type == event_type for ev in instance.events)


def select_demos(
    train_instances: Sequence[AnnotatedInstance],
    event_type: str,
    k: int,
    seed: int,
) -> DemoSelection:
    """ceil(k/2) positive and floor(k/2) negative train instances, seeded uniform.

    When a pool is short the whole pool is taken and the selection is flagged
    as degraded rather than failing.
    """
    rng = _type_rng(seed, event_type)
    positives = [ai for ai in train_instances if _has_type(ai, event_type)]
    negatives = [ai for ai in train_instances if not _has_type(ai, event_type)]
    n_pos = math.ceil(k / 2)
    n_neg = k // 2
    flags: list[str] = []
    if len(positives) < n_pos:
        flags.append("degraded-few-positives")
        n_pos = len(positives)
    if len(negatives) < n_neg:
        flags.append("degraded-few-negatives")
        n_neg = len(negatives)
    chosen_pos = rng.sample(positives, n_pos) if n_pos else []
    chosen_neg = rng.sample(negatives, n_neg) if n_neg else []
    return DemoSelection(tuple(chosen_pos), tuple(chosen_neg), tuple(flags))


def first_event_of_type(instance: AnnotatedInstance, event_type: str) -> EventMention:
    for ev in instance.events:
        if ev.event_type == event_type:
            return ev
    raise ValueError(f"instance {instance.instance_id!r} has no event of type {event_type!r}")


def ed_demos_from_selection(selection: DemoSelection, event_type: str) -> list[EDDemo]:
    """Interleave positive and negative instances into renderable ED demos."""
    demos: list[EDDemo] = []
    pos = list(selection.positives)
    neg = list(selection.negatives)
    while pos or neg:
        if pos:
            ai = pos.pop(0)
            ev = first_event_of_type(ai, event_type)
            demos.append(EDDemo(ai.instance.text, span_text(ai.instance, ev.trigger)))
        if neg:
            demos.append(EDDemo(neg.pop(0).instance.text, None))
    return demos


def select_eae_demos(
    train_instances: Sequence[AnnotatedInstance],
    event_type: str,
    k: int,
    seed: int,
) -> tuple[list[tuple[AnnotatedInstance, EventMention]], tuple[str, ...]]:
    """k gold events of the type, seeded uniform over (instance, event) pairs.

    EAE demos need a marked gold trigger, so only event-bearing instances
    qualify; roles the sampled event leaves unfilled render as empty lines and
    provide the negative signal.
    """
    rng = _type_rng(seed, event_type)
    pool = [
        (ai, ev)
        for ai in train_instances
        for ev in ai.events
        if ev.event_type == event_type
    ]
    flags: tuple[str, ...] = ()
    take = k
    if len(pool) < k:
        flags = ("degraded-few-positives",)
        take = len(pool)
    return (rng.sample(pool, take) if take else []), flags


def eae_demo_from_event(
    instance: AnnotatedInstance, event: EventMention, roles: Sequence[str]
) -> EAEDemo:
    """Render a gold event as a demo; first argument of each role wins."""
    values: dict[str, str | None] = {role: None for role in roles}
    for sp, role in event.arguments:
        if role in values and values[role] is None:
            values[role] = span_text(instance.instance, sp)
    return EAEDemo(mark_trigger(instance.instance, event.trigger), values)
