"""Shared fixture builders: hand-rolled instances and seeded random corpora."""

from __future__ import annotations

import random

from eventbench.ingest import instance_from_text
from eventbench.model import AnnotatedInstance, EventMention, Instance, Span, TaskKind


def ev(trigger: tuple[int, int], event_type: str, args: list[tuple[tuple[int, int], str]] = ()) -> EventMention:
    return EventMention(
        trigger=Span(*trigger),
        event_type=event_type,
        arguments=tuple((Span(*span), role) for span, role in args),
    )


def make_instance(
    tokens: list[str],
    instance_id: str = "i0",
    doc_id: str = "d0",
    window_index: int = 0,
) -> Instance:
    return instance_from_text(instance_id, doc_id, " ".join(tokens), window_index)


def annotated(
    tokens: list[str],
    events: list[EventMention],
    instance_id: str = "i0",
    doc_id: str = "d0",
    task: TaskKind = TaskKind.E2E,
) -> AnnotatedInstance:
    return AnnotatedInstance(make_instance(tokens, instance_id, doc_id), tuple(events), task)


# ---------------------------------------------------------------------------
# Random event fixtures for scorer properties
# ---------------------------------------------------------------------------

TYPES = ("alpha", "beta", "gamma")
ROLES = ("agent", "theme", "place")


def _random_span(rng: random.Random, n_tokens: int, max_len: int = 2) -> Span:
    length = rng.randint(1, max_len)
    start = rng.randint(0, n_tokens - length)
    return Span(start, start + length)


def random_pair(rng: random.Random) -> tuple[list[EventMention], list[EventMention], int]:
    """(gold, pred, n_tokens) with side-consistent label maps.

    Within each side, trigger span -> type, argument span -> role, and
    argument span -> owning trigger are all functions. That keeps every
    metric's key projection one-to-one, which the cross-metric ordering
    invariants require; identical duplicate mentions are still injected, so
    set-collapse behavior gets exercised.
    """
    n_tokens = rng.randint(6, 14)
    trigger_pool = list({_random_span(rng, n_tokens) for _ in range(rng.randint(2, 5))})
    arg_pool = list({_random_span(rng, n_tokens) for _ in range(rng.randint(2, 6))})
    trigger_pool.sort()
    arg_pool.sort()

    def mutate(mapping: dict, choices, prob: float = 0.3) -> dict:
        out = {}
        for key, value in mapping.items():
            out[key] = rng.choice(choices) if rng.random() < prob else value
        return out

    gold_trig_type = {t: rng.choice(TYPES) for t in trigger_pool}
    gold_arg_role = {a: rng.choice(ROLES) for a in arg_pool}
    gold_arg_owner = {a: rng.choice(trigger_pool) for a in arg_pool}
    pred_trig_type = mutate(gold_trig_type, TYPES)
    pred_arg_role = mutate(gold_arg_role, ROLES)
    pred_arg_owner = mutate(gold_arg_owner, trigger_pool)

    def build(trig_type, arg_role, arg_owner, keep_trigger, keep_arg) -> list[EventMention]:
        events = []
        for t in trigger_pool:
            if not keep_trigger():
                continue
            args = tuple(
                (a, arg_role[a]) for a in arg_pool if arg_owner[a] == t and keep_arg()
            )[:4]
            events.append(EventMention(t, trig_type[t], args))
        if events and rng.random() < 0.25:
            events.append(events[rng.randrange(len(events))])  # identical duplicate
        return events[:5]

    gold = build(
        gold_trig_type, gold_arg_role, gold_arg_owner,
        lambda: rng.random() < 0.8, lambda: rng.random() < 0.8,
    )
    pred = build(
        pred_trig_type, pred_arg_role, pred_arg_owner,
        lambda: rng.random() < 0.8, lambda: rng.random() < 0.8,
    )
    return gold, pred, n_tokens


def chaotic_pair(rng: random.Random) -> tuple[list[EventMention], list[EventMention], int]:
    """Fully unconstrained random events; only the oracle-equivalence and
    symmetry properties are expected to hold on these."""
    n_tokens = rng.randint(4, 12)

    def build() -> list[EventMention]:
        events = []
        for _ in range(rng.randint(0, 5)):
            args = tuple(
                (_random_span(rng, n_tokens), rng.choice(ROLES))
                for _ in range(rng.randint(0, 4))
            )
            events.append(EventMention(_random_span(rng, n_tokens), rng.choice(TYPES), args))
        return events

    return build(), build(), n_tokens


# ---------------------------------------------------------------------------
# Synthetic corpora
# ---------------------------------------------------------------------------

def synth_corpus(
    n_docs: int,
    seed: int = 0,
    instances_per_doc: tuple[int, int] = (1, 3),
    task: TaskKind = TaskKind.E2E,
) -> list[AnnotatedInstance]:
    """Random but valid corpus; annotation density varies by document."""
    rng = random.Random(seed)
    corpus: list[AnnotatedInstance] = []
    for d in range(n_docs):
        doc_id = f"d{d:04d}"
        for w in range(rng.randint(*instances_per_doc)):
            n_tokens = rng.randint(5, 12)
            tokens = [f"w{rng.randrange(40)}" for _ in range(n_tokens)]
            events = []
            for _ in range(rng.randint(0, 3)):
                trigger = _random_span(rng, n_tokens)
                args = [
                    (_random_span(rng, n_tokens), rng.choice(ROLES))
                    for _ in range(rng.randint(0, 2))
                ]
                events.append(EventMention(trigger, rng.choice(TYPES), tuple(args)))
            corpus.append(
                AnnotatedInstance(
                    make_instance(tokens, f"{doc_id}-{w}", doc_id, w), tuple(events), task
                )
            )
    return corpus


def grounding_safe_corpus(
    n_docs: int,
    seed: int = 0,
    types: tuple[str, ...] = TYPES,
    roles: tuple[str, ...] = ROLES,
) -> list[AnnotatedInstance]:
    """Corpus where an echo-the-gold endpoint recovers every annotation.

    Tokens are unique within an instance (leftmost grounding is exact), each
    instance has at most one event per type, and each role appears at most
    once per event, matching the single-valued answer format.
    """
    rng = random.Random(seed)
    corpus: list[AnnotatedInstance] = []
    counter = 0
    for d in range(n_docs):
        doc_id = f"d{d:04d}"
        n_tokens = rng.randint(8, 12)
        tokens = []
        for _ in range(n_tokens):
            tokens.append(f"tok{counter:05d}")
            counter += 1
        positions = list(range(n_tokens))
        rng.shuffle(positions)
        slots = iter(positions)
        events = []
        for event_type in rng.sample(types, rng.randint(1, len(types))):
            if rng.random() < 0.3:
                continue  # leave some types absent so negatives occur
            try:
                trigger = Span(*(lambda s: (s, s + 1))(next(slots)))
                args = []
                for role in rng.sample(roles, rng.randint(0, 2)):
                    s = next(slots)
                    args.append((Span(s, s + 1), role))
            except StopIteration:
                break
            events.append(EventMention(trigger, event_type, tuple(args)))
        corpus.append(
            AnnotatedInstance(make_instance(tokens, f"{doc_id}-0", doc_id), tuple(events))
        )
    return corpus
