"""End-to-end few-shot evaluation: sample documents, prompt per event type,
parse and ground responses, filter hallucinations, score, and triage errors.

Requests run under a bounded thread pool but all outputs are keyed and
merged in sorted order, so results are independent of completion order.
Failed requests (after retries) score as empty predictions and the run
continues; the failure rate lands in the diagnostics.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..model import AnnotatedInstance, EventMention, TaskKind, span_text
from ..scorer import SplitScores, score_split
from ..splitter import SplitAssignment
from .client import ChatClient, EvalConfig, RequestFailed, ResponseCache
from .prompts import (
    BuiltPrompt,
    PromptConfig,
    build_ed_prompt,
    build_eae_prompt,
    default_type_description,
    eae_demo_from_event,
    ed_demos_from_selection,
    mark_trigger,
    select_demos,
    select_eae_demos,
)
from .responses import (
    ErrorCategory,
    GoldItem,
    PredItem,
    categorize,
    ground_span,
    parse_eae_response,
    parse_ed_response,
)


@dataclass(frozen=True)
class Ontology:
    """Event types with their descriptions and role inventories."""

    types: tuple[str, ...]
    descriptions: Mapping[str, str]
    roles: Mapping[str, tuple[str, ...]]

    def description(self, event_type: str) -> str:
        return self.descriptions.get(event_type) or default_type_description(event_type)

    @classmethod
    def from_instances(cls, instances: Sequence[AnnotatedInstance]) -> "Ontology":
        """Derive types and per-type role inventories from annotated data."""
        roles: dict[str, set[str]] = {}
        for ai in instances:
            for ev in ai.events:
                seen = roles.setdefault(ev.event_type, set())
                for _, role in ev.arguments:
                    seen.add(role)
        return cls(
            types=tuple(sorted(roles)),
            descriptions={},
            roles={t: tuple(sorted(r)) for t, r in roles.items()},
        )

    @classmethod
    def from_json(cls, path: Path | str) -> "Ontology":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        types = obj["types"]
        return cls(
            types=tuple(sorted(types)),
            descriptions={t: spec["description"] for t, spec in types.items() if "description" in spec},
            roles={t: tuple(spec.get("roles", ())) for t, spec in types.items()},
        )


@dataclass
class PromptBundle:
    """One LLM call: the assembled prompt, the raw response, and its parse."""

    instance_id: str
    event_type: str
    prompt: BuiltPrompt
    response: str | None = None
    error: str | None = None
    parsed: object = None


@dataclass
class RunResult:
    task: TaskKind
    predictions: dict[str, tuple[EventMention, ...]]
    scores: SplitScores
    error_categories: Counter
    diagnostics: dict = field(default_factory=dict)

    def error_report(self) -> dict:
        return {
            "task": self.task.value,
            "categories": {cat.value: self.error_categories.get(cat, 0) for cat in ErrorCategory},
            **self.diagnostics,
        }


def _split_parts(
    dataset: Sequence[AnnotatedInstance], split: SplitAssignment
) -> tuple[list[AnnotatedInstance], list[AnnotatedInstance]]:
    train = [ai for ai in dataset if ai.doc_id in split.train]
    test = [ai for ai in dataset if ai.doc_id in split.test]
    return train, test


def _sample_documents(
    instances: Sequence[AnnotatedInstance], sample_docs: int, seed: int
) -> list[AnnotatedInstance]:
    doc_ids = sorted({ai.doc_id for ai in instances})
    take = min(sample_docs, len(doc_ids))
    chosen = set(random.Random(seed).sample(doc_ids, take))
    return sorted((ai for ai in instances if ai.doc_id in chosen), key=lambda ai: ai.instance_id)


def _execute(
    bundles: list[PromptBundle], client: ChatClient
) -> None:
    """Fill in responses (or errors) concurrently; bundle order is preserved."""

    def call(bundle: PromptBundle) -> None:
        try:
            bundle.response = client.complete(bundle.prompt.text)
        except RequestFailed as exc:
            bundle.error = str(exc)

    with ThreadPoolExecutor(max_workers=client.config.max_in_flight) as pool:
        list(pool.map(call, bundles))


def _prompt_flag_counts(bundles: Sequence[PromptBundle], selection_flags: Sequence[str]) -> dict:
    truncated = sum(b.prompt.flags.count("truncated-demo") for b in bundles)
    tainted = sum(b.prompt.flags.count("answer-pattern-in-demo") for b in bundles)
    degraded = sum(1 for f in selection_flags if f.startswith("degraded"))
    return {
        "truncated_demos": truncated,
        "answer_pattern_demos": tainted,
        "degraded_demo_pools": degraded,
    }


def _diagnostics(client: ChatClient, bundles: Sequence[PromptBundle], extra: dict) -> dict:
    n_failed = sum(1 for b in bundles if b.error is not None)
    return {
        "n_requests": len(bundles),
        "n_network_requests": client.n_network_requests,
        "n_cache_hits": client.n_cache_hits,
        "n_failed_requests": n_failed,
        "failure_rate": n_failed / len(bundles) if bundles else 0.0,
        **extra,
    }


def run_ed_eval(
    dataset: Sequence[AnnotatedInstance],
    split: SplitAssignment,
    prompt_cfg: PromptConfig,
    eval_cfg: EvalConfig,
    client: ChatClient,
    ontology: Ontology | None = None,
) -> RunResult:
    train, test = _split_parts(dataset, split)
    if ontology is None:
        # The type/role inventory is dataset-level metadata; only demos are
        # restricted to the train part.
        ontology = Ontology.from_instances(dataset)
    sampled = _sample_documents(test, eval_cfg.sample_docs, eval_cfg.sample_seed)

    bundles: list[PromptBundle] = []
    selection_flags: list[str] = []
    for event_type in ontology.types:
        selection = select_demos(train, event_type, prompt_cfg.k_shot, prompt_cfg.demo_seed)
        selection_flags.extend(selection.flags)
        demos = ed_demos_from_selection(selection, event_type)
        for ai in sampled:
            prompt = build_ed_prompt(
                event_type,
                ontology.description(event_type),
                demos,
                ai.instance.text,
                max_units=prompt_cfg.max_prompt_units,
            )
            bundles.append(PromptBundle(ai.instance_id, event_type, prompt))
    _execute(bundles, client)

    unparseable = 0
    predictions: dict[str, list[EventMention]] = {ai.instance_id: [] for ai in sampled}
    pred_items: dict[str, list[PredItem]] = {ai.instance_id: [] for ai in sampled}
    by_id = {ai.instance_id: ai for ai in sampled}
    for bundle in sorted(bundles, key=lambda b: (b.instance_id, b.event_type)):
        if bundle.response is None:
            continue
        parsed = parse_ed_response(bundle.response)
        bundle.parsed = parsed
        if parsed.unparseable:
            unparseable += 1
        if not parsed.decision:
            continue
        instance = by_id[bundle.instance_id].instance
        grounded = ground_span(instance, parsed.trigger_string)
        span = grounded.span if grounded else None
        pred_items[bundle.instance_id].append(
            PredItem(bundle.event_type, None, parsed.trigger_string, span)
        )
        if grounded is not None:
            predictions[bundle.instance_id].append(
                EventMention(grounded.span, bundle.event_type, ())
            )

    errors: Counter = Counter()
    for ai in sampled:
        gold_items = [
            GoldItem(ev.trigger, ev.event_type, None, span_text(ai.instance, ev.trigger))
            for ev in ai.events
        ]
        errors.update(categorize(gold_items, pred_items[ai.instance_id]))

    pairs = [(ai.events, tuple(predictions[ai.instance_id])) for ai in sampled]
    scores = score_split(split.split_id, pairs, TaskKind.ED)
    extra = {
        "n_sampled_docs": len({ai.doc_id for ai in sampled}),
        "unparseable_responses": unparseable,
        **_prompt_flag_counts(bundles, selection_flags),
    }
    return RunResult(
        task=TaskKind.ED,
        predictions={k: tuple(v) for k, v in predictions.items()},
        scores=scores,
        error_categories=errors,
        diagnostics=_diagnostics(client, bundles, extra),
    )


def run_eae_eval(
    dataset: Sequence[AnnotatedInstance],
    split: SplitAssignment,
    prompt_cfg: PromptConfig,
    eval_cfg: EvalConfig,
    client: ChatClient,
    ontology: Ontology | None = None,
) -> RunResult:
    train, test = _split_parts(dataset, split)
    if ontology is None:
        ontology = Ontology.from_instances(dataset)
    sampled = _sample_documents(test, eval_cfg.sample_docs, eval_cfg.sample_seed)

    demo_cache: dict[str, list] = {}
    selection_flags: list[str] = []

    def demos_for(event_type: str, roles: Sequence[str]) -> list:
        if event_type not in demo_cache:
            pairs, flags = select_eae_demos(
                train, event_type, prompt_cfg.k_shot, prompt_cfg.demo_seed
            )
            selection_flags.extend(flags)
            demo_cache[event_type] = [eae_demo_from_event(ai, ev, roles) for ai, ev in pairs]
        return demo_cache[event_type]

    # One request per gold event; the prompt key carries the event index so
    # multiple same-type events in an instance stay distinct.
    bundles: list[PromptBundle] = []
    queries: list[tuple[AnnotatedInstance, int, EventMention, tuple[str, ...]]] = []
    skipped_roleless = 0
    for ai in sampled:
        for idx, ev in enumerate(ai.events):
            roles = tuple(ontology.roles.get(ev.event_type, ()))
            if not roles:
                skipped_roleless += 1
                continue
            prompt = build_eae_prompt(
                ev.event_type,
                ontology.description(ev.event_type),
                roles,
                demos_for(ev.event_type, roles),
                mark_trigger(ai.instance, ev.trigger),
                max_units=prompt_cfg.max_prompt_units,
            )
            bundles.append(PromptBundle(f"{ai.instance_id}#{idx}", ev.event_type, prompt))
            queries.append((ai, idx, ev, roles))

    _execute(bundles, client)

    missing_role_lines = 0
    duplicate_role_lines = 0
    unknown_role_lines = 0
    predictions: dict[str, list[EventMention]] = {ai.instance_id: [] for ai in sampled}
    pred_items: dict[str, list[PredItem]] = {ai.instance_id: [] for ai in sampled}
    for bundle, (ai, _, ev, roles) in zip(bundles, queries):
        if bundle.response is None:
            continue
        parsed = parse_eae_response(bundle.response, roles)
        bundle.parsed = parsed
        missing_role_lines += len(parsed.missing_roles)
        duplicate_role_lines += len(parsed.duplicate_roles)
        unknown_role_lines += parsed.unknown_lines
        arguments = []
        for role in roles:
            value = parsed.values.get(role)
            if value is None:
                continue
            grounded = ground_span(ai.instance, value)
            span = grounded.span if grounded else None
            pred_items[ai.instance_id].append(PredItem(ev.event_type, role, value, span))
            if grounded is not None:
                arguments.append((grounded.span, role))
        predictions[ai.instance_id].append(EventMention(ev.trigger, ev.event_type, tuple(arguments)))

    errors: Counter = Counter()
    for ai in sampled:
        gold_items = [
            GoldItem(sp, ev.event_type, role, span_text(ai.instance, sp))
            for ev in ai.events
            for sp, role in ev.arguments
        ]
        errors.update(categorize(gold_items, pred_items[ai.instance_id]))

    pairs = [(ai.events, tuple(predictions[ai.instance_id])) for ai in sampled]
    scores = score_split(split.split_id, pairs, TaskKind.EAE)
    extra = {
        "n_sampled_docs": len({ai.doc_id for ai in sampled}),
        "missing_role_lines": missing_role_lines,
        "duplicate_role_lines": duplicate_role_lines,
        "unknown_role_lines": unknown_role_lines,
        "skipped_roleless_events": skipped_roleless,
        **_prompt_flag_counts(bundles, selection_flags),
    }
    return RunResult(
        task=TaskKind.EAE,
        predictions={k: tuple(v) for k, v in predictions.items()},
        scores=scores,
        error_categories=errors,
        diagnostics=_diagnostics(client, bundles, extra),
    )


def run_eval(
    dataset: Sequence[AnnotatedInstance],
    split: SplitAssignment,
    task: TaskKind,
    prompt_cfg: PromptConfig,
    eval_cfg: EvalConfig,
    cache_dir: Path | str | None = None,
    client: ChatClient | None = None,
    ontology: Ontology | None = None,
) -> RunResult:
    """Dispatch to the ED or EAE protocol; builds the cached client if not given."""
    if client is None:
        cache = ResponseCache(cache_dir) if cache_dir is not None else None
        client = ChatClient(eval_cfg, cache=cache)
    if task is TaskKind.ED:
        return run_ed_eval(dataset, split, prompt_cfg, eval_cfg, client, ontology)
    if task is TaskKind.EAE:
        return run_eae_eval(dataset, split, prompt_cfg, eval_cfg, client, ontology)
    raise ValueError(f"LLM evaluation covers ED and EAE, not {task.value}")
