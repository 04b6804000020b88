"""Tuple-set matching metrics with micro-averaged precision/recall/F1.

Six metrics, each defined by the identity tuple a mention contributes:

    TI   trigger (start, end)
    TC   trigger (start, end, event_type)
    AI   argument (start, end, event_type)
    AC   argument (start, end, event_type, role)
    AI+  argument (start, end, event_type, trigger_start, trigger_end)
    AC+  argument (start, end, event_type, trigger_start, trigger_end, role)

The plus variants carry the attached trigger's offsets, so an argument tied
to the wrong co-typed trigger stops counting as correct. Keys use set
semantics (duplicate identical mentions collapse) and every zero-denominator
ratio evaluates to 0.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

from .model import AnnotatedInstance, EventMention, TaskKind

CONVENTIONS = {"dedupe": "set", "zero_div": "zero"}


class MetricKind(Enum):
    TI = "TI"
    TC = "TC"
    AI = "AI"
    AC = "AC"
    AI_PLUS = "AI+"
    AC_PLUS = "AC+"


TRIGGER_METRICS = (MetricKind.TI, MetricKind.TC)
ARGUMENT_METRICS = (MetricKind.AI, MetricKind.AC, MetricKind.AI_PLUS, MetricKind.AC_PLUS)

_TASK_METRICS = {
    TaskKind.ED: TRIGGER_METRICS,
    TaskKind.EAE: ARGUMENT_METRICS,
    TaskKind.E2E: TRIGGER_METRICS + ARGUMENT_METRICS,
}


def metrics_for_task(task: TaskKind) -> tuple[MetricKind, ...]:
    return _TASK_METRICS[task]


def require_metric_for_task(metric: MetricKind, task: TaskKind) -> None:
    """Reject metrics undefined for a task (argument metrics on ED have no data)."""
    if metric not in _TASK_METRICS[task]:
        raise ValueError(f"metric {metric.value} is not defined for task {task.value}")


class AggregationError(ValueError):
    """Per-split reports that cannot be averaged together."""


@dataclass(frozen=True)
class MetricCounts:
    matched: int = 0
    n_pred: int = 0
    n_gold: int = 0

    def __post_init__(self) -> None:
        if self.matched > min(self.n_pred, self.n_gold):
            raise ValueError(f"matched {self.matched} exceeds pred/gold counts")

    def __add__(self, other: "MetricCounts") -> "MetricCounts":
        return MetricCounts(
            self.matched + other.matched,
            self.n_pred + other.n_pred,
            self.n_gold + other.n_gold,
        )


def extract_keys(events: Iterable[EventMention], metric: MetricKind) -> set[tuple]:
    """Identity tuples of the given metric; one per event for trigger metrics,
    one per (event, argument) for argument metrics; duplicates collapse."""
    keys: set[tuple] = set()
    for ev in events:
        t = ev.trigger
        if metric is MetricKind.TI:
            keys.add((t.start, t.end))
        elif metric is MetricKind.TC:
            keys.add((t.start, t.end, ev.event_type))
        else:
            for sp, role in ev.arguments:
                if metric is MetricKind.AI:
                    keys.add((sp.start, sp.end, ev.event_type))
                elif metric is MetricKind.AC:
                    keys.add((sp.start, sp.end, ev.event_type, role))
                elif metric is MetricKind.AI_PLUS:
                    keys.add((sp.start, sp.end, ev.event_type, t.start, t.end))
                elif metric is MetricKind.AC_PLUS:
                    keys.add((sp.start, sp.end, ev.event_type, t.start, t.end, role))
                else:  # pragma: no cover - enum is closed
                    raise ValueError(f"unknown metric {metric}")
    return keys


def score_instance(
    gold: Iterable[EventMention], pred: Iterable[EventMention], metric: MetricKind
) -> MetricCounts:
    gold_keys = extract_keys(gold, metric)
    pred_keys = extract_keys(pred, metric)
    return MetricCounts(
        matched=len(gold_keys & pred_keys),
        n_pred=len(pred_keys),
        n_gold=len(gold_keys),
    )


def score_instances(
    pairs: Iterable[tuple[Sequence[EventMention], Sequence[EventMention]]],
    metrics: Sequence[MetricKind],
) -> dict[MetricKind, MetricCounts]:
    """Micro-average: per-instance counts summed over the collection."""
    totals = {m: MetricCounts() for m in metrics}
    for gold, pred in pairs:
        for m in metrics:
            totals[m] = totals[m] + score_instance(gold, pred, m)
    return totals


def safe_div(num: float, denom: float) -> float:
    return num / denom if denom > 0 else 0.0


def micro_f1(counts: MetricCounts) -> tuple[float, float, float]:
    """(precision, recall, f1) in [0, 1]; every 0-denominator ratio is 0."""
    precision = safe_div(counts.matched, counts.n_pred)
    recall = safe_div(counts.matched, counts.n_gold)
    f1 = safe_div(2 * precision * recall, precision + recall)
    return precision, recall, f1


# ---------------------------------------------------------------------------
# EAE prediction validation
# ---------------------------------------------------------------------------

def validate_eae_predictions(
    gold: Iterable[EventMention], pred: Iterable[EventMention]
) -> list[EventMention]:
    """Predicted events whose (trigger span, event_type) echoes no gold trigger.

    These violate the EAE contract (arguments are extracted *given* a gold
    trigger) and must be excluded from scoring and counted in the report.
    """
    gold_triggers = {(ev.trigger.start, ev.trigger.end, ev.event_type) for ev in gold}
    return [
        ev for ev in pred if (ev.trigger.start, ev.trigger.end, ev.event_type) not in gold_triggers
    ]


def filter_eae_predictions(
    gold: Sequence[EventMention], pred: Sequence[EventMention]
) -> tuple[list[EventMention], list[EventMention]]:
    """(kept, violations) partition of predicted events for an EAE instance."""
    gold_triggers = {(ev.trigger.start, ev.trigger.end, ev.event_type) for ev in gold}
    kept, violations = [], []
    for ev in pred:
        target = kept if (ev.trigger.start, ev.trigger.end, ev.event_type) in gold_triggers else violations
        target.append(ev)
    return kept, violations


# ---------------------------------------------------------------------------
# Reports: per-split scores and the mean over splits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricScore:
    precision: float
    recall: float
    f1: float
    counts: MetricCounts

    @classmethod
    def from_counts(cls, counts: MetricCounts) -> "MetricScore":
        p, r, f1 = micro_f1(counts)
        return cls(p, r, f1, counts)

    def to_dict(self) -> dict:
        return {
            "p": self.precision,
            "r": self.recall,
            "f1": self.f1,
            "matched": self.counts.matched,
            "n_pred": self.counts.n_pred,
            "n_gold": self.counts.n_gold,
        }


@dataclass(frozen=True)
class SplitScores:
    split_id: int
    scores: dict[MetricKind, MetricScore]
    eae_violations: int = 0

    def to_dict(self) -> dict:
        out = {
            "split_id": self.split_id,
            "metrics": {m.value: s.to_dict() for m, s in self.scores.items()},
        }
        if self.eae_violations:
            out["eae_violations"] = self.eae_violations
        return out


def score_split(
    split_id: int,
    pairs: Iterable[tuple[Sequence[EventMention], Sequence[EventMention]]],
    task: TaskKind,
    eae_violations: int = 0,
) -> SplitScores:
    metrics = metrics_for_task(task)
    totals = score_instances(pairs, metrics)
    return SplitScores(
        split_id=split_id,
        scores={m: MetricScore.from_counts(totals[m]) for m in metrics},
        eae_violations=eae_violations,
    )


def aggregate_splits(splits: Sequence[SplitScores]) -> dict[MetricKind, tuple[float, float, float]]:
    """Arithmetic mean of (P, R, F1) over splits; metric sets must agree."""
    if not splits:
        raise AggregationError("no split scores to aggregate")
    metric_sets = [tuple(sorted(s.scores, key=lambda m: m.value)) for s in splits]
    if any(ms != metric_sets[0] for ms in metric_sets):
        raise AggregationError(f"mismatched metric sets across splits: {metric_sets}")
    mean: dict[MetricKind, tuple[float, float, float]] = {}
    for m in splits[0].scores:
        ps = [s.scores[m].precision for s in splits]
        rs = [s.scores[m].recall for s in splits]
        fs = [s.scores[m].f1 for s in splits]
        mean[m] = (sum(ps) / len(ps), sum(rs) / len(rs), sum(fs) / len(fs))
    return mean


@dataclass(frozen=True)
class MetricReport:
    """Per-split metric scores plus their mean, for one system on one dataset."""

    dataset: str
    task: TaskKind
    splits: tuple[SplitScores, ...]
    system: str = "system"
    extras: dict = field(default_factory=dict)

    @property
    def mean(self) -> dict[MetricKind, tuple[float, float, float]]:
        return aggregate_splits(self.splits)

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "dataset": self.dataset,
            "task": self.task.value,
            "splits": [s.to_dict() for s in self.splits],
            "mean": {
                m.value: {"p": p, "r": r, "f1": f1} for m, (p, r, f1) in self.mean.items()
            },
            "conventions": dict(CONVENTIONS),
            **({"extras": self.extras} if self.extras else {}),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def pair_instances(
    gold_instances: Sequence[AnnotatedInstance],
    predictions: Mapping[str, Sequence[EventMention]],
    task: TaskKind,
) -> tuple[list[tuple[Sequence[EventMention], Sequence[EventMention]]], int]:
    """Align predictions to gold instances by instance_id.

    Instances with no prediction entry score against an empty event list. For
    the EAE task, predictions that do not echo a gold trigger are dropped here
    and returned as a violation count.
    """
    pairs: list[tuple[Sequence[EventMention], Sequence[EventMention]]] = []
    violations = 0
    for ai in gold_instances:
        pred_events: Sequence[EventMention] = tuple(predictions.get(ai.instance_id, ()))
        if task is TaskKind.EAE:
            kept, bad = filter_eae_predictions(ai.events, pred_events)
            violations += len(bad)
            pred_events = kept
        pairs.append((ai.events, pred_events))
    return pairs, violations
