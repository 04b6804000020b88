"""Document-level split generation and balance-based selection.

Splits always partition documents, never instances. A pool of random
candidate partitions is scored by how far dev and test drift from train on
four statistics (event-type coverage, role coverage, events per instance,
arguments per event), and the lowest-discrepancy candidates become the
standard splits. Everything is deterministic given (dataset, ratios,
n_candidates, seed).
"""

from __future__ import annotations

import json
import random
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

from .model import AnnotatedInstance, DatasetProfile

EPSILON = 1e-9
OBJECTIVE_VERSION = "coverage+density-l1/v1"

PART_NAMES = ("train", "dev", "test")


class InfeasibleSplitError(ValueError):
    """The requested partition cannot be produced from this corpus."""


@dataclass(frozen=True)
class SplitRatios:
    train: float
    dev: float
    test: float

    def __post_init__(self) -> None:
        for name, value in zip(PART_NAMES, (self.train, self.dev, self.test)):
            if value <= 0:
                raise ValueError(f"{name} ratio must be > 0, got {value}")
        if abs(self.train + self.dev + self.test - 1.0) > 1e-9:
            raise ValueError("ratios must sum to 1.0")

    @classmethod
    def parse(cls, text: str) -> "SplitRatios":
        parts = text.replace(",", "/").split("/")
        if len(parts) != 3:
            raise ValueError(f"expected train/dev/test, got {text!r}")
        return cls(*(float(p) for p in parts))


@dataclass(frozen=True)
class SplitAssignment:
    """One candidate or selected partition of the document ids."""

    split_id: int
    train: frozenset[str]
    dev: frozenset[str]
    test: frozenset[str]
    discrepancy: float
    profiles: dict[str, DatasetProfile] = field(default_factory=dict)

    def part(self, name: str) -> frozenset[str]:
        return {"train": self.train, "dev": self.dev, "test": self.test}[name]

    def signature(self) -> tuple[frozenset[str], frozenset[str], frozenset[str]]:
        return (self.train, self.dev, self.test)


@dataclass(frozen=True)
class _DocStats:
    n_instances: int
    n_events: int
    n_arguments: int
    event_types: frozenset[str]
    role_types: frozenset[str]


def _collect_doc_stats(dataset: Iterable[AnnotatedInstance]) -> dict[str, _DocStats]:
    acc: dict[str, list] = {}
    for ai in dataset:
        entry = acc.setdefault(ai.doc_id, [0, 0, 0, set(), set()])
        entry[0] += 1
        for ev in ai.events:
            entry[1] += 1
            entry[3].add(ev.event_type)
            for _, role in ev.arguments:
                entry[2] += 1
                entry[4].add(role)
    return {
        doc: _DocStats(e[0], e[1], e[2], frozenset(e[3]), frozenset(e[4]))
        for doc, e in acc.items()
    }


def _part_profile(docs: Iterable[str], stats: dict[str, _DocStats]) -> DatasetProfile:
    docs = sorted(docs)
    event_types: set[str] = set()
    role_types: set[str] = set()
    n_instances = n_events = n_arguments = 0
    for doc in docs:
        ds = stats[doc]
        n_instances += ds.n_instances
        n_events += ds.n_events
        n_arguments += ds.n_arguments
        event_types |= ds.event_types
        role_types |= ds.role_types
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


def _balance_stats(profile: DatasetProfile, all_event_types: int, all_role_types: int) -> tuple[float, float, float, float]:
    """The four compared statistics, as densities so unequal part sizes stay comparable."""
    et_cov = profile.n_event_types / all_event_types if all_event_types else 0.0
    rt_cov = profile.n_role_types / all_role_types if all_role_types else 0.0
    ev_per_inst = profile.n_events / profile.n_instances if profile.n_instances else 0.0
    arg_per_ev = profile.n_arguments / profile.n_events if profile.n_events else 0.0
    return (et_cov, rt_cov, ev_per_inst, arg_per_ev)


def _discrepancy_from_profiles(profiles: dict[str, DatasetProfile], n_et: int, n_rt: int) -> float:
    train_stats = _balance_stats(profiles["train"], n_et, n_rt)
    score = 0.0
    for part in ("dev", "test"):
        part_stats = _balance_stats(profiles[part], n_et, n_rt)
        for s_part, s_train in zip(part_stats, train_stats):
            score += abs(s_part - s_train) / max(s_train, EPSILON)
    return score


def part_sizes(n_docs: int, ratios: SplitRatios) -> tuple[int, int, int]:
    n_train = round(ratios.train * n_docs)
    n_dev = round(ratios.dev * n_docs)
    n_test = n_docs - n_train - n_dev
    if min(n_train, n_dev, n_test) < 1:
        raise InfeasibleSplitError(
            f"{n_docs} documents at {ratios.train}/{ratios.dev}/{ratios.test} "
            f"give part sizes {n_train}/{n_dev}/{n_test}; every part needs at least one document"
        )
    return n_train, n_dev, n_test


def discrepancy(candidate: SplitAssignment, dataset: Sequence[AnnotatedInstance]) -> float:
    """Sum over dev/test of relative deviation from train on the four balance statistics."""
    stats = _collect_doc_stats(dataset)
    profiles = {name: _part_profile(candidate.part(name), stats) for name in PART_NAMES}
    full = _part_profile(stats.keys(), stats)
    return _discrepancy_from_profiles(profiles, full.n_event_types, full.n_role_types)


def propose_splits(
    dataset: Sequence[AnnotatedInstance],
    ratios: SplitRatios,
    n_candidates: int = 1000,
    seed: int = 0,
) -> list[SplitAssignment]:
    """Distinct random document partitions, scored, deterministic for a seed.

    When the corpus admits fewer distinct partitions than requested, all that
    exist are returned.
    """
    if n_candidates < 1:
        raise ValueError("n_candidates must be >= 1")
    stats = _collect_doc_stats(dataset)
    doc_ids = sorted(stats)
    if len(doc_ids) < 3:
        raise InfeasibleSplitError(f"need at least 3 documents, got {len(doc_ids)}")
    n_train, n_dev, _ = part_sizes(len(doc_ids), ratios)
    full = _part_profile(doc_ids, stats)

    rng = random.Random(seed)
    candidates: list[SplitAssignment] = []
    seen: set[tuple[frozenset[str], frozenset[str], frozenset[str]]] = set()
    attempts = 0
    max_attempts = 50 * n_candidates
    pool = list(doc_ids)
    while len(candidates) < n_candidates and attempts < max_attempts:
        attempts += 1
        rng.shuffle(pool)
        train = frozenset(pool[:n_train])
        dev = frozenset(pool[n_train : n_train + n_dev])
        test = frozenset(pool[n_train + n_dev :])
        signature = (train, dev, test)
        if signature in seen:
            continue
        seen.add(signature)
        profiles = {name: _part_profile(part, stats) for name, part in zip(PART_NAMES, signature)}
        score = _discrepancy_from_profiles(profiles, full.n_event_types, full.n_role_types)
        candidates.append(
            SplitAssignment(
                split_id=0,
                train=train,
                dev=dev,
                test=test,
                discrepancy=score,
                profiles=profiles,
            )
        )
    return candidates


def select_splits(candidates: Sequence[SplitAssignment], k: int = 5) -> list[SplitAssignment]:
    """The k lowest-discrepancy candidates, ties broken by candidate index."""
    if len({c.signature() for c in candidates}) < k:
        raise InfeasibleSplitError(
            f"need {k} distinct candidates, got {len(candidates)} "
            f"({len({c.signature() for c in candidates})} distinct)"
        )
    order = sorted(range(len(candidates)), key=lambda i: (candidates[i].discrepancy, i))
    return [replace(candidates[i], split_id=rank + 1) for rank, i in enumerate(order[:k])]


# ---------------------------------------------------------------------------
# Split file I/O
# ---------------------------------------------------------------------------

def split_to_obj(assignment: SplitAssignment) -> dict:
    return {
        "split_id": assignment.split_id,
        "train": sorted(assignment.train),
        "dev": sorted(assignment.dev),
        "test": sorted(assignment.test),
        "discrepancy": assignment.discrepancy,
        "profiles": {name: prof.to_dict() for name, prof in sorted(assignment.profiles.items())},
    }


def write_split(path: Path | str, assignment: SplitAssignment) -> None:
    Path(path).write_text(
        json.dumps(split_to_obj(assignment), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def read_split(path: Path | str) -> SplitAssignment:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return SplitAssignment(
        split_id=obj["split_id"],
        train=frozenset(obj["train"]),
        dev=frozenset(obj["dev"]),
        test=frozenset(obj["test"]),
        discrepancy=obj["discrepancy"],
        profiles={name: DatasetProfile.from_dict(d) for name, d in obj.get("profiles", {}).items()},
    )
