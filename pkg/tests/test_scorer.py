import random

import pytest
from hypothesis import given, settings, strategies as st

from eventbench.model import EventMention, Span, TaskKind
from eventbench.scorer import (
    AggregationError,
    MetricCounts,
    MetricKind,
    MetricReport,
    MetricScore,
    SplitScores,
    aggregate_splits,
    extract_keys,
    filter_eae_predictions,
    metrics_for_task,
    micro_f1,
    pair_instances,
    require_metric_for_task,
    score_instance,
    score_split,
    validate_eae_predictions,
)

from helpers import annotated, chaotic_pair, ev, random_pair
from oracle import oracle_counts, oracle_prf

ALL_METRICS = list(MetricKind)


def counts_tuple(c: MetricCounts) -> tuple[int, int, int]:
    return (c.matched, c.n_pred, c.n_gold)


class TestExtractKeys:
    def test_execution_style_event(self):
        # one trigger, two argument roles -> 1 TI key, 2 AC keys
        event = ev((3, 4), "Justice-Execution", [((0, 1), "Agent"), ((5, 6), "Person")])
        assert len(extract_keys([event], MetricKind.TI)) == 1
        assert len(extract_keys([event], MetricKind.AC)) == 2

    def test_co_located_events_collapse_to_one_tc_key(self):
        events = [
            ev((1, 2), "A", [((0, 1), "r")]),
            ev((1, 2), "A", [((3, 4), "s")]),
        ]
        assert len(extract_keys(events, MetricKind.TC)) == 1

    def test_no_arguments_no_ai_keys(self):
        assert extract_keys([ev((0, 1), "A")], MetricKind.AI) == set()

    def test_plus_key_extends_plain_key(self):
        event = ev((1, 2), "A", [((4, 5), "r")])
        (ai,) = extract_keys([event], MetricKind.AI)
        (ai_plus,) = extract_keys([event], MetricKind.AI_PLUS)
        assert ai_plus[:3] == ai
        (ac_plus,) = extract_keys([event], MetricKind.AC_PLUS)
        assert ac_plus[:5] == ai_plus


def two_trigger_fixture():
    """Same argument tuple, but the prediction hangs it on the other co-typed trigger."""
    gold = [
        ev((2, 3), "Attack", [((5, 6), "Attacker")]),
        ev((10, 11), "Attack"),
    ]
    pred = [
        ev((2, 3), "Attack"),
        ev((10, 11), "Attack", [((5, 6), "Attacker")]),
    ]
    return gold, pred


class TestScoreInstance:
    def test_exact_match_is_perfect_everywhere(self):
        event = ev((3, 4), "Justice-Execution", [((0, 1), "Agent"), ((5, 6), "Person")])
        for metric in ALL_METRICS:
            counts = score_instance([event], [event], metric)
            assert counts.matched == counts.n_pred == counts.n_gold > 0
            assert micro_f1(counts) == (1.0, 1.0, 1.0)

    def test_wrong_trigger_attachment(self):
        gold, pred = two_trigger_fixture()
        for metric in (MetricKind.AI, MetricKind.AC):
            assert counts_tuple(score_instance(gold, pred, metric)) == (1, 1, 1)
        for metric in (MetricKind.AI_PLUS, MetricKind.AC_PLUS):
            assert counts_tuple(score_instance(gold, pred, metric)) == (0, 1, 1)

    def test_wrong_trigger_attachment_matches_oracle(self):
        gold, pred = two_trigger_fixture()
        for metric in ALL_METRICS:
            assert counts_tuple(score_instance(gold, pred, metric)) == oracle_counts(
                gold, pred, metric.value
            )

    def test_empty_pred(self):
        gold = [ev((0, 1), "A", [((1, 2), "r")])]
        for metric in ALL_METRICS:
            counts = score_instance(gold, [], metric)
            assert counts.matched == 0 and counts.n_pred == 0
            assert micro_f1(counts)[2] == 0.0

    def test_duplicate_predictions_count_once(self):
        gold = [ev((0, 1), "A")]
        pred = [ev((0, 1), "A"), ev((0, 1), "A"), ev((0, 1), "A")]
        counts = score_instance(gold, pred, MetricKind.TC)
        assert counts_tuple(counts) == (1, 1, 1)


class TestMicroF1:
    def test_arithmetic(self):
        assert micro_f1(MetricCounts(1, 2, 2)) == (0.5, 0.5, 0.5)

    def test_safe_division(self):
        assert micro_f1(MetricCounts(0, 0, 0)) == (0.0, 0.0, 0.0)
        assert micro_f1(MetricCounts(0, 3, 0)) == (0.0, 0.0, 0.0)

    def test_invalid_counts_rejected(self):
        with pytest.raises(ValueError):
            MetricCounts(2, 1, 1)


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 10**9))
    def test_oracle_equivalence_chaotic(self, seed):
        gold, pred, _ = chaotic_pair(random.Random(seed))
        for metric in ALL_METRICS:
            assert counts_tuple(score_instance(gold, pred, metric)) == oracle_counts(
                gold, pred, metric.value
            )

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 10**9))
    def test_oracle_equivalence_constrained(self, seed):
        gold, pred, _ = random_pair(random.Random(seed))
        for metric in ALL_METRICS:
            assert counts_tuple(score_instance(gold, pred, metric)) == oracle_counts(
                gold, pred, metric.value
            )

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 10**9))
    def test_metric_ordering_on_matched_counts(self, seed):
        gold, pred, _ = random_pair(random.Random(seed))
        m = {metric: score_instance(gold, pred, metric) for metric in ALL_METRICS}
        assert m[MetricKind.TC].matched <= m[MetricKind.TI].matched
        assert m[MetricKind.AC].matched <= m[MetricKind.AI].matched
        assert m[MetricKind.AI_PLUS].matched <= m[MetricKind.AI].matched
        assert m[MetricKind.AC_PLUS].matched <= min(
            m[MetricKind.AC].matched, m[MetricKind.AI_PLUS].matched
        )

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 10**9))
    def test_metric_ordering_on_f1_when_no_collapse(self, seed):
        gold, pred, _ = random_pair(random.Random(seed))
        f1 = {metric: micro_f1(score_instance(gold, pred, metric))[2] for metric in ALL_METRICS}
        sizes = {
            metric: (
                len(extract_keys(gold, metric)),
                len(extract_keys(pred, metric)),
            )
            for metric in ALL_METRICS
        }
        for poorer, richer in [
            (MetricKind.TI, MetricKind.TC),
            (MetricKind.AI, MetricKind.AC),
            (MetricKind.AI, MetricKind.AI_PLUS),
            (MetricKind.AC, MetricKind.AC_PLUS),
            (MetricKind.AI_PLUS, MetricKind.AC_PLUS),
        ]:
            if sizes[poorer] == sizes[richer]:
                assert f1[richer] <= f1[poorer]

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 10**9))
    def test_symmetry_swaps_precision_and_recall(self, seed):
        gold, pred, _ = chaotic_pair(random.Random(seed))
        for metric in ALL_METRICS:
            p1, r1, f1 = micro_f1(score_instance(gold, pred, metric))
            p2, r2, f2 = micro_f1(score_instance(pred, gold, metric))
            assert (p1, r1, f1) == (r2, p2, f2)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10**9))
    def test_permutation_invariance(self, seed):
        rng = random.Random(seed)
        gold, pred, _ = chaotic_pair(rng)
        shuffled_gold = list(gold)
        shuffled_pred = list(pred)
        rng.shuffle(shuffled_gold)
        rng.shuffle(shuffled_pred)
        for metric in ALL_METRICS:
            assert score_instance(gold, pred, metric) == score_instance(
                shuffled_gold, shuffled_pred, metric
            )

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10**9))
    def test_micro_f1_matches_oracle_formula(self, seed):
        gold, pred, _ = chaotic_pair(random.Random(seed))
        for metric in ALL_METRICS:
            counts = score_instance(gold, pred, metric)
            assert micro_f1(counts) == oracle_prf(*counts_tuple(counts))


class TestTaskMetrics:
    def test_task_metric_sets(self):
        assert metrics_for_task(TaskKind.ED) == (MetricKind.TI, MetricKind.TC)
        assert metrics_for_task(TaskKind.EAE) == (
            MetricKind.AI,
            MetricKind.AC,
            MetricKind.AI_PLUS,
            MetricKind.AC_PLUS,
        )
        assert len(metrics_for_task(TaskKind.E2E)) == 6

    def test_argument_metric_rejected_for_ed(self):
        with pytest.raises(ValueError, match="not defined"):
            require_metric_for_task(MetricKind.AI, TaskKind.ED)
        require_metric_for_task(MetricKind.TI, TaskKind.ED)


class TestValidateEAE:
    def test_exact_trigger_echo_passes(self):
        gold = [ev((1, 2), "A", [((0, 1), "r")])]
        pred = [ev((1, 2), "A", [((0, 1), "r")])]
        assert validate_eae_predictions(gold, pred) == []

    def test_shifted_trigger_flagged_and_excluded(self):
        gold = [ev((1, 2), "A")]
        pred = [ev((2, 3), "A", [((0, 1), "r")])]
        violations = validate_eae_predictions(gold, pred)
        assert len(violations) == 1
        kept, bad = filter_eae_predictions(gold, pred)
        assert kept == [] and len(bad) == 1

    def test_empty_pred_no_violations(self):
        assert validate_eae_predictions([ev((1, 2), "A")], []) == []


class TestAggregation:
    def _split(self, split_id, f1_value):
        counts = MetricCounts(1, 2, 2) if f1_value else MetricCounts(0, 0, 0)
        score = MetricScore(f1_value, f1_value, f1_value, counts)
        return SplitScores(split_id, {MetricKind.TI: score})

    def test_mean_over_splits(self):
        splits = [self._split(i + 1, v) for i, v in enumerate((0.5, 0.7, 0.6, 0.4, 0.8))]
        mean = aggregate_splits(splits)
        assert mean[MetricKind.TI][2] == pytest.approx(0.6)

    def test_identical_splits_idempotent(self):
        splits = [self._split(i + 1, 0.5) for i in range(3)]
        assert aggregate_splits(splits)[MetricKind.TI] == (0.5, 0.5, 0.5)

    def test_single_split(self):
        splits = [self._split(1, 0.42)]
        assert aggregate_splits(splits)[MetricKind.TI][2] == pytest.approx(0.42)

    def test_mismatched_metric_sets_rejected(self):
        a = self._split(1, 0.5)
        b = SplitScores(2, {MetricKind.TC: MetricScore(0, 0, 0, MetricCounts())})
        with pytest.raises(AggregationError):
            aggregate_splits([a, b])

    def test_report_json_shape(self):
        report = MetricReport("toy", TaskKind.ED, (self._split(1, 0.5), self._split(2, 0.7)))
        obj = report.to_dict()
        assert obj["mean"]["TI"]["f1"] == pytest.approx(0.6)
        assert obj["conventions"] == {"dedupe": "set", "zero_div": "zero"}
        assert [s["split_id"] for s in obj["splits"]] == [1, 2]


class TestPairInstances:
    def test_missing_prediction_scores_empty(self):
        gold = [annotated(["a", "b"], [ev((0, 1), "A")], "i0")]
        pairs, violations = pair_instances(gold, {}, TaskKind.ED)
        assert pairs[0][1] == () and violations == 0

    def test_eae_violations_filtered_and_counted(self):
        gold = [annotated(["a", "b", "c"], [ev((0, 1), "A")], "i0")]
        preds = {"i0": [ev((1, 2), "A", [((2, 3), "r")]), ev((0, 1), "A")]}
        pairs, violations = pair_instances(gold, preds, TaskKind.EAE)
        assert violations == 1
        assert [e.trigger for e in pairs[0][1]] == [Span(0, 1)]

    def test_score_split_micro_averages(self):
        gold = [
            annotated(["a", "b"], [ev((0, 1), "A")], "i0"),
            annotated(["a", "b"], [ev((1, 2), "B")], "i1"),
        ]
        preds = {"i0": (ev((0, 1), "A"),), "i1": ()}
        pairs, _ = pair_instances(gold, preds, TaskKind.ED)
        scores = score_split(1, pairs, TaskKind.ED)
        assert scores.scores[MetricKind.TI].counts == MetricCounts(1, 1, 2)
        assert scores.scores[MetricKind.TI].recall == pytest.approx(0.5)
