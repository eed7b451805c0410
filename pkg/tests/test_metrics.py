"""Metrics checks: greedy matching semantics, AP oracle, tuple scoring."""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diagraph.errors import KindMismatch
from diagraph.geometry import OrientedBox, rotated_iou
from diagraph.metrics import (
    ClassCounts,
    average_precision,
    evaluate_detection_batch,
    evaluate_detections,
    evaluate_tuple_batch,
    evaluate_tuples,
    match_boxes,
)
from diagraph.model import (
    AnnotationSet,
    DiagramKind,
    DiagramObject,
    ObjectClass,
    RelationTuple,
)


def obj(oid, cls, cx, cy, w=40.0, h=20.0, score=1.0, keypoints=None):
    return DiagramObject(oid, cls, OrientedBox(cx, cy, w, h), score, keypoints)


def make_set(objects, kind=DiagramKind.OWNERSHIP, size=(400.0, 300.0)):
    return AnnotationSet("d-0", kind, size[0], size[1], tuple(objects), ())


# ------------------------------------------------------------- matching


class TestMatching:
    def test_greedy_prefers_higher_score_first(self):
        # both predictions overlap the single truth; the higher score wins it
        gt = [obj(0, ObjectClass.NODE, 100, 100)]
        preds = [
            obj(0, ObjectClass.NODE, 104, 100, score=0.6),
            obj(1, ObjectClass.NODE, 101, 100, score=0.9),
        ]
        assert match_boxes(preds, gt) == [(1, 0)]

    def test_score_tie_breaks_by_lower_id(self):
        gt = [obj(0, ObjectClass.NODE, 100, 100)]
        preds = [
            obj(5, ObjectClass.NODE, 101, 100, score=0.8),
            obj(2, ObjectClass.NODE, 104, 100, score=0.8),
        ]
        assert match_boxes(preds, gt) == [(2, 0)]

    def test_equal_iou_takes_lower_gt_id(self):
        gt = [
            obj(3, ObjectClass.NODE, 120, 100),
            obj(1, ObjectClass.NODE, 80, 100),
        ]
        pred = [obj(0, ObjectClass.NODE, 100, 100, w=80.0, h=20.0, score=0.9)]
        pairs = match_boxes(pred, gt)
        assert pairs == [(0, 1)]

    def test_classes_never_cross_match(self):
        gt = [obj(0, ObjectClass.BUS, 100, 100)]
        preds = [obj(0, ObjectClass.NODE, 100, 100, score=0.9)]
        assert match_boxes(preds, gt) == []

    def test_below_threshold_rejected(self):
        gt = [obj(0, ObjectClass.NODE, 100, 100)]
        preds = [obj(0, ObjectClass.NODE, 130, 100, score=0.9)]
        assert match_boxes(preds, gt, iou_threshold=0.5) == []

    def test_input_order_does_not_matter(self):
        rng = random.Random(7)
        gt = [
            obj(i, ObjectClass.NODE, rng.uniform(0, 300), rng.uniform(0, 300))
            for i in range(8)
        ]
        preds = [
            obj(
                i,
                ObjectClass.NODE,
                gt[i].box.cx + rng.uniform(-8, 8),
                gt[i].box.cy + rng.uniform(-8, 8),
                score=rng.random(),
            )
            for i in range(8)
        ]
        base = match_boxes(preds, gt)
        for _ in range(5):
            rng.shuffle(preds)
            rng.shuffle(gt)
            assert sorted(match_boxes(preds, gt)) == sorted(base)

    def test_matched_pairs_clear_threshold_and_are_unique(self):
        rng = random.Random(11)
        gt = [
            obj(i, ObjectClass.LINE, rng.uniform(0, 200), rng.uniform(0, 200))
            for i in range(6)
        ]
        preds = [
            obj(
                i,
                ObjectClass.LINE,
                rng.uniform(0, 200),
                rng.uniform(0, 200),
                score=rng.random(),
            )
            for i in range(10)
        ]
        pairs = match_boxes(preds, gt, iou_threshold=0.3)
        assert len({p for p, _ in pairs}) == len(pairs)
        assert len({g for _, g in pairs}) == len(pairs)
        gt_by_id = {o.id: o for o in gt}
        pred_by_id = {o.id: o for o in preds}
        for p, g in pairs:
            assert rotated_iou(pred_by_id[p].box, gt_by_id[g].box) >= 0.3


# ------------------------------------------------------------------- AP


def _ap_oracle(rows, gt_count):
    # independent: fresh max-precision scan at every breakpoint
    ordered = sorted(rows, key=lambda r: (-r[0], r[1]))
    if gt_count == 0:
        return 1.0 if not ordered else 0.0
    if not ordered:
        return 0.0
    pts = []
    tp = fp = 0
    for _, _, hit in ordered:
        tp += 1 if hit else 0
        fp += 0 if hit else 1
        pts.append((tp / gt_count, tp / (tp + fp)))
    ap = prev = 0.0
    for k, (r, _) in enumerate(pts):
        ap += (r - prev) * max(p for _, p in pts[k:])
        prev = r
    return ap


class TestAveragePrecision:
    def test_hand_case_five_ninths(self):
        rows = [(0.9, 0, True), (0.8, 1, False), (0.7, 2, True)]
        assert abs(average_precision(rows, 3) - 5.0 / 9.0) < 1e-9

    def test_perfect_run_is_one(self):
        rows = [(0.9, 0, True), (0.8, 1, True)]
        assert average_precision(rows, 2) == 1.0

    def test_no_truth_no_detections_is_one(self):
        assert average_precision([], 0) == 1.0

    def test_no_truth_with_detections_is_zero(self):
        assert average_precision([(0.5, 0, False)], 0) == 0.0

    def test_truth_without_detections_is_zero(self):
        assert average_precision([], 4) == 0.0

    @given(
        st.lists(st.booleans(), min_size=0, max_size=30),
        st.integers(min_value=0, max_value=10),
        st.randoms(use_true_random=False),
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_oracle(self, hits, extra_gt, rng):
        gt_count = sum(hits) + extra_gt
        rows = [(rng.random(), i, h) for i, h in enumerate(hits)]
        assert abs(
            average_precision(rows, gt_count) - _ap_oracle(rows, gt_count)
        ) < 1e-12

    def test_score_ties_use_stable_tiebreak(self):
        rows = [(0.5, 1, False), (0.5, 0, True)]
        # id 0 ranks first, so precision at rank 1 is 1.0
        assert average_precision(rows, 1) == 1.0


# ------------------------------------------------------ set evaluation


class TestEvaluateDetections:
    def test_self_evaluation_is_perfect(self):
        from diagraph.synthesizer import SynthesisConfig, synthesize_diagram

        d = synthesize_diagram(17, SynthesisConfig(kind=DiagramKind.OWNERSHIP))
        report = evaluate_detections(d.annotations, d.annotations)
        for cls in ObjectClass:
            assert report.counts[cls].precision == 1.0
            assert report.counts[cls].recall == 1.0
            assert report.ap[cls] == 1.0
        assert report.map_score == 1.0
        assert report.keypoints.precision == 1.0
        assert report.keypoints.recall == 1.0

    def test_kind_mismatch_refused(self):
        a = make_set([], kind=DiagramKind.OWNERSHIP)
        b = make_set([], kind=DiagramKind.ORGANIZATION)
        with pytest.raises(KindMismatch):
            evaluate_detections(a, b)

    def test_empty_prediction_conventions(self):
        gt = make_set([obj(0, ObjectClass.NODE, 50, 50)])
        report = evaluate_detections(make_set([]), gt)
        node = report.counts[ObjectClass.NODE]
        assert node.precision == 1.0
        assert node.recall == 0.0
        assert report.ap[ObjectClass.NODE] == 0.0
        # classes absent from both sides stay perfect
        assert report.ap[ObjectClass.BUS] == 1.0

    def test_keypoint_only_errors_leave_map_unchanged(self):
        line = obj(
            0, ObjectClass.LINE, 100, 100, w=60, h=4,
            keypoints=((70.0, 100.0), (130.0, 100.0)),
        )
        gt = make_set([line])
        moved = obj(
            0, ObjectClass.LINE, 100, 100, w=60, h=4,
            keypoints=((130.0, 100.0), (70.0, 100.0)),
        )
        report = evaluate_detections(make_set([moved]), gt)
        assert report.map_score == 1.0
        assert report.keypoints.tp == 0
        assert report.keypoints.fp == 2
        assert report.keypoints.fn == 2

    def test_keypoints_within_radius_count(self):
        gt = make_set(
            [obj(0, ObjectClass.LINE, 100, 100, w=60, h=4,
                 keypoints=((70.0, 100.0), (130.0, 100.0)))]
        )
        close = make_set(
            [obj(0, ObjectClass.LINE, 101, 100, w=60, h=4,
                 keypoints=((75.0, 104.0), (131.0, 99.0)))]
        )
        report = evaluate_detections(close, gt)
        assert report.keypoints.tp == 2
        assert report.keypoints.fp == 0
        far = make_set(
            [obj(0, ObjectClass.LINE, 101, 100, w=60, h=4,
                 keypoints=((79.1, 100.0), (131.0, 100.0)))]
        )
        report = evaluate_detections(far, gt)
        assert report.keypoints.tp == 1
        assert report.keypoints.fp == 1
        assert report.keypoints.fn == 1

    def test_unmatched_lines_contribute_keypoint_counts(self):
        gt = make_set(
            [obj(0, ObjectClass.LINE, 100, 100, w=60, h=4,
                 keypoints=((70.0, 100.0), (130.0, 100.0)))]
        )
        pred = make_set(
            [obj(0, ObjectClass.LINE, 300, 100, w=60, h=4, score=0.9,
                 keypoints=((270.0, 100.0), (330.0, 100.0)))]
        )
        report = evaluate_detections(pred, gt)
        assert report.keypoints.fp == 2
        assert report.keypoints.fn == 2

    def test_batch_pools_scores_across_diagrams(self):
        # diagram A: one TP at score 0.9; diagram B: one FP at 0.95 and one
        # TP at 0.7; pooled ranking interleaves them
        a_gt = make_set([obj(0, ObjectClass.NODE, 50, 50)])
        a_pred = make_set([obj(0, ObjectClass.NODE, 51, 50, score=0.9)])
        b_gt = make_set([obj(0, ObjectClass.NODE, 200, 200)])
        b_pred = make_set(
            [
                obj(0, ObjectClass.NODE, 400, 50, score=0.95),
                obj(1, ObjectClass.NODE, 201, 200, score=0.7),
            ]
        )
        report = evaluate_detection_batch([(a_pred, a_gt), (b_pred, b_gt)])
        # pooled ranks FP(.95) TP(.9) TP(.7): raw precisions 0, 1/2, 2/3, and
        # the envelope lifts the middle point to 2/3, so AP = 2/3
        assert abs(report.ap[ObjectClass.NODE] - 2.0 / 3.0) < 1e-12
        counts = report.counts[ObjectClass.NODE]
        assert (counts.tp, counts.fp, counts.fn) == (2, 1, 0)

    def test_batch_counts_are_sums(self):
        gt = make_set([obj(0, ObjectClass.NODE, 50, 50)])
        pred = make_set([obj(0, ObjectClass.NODE, 51, 50, score=0.9)])
        single = evaluate_detections(pred, gt)
        double = evaluate_detection_batch([(pred, gt), (pred, gt)])
        assert double.counts[ObjectClass.NODE].tp == 2 * single.counts[
            ObjectClass.NODE
        ].tp


# --------------------------------------------------------------- tuples


def rel(parent, child, pct=None, kind=DiagramKind.OWNERSHIP):
    return RelationTuple(kind, parent, child, pct)


class TestTupleMetrics:
    def test_exact_match_is_perfect(self):
        gold = [rel("A", "B", 60.0), rel("A", "C", 40.0)]
        report = evaluate_tuples(list(gold), gold)
        assert (report.precision, report.recall, report.f1) == (1.0, 1.0, 1.0)

    def test_missing_and_spurious(self):
        gold = [rel("A", "B", 60.0), rel("A", "C", 40.0)]
        pred = [rel("A", "B", 60.0), rel("A", "D", 10.0)]
        report = evaluate_tuples(pred, gold)
        assert report.counts.tp == 1
        assert report.counts.fp == 1
        assert report.counts.fn == 1

    def test_whitespace_insensitive_names(self):
        gold = [rel("Acme  Holdings", "Beta Corp", 50.0)]
        pred = [rel("Acme Holdings", " Beta  Corp ", 50.0)]
        assert evaluate_tuples(pred, gold).f1 == 1.0

    def test_percentage_tolerance(self):
        gold = [rel("A", "B", 50.0)]
        assert evaluate_tuples([rel("A", "B", 50.0 + 5e-7)], gold).f1 == 1.0
        assert evaluate_tuples([rel("A", "B", 50.001)], gold).f1 == 0.0

    def test_none_percentage_only_matches_none(self):
        gold = [rel("A", "B", 50.0)]
        assert evaluate_tuples([rel("A", "B", None)], gold).f1 == 0.0
        org = [rel("A", "B", None, kind=DiagramKind.ORGANIZATION)]
        assert evaluate_tuples(list(org), org).f1 == 1.0

    def test_duplicate_gold_requires_duplicate_predictions(self):
        gold = [rel("A", "B", 50.0), rel("A", "B", 50.0)]
        report = evaluate_tuples([rel("A", "B", 50.0)], gold)
        assert report.counts.tp == 1
        assert report.counts.fn == 1

    def test_empty_both_sides_is_perfect(self):
        report = evaluate_tuples([], [])
        assert (report.precision, report.recall, report.f1) == (1.0, 1.0, 1.0)

    def test_kind_mismatch_raises(self):
        own = [rel("A", "B", 50.0)]
        org = [rel("A", "B", kind=DiagramKind.ORGANIZATION)]
        with pytest.raises(KindMismatch):
            evaluate_tuples(own, org)
        with pytest.raises(KindMismatch):
            evaluate_tuples(own + org, own)

    def test_batch_sums_counts(self):
        gold = [rel("A", "B", 60.0)]
        report = evaluate_tuple_batch(
            [(list(gold), gold), ([], gold), ([rel("X", "Y", 1.0)], [])]
        )
        assert report.counts.tp == 1
        assert report.counts.fn == 1
        assert report.counts.fp == 1


class TestClassCounts:
    def test_conventions(self):
        assert ClassCounts(0, 0, 0).precision == 1.0
        assert ClassCounts(0, 0, 0).recall == 1.0
        assert ClassCounts(0, 0, 5).recall == 0.0
        assert ClassCounts(0, 0, 5).precision == 1.0
        assert ClassCounts(0, 3, 0).precision == 0.0
        assert ClassCounts(0, 3, 0).recall == 1.0
        assert ClassCounts(0, 3, 5).f1 == 0.0

    def test_addition(self):
        total = ClassCounts(1, 2, 3) + ClassCounts(4, 5, 6)
        assert (total.tp, total.fp, total.fn) == (5, 7, 9)
