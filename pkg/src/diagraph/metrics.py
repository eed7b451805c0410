"""Evaluation: oriented-box detection quality and relation-tuple quality.

Box matching is class-aware and greedy. Predictions are visited in score
order (ties by object id) and each takes the unmatched ground-truth box of
the same class with the highest overlap, provided it clears the threshold;
equal overlaps go to the lower ground-truth id. Average precision uses
all-points interpolation over the precision envelope, and batch evaluation
pools detections across diagrams before ranking, so scores compete
corpus-wide while matches stay within their own diagram.

Edge conventions: a class with no predictions has precision 1.0, one with
no ground truth has recall 1.0, and its AP is 1.0 only when there are also
no predictions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import KindMismatch
from .geometry import rotated_iou
from .model import (
    SNAP_RADIUS,
    AnnotationSet,
    DiagramObject,
    ObjectClass,
    RelationTuple,
    tuple_sort_key,
)

DEFAULT_IOU_THRESHOLD = 0.5
KEYPOINT_RADIUS = SNAP_RADIUS


@dataclass(frozen=True)
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 1.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 1.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: "ClassCounts") -> "ClassCounts":
        return ClassCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def match_boxes(
    predictions: Sequence[DiagramObject],
    truths: Sequence[DiagramObject],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
) -> list[tuple[int, int]]:
    """Greedy same-class matching; returns (prediction id, truth id) pairs."""
    pairs: list[tuple[int, int]] = []
    taken: set[int] = set()
    for pred in sorted(predictions, key=lambda o: (-o.score, o.id)):
        best_iou = 0.0
        best_gt: int | None = None
        for gt in sorted(truths, key=lambda o: o.id):
            if gt.id in taken or gt.cls is not pred.cls:
                continue
            iou = rotated_iou(pred.box, gt.box)
            if iou > best_iou:
                best_iou = iou
                best_gt = gt.id
        if best_gt is not None and best_iou >= iou_threshold:
            taken.add(best_gt)
            pairs.append((pred.id, best_gt))
    return pairs


def _scored_rows(
    predictions: Sequence[DiagramObject],
    truths: Sequence[DiagramObject],
    iou_threshold: float,
) -> dict[ObjectClass, list[tuple[float, int, bool]]]:
    """Per class: (score, tiebreak id, matched) for every prediction."""
    matched = {p for p, _ in match_boxes(predictions, truths, iou_threshold)}
    rows: dict[ObjectClass, list[tuple[float, int, bool]]] = {
        cls: [] for cls in ObjectClass
    }
    for pred in predictions:
        rows[pred.cls].append((pred.score, pred.id, pred.id in matched))
    return rows


def average_precision(rows: Iterable[tuple[float, int, bool]], gt_count: int) -> float:
    """All-points AP from (score, tiebreak, is_tp) rows against gt_count boxes."""
    ordered = sorted(rows, key=lambda r: (-r[0], r[1]))
    if gt_count == 0:
        return 1.0 if not ordered else 0.0
    if not ordered:
        return 0.0
    recalls: list[float] = []
    precisions: list[float] = []
    tp = fp = 0
    for _, _, hit in ordered:
        if hit:
            tp += 1
        else:
            fp += 1
        recalls.append(tp / gt_count)
        precisions.append(tp / (tp + fp))
    envelope = precisions[:]
    for i in range(len(envelope) - 2, -1, -1):
        envelope[i] = max(envelope[i], envelope[i + 1])
    ap = 0.0
    prev = 0.0
    for r, p in zip(recalls, envelope):
        ap += (r - prev) * p
        prev = r
    return ap


def _keypoint_counts(
    pairs: list[tuple[int, int]],
    predictions: Sequence[DiagramObject],
    truths: Sequence[DiagramObject],
) -> ClassCounts:
    """Start/end keypoint agreement over line boxes.

    Keypoints on matched lines count as hits when the same-role points are
    within KEYPOINT_RADIUS; keypoints on unmatched lines count against the
    side that has them."""
    pred_by_id = {o.id: o for o in predictions}
    gt_by_id = {o.id: o for o in truths}
    matched_pred = {p for p, _ in pairs}
    matched_gt = {g for _, g in pairs}
    tp = fp = fn = 0
    for pid, gid in pairs:
        pk = pred_by_id[pid].keypoints
        gk = gt_by_id[gid].keypoints
        for role in (0, 1):
            pp = pk[role] if pk else None
            gp = gk[role] if gk else None
            if pp is None and gp is None:
                continue
            if pp is None:
                fn += 1
            elif gp is None:
                fp += 1
            elif math.hypot(pp[0] - gp[0], pp[1] - gp[1]) <= KEYPOINT_RADIUS:
                tp += 1
            else:
                fp += 1
                fn += 1
    for o in predictions:
        if o.cls is ObjectClass.LINE and o.id not in matched_pred and o.keypoints:
            fp += 2
    for o in truths:
        if o.cls is ObjectClass.LINE and o.id not in matched_gt and o.keypoints:
            fn += 2
    return ClassCounts(tp, fp, fn)


@dataclass
class DetectionReport:
    iou_threshold: float
    counts: dict[ObjectClass, ClassCounts]
    ap: dict[ObjectClass, float]
    keypoints: ClassCounts

    @property
    def map_score(self) -> float:
        return sum(self.ap.values()) / len(self.ap)

    def to_dict(self) -> dict:
        return {
            "iou_threshold": self.iou_threshold,
            "classes": {
                cls.value: {**self.counts[cls].to_dict(), "ap": self.ap[cls]}
                for cls in ObjectClass
            },
            "map": self.map_score,
            "keypoints": self.keypoints.to_dict(),
        }


def _check_kinds(predictions: AnnotationSet, truths: AnnotationSet) -> None:
    if predictions.kind is not truths.kind:
        raise KindMismatch(
            f"cannot compare {predictions.kind.value} predictions "
            f"against {truths.kind.value} truth"
        )


def evaluate_detections(
    predictions: AnnotationSet,
    truths: AnnotationSet,
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
) -> DetectionReport:
    return evaluate_detection_batch([(predictions, truths)], iou_threshold)


def evaluate_detection_batch(
    pairs: Sequence[tuple[AnnotationSet, AnnotationSet]],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
) -> DetectionReport:
    """Pooled evaluation: matching stays per diagram, ranking is corpus-wide."""
    rows: dict[ObjectClass, list[tuple[float, int, bool]]] = {
        cls: [] for cls in ObjectClass
    }
    gt_count = {cls: 0 for cls in ObjectClass}
    counts = {cls: ClassCounts() for cls in ObjectClass}
    keypoints = ClassCounts()
    for offset, (pred_set, gt_set) in enumerate(pairs):
        _check_kinds(pred_set, gt_set)
        diagram_rows = _scored_rows(pred_set.objects, gt_set.objects, iou_threshold)
        for cls in ObjectClass:
            for score, oid, hit in diagram_rows[cls]:
                rows[cls].append((score, offset * 1_000_000 + oid, hit))
        for cls in ObjectClass:
            n_gt = sum(1 for o in gt_set.objects if o.cls is cls)
            n_tp = sum(1 for _, _, hit in diagram_rows[cls] if hit)
            n_fp = len(diagram_rows[cls]) - n_tp
            gt_count[cls] += n_gt
            counts[cls] = counts[cls] + ClassCounts(n_tp, n_fp, n_gt - n_tp)
        pairs_d = match_boxes(pred_set.objects, gt_set.objects, iou_threshold)
        keypoints = keypoints + _keypoint_counts(
            pairs_d, pred_set.objects, gt_set.objects
        )
    ap = {
        cls: average_precision(rows[cls], gt_count[cls]) for cls in ObjectClass
    }
    return DetectionReport(iou_threshold, counts, ap, keypoints)


# ---------------------------------------------------------------- tuples

PERCENT_TOLERANCE = 1e-6


def _norm_name(name: str) -> str:
    return " ".join(name.split())


def _tuples_kind(tuples: Sequence[RelationTuple]):
    kinds = {t.kind for t in tuples}
    if len(kinds) > 1:
        raise KindMismatch("mixed tuple kinds in one collection")
    return kinds.pop() if kinds else None


@dataclass(frozen=True)
class TupleReport:
    counts: ClassCounts

    @property
    def precision(self) -> float:
        return self.counts.precision

    @property
    def recall(self) -> float:
        return self.counts.recall

    @property
    def f1(self) -> float:
        return self.counts.f1

    def to_dict(self) -> dict:
        return self.counts.to_dict()


def _tuple_matches(a: RelationTuple, b: RelationTuple) -> bool:
    if _norm_name(a.parent) != _norm_name(b.parent):
        return False
    if _norm_name(a.child) != _norm_name(b.child):
        return False
    if (a.percentage is None) != (b.percentage is None):
        return False
    if a.percentage is None:
        return True
    return abs(a.percentage - b.percentage) <= PERCENT_TOLERANCE


def evaluate_tuples(
    predicted: Sequence[RelationTuple], gold: Sequence[RelationTuple]
) -> TupleReport:
    pk = _tuples_kind(predicted)
    gk = _tuples_kind(gold)
    if pk is not None and gk is not None and pk is not gk:
        raise KindMismatch(
            f"cannot compare {pk.value} tuples against {gk.value} gold"
        )
    remaining = sorted(gold, key=tuple_sort_key)
    tp = 0
    for pred in sorted(predicted, key=tuple_sort_key):
        for i, g in enumerate(remaining):
            if _tuple_matches(pred, g):
                del remaining[i]
                tp += 1
                break
    fp = len(predicted) - tp
    fn = len(gold) - tp
    return TupleReport(ClassCounts(tp, fp, fn))


def evaluate_tuple_batch(
    pairs: Sequence[tuple[Sequence[RelationTuple], Sequence[RelationTuple]]],
) -> TupleReport:
    total = ClassCounts()
    for predicted, gold in pairs:
        total = total + evaluate_tuples(predicted, gold).counts
    return TupleReport(total)
