"""Acceptance criteria for the full pipeline.

Each test prints one ACCEPTANCE <name>: PASS/FAIL line so a log scrape can
audit the run. The criteria cover end-to-end tuple fidelity, metric
self-consistency, geometric correctness against Monte Carlo, format
round-trip precision, corpus-scale determinism, noise-robustness shape,
and the independence of box metrics from keypoint errors.
"""

import functools
import hashlib
import math
import shutil
import time

import numpy as np
import pytest

from diagraph.aggregator import recognize
from diagraph.detectsim import NoiseConfig, perturb
from diagraph.formats import (
    coco_to_dota,
    dota_to_coco,
    read_detections,
    read_dota,
    to_detection_file,
    write_dota,
)
from diagraph.geometry import OrientedBox, rotated_iou, vertices_of
from diagraph.metrics import (
    average_precision,
    evaluate_detections,
    evaluate_tuple_batch,
    evaluate_tuples,
)
from diagraph.model import DiagramKind, ObjectClass, tuples_from_topology
from diagraph.synthesizer import (
    StyleConfig,
    SynthesisConfig,
    synthesize_dataset,
    synthesize_diagram,
)


def criterion(name):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE {name}: FAIL")
                raise
            print(f"ACCEPTANCE {name}: PASS")
        return run
    return wrap


@criterion("tuple_round_trip")
def test_tuple_round_trip_1000_diagrams():
    """Seeds 0..499 of both kinds recognize back to their gold tuples with
    perfect precision and recall, in under a minute."""
    start = time.monotonic()
    pairs = []
    for kind in (DiagramKind.OWNERSHIP, DiagramKind.ORGANIZATION):
        cfg = SynthesisConfig(kind=kind)
        for seed in range(500):
            d = synthesize_diagram(seed, cfg)
            result = recognize(d.annotations)
            assert not result.diagnostics.has_issues(), d.diagram_id
            pairs.append((result.tuples, tuples_from_topology(d.topology)))
    report = evaluate_tuple_batch(pairs)
    assert report.precision == 1.0
    assert report.recall == 1.0
    assert report.f1 == 1.0
    elapsed = time.monotonic() - start
    assert elapsed < 60.0, f"took {elapsed:.1f}s"


@criterion("self_evaluation")
def test_self_evaluation_is_all_ones():
    """A diagram evaluated against itself scores 1.0 on every metric."""
    for kind in (DiagramKind.OWNERSHIP, DiagramKind.ORGANIZATION):
        cfg = SynthesisConfig(kind=kind)
        for seed in (0, 7, 23):
            d = synthesize_diagram(seed, cfg)
            report = evaluate_detections(d.annotations, d.annotations)
            for cls in ObjectClass:
                counts = report.counts[cls]
                assert counts.precision == 1.0
                assert counts.recall == 1.0
                assert counts.f1 == 1.0
                assert report.ap[cls] == 1.0
            assert report.map_score == 1.0
            assert report.keypoints.precision == 1.0
            assert report.keypoints.recall == 1.0
            result = recognize(d.annotations)
            tup = evaluate_tuples(result.tuples, tuples_from_topology(d.topology))
            assert (tup.precision, tup.recall, tup.f1) == (1.0, 1.0, 1.0)


def _mc_iou(b1: OrientedBox, b2: OrientedBox, rng: np.random.Generator, n: int) -> float:
    vs = np.array(vertices_of(b1) + vertices_of(b2))
    lo = vs.min(axis=0)
    hi = vs.max(axis=0)
    pts = rng.uniform(lo, hi, size=(n, 2))

    def inside(b: OrientedBox) -> np.ndarray:
        dx = pts[:, 0] - b.cx
        dy = pts[:, 1] - b.cy
        c, s = math.cos(b.theta), math.sin(b.theta)
        u = dx * c + dy * s
        v = -dx * s + dy * c
        return (np.abs(u) <= b.w / 2) & (np.abs(v) <= b.h / 2)

    in1 = inside(b1)
    in2 = inside(b2)
    union = np.count_nonzero(in1 | in2)
    if union == 0:
        return 0.0
    return np.count_nonzero(in1 & in2) / union


@criterion("iou_monte_carlo")
def test_iou_against_monte_carlo():
    """Exact rotated IoU tracks a 100k-sample Monte Carlo estimate over
    10,000 random pairs: 99% within 0.01, worst within 0.03."""
    rng = np.random.default_rng(2024)
    errors = []
    for _ in range(10_000):
        cx, cy = rng.uniform(0, 60, size=2)
        b1 = OrientedBox(
            30.0, 30.0,
            float(rng.uniform(10, 80)), float(rng.uniform(10, 80)),
            float(rng.uniform(-math.pi, math.pi)),
        )
        b2 = OrientedBox(
            float(cx), float(cy),
            float(rng.uniform(10, 80)), float(rng.uniform(10, 80)),
            float(rng.uniform(-math.pi, math.pi)),
        )
        exact = rotated_iou(b1, b2)
        approx = _mc_iou(b1, b2, rng, 100_000)
        errors.append(abs(exact - approx))
    errors.sort()
    within = sum(1 for e in errors if e <= 0.01)
    assert within >= 9_900, f"only {within} of 10000 within 0.01"
    assert errors[-1] <= 0.03, f"worst error {errors[-1]:.4f}"


@criterion("ap_hand_case")
def test_ap_hand_case_exact():
    """Three truths, ranked TP FP TP, gives AP of exactly 5/9."""
    rows = [(0.9, 0, True), (0.8, 1, False), (0.7, 2, True)]
    assert abs(average_precision(rows, 3) - 5.0 / 9.0) <= 1e-9


def _max_vertex_error(a, b) -> float:
    worst = 0.0
    assert len(a.objects) == len(b.objects)
    for oa, ob in zip(a.objects, b.objects):
        for (xa, ya), (xb, yb) in zip(vertices_of(oa.box), vertices_of(ob.box)):
            worst = max(worst, abs(xa - xb), abs(ya - yb))
    return worst


@criterion("format_round_trips")
def test_format_round_trips_are_tight():
    """100 synthesized sets survive DOTA and COCO round trips to 1e-6 and
    detection-space rescaling to 1e-9."""
    sets = []
    for kind in (DiagramKind.OWNERSHIP, DiagramKind.ORGANIZATION):
        cfg = SynthesisConfig(kind=kind)
        for seed in range(50):
            sets.append(synthesize_diagram(seed, cfg).annotations)
    for s in sets:
        text, sidecar = write_dota(s)
        back = read_dota(text, sidecar)
        assert _max_vertex_error(s, back) <= 1e-6
        assert back.texts == s.texts
    coco = dota_to_coco(sets)
    back_sets = coco_to_dota(coco)
    assert len(back_sets) == len(sets)
    for s, back in zip(sets, back_sets):
        assert _max_vertex_error(s, back) <= 1e-6
        assert back.texts == s.texts
    for s in sets[:20]:
        doc = to_detection_file(s, coordinate_space="scaled-1024")
        objs = read_detections(doc, (s.width, s.height))
        rebuilt = type(s)(
            s.diagram_id, s.kind, s.width, s.height, tuple(objs), s.texts
        )
        assert _max_vertex_error(s, rebuilt) <= 1e-9


def _tree_hash(root) -> str:
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(str(path.relative_to(root)).encode("utf-8"))
        h.update(b"\0")
        h.update(hashlib.sha256(path.read_bytes()).digest())
    return h.hexdigest()


@criterion("corpus_scale")
def test_corpus_scale_and_hash_stability(tmp_path):
    """8050 ownership and 4450 organization diagrams synthesize in under
    ten minutes, and a rerun reproduces the same bytes."""
    start = time.monotonic()
    hashes = []
    for attempt in ("a", "b"):
        out = tmp_path / attempt
        synthesize_dataset(
            out / "ownership",
            SynthesisConfig(kind=DiagramKind.OWNERSHIP),
            count=8050,
        )
        synthesize_dataset(
            out / "organization",
            SynthesisConfig(kind=DiagramKind.ORGANIZATION),
            count=4450,
        )
        hashes.append(_tree_hash(out))
        shutil.rmtree(out)
    elapsed = time.monotonic() - start
    assert hashes[0] == hashes[1]
    assert elapsed / 2 < 600.0, f"one corpus build took {elapsed / 2:.0f}s"


@criterion("robustness_monotonic")
def test_tuple_recall_degrades_monotonically():
    """Pooled tuple recall over 50 diagrams x 5 noise seeds never increases
    as the box drop rate steps through 0, 0.05, 0.1, 0.2."""
    diagrams = []
    for kind in (DiagramKind.OWNERSHIP, DiagramKind.ORGANIZATION):
        cfg = SynthesisConfig(kind=kind)
        for seed in range(25):
            diagrams.append(synthesize_diagram(seed, cfg))
    recalls = []
    for rate in (0.0, 0.05, 0.1, 0.2):
        noise = NoiseConfig(drop_rate=rate)
        pairs = []
        for d in diagrams:
            gold = tuples_from_topology(d.topology)
            for rep in range(5):
                noisy = perturb(d.annotations, noise, rng=f"{d.seed}:{rep}")
                pairs.append((recognize(noisy).tuples, gold))
        recalls.append(evaluate_tuple_batch(pairs).recall)
    assert recalls[0] == 1.0
    for harder, easier in zip(recalls[1:], recalls):
        assert harder <= easier + 1e-12, recalls


@criterion("keypoint_independence")
def test_keypoint_errors_leave_map_unchanged():
    """Destroying keypoints while keeping boxes intact does not move mAP,
    while the keypoint metrics do register the damage."""
    noise = NoiseConfig(keypoint_jitter=30.0, keypoint_drop_rate=0.4)
    for kind in (DiagramKind.OWNERSHIP, DiagramKind.ORGANIZATION):
        cfg = SynthesisConfig(kind=kind, style=StyleConfig(arrow_probability=1.0))
        for seed in range(10):
            d = synthesize_diagram(seed, cfg)
            damaged = perturb(d.annotations, noise, rng=seed)
            report = evaluate_detections(damaged, d.annotations)
            assert report.map_score == 1.0
            for cls in ObjectClass:
                assert report.ap[cls] == 1.0
            assert report.keypoints.recall < 1.0
