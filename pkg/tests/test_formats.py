"""Round-trip and error-path tests for the interchange formats."""

from __future__ import annotations

import math
import random

import pytest

from diagraph.errors import ParseError
from diagraph.formats import (
    COCO_CATEGORIES,
    coco_to_dota,
    detection_texts,
    dota_to_coco,
    read_detections,
    read_dota,
    read_dota_files,
    to_detection_file,
    write_dota,
    write_dota_files,
)
from diagraph.geometry import OrientedBox, quad_area, rotated_iou, vertices_of
from diagraph.model import (
    AnnotationSet,
    DiagramKind,
    DiagramObject,
    ObjectClass,
    TextBlock,
)


def random_set(rng: random.Random, diagram_id: str = "d-0") -> AnnotationSet:
    kind = rng.choice([DiagramKind.OWNERSHIP, DiagramKind.ORGANIZATION])
    width, height = rng.uniform(400, 1600), rng.uniform(300, 1200)
    objects = []
    next_id = 0
    for _ in range(rng.randint(1, 12)):
        cls = rng.choice(list(ObjectClass))
        w = rng.uniform(8, 200)
        h = rng.uniform(4, 80)
        box = OrientedBox(
            rng.uniform(100, width - 100),
            rng.uniform(80, height - 80),
            w,
            h,
            rng.uniform(-math.pi / 4, 3 * math.pi / 4),
        )
        kp = None
        if cls is ObjectClass.LINE and rng.random() < 0.7:
            a, b = (
                (box.cx - w / 3, box.cy),
                (box.cx + w / 3, box.cy + 1.0),
            )
            kp = (a, b)
        objects.append(DiagramObject(next_id, cls, box, 1.0, kp))
        next_id += 1
    texts = []
    for _ in range(rng.randint(0, 5)):
        texts.append(
            TextBlock(
                next_id,
                OrientedBox(rng.uniform(50, width - 50), rng.uniform(50, height - 50), 40, 12),
                rng.choice(["Alpha Holdings", "51.0%", "Ops", "Board of Directors"]),
            )
        )
        next_id += 1
    return AnnotationSet(diagram_id, kind, width, height, tuple(objects), tuple(texts))


def assert_sets_close(a: AnnotationSet, b: AnnotationSet, tol: float = 1e-6) -> None:
    assert a.diagram_id == b.diagram_id
    assert a.kind == b.kind
    assert abs(a.width - b.width) <= tol and abs(a.height - b.height) <= tol
    assert len(a.objects) == len(b.objects)
    for oa, ob in zip(a.objects, b.objects):
        assert oa.id == ob.id
        assert oa.cls == ob.cls
        for pa, pb in zip(vertices_of(oa.box), vertices_of(ob.box)):
            assert abs(pa[0] - pb[0]) <= tol
            assert abs(pa[1] - pb[1]) <= tol
        assert (oa.keypoints is None) == (ob.keypoints is None)
        if oa.keypoints is not None:
            for pa, pb in zip(oa.keypoints, ob.keypoints):
                assert abs(pa[0] - pb[0]) <= tol
                assert abs(pa[1] - pb[1]) <= tol
    assert len(a.texts) == len(b.texts)
    for ta, tb in zip(a.texts, b.texts):
        assert ta.id == tb.id
        assert ta.content == tb.content
        assert abs(ta.box.cx - tb.box.cx) <= tol


class TestDota:
    def test_round_trip_100_random_sets(self):
        rng = random.Random(11)
        for i in range(100):
            s = random_set(rng, f"d-{i}")
            text, sidecar = write_dota(s)
            back = read_dota(text, sidecar)
            assert_sets_close(s, back, tol=1e-6)
            # scores are not representable in this format
            assert all(o.score == 1.0 for o in back.objects)

    def test_line_layout(self):
        s = AnnotationSet(
            "d",
            DiagramKind.OWNERSHIP,
            640.0,
            480.0,
            (DiagramObject(0, ObjectClass.NODE, OrientedBox(100, 50, 80, 30)),),
            (),
        )
        text, _ = write_dota(s)
        fields = text.strip().split()
        assert len(fields) == 10
        assert fields[8] == "node"
        assert fields[9] == "0"
        assert fields[0] == "60.000000"
        assert fields[1] == "35.000000"

    def test_file_helpers(self, tmp_path):
        s = random_set(random.Random(3), "file-me")
        p = tmp_path / "file-me.txt"
        write_dota_files(s, p)
        assert p.exists() and p.with_suffix(".json").exists()
        assert_sets_close(s, read_dota_files(p))

    def test_missing_sidecar_file(self, tmp_path):
        p = tmp_path / "x.txt"
        p.write_text("", encoding="utf-8")
        with pytest.raises(ParseError):
            read_dota_files(p)

    def test_bad_field_count_reports_line(self):
        s = random_set(random.Random(5))
        text, sidecar = write_dota(s)
        mangled = text.replace("\n", " extra\n", 1)
        with pytest.raises(ParseError) as ei:
            read_dota(mangled, sidecar)
        assert ei.value.line == 1

    def test_bad_coordinate(self):
        s = random_set(random.Random(6))
        text, sidecar = write_dota(s)
        first = text.splitlines()[0].split()
        first[3] = "oops"
        mangled = "\n".join([" ".join(first)] + text.splitlines()[1:])
        with pytest.raises(ParseError):
            read_dota(mangled, sidecar)

    def test_count_mismatch(self):
        s = random_set(random.Random(7))
        text, sidecar = write_dota(s)
        sidecar = dict(sidecar, object_ids=sidecar["object_ids"] + [999])
        with pytest.raises(ParseError):
            read_dota(text, sidecar)

    def test_unknown_category(self):
        sidecar = {
            "diagram_id": "d",
            "kind": "ownership",
            "width": 100,
            "height": 100,
            "object_ids": [0],
            "keypoints": {},
            "texts": [],
        }
        row = " ".join(["0.0"] * 8) + " blob 0"
        with pytest.raises(ParseError):
            read_dota(row, sidecar)


class TestCoco:
    def test_category_table(self):
        doc = dota_to_coco([])
        names = {c["id"]: c["name"] for c in doc["categories"]}
        assert names == {1: "node", 2: "line", 3: "bus"}
        assert COCO_CATEGORIES[ObjectClass.NODE] == 1

    def test_round_trip_batches(self):
        rng = random.Random(21)
        sets = [random_set(rng, f"batch-{i}") for i in range(100)]
        doc = dota_to_coco(sets)
        back = coco_to_dota(doc)
        assert len(back) == len(sets)
        for s, b in zip(sets, back):
            assert_sets_close(s, b, tol=1e-6)

    def test_area_matches_quad_area(self):
        rng = random.Random(22)
        s = random_set(rng)
        doc = dota_to_coco([s])
        by_obj = {a["object_id"]: a for a in doc["annotations"]}
        for obj in s.objects:
            ann = by_obj[obj.id]
            assert ann["area"] == pytest.approx(quad_area(vertices_of(obj.box)), rel=1e-9)
            x, y, bw, bh = ann["bbox"]
            xs = [p[0] for p in vertices_of(obj.box)]
            ys = [p[1] for p in vertices_of(obj.box)]
            assert x == pytest.approx(min(xs))
            assert x + bw == pytest.approx(max(xs))
            assert y == pytest.approx(min(ys))
            assert y + bh == pytest.approx(max(ys))

    def test_annotation_ids_sequential(self):
        rng = random.Random(23)
        sets = [random_set(rng, f"s{i}") for i in range(4)]
        doc = dota_to_coco(sets)
        assert [a["id"] for a in doc["annotations"]] == list(
            range(1, len(doc["annotations"]) + 1)
        )

    def test_rejects_non_quad_polygon(self):
        doc = dota_to_coco([random_set(random.Random(9))])
        doc["annotations"][0]["segmentation"] = [[0, 0, 1, 0, 1, 1]]
        with pytest.raises(ParseError):
            coco_to_dota(doc)

    def test_rejects_unknown_category(self):
        doc = dota_to_coco([random_set(random.Random(10))])
        doc["annotations"][0]["category_id"] = 44
        with pytest.raises(ParseError):
            coco_to_dota(doc)


class TestDetections:
    def test_native_obb_round_trip(self):
        s = random_set(random.Random(31), "det-0")
        doc = to_detection_file(s, "native")
        dets = read_detections(doc, (s.width, s.height))
        assert len(dets) == len(s.objects)
        for a, b in zip(sorted(s.objects, key=lambda o: o.id), dets):
            assert rotated_iou(a.box, b.box) > 0.999999
            assert b.score == a.score

    def test_scaled_1024_rescaling_error_tiny(self):
        rng = random.Random(32)
        for i in range(50):
            s = random_set(rng, f"sc-{i}")
            doc = to_detection_file(s, "scaled-1024")
            long_side = max(s.width, s.height)
            assert max(doc["image_size"]) == pytest.approx(1024.0, abs=1e-9)
            dets = read_detections(doc, (s.width, s.height))
            for a, b in zip(sorted(s.objects, key=lambda o: o.id), dets):
                assert abs(a.box.cx - b.box.cx) <= 1e-9 * max(1.0, long_side)
                assert abs(a.box.cy - b.box.cy) <= 1e-9 * max(1.0, long_side)
                assert abs(a.box.w - b.box.w) <= 1e-9 * max(1.0, long_side)
                assert abs(a.box.h - b.box.h) <= 1e-9 * max(1.0, long_side)
                assert abs(a.box.theta - b.box.theta) <= 1e-12
                if a.keypoints is not None:
                    for pa, pb in zip(a.keypoints, b.keypoints):
                        assert abs(pa[0] - pb[0]) <= 1e-9 * max(1.0, long_side)
                        assert abs(pa[1] - pb[1]) <= 1e-9 * max(1.0, long_side)

    def test_quad_form_accepted(self):
        box = OrientedBox(50, 40, 30, 10, 0.3)
        quad = vertices_of(box)
        doc = {
            "diagram_id": "q",
            "image_size": [100, 80],
            "coordinate_space": "native",
            "detections": [
                {"id": 7, "class": "line", "quad": [c for p in quad for c in p], "score": 0.5}
            ],
        }
        dets = read_detections(doc, (100, 80))
        assert dets[0].id == 7
        assert rotated_iou(dets[0].box, box) > 0.999999

    def test_texts_round_trip_scaled(self):
        s = random_set(random.Random(33))
        doc = to_detection_file(s, "scaled-1024")
        texts = detection_texts(doc, (s.width, s.height))
        assert len(texts) == len(s.texts)
        for a, b in zip(sorted(s.texts, key=lambda t: t.id), texts):
            assert a.content == b.content
            assert abs(a.box.cx - b.box.cx) <= 1e-9 * max(1.0, s.width)

    def test_defaults_and_errors(self):
        with pytest.raises(ParseError):
            read_detections({"nope": []}, (10, 10))
        with pytest.raises(ParseError):
            read_detections(
                {"detections": [{"class": "node", "score": 0.5}]}, (10, 10)
            )
        with pytest.raises(ParseError):
            read_detections(
                {
                    "coordinate_space": "parsecs",
                    "detections": [],
                },
                (10, 10),
            )
        # id defaults to position
        doc = {
            "detections": [
                {"class": "node", "obb": [5, 5, 4, 2, 0.0], "score": 0.9},
                {"class": "bus", "obb": [8, 8, 6, 2, 0.0], "score": 0.8},
            ]
        }
        dets = read_detections(doc, (20, 20))
        assert [d.id for d in dets] == [0, 1]
