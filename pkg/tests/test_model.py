"""Model validation and canonical JSON round trips."""

from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diagraph.errors import ParseError
from diagraph.geometry import OrientedBox
from diagraph.model import (
    AnnotationSet,
    DiagramKind,
    DiagramObject,
    ObjectClass,
    RelationTuple,
    TextBlock,
    Topology,
    from_json,
    parse_percentage,
    relation_tuple_from_dict,
    set_from_dict,
    set_to_dict,
    to_canonical_json,
    tuples_from_topology,
    validate,
)


def make_set(objects=(), texts=(), width=200.0, height=100.0) -> AnnotationSet:
    return AnnotationSet(
        diagram_id="t-0001",
        kind=DiagramKind.OWNERSHIP,
        width=width,
        height=height,
        objects=tuple(objects),
        texts=tuple(texts),
    )


def node(i, cx=50, cy=50, w=40, h=20) -> DiagramObject:
    return DiagramObject(i, ObjectClass.NODE, OrientedBox(cx, cy, w, h, 0))


def line(i, cx=50, cy=50, w=30, h=4, theta=0.0, keypoints=None) -> DiagramObject:
    return DiagramObject(i, ObjectClass.LINE, OrientedBox(cx, cy, w, h, theta), 1.0, keypoints)


class TestValidate:
    def test_valid_set_has_no_violations(self):
        s = make_set([node(1), line(2, keypoints=((35, 50), (65, 50)))], [TextBlock(3, OrientedBox(50, 50, 20, 10, 0), "Acme")])
        assert validate(s) == []

    def test_duplicate_ids_counted_once_per_duplicate(self):
        # three objects sharing one id -> two violations, as the counting oracle:
        # each re-use of an already-seen id is one finding
        s = make_set([node(1), node(1, cx=120), node(1, cx=160)])
        dups = [v for v in validate(s) if v.rule == "unique-ids"]
        assert len(dups) == 2

    def test_duplicate_across_objects_and_texts(self):
        s = make_set([node(7)], [TextBlock(7, OrientedBox(50, 50, 10, 5, 0), "x")])
        assert any(v.rule == "unique-ids" for v in validate(s))

    def test_keypoints_on_node_flagged(self):
        bad = DiagramObject(1, ObjectClass.NODE, OrientedBox(50, 50, 40, 20, 0), 1.0, ((40, 50), (60, 50)))
        s = make_set([bad])
        assert any(v.rule == "keypoints-line-only" for v in validate(s))

    def test_keypoints_must_be_distinct(self):
        s = make_set([line(1, keypoints=((50, 50), (50, 50)))])
        assert any(v.rule == "keypoints-distinct" for v in validate(s))

    def test_keypoints_must_stay_near_box(self):
        s = make_set([line(1, keypoints=((35, 50), (90, 50)))])
        assert any(v.rule == "keypoints-near-box" for v in validate(s))

    def test_keypoint_within_snap_tolerance_ok(self):
        # 2 units past the short side is inside the inflated box
        s = make_set([line(1, keypoints=((33, 50), (67, 50)))])
        assert validate(s) == []

    def test_box_outside_canvas(self):
        s = make_set([node(1, cx=300)])
        assert any(v.rule == "box-in-canvas" for v in validate(s))

    def test_two_unit_slack_tolerated(self):
        s = make_set([node(1, cx=180, w=43.9)])  # right edge at 201.95 < 202
        assert validate(s) == []

    def test_blank_text_flagged(self):
        s = make_set([], [TextBlock(1, OrientedBox(50, 50, 10, 5, 0), "   ")])
        assert any(v.rule == "text-nonempty" for v in validate(s))

    def test_score_range(self):
        bad = DiagramObject(1, ObjectClass.NODE, OrientedBox(50, 50, 40, 20, 0), 1.5)
        assert any(v.rule == "score-range" for v in validate(make_set([bad])))


class TestCanonicalJson:
    def test_round_trip_exact(self):
        s = make_set(
            [node(1), line(2, theta=0.37, keypoints=((36.5, 49.0), (63.5, 51.0)))],
            [TextBlock(3, OrientedBox(50, 50, 20, 10, 0), "Alpha Holding")],
        )
        assert from_json(to_canonical_json(s)) == s

    def test_field_names(self):
        d = set_to_dict(make_set([line(2, keypoints=((36, 50), (64, 50)))]))
        assert set(d) == {"diagram_id", "kind", "width", "height", "objects", "texts"}
        o = d["objects"][0]
        assert set(o) == {"id", "class", "box", "score", "keypoints"}
        assert set(o["box"]) == {"cx", "cy", "w", "h", "theta"}
        assert o["keypoints"] == {"start": [36.0, 50.0], "end": [64.0, 50.0]}

    def test_canonical_bytes_stable(self):
        s = make_set([node(1)])
        assert to_canonical_json(s) == to_canonical_json(s)

    def test_malformed_json_raises_parse_error(self):
        with pytest.raises(ParseError):
            from_json("{not json")
        with pytest.raises(ParseError):
            set_from_dict({"diagram_id": "x"})

    def test_unknown_class_raises(self):
        d = set_to_dict(make_set([node(1)]))
        d["objects"][0]["class"] = "arrow"
        with pytest.raises(ParseError):
            set_from_dict(d)


class TestParsePercentage:
    @pytest.mark.parametrize(
        "text,value",
        [
            ("60", 60.0),
            ("60%", 60.0),
            ("60.0％", 60.0),
            (" 51.5 % ", 51.5),
            ("0.3", 0.3),
            ("100%", 100.0),
        ],
    )
    def test_accepts(self, text, value):
        assert parse_percentage(text) == value

    @pytest.mark.parametrize("text", ["60.0.0", "-60", "abc", "12a", "%", "", "6 0"])
    def test_rejects(self, text):
        assert parse_percentage(text) is None


class TestRelationTuples:
    def test_ownership_dict_shape(self):
        t = RelationTuple(DiagramKind.OWNERSHIP, "A Corp", "B Ltd", 51.0)
        assert t.to_dict() == {"kind": "ownership", "owner": "A Corp", "percentage": 51.0, "owned": "B Ltd"}

    def test_organization_dict_shape(self):
        t = RelationTuple(DiagramKind.ORGANIZATION, "Board", "Audit Office")
        assert t.to_dict() == {"kind": "organization", "supervisor": "Board", "subordinate": "Audit Office"}

    def test_round_trip_through_dict(self):
        t = RelationTuple(DiagramKind.OWNERSHIP, "A", "B", 12.5)
        assert relation_tuple_from_dict(t.to_dict()) == t

    def test_empty_names_rejected(self):
        with pytest.raises(ValueError):
            RelationTuple(DiagramKind.OWNERSHIP, " ", "B", 1.0)

    def test_tuples_from_topology(self):
        t = Topology(
            kind=DiagramKind.OWNERSHIP,
            entities=((0, "Root Co"), (1, "Leaf Co")),
            levels={0: 0, 1: 1},
            edges=((0, 1, "51.0%"),),
        )
        (tup,) = tuples_from_topology(t)
        assert tup == RelationTuple(DiagramKind.OWNERSHIP, "Root Co", "Leaf Co", 51.0)

    def test_sorted_output(self):
        t = Topology(
            kind=DiagramKind.ORGANIZATION,
            entities=((0, "B"), (1, "A"), (2, "C")),
            levels={0: 0, 1: 0, 2: 1},
            edges=((0, 2, ""), (1, 2, "")),
        )
        got = tuples_from_topology(t)
        assert [x.parent for x in got] == ["A", "B"]
