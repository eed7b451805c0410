"""Domain types for structure diagrams and their canonical JSON form.

The canonical serialization here is the wire format used by the annotation
service and the detector simulator: points are [x, y] arrays, angles are
radians, class and kind labels are lowercase strings.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field

from .errors import ParseError
from .geometry import OrientedBox, Point, contains_point, vertices_of

# Shared pipeline constants. SNAP_TOLERANCE is the layout-time contact
# tolerance; SNAP_RADIUS doubles as the endpoint snap radius during
# aggregation and the keypoint match radius during evaluation.
SNAP_TOLERANCE = 3.0
SNAP_RADIUS = 8.0
LINE_THICKNESS = 4.0
CANVAS_SLACK = 2.0


class DiagramKind(enum.Enum):
    OWNERSHIP = "ownership"
    ORGANIZATION = "organization"


class ObjectClass(enum.Enum):
    NODE = "node"
    LINE = "line"
    BUS = "bus"


@dataclass(frozen=True)
class DiagramObject:
    """One annotated object: an id, a class, an oriented box, a confidence.

    ``keypoints`` marks the start and end of an arrowed line and is None for
    everything else; ground truth carries score 1.0.
    """

    id: int
    cls: ObjectClass
    box: OrientedBox
    score: float = 1.0
    keypoints: tuple[Point, Point] | None = None


@dataclass(frozen=True)
class TextBlock:
    """A piece of rendered or recognized text with its (axis-aligned) box."""

    id: int
    box: OrientedBox
    content: str


@dataclass(frozen=True)
class AnnotationSet:
    """Complete annotation of one diagram."""

    diagram_id: str
    kind: DiagramKind
    width: float
    height: float
    objects: tuple[DiagramObject, ...]
    texts: tuple[TextBlock, ...]


@dataclass(frozen=True)
class Violation:
    """One validation finding: the offending id and the rule it breaks."""

    object_id: int | None
    rule: str
    message: str


@dataclass(frozen=True)
class Topology:
    """Generating structure of a synthesized diagram.

    entities are (id, name); levels maps entity id to its level index;
    edges are (parent id, child id, label) where the label is a percentage
    text for ownership diagrams and empty otherwise; bus_groups lists the
    fan connections drawn through a shared bus segment.
    """

    kind: DiagramKind
    entities: tuple[tuple[int, str], ...]
    levels: dict[int, int]
    edges: tuple[tuple[int, int, str], ...]
    bus_groups: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...] = ()


@dataclass(frozen=True, order=True)
class RelationTuple:
    """Extracted relation: (owner, percentage, owned) or (supervisor, subordinate)."""

    kind: DiagramKind = field(compare=False)
    parent: str
    child: str
    percentage: float | None = None

    def __post_init__(self):
        if not self.parent.strip() or not self.child.strip():
            raise ValueError("relation endpoints must be non-empty names")

    def to_dict(self) -> dict:
        if self.kind is DiagramKind.OWNERSHIP:
            return {
                "kind": self.kind.value,
                "owner": self.parent,
                "percentage": self.percentage,
                "owned": self.child,
            }
        return {
            "kind": self.kind.value,
            "supervisor": self.parent,
            "subordinate": self.child,
        }


def relation_tuple_from_dict(d: dict) -> RelationTuple:
    kind = DiagramKind(d["kind"])
    if kind is DiagramKind.OWNERSHIP:
        pct = d.get("percentage")
        return RelationTuple(kind, d["owner"], d["owned"], None if pct is None else float(pct))
    return RelationTuple(kind, d["supervisor"], d["subordinate"], None)


_PERCENT_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*[%％]?\s*$")


def parse_percentage(text: str) -> float | None:
    """Parse a sign-less percentage text ("60", "60%", "60.0％"); None if not one."""
    m = _PERCENT_RE.match(text)
    if m is None:
        return None
    return float(m.group(1))


def tuple_sort_key(t: RelationTuple) -> tuple:
    """Stable ordering that tolerates a missing percentage."""
    return (t.parent, t.child, t.percentage is not None, t.percentage or 0.0)


def tuples_from_topology(t: Topology) -> list[RelationTuple]:
    """Gold relation tuples implied by a generating topology."""
    names = dict(t.entities)
    out = []
    for parent, child, label in t.edges:
        pct = parse_percentage(label) if t.kind is DiagramKind.OWNERSHIP else None
        out.append(RelationTuple(t.kind, names[parent], names[child], pct))
    return sorted(out, key=tuple_sort_key)


# ---------------------------------------------------------------- validate


def validate(s: AnnotationSet) -> list[Violation]:
    """Collect all rule violations; an empty list means the set is valid."""
    out: list[Violation] = []
    seen: dict[int, str] = {}
    for obj in s.objects:
        if obj.id in seen:
            out.append(Violation(obj.id, "unique-ids", f"object id {obj.id} already used"))
        seen[obj.id] = "object"
    for tb in s.texts:
        if tb.id in seen:
            out.append(Violation(tb.id, "unique-ids", f"text id {tb.id} already used"))
        seen[tb.id] = "text"

    lo_x, hi_x = -CANVAS_SLACK, s.width + CANVAS_SLACK
    lo_y, hi_y = -CANVAS_SLACK, s.height + CANVAS_SLACK

    def in_canvas(box: OrientedBox) -> bool:
        return all(lo_x <= x <= hi_x and lo_y <= y <= hi_y for x, y in vertices_of(box))

    for obj in s.objects:
        if not in_canvas(obj.box):
            out.append(Violation(obj.id, "box-in-canvas", "object box leaves the canvas"))
        if not (0.0 <= obj.score <= 1.0):
            out.append(Violation(obj.id, "score-range", f"score {obj.score} outside [0, 1]"))
        if obj.keypoints is not None:
            if obj.cls is not ObjectClass.LINE:
                out.append(
                    Violation(obj.id, "keypoints-line-only", f"{obj.cls.value} carries keypoints")
                )
            else:
                start, end = obj.keypoints
                if start == end:
                    out.append(Violation(obj.id, "keypoints-distinct", "start equals end"))
                roomy = obj.box.inflated(SNAP_TOLERANCE)
                for label, p in (("start", start), ("end", end)):
                    if not contains_point(roomy, p):
                        out.append(
                            Violation(
                                obj.id,
                                "keypoints-near-box",
                                f"{label} point lies outside the box inflated by {SNAP_TOLERANCE}",
                            )
                        )
    for tb in s.texts:
        if not tb.content.strip():
            out.append(Violation(tb.id, "text-nonempty", "text content is blank"))
        if not in_canvas(tb.box):
            out.append(Violation(tb.id, "box-in-canvas", "text box leaves the canvas"))
    return out


# ------------------------------------------------------------- canonical JSON


def _box_to_dict(b: OrientedBox) -> dict:
    return {"cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h, "theta": b.theta}


def _box_from_dict(d: dict) -> OrientedBox:
    try:
        return OrientedBox(d["cx"], d["cy"], d["w"], d["h"], d["theta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad box: {exc}") from exc


def object_to_dict(obj: DiagramObject) -> dict:
    kp = None
    if obj.keypoints is not None:
        kp = {"start": list(obj.keypoints[0]), "end": list(obj.keypoints[1])}
    return {
        "id": obj.id,
        "class": obj.cls.value,
        "box": _box_to_dict(obj.box),
        "score": obj.score,
        "keypoints": kp,
    }


def object_from_dict(d: dict) -> DiagramObject:
    try:
        kp = d.get("keypoints")
        keypoints = None
        if kp is not None:
            keypoints = (tuple(map(float, kp["start"])), tuple(map(float, kp["end"])))
        return DiagramObject(
            id=int(d["id"]),
            cls=ObjectClass(d["class"]),
            box=_box_from_dict(d["box"]),
            score=float(d.get("score", 1.0)),
            keypoints=keypoints,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad object: {exc}") from exc


def text_to_dict(tb: TextBlock) -> dict:
    return {"id": tb.id, "box": _box_to_dict(tb.box), "content": tb.content}


def text_from_dict(d: dict) -> TextBlock:
    try:
        return TextBlock(id=int(d["id"]), box=_box_from_dict(d["box"]), content=str(d["content"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad text block: {exc}") from exc


def set_to_dict(s: AnnotationSet) -> dict:
    return {
        "diagram_id": s.diagram_id,
        "kind": s.kind.value,
        "width": s.width,
        "height": s.height,
        "objects": [object_to_dict(o) for o in s.objects],
        "texts": [text_to_dict(t) for t in s.texts],
    }


def set_from_dict(d: dict) -> AnnotationSet:
    try:
        return AnnotationSet(
            diagram_id=str(d["diagram_id"]),
            kind=DiagramKind(d["kind"]),
            width=float(d["width"]),
            height=float(d["height"]),
            objects=tuple(object_from_dict(o) for o in d["objects"]),
            texts=tuple(text_from_dict(t) for t in d["texts"]),
        )
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad annotation set: {exc}") from exc


def to_canonical_json(s: AnnotationSet) -> str:
    """Deterministic byte-stable serialization (sorted keys, no whitespace)."""
    return json.dumps(set_to_dict(s), sort_keys=True, separators=(",", ":"))


def from_json(text: str) -> AnnotationSet:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return set_from_dict(payload)
