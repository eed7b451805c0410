"""Diagram recognition: from annotated primitives to relation tuples.

Aggregation walks the objects of one diagram. Text blocks attach to the
node that contains them (names, top block first) or, when they parse as a
percentage, to the nearest line primitive. Line segments clip together into
chains wherever two endpoints meet within the snap radius; chains terminate
at nodes or buses. A node-to-node chain yields one relation, a bus junction
yields the cross product of its parent side and its child side.

Direction comes from the arrowhead when a chain has one (the end keypoint
sits at the child). Arrowless chains fall back to reading order: taller
chains read top to bottom, wider ones left to right. Arrowless bus branches
take their side from the bus axis: above a horizontal bus (or left of a
vertical one) is the parent side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import (
    OrientedBox,
    Point,
    box_endpoints,
    contains_point,
    point_box_distance,
)
from .model import (
    SNAP_RADIUS,
    AnnotationSet,
    DiagramKind,
    DiagramObject,
    ObjectClass,
    RelationTuple,
    TextBlock,
    parse_percentage,
    tuple_sort_key,
)


@dataclass
class Diagnostics:
    """What the aggregator could not account for. All lists hold ids."""

    dangling_endpoints: list[tuple[int, Point]] = field(default_factory=list)
    unattached_texts: list[int] = field(default_factory=list)
    duplicate_labels: list[tuple[int, int]] = field(default_factory=list)
    unnamed_nodes: list[int] = field(default_factory=list)
    self_loops: list[tuple[int, ...]] = field(default_factory=list)
    overconnected_chains: list[tuple[int, ...]] = field(default_factory=list)
    bus_to_bus_chains: list[tuple[int, ...]] = field(default_factory=list)
    one_sided_buses: list[int] = field(default_factory=list)
    many_to_many_buses: list[int] = field(default_factory=list)

    def has_issues(self) -> bool:
        return any(
            (
                self.dangling_endpoints,
                self.unattached_texts,
                self.duplicate_labels,
                self.unnamed_nodes,
                self.self_loops,
                self.overconnected_chains,
                self.bus_to_bus_chains,
                self.one_sided_buses,
                self.many_to_many_buses,
            )
        )

    def to_dict(self) -> dict:
        return {
            "dangling_endpoints": [[i, list(p)] for i, p in self.dangling_endpoints],
            "unattached_texts": list(self.unattached_texts),
            "duplicate_labels": [list(t) for t in self.duplicate_labels],
            "unnamed_nodes": list(self.unnamed_nodes),
            "self_loops": [list(t) for t in self.self_loops],
            "overconnected_chains": [list(t) for t in self.overconnected_chains],
            "bus_to_bus_chains": [list(t) for t in self.bus_to_bus_chains],
            "one_sided_buses": list(self.one_sided_buses),
            "many_to_many_buses": list(self.many_to_many_buses),
        }


@dataclass(frozen=True)
class RecognizedEdge:
    """One directed connection between nodes, before naming."""

    parent_id: int
    child_id: int
    percentage: float | None
    lines: tuple[int, ...]
    via_bus: int | None = None


@dataclass
class RecognitionResult:
    kind: DiagramKind
    names: dict[int, str]
    edges: list[RecognizedEdge]
    tuples: list[RelationTuple]
    diagnostics: Diagnostics


def endpoints_of(obj: DiagramObject) -> tuple[Point, Point]:
    """A line's endpoints: its keypoints when arrowed, else the midpoints
    of the box's short sides."""
    if obj.keypoints is not None:
        return obj.keypoints
    return box_endpoints(obj.box)


def attach_text(
    objects: tuple[DiagramObject, ...],
    texts: tuple[TextBlock, ...],
    kind: DiagramKind,
) -> tuple[dict[int, str], dict[int, tuple[int, float]], Diagnostics]:
    """Assign text blocks to primitives.

    Returns (names, labels, diagnostics) where names maps node id to its
    joined name and labels maps line id to (text id, percentage value).
    A block counts as part of a name when its center lies inside a node box;
    stacked blocks join top to bottom with single spaces. Remaining blocks
    that parse as percentages go to the nearest line (ownership only); the
    rest are reported unattached.
    """
    diags = Diagnostics()
    nodes = [o for o in objects if o.cls is ObjectClass.NODE]
    lines = [o for o in objects if o.cls is ObjectClass.LINE]

    blocks_by_node: dict[int, list[TextBlock]] = {}
    loose: list[TextBlock] = []
    for tb in texts:
        center = tb.box.center
        homes = [n for n in nodes if contains_point(n.box, center)]
        if homes:
            # overlapping nodes: the most specific (smallest) one wins
            home = min(homes, key=lambda n: (n.box.area, n.id))
            blocks_by_node.setdefault(home.id, []).append(tb)
        else:
            loose.append(tb)

    names: dict[int, str] = {}
    for node_id, blocks in blocks_by_node.items():
        blocks.sort(key=lambda b: (b.box.cy, b.box.cx, b.id))
        names[node_id] = " ".join(b.content.strip() for b in blocks)

    labels: dict[int, tuple[int, float]] = {}
    for tb in sorted(loose, key=lambda b: b.id):
        value = parse_percentage(tb.content) if kind is DiagramKind.OWNERSHIP else None
        if value is None or not lines:
            diags.unattached_texts.append(tb.id)
            continue
        center = tb.box.center
        best = min(
            lines,
            key=lambda ln: (point_box_distance(center, ln.box), ln.box.area, ln.id),
        )
        if best.id in labels:
            diags.duplicate_labels.append((best.id, tb.id))
        else:
            labels[best.id] = (tb.id, value)
    return names, labels, diags


class _UnionFind:
    def __init__(self, ids):
        self.parent = {i: i for i in ids}

    def find(self, i):
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass(frozen=True)
class _Attachment:
    line_id: int
    target_cls: ObjectClass
    target_id: int
    point: Point


@dataclass
class Chain:
    """A maximal run of line segments joined endpoint to endpoint."""

    lines: tuple[int, ...]
    attachments: tuple[_Attachment, ...]
    dangling: tuple[tuple[int, Point], ...]


def build_chains(objects: tuple[DiagramObject, ...]) -> list[Chain]:
    """Group line segments into chains and record what each chain touches.

    Every endpoint is resolved once: to the nearest node or bus within the
    snap radius (nodes win ties), else to the nearest free endpoint of
    another segment, else it dangles. Chains never continue through a node
    or a bus.
    """
    lines = [o for o in objects if o.cls is ObjectClass.LINE]
    anchors = [o for o in objects if o.cls in (ObjectClass.NODE, ObjectClass.BUS)]
    ends: dict[tuple[int, int], Point] = {}
    attach: dict[tuple[int, int], _Attachment | None] = {}
    for ln in lines:
        for idx, p in enumerate(endpoints_of(ln)):
            ends[(ln.id, idx)] = p
            best = None
            best_key = None
            for a in anchors:
                d = point_box_distance(p, a.box)
                if d > SNAP_RADIUS:
                    continue
                key = (d, 0 if a.cls is ObjectClass.NODE else 1, a.id)
                if best_key is None or key < best_key:
                    best, best_key = a, key
            attach[(ln.id, idx)] = (
                _Attachment(ln.id, best.cls, best.id, p) if best is not None else None
            )

    uf = _UnionFind([ln.id for ln in lines])
    free = [k for k, v in attach.items() if v is None]
    joined: set[tuple[int, int]] = set()
    for i, ka in enumerate(free):
        pa = ends[ka]
        for kb in free[i + 1 :]:
            if ka[0] == kb[0]:
                continue
            pb = ends[kb]
            if math.hypot(pa[0] - pb[0], pa[1] - pb[1]) <= SNAP_RADIUS:
                uf.union(ka[0], kb[0])
                joined.add(ka)
                joined.add(kb)

    groups: dict[int, list[int]] = {}
    for ln in lines:
        groups.setdefault(uf.find(ln.id), []).append(ln.id)

    chains = []
    for members in groups.values():
        members.sort()
        atts = []
        dangling = []
        for lid in members:
            for idx in (0, 1):
                a = attach[(lid, idx)]
                if a is not None:
                    atts.append(a)
                elif (lid, idx) not in joined:
                    dangling.append((lid, ends[(lid, idx)]))
        atts.sort(key=lambda a: (a.line_id, a.target_id))
        chains.append(Chain(tuple(members), tuple(atts), tuple(dangling)))
    chains.sort(key=lambda c: c.lines)
    return chains


def _chain_arrow(chain: Chain, by_id: dict[int, DiagramObject]) -> Point | None:
    """End keypoint of the chain's lowest-id arrowed segment, if any."""
    for lid in chain.lines:
        kp = by_id[lid].keypoints
        if kp is not None:
            return kp[1]
    return None


def _chain_label(chain: Chain, labels: dict[int, tuple[int, float]]) -> float | None:
    for lid in chain.lines:
        if lid in labels:
            return labels[lid][1]
    return None


def _bus_is_horizontal(box: OrientedBox) -> bool:
    return abs(math.cos(box.theta)) >= abs(math.sin(box.theta))


def extract_edges(
    objects: tuple[DiagramObject, ...],
    labels: dict[int, tuple[int, float]],
) -> tuple[list[RecognizedEdge], Diagnostics]:
    """Turn chains into directed node-to-node edges."""
    diags = Diagnostics()
    by_id = {o.id: o for o in objects}
    chains = build_chains(objects)

    edges: list[RecognizedEdge] = []
    branches_by_bus: dict[int, list[tuple[Chain, _Attachment, _Attachment]]] = {}

    for chain in chains:
        for item in chain.dangling:
            diags.dangling_endpoints.append(item)
        targets = {(a.target_cls, a.target_id) for a in chain.attachments}
        if len(targets) < 2:
            if len(targets) == 1 and len(chain.attachments) >= 2:
                diags.self_loops.append(chain.lines)
            elif not chain.dangling:
                # closed run of segments touching nothing
                diags.self_loops.append(chain.lines)
            continue
        if len(targets) > 2:
            diags.overconnected_chains.append(chain.lines)
            continue
        (ca, cb) = sorted(targets, key=lambda t: (t[0].value, t[1]))
        att_a = next(a for a in chain.attachments if (a.target_cls, a.target_id) == ca)
        att_b = next(a for a in chain.attachments if (a.target_cls, a.target_id) == cb)
        kinds = (ca[0], cb[0])
        if kinds == (ObjectClass.NODE, ObjectClass.NODE):
            edges.append(_direct_edge(chain, att_a, att_b, by_id, labels))
        elif ObjectClass.BUS in kinds:
            if kinds == (ObjectClass.BUS, ObjectClass.BUS):
                diags.bus_to_bus_chains.append(chain.lines)
                continue
            if ca[0] is ObjectClass.BUS:
                bus_att, node_att = att_a, att_b
            else:
                bus_att, node_att = att_b, att_a
            branches_by_bus.setdefault(bus_att.target_id, []).append(
                (chain, node_att, bus_att)
            )

    for bus_id in sorted(branches_by_bus):
        bus = by_id[bus_id]
        horizontal = _bus_is_horizontal(bus.box)
        parents: list[tuple[Chain, _Attachment]] = []
        children: list[tuple[Chain, _Attachment]] = []
        for chain, node_att, bus_att in branches_by_bus[bus_id]:
            side = None
            arrow_end = _chain_arrow(chain, by_id)
            if arrow_end is not None:
                d_node = point_box_distance(arrow_end, by_id[node_att.target_id].box)
                d_bus = point_box_distance(arrow_end, bus.box)
                if d_node < d_bus - 1e-9:
                    side = "child"
                elif d_bus < d_node - 1e-9:
                    side = "parent"
            if side is None:
                if horizontal:
                    side = "parent" if bus_att.point[1] < bus.box.cy else "child"
                else:
                    side = "parent" if bus_att.point[0] < bus.box.cx else "child"
            (parents if side == "parent" else children).append((chain, node_att))
        if not parents or not children:
            diags.one_sided_buses.append(bus_id)
            continue
        if len(parents) > 1 and len(children) > 1:
            diags.many_to_many_buses.append(bus_id)
        for p_chain, p_att in parents:
            for c_chain, c_att in children:
                pct = _chain_label(c_chain, labels)
                if pct is None:
                    pct = _chain_label(p_chain, labels)
                edges.append(
                    RecognizedEdge(
                        p_att.target_id,
                        c_att.target_id,
                        pct,
                        tuple(sorted(set(p_chain.lines) | set(c_chain.lines))),
                        via_bus=bus_id,
                    )
                )

    edges.sort(key=lambda e: (e.parent_id, e.child_id, e.lines))
    return edges, diags


def _direct_edge(
    chain: Chain,
    att_a: _Attachment,
    att_b: _Attachment,
    by_id: dict[int, DiagramObject],
    labels: dict[int, tuple[int, float]],
) -> RecognizedEdge:
    arrow_end = _chain_arrow(chain, by_id)
    parent_att, child_att = None, None
    if arrow_end is not None:
        d_a = point_box_distance(arrow_end, by_id[att_a.target_id].box)
        d_b = point_box_distance(arrow_end, by_id[att_b.target_id].box)
        if d_a < d_b - 1e-9:
            parent_att, child_att = att_b, att_a
        elif d_b < d_a - 1e-9:
            parent_att, child_att = att_a, att_b
    if parent_att is None:
        dx = abs(att_a.point[0] - att_b.point[0])
        dy = abs(att_a.point[1] - att_b.point[1])
        if dy >= dx:
            def key(att: _Attachment):
                node = by_id[att.target_id]
                return (att.point[1], node.box.cy, node.id)
        else:
            def key(att: _Attachment):
                node = by_id[att.target_id]
                return (att.point[0], node.box.cx, node.id)
        parent_att, child_att = sorted((att_a, att_b), key=key)
    return RecognizedEdge(
        parent_att.target_id,
        child_att.target_id,
        _chain_label(chain, labels),
        chain.lines,
    )


def recognize(s: AnnotationSet) -> RecognitionResult:
    """Full aggregation of one annotated diagram into relation tuples."""
    names, labels, text_diags = attach_text(s.objects, s.texts, s.kind)
    edges, diags = extract_edges(s.objects, labels)
    diags.unattached_texts = text_diags.unattached_texts
    diags.duplicate_labels = text_diags.duplicate_labels

    tuples = set()
    unnamed: set[int] = set()
    for e in edges:
        p_name = names.get(e.parent_id)
        c_name = names.get(e.child_id)
        if not p_name or not c_name:
            for node_id, name in ((e.parent_id, p_name), (e.child_id, c_name)):
                if not name:
                    unnamed.add(node_id)
            continue
        pct = e.percentage if s.kind is DiagramKind.OWNERSHIP else None
        tuples.add(RelationTuple(s.kind, p_name, c_name, pct))
    diags.unnamed_nodes = sorted(unnamed)
    return RecognitionResult(s.kind, names, edges, sorted(tuples, key=tuple_sort_key), diags)
