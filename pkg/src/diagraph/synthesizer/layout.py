"""Geometric layout: place a topology on a canvas as drawable primitives.

The layout works in flow coordinates (v advances level by level, u runs
across a level) and maps to screen coordinates at emit time, so top-down
and left-right diagrams share one code path. Spacing follows a small set
of rules that keep ground truth unambiguous for the aggregator:

- anchors on a node edge and parallel routing tracks sit 16 apart, twice
  the endpoint snap radius;
- every bent connection runs drop / shelf / rise along tracks reserved in
  the inter-level gap, so free corner endpoints of different chains never
  come within snap range of each other or of an unrelated node or bus;
- level-skipping edges travel through side corridors outside the content;
- percentage labels are placed by search: a candidate position is accepted
  only when its nearest line primitive provably belongs to the labelled
  edge with margin, it stays clear of nodes and buses, and it keeps its
  distance from other labels.

Whenever the default reading order (taller read top-down, wider read left
to right) would misread an arrowless connection, the final segment gets an
arrowhead regardless of style.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from ..errors import LayoutError
from ..geometry import (
    OrientedBox,
    Point,
    enclosing_box,
    point_box_distance,
    segment_box,
    vertices_of,
)
from ..model import (
    LINE_THICKNESS,
    AnnotationSet,
    DiagramKind,
    DiagramObject,
    ObjectClass,
    TextBlock,
    Topology,
)
from .config import ResolvedStyle

ANCHOR_SPACING = 16.0
TRACK_SPACING = 16.0
TRACK_MARGIN = 12.0
NODE_GAP = 30.0
CORRIDOR_CLEARANCE = 24.0
CANVAS_MARGIN = 24.0
CHAR_W = 7.2
LINE_H = 15.0
LABEL_CHAR_W = 6.0
MAX_NAME_LINE = 16


def split_name(name: str) -> list[str]:
    """Break a long name into two lines at the space nearest its middle."""
    if len(name) <= MAX_NAME_LINE or " " not in name:
        return [name]
    mid = len(name) / 2
    cut = min(
        (i for i, ch in enumerate(name) if ch == " "),
        key=lambda i: (abs(i - mid), i),
    )
    return [name[:cut], name[cut + 1 :]]


@dataclass
class SceneNode:
    entity_id: int
    box: OrientedBox
    blocks: tuple[tuple[str, OrientedBox], ...]


@dataclass
class SceneLine:
    path: tuple  # ("poly", (p0, p1)) or ("quad", (p0, ctrl, p1))
    box: OrientedBox
    arrow: bool = False
    keypoints: tuple[Point, Point] | None = None


@dataclass
class SceneBus:
    box: OrientedBox
    p0: Point
    p1: Point


@dataclass
class SceneLabel:
    content: str
    box: OrientedBox


@dataclass
class Scene:
    diagram_id: str
    kind: DiagramKind
    width: float
    height: float
    style: ResolvedStyle
    nodes: list[SceneNode]
    lines: list[SceneLine]
    buses: list[SceneBus]
    labels: list[SceneLabel]


def _safe_reading(pp: Point, cc: Point) -> bool:
    """True when the arrowless reading order recovers parent pp, child cc."""
    dx = abs(pp[0] - cc[0])
    dy = abs(pp[1] - cc[1])
    if dy - dx >= 1.0 and pp[1] < cc[1]:
        return True
    return dx - dy >= 1.0 and pp[0] < cc[0]


def _bezier(p0: Point, c: Point, p1: Point, t: float) -> Point:
    s = 1.0 - t
    return (
        s * s * p0[0] + 2 * s * t * c[0] + t * t * p1[0],
        s * s * p0[1] + 2 * s * t * c[1] + t * t * p1[1],
    )


def layout_scene(
    topology: Topology,
    style: ResolvedStyle,
    rng: random.Random,
    diagram_id: str,
) -> Scene:
    """Place one topology. Raises LayoutError when a percentage label cannot
    be positioned unambiguously under the current style."""
    top_down = style.orientation == "top-down"

    def P(u: float, v: float) -> Point:
        return (u, v) if top_down else (v, u)

    names = dict(topology.entities)
    n = len(topology.entities)
    m = 1 + max(topology.levels.values())
    by_level: dict[int, list[int]] = {k: [] for k in range(m)}
    for ent in sorted(topology.levels):
        by_level[topology.levels[ent]].append(ent)
    edges = topology.edges
    groups = topology.bus_groups

    # ------------------------------------------------- connection planning
    edge_group: dict[int, int] = {}
    for gi, (ps, cs) in enumerate(groups):
        covered = {(p, c) for p in ps for c in cs}
        for ei, (p, c, _) in enumerate(edges):
            if (p, c) in covered:
                edge_group[ei] = gi

    out_conns: dict[int, list[tuple[str, int]]] = {e: [] for e in names}
    in_conns: dict[int, list[tuple[str, int]]] = {e: [] for e in names}
    for gi, (ps, cs) in enumerate(groups):
        for p in ps:
            out_conns[p].append(("bus", gi))
        for c in cs:
            in_conns[c].append(("bus", gi))
    for ei, (p, c, _) in enumerate(edges):
        if ei in edge_group:
            continue
        out_conns[p].append(("edge", ei))
        in_conns[c].append(("edge", ei))

    # ------------------------------------------------------- node sizing
    blocks: dict[int, list[str]] = {e: split_name(nm) for e, nm in topology.entities}
    cross_size: dict[int, float] = {}
    flow_size: dict[int, float] = {}
    for e in names:
        text_w = max(CHAR_W * len(line) for line in blocks[e]) + 16.0
        text_h = LINE_H * len(blocks[e]) + 13.0
        fan = max(len(out_conns[e]), len(in_conns[e]))
        anchor_need = ANCHOR_SPACING * (fan + 1)
        if top_down:
            cross_size[e] = max(text_w, anchor_need, 44.0)
            flow_size[e] = text_h
        else:
            cross_size[e] = max(text_h, anchor_need)
            flow_size[e] = max(text_w, 56.0)

    # ------------------------------------------- ordering and cross packing
    order: dict[int, int] = {}
    for k in range(m):
        if k == 0:
            row = list(by_level[0])
        else:
            parents_of: dict[int, list[int]] = {e: [] for e in by_level[k]}
            for p, c, _ in edges:
                if c in parents_of and topology.levels[p] == k - 1:
                    parents_of[c].append(p)
            def mean_parent(e: int) -> float:
                ps = parents_of[e]
                if not ps:
                    return float(order.get(e, 0))
                return sum(order[p] for p in ps) / len(ps)
            row = sorted(by_level[k], key=lambda e: (mean_parent(e), e))
        by_level[k] = row
        for i, e in enumerate(row):
            order[e] = i

    centers_u: dict[int, float] = {}
    row_width: dict[int, float] = {}
    for k in range(m):
        cursor = 0.0
        for i, e in enumerate(by_level[k]):
            if i:
                cursor += NODE_GAP + rng.uniform(0.0, 14.0)
            centers_u[e] = cursor + cross_size[e] / 2.0
            cursor += cross_size[e]
        row_width[k] = cursor
    content_w = max(row_width.values())
    for k in range(m):
        shift = (content_w - row_width[k]) / 2.0
        for e in by_level[k]:
            centers_u[e] += shift

    # ------------------------------------------------------ flow positions
    bus_gap: dict[int, list[int]] = {k: [] for k in range(m - 1)}
    for gi, (ps, cs) in enumerate(groups):
        bus_gap[topology.levels[cs[0]] - 1].append(gi)
    budget = [len(bus_gap[k]) for k in range(m - 1)]
    for ei, (p, c, _) in enumerate(edges):
        if ei in edge_group:
            continue
        a, b = topology.levels[p], topology.levels[c]
        if b == a + 1:
            budget[a] += 1
        else:
            budget[a] += 1
            budget[b - 1] += 1

    row_h = {k: max(flow_size[e] for e in by_level[k]) for k in range(m)}
    row_v: dict[int, float] = {}
    gap_top: dict[int, float] = {}
    gap_h: dict[int, float] = {}
    v = 0.0
    for k in range(m):
        row_v[k] = v
        v += row_h[k]
        if k < m - 1:
            gap_top[k] = v
            gap_h[k] = 2 * TRACK_MARGIN + TRACK_SPACING * max(1, budget[k]) + rng.uniform(0.0, 10.0)
            v += gap_h[k]

    def node_center(e: int) -> tuple[float, float]:
        k = topology.levels[e]
        return centers_u[e], row_v[k] + row_h[k] / 2.0

    def node_bottom(e: int) -> float:
        return node_center(e)[1] + flow_size[e] / 2.0

    def node_top(e: int) -> float:
        return node_center(e)[1] - flow_size[e] / 2.0

    # --------------------------------------------------- anchor positions
    def anchor_map(e: int, conns: list[tuple[str, int]], outgoing: bool) -> dict:
        items = []
        for key in conns:
            if key[0] == "edge":
                p, c, _ = edges[key[1]]
                target = centers_u[c if outgoing else p]
                tie = key[1]
            else:
                ps, cs = groups[key[1]]
                others = cs if outgoing else ps
                target = sum(centers_u[o] for o in others) / len(others)
                tie = 10_000 + key[1]
            items.append((target, tie, key))
        items.sort(key=lambda it: (it[0], it[1]))
        count = len(items)
        base = centers_u[e]
        return {
            key: base + (i - (count - 1) / 2.0) * ANCHOR_SPACING
            for i, (_, _, key) in enumerate(items)
        }

    out_anchor = {e: anchor_map(e, out_conns[e], True) for e in names}
    in_anchor = {e: anchor_map(e, in_conns[e], False) for e in names}

    # ------------------------------------------------------------ routing
    lines: list[SceneLine] = []
    buses: list[SceneBus] = []
    chain_lines: dict[int, list[int]] = {}
    owner_line: dict[int, int] = {}
    allowed_lines: dict[int, set[int]] = {}
    track_cursor = {k: 0 for k in range(m - 1)}

    def take_track(k: int) -> float:
        t = gap_top[k] + TRACK_MARGIN + TRACK_SPACING * track_cursor[k]
        track_cursor[k] += 1
        return t

    def add_segment(a: tuple[float, float], b: tuple[float, float], arrow: bool = False) -> int:
        pa, pb = P(*a), P(*b)
        box = segment_box(pa, pb, LINE_THICKNESS)
        kp = (pa, pb) if arrow else None
        lines.append(SceneLine(("poly", (pa, pb)), box, arrow, kp))
        return len(lines) - 1

    def add_curve(a: tuple[float, float], b: tuple[float, float], arrow: bool) -> int:
        p0, p1 = P(*a), P(*b)
        mx, my = (p0[0] + p1[0]) / 2.0, (p0[1] + p1[1]) / 2.0
        dx, dy = p1[0] - p0[0], p1[1] - p0[1]
        length = math.hypot(dx, dy)
        nx, ny = -dy / length, dx / length
        bow = (6.0 + 6.0 * style.curvature) * (1 if rng.random() < 0.5 else -1)
        ctrl = (mx + 2.0 * bow * nx, my + 2.0 * bow * ny)
        samples = [_bezier(p0, ctrl, p1, i / 16.0) for i in range(17)]
        box = enclosing_box(samples).inflated(2.0)
        kp = (p0, p1) if arrow else None
        lines.append(SceneLine(("quad", (p0, ctrl, p1)), box, arrow, kp))
        return len(lines) - 1

    # buses first, so the shared rails take the upper tracks of each gap
    trunk_line: dict[tuple[int, int], int] = {}
    stub_line: dict[tuple[int, int], int] = {}
    for gi, (ps, cs) in enumerate(groups):
        k = topology.levels[cs[0]] - 1
        t = take_track(k)
        anchors_p = {p: out_anchor[p][("bus", gi)] for p in ps}
        anchors_c = {c: in_anchor[c][("bus", gi)] for c in cs}
        span = list(anchors_p.values()) + list(anchors_c.values())
        lo, hi = min(span) - 8.0, max(span) + 8.0
        pa, pb = P(lo, t), P(hi, t)
        buses.append(SceneBus(segment_box(pa, pb, LINE_THICKNESS), pa, pb))
        for p in ps:
            au = anchors_p[p]
            trunk_line[(gi, p)] = add_segment((au, node_bottom(p)), (au, t - 2.0))
        for c in cs:
            ac = anchors_c[c]
            stub_line[(gi, c)] = add_segment(
                (ac, t + 2.0), (ac, node_top(c)), arrow=style.arrows
            )

    for ei, (p, c, _) in enumerate(edges):
        if ei in edge_group:
            gi = edge_group[ei]
            exclusive = (
                stub_line[(gi, c)] if len(groups[gi][0]) == 1 else trunk_line[(gi, p)]
            )
            owner_line[ei] = exclusive
            allowed_lines[ei] = {exclusive}
            continue
        a, b = topology.levels[p], topology.levels[c]
        ap = out_anchor[p][("edge", ei)]
        ac = in_anchor[c][("edge", ei)]
        pb, ct = node_bottom(p), node_top(c)
        du = abs(ap - ac)
        segs: list[int] = []
        if b == a + 1:
            if du < 0.5:
                segs.append(add_segment((ap, pb), (ac, ct)))
            elif du <= 24.0:
                if rng.random() < style.curve_probability:
                    arrow = style.arrows or not _safe_reading(P(ap, pb), P(ac, ct))
                    segs.append(add_curve((ap, pb), (ac, ct), arrow))
                else:
                    segs.append(add_segment((ap, pb), (ac, ct)))
            elif rng.random() < style.incline_probability:
                segs.append(add_segment((ap, pb), (ac, ct)))
            else:
                t = take_track(a)
                segs.append(add_segment((ap, pb), (ap, t)))
                segs.append(add_segment((ap, t), (ac, t)))
                segs.append(add_segment((ac, t), (ac, ct)))
        else:
            # level-skipping edge: out through a side corridor
            t1 = take_track(a)
            t2 = take_track(b - 1)
            left = sum(1 for e2 in range(ei) if e2 not in edge_group and
                       topology.levels[edges[e2][1]] - topology.levels[edges[e2][0]] > 1)
            content_lo = min(centers_u[e] - cross_size[e] / 2.0 for e in names)
            content_hi = max(centers_u[e] + cross_size[e] / 2.0 for e in names)
            if left % 2 == 0:
                cu = content_lo - CORRIDOR_CLEARANCE - TRACK_SPACING * (left // 2)
            else:
                cu = content_hi + CORRIDOR_CLEARANCE + TRACK_SPACING * (left // 2)
            segs.append(add_segment((ap, pb), (ap, t1)))
            segs.append(add_segment((ap, t1), (cu, t1)))
            segs.append(add_segment((cu, t1), (cu, t2)))
            segs.append(add_segment((cu, t2), (ac, t2)))
            segs.append(add_segment((ac, t2), (ac, ct)))

        # arrow the last segment whenever style asks for it or the plain
        # reading order would flip the edge
        last = lines[segs[-1]]
        tail, tip = (last.path[1][0], last.path[1][2]) if last.path[0] == "quad" else last.path[1]
        if not last.arrow:
            start = lines[segs[0]].path[1][0]
            if style.arrows or not _safe_reading(start, tip):
                lines[segs[-1]] = SceneLine(last.path, last.box, True, (tail, tip))

        chain_lines[ei] = segs
        owner_line[ei] = max(segs, key=lambda idx: _segment_length(lines[idx]))
        allowed_lines[ei] = set(segs)

    # ------------------------------------------------------------- nodes
    scene_nodes: list[SceneNode] = []
    for e in sorted(names):
        uc, vc = node_center(e)
        center = P(uc, vc)
        if top_down:
            box = OrientedBox(center[0], center[1], cross_size[e], flow_size[e])
        else:
            box = OrientedBox(center[0], center[1], flow_size[e], cross_size[e])
        lines_list = blocks[e]
        blk = []
        count = len(lines_list)
        for i, textline in enumerate(lines_list):
            by = center[1] + (i - (count - 1) / 2.0) * LINE_H
            bw = CHAR_W * len(textline) + 4.0
            blk.append((textline, OrientedBox(center[0], by, bw, 13.0)))
        scene_nodes.append(SceneNode(e, box, tuple(blk)))

    # ------------------------------------------------------------- labels
    labels: list[SceneLabel] = []
    placed_centers: list[Point] = []
    node_boxes = [nd.box for nd in scene_nodes]
    bus_boxes = [b.box for b in buses]
    for ei, (p, c, content) in enumerate(edges):
        if not content:
            continue
        box = _place_label(
            content,
            owner_line[ei],
            allowed_lines[ei],
            lines,
            node_boxes,
            bus_boxes,
            placed_centers,
        )
        if box is None:
            raise LayoutError(
                f"no unambiguous spot for label {content!r} on edge {p}->{c}"
            )
        placed_centers.append(box.center)
        labels.append(SceneLabel(content, box))

    scene = Scene(
        diagram_id=diagram_id,
        kind=topology.kind,
        width=0.0,
        height=0.0,
        style=style,
        nodes=scene_nodes,
        lines=lines,
        buses=buses,
        labels=labels,
    )
    _normalize_origin(scene)
    return scene


def _segment_length(ln: SceneLine) -> float:
    if ln.path[0] == "poly":
        (x0, y0), (x1, y1) = ln.path[1]
        return math.hypot(x1 - x0, y1 - y0)
    p0, _, p1 = ln.path[1]
    return math.hypot(p1[0] - p0[0], p1[1] - p0[1])


_LABEL_TS = (0.5, 0.38, 0.62, 0.3, 0.7, 0.22, 0.78, 0.1, 0.9)
_LABEL_OFFSETS = (6.0, 7.0)


def _place_label(
    content: str,
    owner_idx: int,
    allowed: set[int],
    lines: list[SceneLine],
    node_boxes: list[OrientedBox],
    bus_boxes: list[OrientedBox],
    placed: list[Point],
) -> OrientedBox | None:
    """First candidate position whose nearest line provably belongs to the
    labelled edge; None when the search fails."""
    ln = lines[owner_idx]
    if ln.path[0] == "poly":
        p0, p1 = ln.path[1]
    else:
        p0, _, p1 = ln.path[1]
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    length = math.hypot(dx, dy)
    nx, ny = -dy / length, dx / length
    w = LABEL_CHAR_W * len(content) + 4.0

    for t in _LABEL_TS:
        base = (p0[0] + dx * t, p0[1] + dy * t)
        for side in (1.0, -1.0):
            for off in _LABEL_OFFSETS:
                cx, cy = base[0] + nx * off * side, base[1] + ny * off * side
                d_allowed = None
                d_other = None
                for idx, other in enumerate(lines):
                    d = point_box_distance((cx, cy), other.box)
                    if idx in allowed:
                        if d_allowed is None or d < d_allowed:
                            d_allowed = d
                    elif d_other is None or d < d_other:
                        d_other = d
                if d_allowed is None:
                    continue
                if d_other is not None and d_other - d_allowed < 1.5:
                    continue
                if any(point_box_distance((cx, cy), nb) < 2.0 for nb in node_boxes):
                    continue
                if any(point_box_distance((cx, cy), bb) < 2.0 for bb in bus_boxes):
                    continue
                if any(math.hypot(cx - px, cy - py) < 14.0 for px, py in placed):
                    continue
                return OrientedBox(cx, cy, w, 12.0)
    return None


def _translate_box(b: OrientedBox, dx: float, dy: float) -> OrientedBox:
    return OrientedBox(b.cx + dx, b.cy + dy, b.w, b.h, b.theta)


def _normalize_origin(scene: Scene) -> None:
    """Shift everything into positive coordinates with a uniform margin."""
    xs: list[float] = []
    ys: list[float] = []
    for box in (
        [nd.box for nd in scene.nodes]
        + [ln.box for ln in scene.lines]
        + [b.box for b in scene.buses]
        + [lb.box for lb in scene.labels]
    ):
        for x, y in vertices_of(box):
            xs.append(x)
            ys.append(y)
    dx = CANVAS_MARGIN - min(xs)
    dy = CANVAS_MARGIN - min(ys)

    def tp(p: Point) -> Point:
        return (p[0] + dx, p[1] + dy)

    for nd in scene.nodes:
        nd.box = _translate_box(nd.box, dx, dy)
        nd.blocks = tuple((txt, _translate_box(b, dx, dy)) for txt, b in nd.blocks)
    for ln in scene.lines:
        if ln.path[0] == "poly":
            ln.path = ("poly", tuple(tp(p) for p in ln.path[1]))
        else:
            ln.path = ("quad", tuple(tp(p) for p in ln.path[1]))
        ln.box = _translate_box(ln.box, dx, dy)
        if ln.keypoints is not None:
            ln.keypoints = (tp(ln.keypoints[0]), tp(ln.keypoints[1]))
    for b in scene.buses:
        b.box = _translate_box(b.box, dx, dy)
        b.p0, b.p1 = tp(b.p0), tp(b.p1)
    for lb in scene.labels:
        lb.box = _translate_box(lb.box, dx, dy)
    scene.width = max(xs) + dx + CANVAS_MARGIN
    scene.height = max(ys) + dy + CANVAS_MARGIN


def scene_annotations(scene: Scene) -> AnnotationSet:
    """Ground-truth annotation set for a scene. Node object ids equal the
    topology entity ids; lines, buses, and text blocks follow."""
    objects: list[DiagramObject] = [
        DiagramObject(nd.entity_id, ObjectClass.NODE, nd.box) for nd in scene.nodes
    ]
    next_id = len(scene.nodes)
    for ln in scene.lines:
        objects.append(
            DiagramObject(next_id, ObjectClass.LINE, ln.box, 1.0, ln.keypoints)
        )
        next_id += 1
    for b in scene.buses:
        objects.append(DiagramObject(next_id, ObjectClass.BUS, b.box))
        next_id += 1
    texts: list[TextBlock] = []
    for nd in scene.nodes:
        for content, box in nd.blocks:
            texts.append(TextBlock(next_id, box, content))
            next_id += 1
    for lb in scene.labels:
        texts.append(TextBlock(next_id, lb.box, lb.content))
        next_id += 1
    return AnnotationSet(
        scene.diagram_id,
        scene.kind,
        scene.width,
        scene.height,
        tuple(objects),
        tuple(texts),
    )
