"""Oriented-rectangle primitives: conversions, overlap, suppression, distances.

Coordinates are diagram units with y growing downward (the SVG frame), so the
"clockwise" vertex order used throughout is clockwise on screen. All angles
are radians. Boxes are canonical under the long-side rule: after construction
``w >= h`` and ``theta`` lies in ``[-pi/4, 3*pi/4)``; a square additionally
folds its leftover quarter-turn symmetry into ``[-pi/4, pi/4)`` so equality
of parameters means equality of shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateGeometry, NonConvexInput

Point = tuple[float, float]
Quad = tuple[Point, Point, Point, Point]

_QUARTER_PI = math.pi / 4.0
_DEGENERATE_AREA = 1e-12
# Tolerances for recognizing an exact rectangle in box_from_quad. The angle
# bound is the contract; the side bound absorbs coordinate rounding at the
# 1e-6 level used by the DOTA writer.
_RECT_ANGLE_TOL = 1e-6
_RECT_SIDE_TOL = 1e-5
_CONTAINS_SLACK = 1e-9


@dataclass(frozen=True)
class OrientedBox:
    """Rotated rectangle (cx, cy, w, h, theta).

    The constructor normalizes: if w < h the sides are swapped and theta is
    advanced by pi/2, then theta wraps into [-pi/4, 3*pi/4).
    """

    cx: float
    cy: float
    w: float
    h: float
    theta: float = 0.0

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h", "theta"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"non-finite box field {name}={v!r}")
            object.__setattr__(self, name, v)
        if self.w <= 0.0 or self.h <= 0.0:
            raise ValueError(f"box sides must be positive, got {self.w} x {self.h}")
        w, h, theta = self.w, self.h, self.theta
        if w < h:
            w, h = h, w
            theta += math.pi / 2.0
        theta = (theta + _QUARTER_PI) % math.pi - _QUARTER_PI
        if w - h <= 1e-12 * max(1.0, w) and theta >= _QUARTER_PI:
            theta -= math.pi / 2.0
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "theta", theta)

    @property
    def center(self) -> Point:
        return (self.cx, self.cy)

    @property
    def area(self) -> float:
        return self.w * self.h

    def inflated(self, margin: float) -> "OrientedBox":
        """Same center and orientation, each side grown by 2*margin."""
        return OrientedBox(self.cx, self.cy, self.w + 2.0 * margin, self.h + 2.0 * margin, self.theta)


@dataclass(frozen=True)
class MidpointOffsetBox:
    """Regression-style box (x, y, w, h, dalpha, dbeta).

    (x, y, w, h) is the axis-aligned external rectangle; dalpha and dbeta
    displace the midpoints of its top and right sides to two vertices of the
    inscribed parallelogram. Offsets are bounded by half the respective side.
    """

    x: float
    y: float
    w: float
    h: float
    dalpha: float
    dbeta: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h", "dalpha", "dbeta"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"non-finite field {name}={v!r}")
            object.__setattr__(self, name, v)
        if self.w <= 0.0 or self.h <= 0.0:
            raise ValueError("external rectangle sides must be positive")
        if abs(self.dalpha) > self.w / 2.0 or abs(self.dbeta) > self.h / 2.0:
            raise ValueError("midpoint offsets exceed half the external side")


@dataclass(frozen=True)
class ScoredBox:
    """Detection candidate: a box, a confidence in [0, 1], and a class id."""

    box: OrientedBox
    score: float
    class_id: int

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score outside [0, 1]: {self.score}")


def vertices_of(box: OrientedBox) -> Quad:
    """Corner points, clockwise on screen, starting at the corner that is
    top-left when theta = 0."""
    c = math.cos(box.theta)
    s = math.sin(box.theta)
    hw = box.w / 2.0
    hh = box.h / 2.0
    out = []
    for lx, ly in ((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)):
        out.append((box.cx + lx * c - ly * s, box.cy + lx * s + ly * c))
    return (out[0], out[1], out[2], out[3])


def _shoelace(points: list[Point]) -> float:
    """Signed area; positive for counterclockwise order in raw coordinates."""
    total = 0.0
    n = len(points)
    for i in range(n):
        x1, y1 = points[i]
        x2, y2 = points[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return total / 2.0


def quad_area(q: Quad) -> float:
    return abs(_shoelace(list(q)))


def _convex_hull(points: list[Point]) -> list[Point]:
    """Monotone-chain hull, counterclockwise in raw coordinates."""
    pts = sorted(set(points))
    if len(pts) < 3:
        return pts

    def half(seq):
        out: list[Point] = []
        for p in seq:
            while len(out) >= 2:
                (x1, y1), (x2, y2) = out[-2], out[-1]
                if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return lower[:-1] + upper[:-1]


def _enclosing_box(points: list[Point]) -> OrientedBox:
    """Minimum-area oriented rectangle of a point set (calipers over hull edges).

    Internal helper: the public quad path goes through box_from_quad.
    """
    hull = _convex_hull(points)
    if len(hull) < 3:
        raise DegenerateGeometry("point set has no area")
    best = None
    n = len(hull)
    for i in range(n):
        x1, y1 = hull[i]
        x2, y2 = hull[(i + 1) % n]
        phi = math.atan2(y2 - y1, x2 - x1)
        c, s = math.cos(phi), math.sin(phi)
        us = [px * c + py * s for px, py in points]
        vs = [-px * s + py * c for px, py in points]
        du = max(us) - min(us)
        dv = max(vs) - min(vs)
        area = du * dv
        if best is None or area < best[0] - 1e-15:
            uc = (max(us) + min(us)) / 2.0
            vc = (max(vs) + min(vs)) / 2.0
            cx = uc * c - vc * s
            cy = uc * s + vc * c
            best = (area, cx, cy, du, dv, phi)
    assert best is not None
    _, cx, cy, du, dv, phi = best
    if du <= 0.0 or dv <= 0.0:
        raise DegenerateGeometry("enclosing rectangle collapsed to a segment")
    return OrientedBox(cx, cy, du, dv, phi)


def box_from_quad(q: Quad) -> OrientedBox:
    """Oriented box for a quad.

    An exact rectangle (opposite sides equal, right angles within 1e-6 rad)
    converts losslessly; anything else gets its minimum-area enclosing
    rectangle. Quads with area below 1e-12 are degenerate.
    """
    pts = list(q)
    if quad_area(q) < _DEGENERATE_AREA:
        raise DegenerateGeometry("quad area below 1e-12")
    sides = []
    for i in range(4):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % 4]
        sides.append((x2 - x1, y2 - y1))
    lens = [math.hypot(dx, dy) for dx, dy in sides]
    opposite_ok = (
        abs(lens[0] - lens[2]) <= _RECT_SIDE_TOL + 1e-9 * (lens[0] + lens[2])
        and abs(lens[1] - lens[3]) <= _RECT_SIDE_TOL + 1e-9 * (lens[1] + lens[3])
    )
    angles_ok = True
    for i in range(4):
        dx1, dy1 = sides[i]
        dx2, dy2 = sides[(i + 1) % 4]
        dot = dx1 * dx2 + dy1 * dy2
        if abs(dot) > _RECT_ANGLE_TOL * lens[i] * lens[(i + 1) % 4]:
            angles_ok = False
            break
    if opposite_ok and angles_ok:
        cx = sum(p[0] for p in pts) / 4.0
        cy = sum(p[1] for p in pts) / 4.0
        w = (lens[0] + lens[2]) / 2.0
        h = (lens[1] + lens[3]) / 2.0
        theta = math.atan2(sides[0][1], sides[0][0])
        return OrientedBox(cx, cy, w, h, theta)
    return _enclosing_box(pts)


def enclosing_box(points) -> OrientedBox:
    """Minimum-area oriented box around a point set (e.g. a sampled curve).

    Raises DegenerateGeometry when the points are collinear; pad with
    ``.inflated()`` if a positive thickness is needed afterwards.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise DegenerateGeometry("need at least three points")
    return _enclosing_box(pts)


def box_from_midpoint_offsets(m: MidpointOffsetBox) -> OrientedBox:
    """Decode a midpoint-offset parameterization into an oriented box.

    Builds the inscribed parallelogram
        v1 = (x + dalpha, y - h/2)   v2 = (x + w/2, y + dbeta)
        v3 = (x - dalpha, y + h/2)   v4 = (x - w/2, y - dbeta)
    then stretches the shorter diagonal about the center to the length of the
    longer one; the four resulting points are the corners of the box.
    """
    v1 = (m.x + m.dalpha, m.y - m.h / 2.0)
    v2 = (m.x + m.w / 2.0, m.y + m.dbeta)
    v3 = (m.x - m.dalpha, m.y + m.h / 2.0)
    v4 = (m.x - m.w / 2.0, m.y - m.dbeta)
    if quad_area((v1, v2, v3, v4)) < _DEGENERATE_AREA:
        raise DegenerateGeometry("parallelogram vertices are collinear")
    d13 = math.hypot(v1[0] - v3[0], v1[1] - v3[1])
    d24 = math.hypot(v2[0] - v4[0], v2[1] - v4[1])

    def stretch(p: Point, factor: float) -> Point:
        return (m.x + (p[0] - m.x) * factor, m.y + (p[1] - m.y) * factor)

    if d13 < d24:
        f = d24 / d13
        v1, v3 = stretch(v1, f), stretch(v3, f)
    elif d24 < d13:
        f = d13 / d24
        v2, v4 = stretch(v2, f), stretch(v4, f)
    w = math.hypot(v2[0] - v1[0], v2[1] - v1[1])
    h = math.hypot(v3[0] - v2[0], v3[1] - v2[1])
    theta = math.atan2(v2[1] - v1[1], v2[0] - v1[0])
    return OrientedBox(m.x, m.y, w, h, theta)


def _is_convex(q: Quad) -> bool:
    pts = list(q)
    sign = 0
    for i in range(4):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % 4]
        x3, y3 = pts[(i + 2) % 4]
        cross = (x2 - x1) * (y3 - y2) - (y2 - y1) * (x3 - x2)
        if abs(cross) < 1e-12:
            continue
        s = 1 if cross > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return True


def _clip(poly: list[Point], a: Point, b: Point) -> list[Point]:
    """Keep the part of poly on the left of the directed line a->b."""
    ex = b[0] - a[0]
    ey = b[1] - a[1]

    def inside(p: Point) -> bool:
        return ex * (p[1] - a[1]) - ey * (p[0] - a[0]) >= -1e-12

    out: list[Point] = []
    n = len(poly)
    for i in range(n):
        p1 = poly[i]
        p2 = poly[(i + 1) % n]
        in1, in2 = inside(p1), inside(p2)
        if in1:
            out.append(p1)
        if in1 != in2:
            dx = p2[0] - p1[0]
            dy = p2[1] - p1[1]
            denom = ex * dy - ey * dx
            if denom == 0.0:
                continue
            t = (ex * (a[1] - p1[1]) - ey * (a[0] - p1[0])) / denom
            out.append((p1[0] + t * dx, p1[1] + t * dy))
    return out


def convex_intersection_area(a: Quad, b: Quad) -> float:
    """Exact intersection area of two convex quads (Sutherland-Hodgman).

    Symmetric in its arguments; raises NonConvexInput for non-convex quads.
    """
    if not _is_convex(a):
        raise NonConvexInput("first quad is not convex")
    if not _is_convex(b):
        raise NonConvexInput("second quad is not convex")
    # canonical argument order makes the float result exactly symmetric
    if tuple(b) < tuple(a):
        a, b = b, a
    subject = list(a)
    if _shoelace(subject) < 0:
        subject.reverse()
    clip_poly = list(b)
    if _shoelace(clip_poly) < 0:
        clip_poly.reverse()
    poly = subject
    n = len(clip_poly)
    for i in range(n):
        poly = _clip(poly, clip_poly[i], clip_poly[(i + 1) % n])
        if len(poly) < 3:
            return 0.0
    return abs(_shoelace(poly))


def rotated_iou(a: OrientedBox, b: OrientedBox) -> float:
    """Intersection over union of two oriented boxes, in [0, 1]."""
    ka = (a.cx, a.cy, a.w, a.h, a.theta)
    kb = (b.cx, b.cy, b.w, b.h, b.theta)
    if kb < ka:
        a, b = b, a
    inter = convex_intersection_area(vertices_of(a), vertices_of(b))
    union = a.area + b.area - inter
    if union <= 0.0:
        return 1.0
    return min(1.0, max(0.0, inter / union))


def rotated_nms(candidates: list[ScoredBox], iou_threshold: float) -> list[int]:
    """Greedy per-class suppression.

    Scans by descending score (ties broken toward the lower input index) and
    removes any same-class box whose IoU with a kept box exceeds the
    threshold strictly. Returns kept indices in ascending order.
    """
    if not (0.0 < iou_threshold < 1.0):
        raise ValueError(f"iou_threshold must be in (0, 1), got {iou_threshold}")
    order = sorted(range(len(candidates)), key=lambda i: (-candidates[i].score, i))
    removed = [False] * len(candidates)
    kept: list[int] = []
    for pos, i in enumerate(order):
        if removed[i]:
            continue
        kept.append(i)
        ci = candidates[i]
        for j in order[pos + 1 :]:
            if removed[j]:
                continue
            cj = candidates[j]
            if cj.class_id != ci.class_id:
                continue
            if rotated_iou(ci.box, cj.box) > iou_threshold:
                removed[j] = True
    return sorted(kept)


def point_box_distance(p: Point, box: OrientedBox) -> float:
    """Euclidean distance from a point to the box (0 inside or on the edge)."""
    c = math.cos(box.theta)
    s = math.sin(box.theta)
    dx = p[0] - box.cx
    dy = p[1] - box.cy
    lx = dx * c + dy * s
    ly = -dx * s + dy * c
    ox = max(abs(lx) - box.w / 2.0, 0.0)
    oy = max(abs(ly) - box.h / 2.0, 0.0)
    return math.hypot(ox, oy)


def contains_point(box: OrientedBox, p: Point) -> bool:
    """Point-in-box test with 1e-9 slack so edges count as inside."""
    c = math.cos(box.theta)
    s = math.sin(box.theta)
    dx = p[0] - box.cx
    dy = p[1] - box.cy
    lx = dx * c + dy * s
    ly = -dx * s + dy * c
    return abs(lx) <= box.w / 2.0 + _CONTAINS_SLACK and abs(ly) <= box.h / 2.0 + _CONTAINS_SLACK


def segment_box(p0: Point, p1: Point, thickness: float = 4.0) -> OrientedBox:
    """Oriented box covering a segment, at least ``thickness`` units thick."""
    dx = p1[0] - p0[0]
    dy = p1[1] - p0[1]
    length = math.hypot(dx, dy)
    if length < 1e-9:
        raise DegenerateGeometry("segment endpoints coincide")
    return OrientedBox(
        (p0[0] + p1[0]) / 2.0,
        (p0[1] + p1[1]) / 2.0,
        max(length, thickness),
        thickness,
        math.atan2(dy, dx),
    )


def box_endpoints(box: OrientedBox) -> tuple[Point, Point]:
    """Midpoints of the two short sides: the endpoint proxy for line boxes."""
    c = math.cos(box.theta)
    s = math.sin(box.theta)
    hw = box.w / 2.0
    return (
        (box.cx - hw * c, box.cy - hw * s),
        (box.cx + hw * c, box.cy + hw * s),
    )
