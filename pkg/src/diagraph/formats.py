"""Interchange formats: DOTA text, COCO JSON, detector output JSON.

DOTA is the training-data format: one line per object, eight vertex
coordinates at six decimals, a category, and a difficulty flag. DOTA cannot
carry keypoints, text blocks, the diagram kind, or the canvas size, so a
sidecar JSON travels with each file; confidences are not part of the format
and read back as ground-truth 1.0.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .errors import ParseError
from .geometry import OrientedBox, box_from_quad, quad_area, vertices_of
from .model import (
    AnnotationSet,
    DiagramKind,
    DiagramObject,
    ObjectClass,
    TextBlock,
    text_from_dict,
    text_to_dict,
)

COCO_CATEGORIES = {ObjectClass.NODE: 1, ObjectClass.LINE: 2, ObjectClass.BUS: 3}
_CLASS_BY_CATEGORY = {v: k for k, v in COCO_CATEGORIES.items()}
SCALED_LONG_SIDE = 1024.0


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def write_dota(s: AnnotationSet) -> tuple[str, dict]:
    """Render an annotation set as (dota_text, sidecar_dict).

    Lines follow object id order; the sidecar holds everything DOTA cannot:
    diagram identity, kind, canvas size, object ids, keypoints, text blocks.
    """
    objects = sorted(s.objects, key=lambda o: o.id)
    lines = []
    keypoints = {}
    for obj in objects:
        quad = vertices_of(obj.box)
        coords = " ".join(_fmt(c) for p in quad for c in p)
        lines.append(f"{coords} {obj.cls.value} 0")
        if obj.keypoints is not None:
            (sx, sy), (ex, ey) = obj.keypoints
            keypoints[str(obj.id)] = [sx, sy, ex, ey]
    sidecar = {
        "diagram_id": s.diagram_id,
        "kind": s.kind.value,
        "width": s.width,
        "height": s.height,
        "object_ids": [o.id for o in objects],
        "keypoints": keypoints,
        "texts": [text_to_dict(t) for t in sorted(s.texts, key=lambda t: t.id)],
    }
    return "\n".join(lines) + ("\n" if lines else ""), sidecar


def read_dota(text: str, sidecar: dict) -> AnnotationSet:
    """Parse DOTA text plus its sidecar back into an annotation set."""
    try:
        diagram_id = str(sidecar["diagram_id"])
        kind = DiagramKind(sidecar["kind"])
        width = float(sidecar["width"])
        height = float(sidecar["height"])
        object_ids = [int(i) for i in sidecar["object_ids"]]
        kp_map = {int(k): v for k, v in sidecar.get("keypoints", {}).items()}
        texts = tuple(text_from_dict(t) for t in sidecar.get("texts", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad sidecar: {exc}") from exc

    rows = [ln for ln in text.splitlines() if ln.strip()]
    if len(rows) != len(object_ids):
        raise ParseError(
            f"sidecar lists {len(object_ids)} objects but file has {len(rows)} lines"
        )
    objects = []
    for lineno, (row, obj_id) in enumerate(zip(rows, object_ids), start=1):
        parts = row.split()
        if len(parts) != 10:
            raise ParseError(f"expected 10 fields, got {len(parts)}", line=lineno)
        try:
            vals = [float(x) for x in parts[:8]]
        except ValueError as exc:
            raise ParseError(f"bad coordinate: {exc}", line=lineno) from exc
        try:
            cls = ObjectClass(parts[8])
        except ValueError as exc:
            raise ParseError(f"unknown category {parts[8]!r}", line=lineno) from exc
        quad = tuple((vals[i], vals[i + 1]) for i in range(0, 8, 2))
        box = box_from_quad(quad)
        kp = kp_map.get(obj_id)
        keypoints = None
        if kp is not None:
            keypoints = ((float(kp[0]), float(kp[1])), (float(kp[2]), float(kp[3])))
        objects.append(DiagramObject(obj_id, cls, box, 1.0, keypoints))
    return AnnotationSet(diagram_id, kind, width, height, tuple(objects), texts)


def write_dota_files(s: AnnotationSet, dota_path: Path) -> Path:
    """Write <stem>.txt and the <stem>.json sidecar; returns the sidecar path."""
    text, sidecar = write_dota(s)
    dota_path = Path(dota_path)
    sidecar_path = dota_path.with_suffix(".json")
    dota_path.write_text(text, encoding="utf-8")
    sidecar_path.write_text(
        json.dumps(sidecar, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )
    return sidecar_path


def read_dota_files(dota_path: Path) -> AnnotationSet:
    dota_path = Path(dota_path)
    sidecar_path = dota_path.with_suffix(".json")
    try:
        text = dota_path.read_text(encoding="utf-8")
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read: {exc}", path=str(dota_path)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad sidecar JSON: {exc}", path=str(sidecar_path)) from exc
    return read_dota(text, sidecar)


# ----------------------------------------------------------------- COCO


def dota_to_coco(sets: list[AnnotationSet]) -> dict:
    """Bundle annotation sets as one COCO document.

    Image ids and annotation ids are 1-based and sequential. Beyond the
    standard fields each image carries diagram_id, kind, and its text blocks
    so the conversion loses nothing on the way back.
    """
    images = []
    annotations = []
    ann_id = 1
    for img_id, s in enumerate(sets, start=1):
        images.append(
            {
                "id": img_id,
                "file_name": f"{s.diagram_id}.svg",
                "width": s.width,
                "height": s.height,
                "diagram_id": s.diagram_id,
                "kind": s.kind.value,
                "texts": [text_to_dict(t) for t in s.texts],
            }
        )
        for obj in sorted(s.objects, key=lambda o: o.id):
            quad = vertices_of(obj.box)
            seg = [c for p in quad for c in p]
            xs = seg[0::2]
            ys = seg[1::2]
            entry = {
                "id": ann_id,
                "image_id": img_id,
                "category_id": COCO_CATEGORIES[obj.cls],
                "segmentation": [seg],
                "bbox": [min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys)],
                "area": quad_area(quad),
                "iscrowd": 0,
                "object_id": obj.id,
            }
            if obj.keypoints is not None:
                (sx, sy), (ex, ey) = obj.keypoints
                entry["keypoints"] = [sx, sy, 2, ex, ey, 2]
                entry["num_keypoints"] = 2
            annotations.append(entry)
            ann_id += 1
    return {
        "images": images,
        "annotations": annotations,
        "categories": [
            {"id": cid, "name": cls.value} for cls, cid in sorted(COCO_CATEGORIES.items(), key=lambda kv: kv[1])
        ],
    }


def coco_to_dota(doc: dict) -> list[AnnotationSet]:
    """Invert dota_to_coco. Raises ParseError for missing or non-quad polygons."""
    try:
        images = {img["id"]: img for img in doc["images"]}
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad COCO document: {exc}") from exc
    by_image: dict[int, list[DiagramObject]] = {img_id: [] for img_id in images}
    for ann in doc.get("annotations", []):
        seg = ann.get("segmentation")
        if not seg:
            raise ParseError(f"annotation {ann.get('id')} has no segmentation")
        poly = seg[0]
        if len(poly) != 8:
            raise ParseError(
                f"annotation {ann.get('id')} polygon has {len(poly)} values, expected 8"
            )
        try:
            cls = _CLASS_BY_CATEGORY[ann["category_id"]]
        except KeyError as exc:
            raise ParseError(f"unknown category_id {ann.get('category_id')!r}") from exc
        quad = tuple((float(poly[i]), float(poly[i + 1])) for i in range(0, 8, 2))
        keypoints = None
        kp = ann.get("keypoints")
        if kp:
            if len(kp) != 6:
                raise ParseError(f"annotation {ann.get('id')} keypoints need 6 values")
            keypoints = ((float(kp[0]), float(kp[1])), (float(kp[3]), float(kp[4])))
        obj_id = int(ann.get("object_id", ann["id"]))
        by_image[ann["image_id"]].append(
            DiagramObject(obj_id, cls, box_from_quad(quad), 1.0, keypoints)
        )
    out = []
    for img_id in sorted(images):
        img = images[img_id]
        diagram_id = str(img.get("diagram_id") or Path(img["file_name"]).stem)
        out.append(
            AnnotationSet(
                diagram_id=diagram_id,
                kind=DiagramKind(img.get("kind", "ownership")),
                width=float(img["width"]),
                height=float(img["height"]),
                objects=tuple(sorted(by_image[img_id], key=lambda o: o.id)),
                texts=tuple(text_from_dict(t) for t in img.get("texts", [])),
            )
        )
    return out


# ------------------------------------------------------------- detections


def detection_scale(canvas: tuple[float, float], coordinate_space: str) -> float:
    """Multiplier that maps detection coordinates into native canvas units."""
    if coordinate_space == "native":
        return 1.0
    if coordinate_space == "scaled-1024":
        return max(canvas[0], canvas[1]) / SCALED_LONG_SIDE
    raise ParseError(f"unknown coordinate_space {coordinate_space!r}")


def read_detections(doc: dict, canvas: tuple[float, float]) -> list[DiagramObject]:
    """Load detector output, rescaling into native canvas units.

    Detections come either as an oriented box [cx, cy, w, h, theta] or as a
    quad of eight floats; scores stay as given, ids default to list order.
    """
    try:
        dets = doc["detections"]
        space = doc.get("coordinate_space", "native")
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad detection file: {exc}") from exc
    factor = detection_scale(canvas, space)
    out = []
    for idx, det in enumerate(dets):
        try:
            cls = ObjectClass(det["class"])
            score = float(det["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"detection {idx}: {exc}") from exc
        if "obb" in det:
            cx, cy, w, h, theta = (float(v) for v in det["obb"])
            box = OrientedBox(cx * factor, cy * factor, w * factor, h * factor, theta)
        elif "quad" in det:
            vals = [float(v) * factor for v in det["quad"]]
            if len(vals) != 8:
                raise ParseError(f"detection {idx}: quad needs 8 values")
            box = box_from_quad(tuple((vals[i], vals[i + 1]) for i in range(0, 8, 2)))
        else:
            raise ParseError(f"detection {idx}: neither obb nor quad present")
        keypoints = None
        kp = det.get("keypoints")
        if kp is not None:
            keypoints = (
                (float(kp["start"][0]) * factor, float(kp["start"][1]) * factor),
                (float(kp["end"][0]) * factor, float(kp["end"][1]) * factor),
            )
        out.append(DiagramObject(int(det.get("id", idx)), cls, box, score, keypoints))
    return out


def detection_texts(doc: dict, canvas: tuple[float, float]) -> list[TextBlock]:
    """Text blocks embedded in a detection file (optional extension), rescaled."""
    factor = detection_scale(canvas, doc.get("coordinate_space", "native"))
    out = []
    for t in doc.get("texts", []):
        tb = text_from_dict(t)
        if factor != 1.0:
            b = tb.box
            tb = TextBlock(
                tb.id,
                OrientedBox(b.cx * factor, b.cy * factor, b.w * factor, b.h * factor, b.theta),
                tb.content,
            )
        out.append(tb)
    return out


def to_detection_file(
    s: AnnotationSet, coordinate_space: str = "native", include_texts: bool = True
) -> dict:
    """Render an annotation set in detector-output shape."""
    factor = detection_scale((s.width, s.height), coordinate_space)
    inv = 1.0 / factor
    dets = []
    for obj in sorted(s.objects, key=lambda o: o.id):
        b = obj.box
        det = {
            "id": obj.id,
            "class": obj.cls.value,
            "obb": [b.cx * inv, b.cy * inv, b.w * inv, b.h * inv, b.theta],
            "score": obj.score,
        }
        if obj.keypoints is not None:
            det["keypoints"] = {
                "start": [obj.keypoints[0][0] * inv, obj.keypoints[0][1] * inv],
                "end": [obj.keypoints[1][0] * inv, obj.keypoints[1][1] * inv],
            }
        dets.append(det)
    doc = {
        "diagram_id": s.diagram_id,
        "kind": s.kind.value,
        "image_size": [s.width * inv, s.height * inv],
        "coordinate_space": coordinate_space,
        "detections": dets,
    }
    if include_texts:
        texts = []
        for t in sorted(s.texts, key=lambda t: t.id):
            b = t.box
            texts.append(
                {
                    "id": t.id,
                    "box": {
                        "cx": b.cx * inv,
                        "cy": b.cy * inv,
                        "w": b.w * inv,
                        "h": b.h * inv,
                        "theta": b.theta,
                    },
                    "content": t.content,
                }
            )
        doc["texts"] = texts
    return doc
