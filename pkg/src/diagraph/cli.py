"""Command line entry points.

Subcommands: synthesize, convert, recognize, evaluate, perturb. Structured
failures print one JSON object to stderr and exit 1; argparse usage errors
exit 2. Single-file outputs are written atomically (temp file in the target
directory, then os.replace). Set DIAGRAPH_LOG=debug|info|warning to see
progress logging.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .aggregator import recognize
from .detectsim import NoiseConfig, noise_from_dict, perturb
from .errors import ConfigError, DiagraphError, ParseError
from .formats import (
    coco_to_dota,
    detection_texts,
    dota_to_coco,
    read_detections,
    read_dota_files,
    to_detection_file,
    write_dota_files,
)
from .metrics import evaluate_detection_batch, evaluate_tuple_batch
from .model import (
    AnnotationSet,
    DiagramKind,
    set_from_dict,
    set_to_dict,
    to_canonical_json,
)
from .synthesizer import SynthesisConfig, synthesize_dataset
from .synthesizer.config import config_from_dict

log = logging.getLogger("diagraph.cli")

FORMATS = ("annotations", "dota", "coco", "detections")


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _read_json(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read: {exc}", path=str(path)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON: {exc}", path=str(path)) from exc


def _detection_set(doc: dict, args) -> AnnotationSet:
    space = doc.get("coordinate_space", "native")
    if space == "native":
        size = doc.get("image_size")
        if not size:
            raise ParseError("detection file lacks image_size")
        width, height = float(size[0]), float(size[1])
    else:
        if args.width is None or args.height is None:
            raise ConfigError(
                "scaled detections need --width and --height for the native canvas"
            )
        width, height = args.width, args.height
    kind_value = doc.get("kind") or args.kind
    if kind_value is None:
        raise ConfigError("detection file lacks kind; pass --kind")
    objects = read_detections(doc, (width, height))
    texts = detection_texts(doc, (width, height))
    return AnnotationSet(
        doc.get("diagram_id", "detections"),
        DiagramKind(kind_value),
        width,
        height,
        tuple(objects),
        tuple(texts),
    )


def _load_sets(path: Path, fmt: str, args) -> list[AnnotationSet]:
    path = Path(path)
    if fmt == "dota":
        if path.is_dir():
            return [read_dota_files(p) for p in sorted(path.glob("*.txt"))]
        return [read_dota_files(path)]
    if fmt == "coco":
        return coco_to_dota(_read_json(path))
    if fmt == "annotations":
        if path.is_dir():
            return [set_from_dict(_read_json(p)) for p in sorted(path.glob("*.json"))]
        return [set_from_dict(_read_json(path))]
    if fmt == "detections":
        if path.is_dir():
            return [
                _detection_set(_read_json(p), args) for p in sorted(path.glob("*.json"))
            ]
        return [_detection_set(_read_json(path), args)]
    raise ConfigError(f"unknown format {fmt!r}")


def _write_sets(sets: list[AnnotationSet], out: Path, fmt: str, args) -> None:
    out = Path(out)
    if fmt == "coco":
        _atomic_write(out, json.dumps(dota_to_coco(sets), indent=1, sort_keys=True))
        return
    single_file = len(sets) == 1 and out.suffix in (".txt", ".json")
    if not single_file:
        out.mkdir(parents=True, exist_ok=True)
    for s in sets:
        if fmt == "dota":
            target = out if single_file else out / f"{s.diagram_id}.txt"
            write_dota_files(s, target)
        elif fmt == "annotations":
            target = out if single_file else out / f"{s.diagram_id}.json"
            _atomic_write(target, to_canonical_json(s))
        elif fmt == "detections":
            doc = to_detection_file(s, coordinate_space=args.coordinate_space)
            target = out if single_file else out / f"{s.diagram_id}.json"
            _atomic_write(target, json.dumps(doc, indent=1, sort_keys=True))
        else:
            raise ConfigError(f"cannot write format {fmt!r}")


# ------------------------------------------------------------ subcommands


def _cmd_synthesize(args) -> int:
    if args.config:
        cfg_dict = _read_json(args.config)
        if args.kind:
            cfg_dict["kind"] = args.kind
        cfg = config_from_dict(cfg_dict)
    else:
        cfg = SynthesisConfig(kind=DiagramKind(args.kind or "ownership"))
    rows = synthesize_dataset(args.out, cfg, count=args.count, start_seed=args.seed)
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    run = {
        "command": "synthesize",
        "version": __version__,
        "config": cfg.to_dict(),
        "config_sha256": hashlib.sha256(canonical.encode("utf-8")).hexdigest(),
        "count": args.count,
        "start_seed": args.seed,
        "diagrams": len(rows),
    }
    _atomic_write(Path(args.out) / "run.json", json.dumps(run, indent=1, sort_keys=True))
    log.info("synthesized %d diagrams into %s", len(rows), args.out)
    return 0


def _cmd_convert(args) -> int:
    sets = _load_sets(args.input, args.source_format, args)
    if not sets:
        raise ParseError(f"no diagrams found in {args.input}")
    _write_sets(sets, args.out, args.target_format, args)
    return 0


def _cmd_recognize(args) -> int:
    sets = _load_sets(args.input, args.format, args)
    if not sets:
        raise ParseError(f"no diagrams found in {args.input}")
    if len(sets) == 1 and not args.jsonl:
        result = recognize(sets[0])
        doc = {
            "diagram_id": sets[0].diagram_id,
            "kind": result.kind.value,
            "tuples": [t.to_dict() for t in result.tuples],
            "diagnostics": result.diagnostics.to_dict(),
        }
        payload = json.dumps(doc, indent=1, sort_keys=True)
        if args.out:
            _atomic_write(Path(args.out), payload)
        else:
            print(payload)
        return 0
    lines = []
    for s in sets:
        result = recognize(s)
        for t in result.tuples:
            lines.append(json.dumps({"diagram_id": s.diagram_id, **t.to_dict()},
                                    sort_keys=True))
    payload = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        _atomic_write(Path(args.out), payload)
    else:
        sys.stdout.write(payload)
    return 0


def _pair_sets(preds: list[AnnotationSet], truths: list[AnnotationSet]):
    truth_by_id = {s.diagram_id: s for s in truths}
    if len(preds) == 1 and len(truths) == 1:
        return [(preds[0], truths[0])]
    pairs = []
    for p in preds:
        if p.diagram_id not in truth_by_id:
            raise ParseError(f"no ground truth for diagram {p.diagram_id!r}")
        pairs.append((p, truth_by_id[p.diagram_id]))
    missing = {s.diagram_id for s in truths} - {p.diagram_id for p in preds}
    if missing:
        raise ParseError(f"predictions missing for {len(missing)} diagrams")
    return pairs


def _cmd_evaluate(args) -> int:
    preds = _load_sets(args.pred, args.pred_format, args)
    truths = _load_sets(args.truth, args.truth_format, args)
    pairs = _pair_sets(preds, truths)
    detection = evaluate_detection_batch(pairs, iou_threshold=args.iou)
    tuple_pairs = [
        (recognize(p).tuples, recognize(t).tuples) for p, t in pairs
    ]
    tuples = evaluate_tuple_batch(tuple_pairs)
    doc = {
        "diagrams": len(pairs),
        "detection": detection.to_dict(),
        "tuples": tuples.to_dict(),
    }
    payload = json.dumps(doc, indent=1, sort_keys=True)
    if args.out:
        _atomic_write(Path(args.out), payload)
    else:
        print(payload)
    return 0


def _cmd_perturb(args) -> int:
    sets = _load_sets(args.input, args.format, args)
    if not sets:
        raise ParseError(f"no diagrams found in {args.input}")
    noise = noise_from_dict(_read_json(args.noise)) if args.noise else NoiseConfig(
        drop_rate=args.drop_rate,
        position_jitter=args.position_jitter,
        spurious_rate=args.spurious_rate,
    )
    out_sets = [
        perturb(s, noise, rng=f"{args.seed}:{s.diagram_id}") for s in sets
    ]
    _write_sets(out_sets, args.out, args.target_format, args)
    return 0


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diagraph",
        description="Synthesize, convert, recognize, and evaluate structure diagrams.",
    )
    parser.add_argument("--version", action="version", version=f"diagraph {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="generate a diagram corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--kind", choices=[k.value for k in DiagramKind])
    p.add_argument("--seed", type=int, default=0, help="start seed")
    p.add_argument("--config", help="synthesis config JSON file")
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser("convert", help="convert between annotation formats")
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--from", dest="source_format", choices=FORMATS, required=True)
    p.add_argument("--to", dest="target_format", choices=FORMATS, required=True)
    _common_io_flags(p)
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("recognize", help="extract relation tuples")
    p.add_argument("input")
    p.add_argument("--format", choices=FORMATS, default="annotations")
    p.add_argument("--out")
    p.add_argument("--jsonl", action="store_true",
                   help="force one tuple per line with diagram_id")
    _common_io_flags(p)
    p.set_defaults(func=_cmd_recognize)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--pred-format", choices=FORMATS, default="detections")
    p.add_argument("--truth-format", choices=FORMATS, default="annotations")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--out")
    _common_io_flags(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("perturb", help="simulate detector noise on annotations")
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--format", choices=FORMATS, default="annotations")
    p.add_argument("--to", dest="target_format", choices=FORMATS,
                   default="detections")
    p.add_argument("--noise", help="noise config JSON file")
    p.add_argument("--drop-rate", type=float, default=0.0)
    p.add_argument("--position-jitter", type=float, default=0.0)
    p.add_argument("--spurious-rate", type=float, default=0.0)
    p.add_argument("--seed", default="0")
    _common_io_flags(p)
    p.set_defaults(func=_cmd_perturb)

    return parser


def _common_io_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=[k.value for k in DiagramKind], default=None,
                   help="diagram kind for detection files that lack one")
    p.add_argument("--width", type=float, default=None,
                   help="native canvas width for scaled detection input")
    p.add_argument("--height", type=float, default=None,
                   help="native canvas height for scaled detection input")
    p.add_argument("--coordinate-space", choices=("native", "scaled-1024"),
                   default="native", help="coordinate space for detection output")


def main(argv=None) -> int:
    level = os.environ.get("DIAGRAPH_LOG")
    if level:
        logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DiagraphError as exc:
        error = {"error": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "path", None):
            error["path"] = exc.path
        if getattr(exc, "line", None) is not None:
            error["line"] = exc.line
        print(json.dumps(error, sort_keys=True), file=sys.stderr)
        return 1
    except OSError as exc:
        print(
            json.dumps({"error": "OSError", "message": str(exc)}, sort_keys=True),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
