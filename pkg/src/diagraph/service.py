"""HTTP annotation service for reviewing and correcting diagram datasets.

The store is a plain directory tree, one subdirectory per diagram:

    <root>/<diagram_id>/diagram.svg
    <root>/<diagram_id>/meta.json
    <root>/<diagram_id>/revisions/00001.json, 00002.json, ...

Every saved annotation set is a new immutable revision. Writes use
O_CREAT|O_EXCL on the next revision number, so two writers racing for the
same base version cannot both win; the loser gets a 409 with the version
the store actually holds. Validation findings block a save with a 422
unless the client acknowledges them, in which case they are recorded in
the revision. Exports are byte-deterministic: fixed zip timestamps, stored
entries in sorted order, canonical JSON.
"""

from __future__ import annotations

import io
import json
import threading
import zipfile
from collections import defaultdict
from pathlib import Path

from fastapi import Body, FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from . import __version__
from .aggregator import recognize
from .detectsim import NoiseConfig, noise_from_dict, perturb
from .errors import (
    DiagraphError,
    InvalidAnnotations,
    ParseError,
    UnknownDiagram,
    VersionConflict,
)
from .formats import write_dota
from .metrics import evaluate_detections, evaluate_tuples
from .model import (
    AnnotationSet,
    set_from_dict,
    set_to_dict,
    validate,
)
from .synthesizer import read_manifest

GROUND_TRUTH_AUTHOR = "synthesizer"
_REVISION_WIDTH = 5


def _canonical(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _violation_dicts(violations) -> list[dict]:
    return [
        {"object_id": v.object_id, "rule": v.rule, "message": v.message}
        for v in violations
    ]


class AnnotationStore:
    """File-backed revision store; safe for concurrent in-process use and
    for multiple processes sharing the directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._guard = threading.Lock()
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)

    def _lock(self, diagram_id: str) -> threading.Lock:
        with self._guard:
            return self._locks[diagram_id]

    def _dir(self, diagram_id: str) -> Path:
        if not diagram_id or "/" in diagram_id or diagram_id.startswith("."):
            raise UnknownDiagram(f"bad diagram id {diagram_id!r}")
        return self.root / diagram_id

    def _existing_dir(self, diagram_id: str) -> Path:
        d = self._dir(diagram_id)
        if not (d / "meta.json").is_file():
            raise UnknownDiagram(f"no diagram {diagram_id!r}")
        return d

    # ------------------------------------------------------------- reads

    def list_diagrams(self) -> list[dict]:
        out = []
        for meta_path in sorted(self.root.glob("*/meta.json")):
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            try:
                meta["version"] = self.current_version(meta["diagram_id"])
            except UnknownDiagram:
                continue  # half-created entry, e.g. a crashed import
            out.append(meta)
        return out

    def meta(self, diagram_id: str) -> dict:
        d = self._existing_dir(diagram_id)
        return json.loads((d / "meta.json").read_text(encoding="utf-8"))

    def svg(self, diagram_id: str) -> str:
        d = self._existing_dir(diagram_id)
        path = d / "diagram.svg"
        if not path.is_file():
            raise UnknownDiagram(f"diagram {diagram_id!r} has no rendering")
        return path.read_text(encoding="utf-8")

    def _revision_paths(self, diagram_id: str) -> list[Path]:
        d = self._existing_dir(diagram_id)
        return sorted((d / "revisions").glob("*.json"))

    def current_version(self, diagram_id: str) -> int:
        paths = self._revision_paths(diagram_id)
        if not paths:
            raise UnknownDiagram(f"diagram {diagram_id!r} has no revisions")
        return int(paths[-1].stem)

    def revisions(self, diagram_id: str) -> list[dict]:
        out = []
        for p in self._revision_paths(diagram_id):
            doc = json.loads(p.read_text(encoding="utf-8"))
            out.append(
                {
                    "version": doc["version"],
                    "author": doc["author"],
                    "note": doc.get("note"),
                    "acknowledged_violations": len(
                        doc.get("acknowledged_violations", [])
                    ),
                }
            )
        return out

    def revision(self, diagram_id: str, version: int) -> dict:
        d = self._existing_dir(diagram_id)
        path = d / "revisions" / f"{version:0{_REVISION_WIDTH}d}.json"
        if not path.is_file():
            raise UnknownDiagram(
                f"diagram {diagram_id!r} has no revision {version}"
            )
        return json.loads(path.read_text(encoding="utf-8"))

    def annotation_set(self, diagram_id: str, version: int | None = None) -> AnnotationSet:
        if version is None:
            version = self.current_version(diagram_id)
        return set_from_dict(self.revision(diagram_id, version)["annotations"])

    # ------------------------------------------------------------ writes

    def _write_revision(
        self,
        diagram_id: str,
        version: int,
        annotations: AnnotationSet,
        author: str,
        note: str | None,
        acknowledge: bool,
    ) -> int:
        meta = self.meta(diagram_id)
        if annotations.diagram_id != diagram_id:
            raise InvalidAnnotations(
                f"annotations are for {annotations.diagram_id!r}, "
                f"not {diagram_id!r}",
                [],
            )
        if annotations.kind.value != meta["kind"]:
            raise InvalidAnnotations(
                f"annotations carry kind {annotations.kind.value!r}, "
                f"diagram is {meta['kind']!r}",
                [],
            )
        violations = validate(annotations)
        if violations and not acknowledge:
            raise InvalidAnnotations(
                f"{len(violations)} validation findings; "
                "acknowledge_violations to save anyway",
                _violation_dicts(violations),
            )
        doc = {
            "version": version,
            "author": author,
            "note": note,
            "acknowledged_violations": _violation_dicts(violations),
            "annotations": set_to_dict(annotations),
        }
        d = self._dir(diagram_id)
        (d / "revisions").mkdir(parents=True, exist_ok=True)
        path = d / "revisions" / f"{version:0{_REVISION_WIDTH}d}.json"
        try:
            with open(path, "x", encoding="utf-8") as fh:
                fh.write(_canonical(doc))
        except FileExistsError:
            raise VersionConflict(
                f"revision {version} of {diagram_id!r} already exists",
                current_version=self.current_version(diagram_id),
            ) from None
        return version

    def create(
        self,
        annotations: AnnotationSet,
        svg: str | None = None,
        author: str = "anonymous",
        acknowledge: bool = False,
    ) -> int:
        diagram_id = annotations.diagram_id
        d = self._dir(diagram_id)
        # refuse invalid content before any directory state exists
        violations = validate(annotations)
        if violations and not acknowledge:
            raise InvalidAnnotations(
                f"{len(violations)} validation findings; "
                "acknowledge_violations to save anyway",
                _violation_dicts(violations),
            )
        with self._lock(diagram_id):
            if (d / "meta.json").is_file():
                raise VersionConflict(
                    f"diagram {diagram_id!r} already exists",
                    current_version=self.current_version(diagram_id),
                )
            d.mkdir(parents=True, exist_ok=True)
            meta = {
                "diagram_id": diagram_id,
                "kind": annotations.kind.value,
                "width": annotations.width,
                "height": annotations.height,
            }
            (d / "meta.json").write_text(_canonical(meta), encoding="utf-8")
            if svg is not None:
                (d / "diagram.svg").write_text(svg, encoding="utf-8")
            return self._write_revision(
                diagram_id, 1, annotations, author, None, acknowledge
            )

    def put(
        self,
        diagram_id: str,
        base_version: int,
        annotations: AnnotationSet,
        author: str = "anonymous",
        note: str | None = None,
        acknowledge: bool = False,
    ) -> int:
        with self._lock(diagram_id):
            current = self.current_version(diagram_id)
            if base_version != current:
                raise VersionConflict(
                    f"expected_version {base_version} is stale",
                    current_version=current,
                )
            return self._write_revision(
                diagram_id, base_version + 1, annotations, author, note, acknowledge
            )

    # -------------------------------------------------------------- bulk

    def seed_from_manifest(self, corpus_dir: str | Path, limit: int | None = None) -> int:
        """Import a synthesized corpus: ground truth becomes revision 1."""
        corpus = Path(corpus_dir)
        rows = read_manifest(corpus)
        if limit is not None:
            rows = rows[:limit]
        count = 0
        for row in rows:
            ann = set_from_dict(
                json.loads((corpus / row["annotations"]).read_text(encoding="utf-8"))
            )
            svg = (corpus / row["svg"]).read_text(encoding="utf-8")
            self.create(ann, svg=svg, author=GROUND_TRUTH_AUTHOR)
            count += 1
        return count

    def export_zip(self) -> bytes:
        """Deterministic dataset snapshot of the latest revisions."""
        entries: list[tuple[str, bytes]] = []
        manifest_lines = []
        for meta in self.list_diagrams():
            did = meta["diagram_id"]
            ann = self.annotation_set(did)
            svg_path = self.root / did / "diagram.svg"
            if svg_path.is_file():
                entries.append((f"svg/{did}.svg", svg_path.read_bytes()))
            text, sidecar = write_dota(ann)
            entries.append((f"dota/{did}.txt", text.encode("utf-8")))
            entries.append(
                (f"dota/{did}.json", (_canonical(sidecar) + "\n").encode("utf-8"))
            )
            entries.append(
                (f"annotations/{did}.json", _canonical(set_to_dict(ann)).encode("utf-8"))
            )
            manifest_lines.append(
                _canonical(
                    {
                        "diagram_id": did,
                        "kind": meta["kind"],
                        "version": meta["version"],
                    }
                )
            )
        entries.append(
            ("manifest.jsonl", ("\n".join(manifest_lines) + "\n").encode("utf-8"))
        )
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:
            for arcname, payload in sorted(entries):
                info = zipfile.ZipInfo(arcname, date_time=(1980, 1, 1, 0, 0, 0))
                info.external_attr = 0o644 << 16
                zf.writestr(info, payload)
        return buf.getvalue()


# -------------------------------------------------------------- FastAPI


def create_app(store: AnnotationStore | str | Path) -> FastAPI:
    if not isinstance(store, AnnotationStore):
        store = AnnotationStore(store)
    app = FastAPI(title="diagraph annotation service", version=__version__)
    app.state.store = store
    # the review UI is served as static files from another origin
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(DiagraphError)
    async def _diagraph_error(request: Request, exc: DiagraphError):
        status = 400
        payload = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, UnknownDiagram):
            status = 404
        elif isinstance(exc, VersionConflict):
            status = 409
            payload["current_version"] = exc.current_version
        elif isinstance(exc, InvalidAnnotations):
            status = 422
            payload["violations"] = exc.violations
        return JSONResponse(payload, status_code=status)

    @app.get("/health")
    def health():
        return {"status": "ok", "diagrams": len(store.list_diagrams())}

    @app.get("/diagrams")
    def list_diagrams():
        return store.list_diagrams()

    @app.post("/diagrams", status_code=201)
    def create_diagram(payload: dict = Body(...)):
        if "annotations" not in payload:
            raise ParseError("body must carry annotations")
        ann = set_from_dict(payload["annotations"])
        version = store.create(
            ann,
            svg=payload.get("svg"),
            author=payload.get("author", "anonymous"),
            acknowledge=bool(payload.get("acknowledge_violations", False)),
        )
        return {"diagram_id": ann.diagram_id, "version": version}

    @app.get("/diagrams/{diagram_id}")
    def get_diagram(diagram_id: str):
        meta = store.meta(diagram_id)
        version = store.current_version(diagram_id)
        return {
            **meta,
            "version": version,
            "annotations": store.revision(diagram_id, version)["annotations"],
        }

    @app.get("/diagrams/{diagram_id}/svg")
    def get_svg(diagram_id: str):
        return Response(store.svg(diagram_id), media_type="image/svg+xml")

    @app.get("/diagrams/{diagram_id}/annotations")
    def get_annotations(diagram_id: str, version: int | None = None):
        if version is None:
            version = store.current_version(diagram_id)
        return {
            "diagram_id": diagram_id,
            "version": version,
            "annotations": store.revision(diagram_id, version)["annotations"],
        }

    @app.get("/diagrams/{diagram_id}/revisions")
    def list_revisions(diagram_id: str):
        return store.revisions(diagram_id)

    @app.get("/diagrams/{diagram_id}/revisions/{version}")
    def get_revision(diagram_id: str, version: int):
        return store.revision(diagram_id, version)

    @app.put("/diagrams/{diagram_id}/annotations")
    def put_annotations(diagram_id: str, payload: dict = Body(...)):
        for field in ("expected_version", "annotations"):
            if field not in payload:
                raise ParseError(f"body must carry {field}")
        ann = set_from_dict(payload["annotations"])
        version = store.put(
            diagram_id,
            base_version=int(payload["expected_version"]),
            annotations=ann,
            author=payload.get("author", "anonymous"),
            note=payload.get("note"),
            acknowledge=bool(payload.get("acknowledge_violations", False)),
        )
        return {"diagram_id": diagram_id, "version": version}

    @app.post("/diagrams/{diagram_id}/auto-annotate")
    def auto_annotate(diagram_id: str, payload: dict | None = Body(default=None)):
        payload = payload or {}
        noise = (
            noise_from_dict(payload["noise"]) if payload.get("noise") else NoiseConfig()
        )
        seed = payload.get("seed", 0)
        source_version = int(payload.get("source_version", 1))
        base = store.current_version(diagram_id)
        source = store.annotation_set(diagram_id, source_version)
        noisy = perturb(source, noise, rng=f"{seed}:{diagram_id}")
        version = store.put(
            diagram_id,
            base_version=base,
            annotations=noisy,
            author=payload.get("author", "detector-sim"),
            note=f"simulated detections from revision {source_version}",
            acknowledge=True,
        )
        return {"diagram_id": diagram_id, "version": version}

    @app.get("/diagrams/{diagram_id}/tuples")
    def get_tuples(diagram_id: str, version: int | None = None):
        ann = store.annotation_set(diagram_id, version)
        result = recognize(ann)
        return {
            "diagram_id": diagram_id,
            "kind": result.kind.value,
            "tuples": [t.to_dict() for t in result.tuples],
            "diagnostics": result.diagnostics.to_dict(),
        }

    @app.get("/diagrams/{diagram_id}/evaluate")
    def evaluate(diagram_id: str, version: int | None = None, against: int = 1):
        pred = store.annotation_set(diagram_id, version)
        truth = store.annotation_set(diagram_id, against)
        detection = evaluate_detections(pred, truth)
        tuples = evaluate_tuples(recognize(pred).tuples, recognize(truth).tuples)
        return {
            "diagram_id": diagram_id,
            "detection": detection.to_dict(),
            "tuples": tuples.to_dict(),
        }

    @app.api_route("/export", methods=["GET", "POST"])
    def export():
        return Response(
            store.export_zip(),
            media_type="application/zip",
            headers={"Content-Disposition": "attachment; filename=dataset.zip"},
        )

    return app


def seed_store_from_manifest(
    store_dir: str | Path, corpus_dir: str | Path, limit: int | None = None
) -> int:
    return AnnotationStore(store_dir).seed_from_manifest(corpus_dir, limit=limit)
