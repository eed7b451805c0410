"""Seeded diagram synthesis with a recognition self-check.

Every candidate scene is validated and run through the aggregator before it
is accepted; the recovered relation tuples must equal the tuples implied by
the source topology, with no diagnostics. When a style is too adventurous
for its topology the synthesizer retries the same seed at increasing
demotion levels (drop curves, then drop inclined connectors) so output
stays deterministic per seed while the guarantee holds.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path

from ..aggregator import recognize
from ..errors import LayoutError
from ..formats import write_dota_files
from ..model import (
    AnnotationSet,
    RelationTuple,
    Topology,
    to_canonical_json,
    tuples_from_topology,
    validate,
)
from .config import SynthesisConfig, resolve_style
from .layout import Scene, layout_scene, scene_annotations
from .svgrender import render_svg
from .topology import generate_topology

log = logging.getLogger("diagraph.synthesizer")

DEMOTION_LEVELS = (0, 1, 2)


@dataclass
class SynthesizedDiagram:
    diagram_id: str
    seed: int
    demotion: int
    topology: Topology
    scene: Scene
    annotations: AnnotationSet
    svg: str
    tuples: tuple[RelationTuple, ...]


def synthesize_diagram(seed: int, config: SynthesisConfig) -> SynthesizedDiagram:
    """Deterministically synthesize one diagram for a seed.

    Raises LayoutError when no demotion level yields a scene that passes
    validation and round-trips through recognition."""
    topo = generate_topology(config, random.Random(f"{seed}:topology"))
    gold = tuple(tuples_from_topology(topo))
    diagram_id = f"{topo.kind.value}-{seed:06d}"
    failure = "no demotion level attempted"
    for level in DEMOTION_LEVELS:
        style = resolve_style(config, random.Random(f"{seed}:style"), demotion=level)
        try:
            scene = layout_scene(
                topo, style, random.Random(f"{seed}:layout:{level}"), diagram_id
            )
        except LayoutError as exc:
            failure = str(exc)
            continue
        annotations = scene_annotations(scene)
        violations = validate(annotations)
        if violations:
            failure = f"validation: {violations[0].message}"
            continue
        result = recognize(annotations)
        if tuple(result.tuples) != gold:
            failure = "recognition self-check produced different tuples"
            continue
        if result.diagnostics.has_issues():
            failure = "recognition self-check raised diagnostics"
            continue
        return SynthesizedDiagram(
            diagram_id=diagram_id,
            seed=seed,
            demotion=level,
            topology=topo,
            scene=scene,
            annotations=annotations,
            svg=render_svg(scene),
            tuples=gold,
        )
    raise LayoutError(f"seed {seed} ({diagram_id}): {failure}")


def synthesize_dataset(
    out_dir: str | Path,
    config: SynthesisConfig,
    count: int,
    start_seed: int = 0,
) -> list[dict]:
    """Write a dataset of `count` diagrams under out_dir and return the
    manifest rows. Seeds advance from start_seed; a seed that fails all
    demotion levels is skipped with a warning so the corpus size is met."""
    out = Path(out_dir)
    for sub in ("svg", "dota", "annotations", "tuples"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    rows: list[dict] = []
    seed = start_seed
    attempts = 0
    limit = count * 4 + 64
    while len(rows) < count:
        if attempts >= limit:
            raise LayoutError(
                f"gave up after {attempts} attempts for {count} diagrams"
            )
        attempts += 1
        try:
            diagram = synthesize_diagram(seed, config)
        except LayoutError as exc:
            log.warning("skipping seed %d: %s", seed, exc)
            seed += 1
            continue
        seed += 1
        did = diagram.diagram_id
        (out / "svg" / f"{did}.svg").write_text(diagram.svg, encoding="utf-8")
        write_dota_files(diagram.annotations, out / "dota" / f"{did}.txt")
        (out / "annotations" / f"{did}.json").write_text(
            to_canonical_json(diagram.annotations), encoding="utf-8"
        )
        (out / "tuples" / f"{did}.json").write_text(
            json.dumps([t.to_dict() for t in diagram.tuples], indent=1),
            encoding="utf-8",
        )
        rows.append(
            {
                "diagram_id": did,
                "seed": diagram.seed,
                "kind": diagram.topology.kind.value,
                "demotion": diagram.demotion,
                "svg": f"svg/{did}.svg",
                "dota": f"dota/{did}.txt",
                "annotations": f"annotations/{did}.json",
                "tuples": f"tuples/{did}.json",
            }
        )
    with (out / "manifest.jsonl").open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return rows


def read_manifest(out_dir: str | Path) -> list[dict]:
    path = Path(out_dir) / "manifest.jsonl"
    rows = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows
