"""Synthetic diagram generator: topology, layout, SVG, ground truth."""

from .config import ResolvedStyle, StyleConfig, SynthesisConfig, entity_name_pool
from .dataset import (
    SynthesizedDiagram,
    read_manifest,
    synthesize_dataset,
    synthesize_diagram,
)
from .layout import Scene, layout_scene, scene_annotations
from .svgrender import render_svg
from .topology import draw_pattern, generate_topology

__all__ = [
    "ResolvedStyle",
    "Scene",
    "StyleConfig",
    "SynthesisConfig",
    "SynthesizedDiagram",
    "draw_pattern",
    "entity_name_pool",
    "generate_topology",
    "layout_scene",
    "read_manifest",
    "render_svg",
    "scene_annotations",
    "synthesize_dataset",
    "synthesize_diagram",
]
