"""Random generating structures: who connects to whom, before any geometry.

A topology is a single-rooted layered DAG. Every entity below the root level
gets at least one parent on the level directly above it, drawn through
weighted connection patterns; a slice of the fans is marked to be drawn
through a shared bus, and occasional shortcut edges skip two or more levels.
"""

from __future__ import annotations

import random

from ..model import DiagramKind, Topology
from .config import SynthesisConfig, entity_name_pool

_PATTERNS = ("one_to_one", "one_to_many", "many_to_one")


def draw_pattern(rng: random.Random, weights: tuple[float, float, float]) -> str:
    """Pick the next connection pattern; factored out for distribution tests."""
    return rng.choices(_PATTERNS, weights=weights)[0]


def _percentage(rng: random.Random) -> str:
    return f"{rng.randint(1, 1000) / 10:.1f}%"


def generate_topology(config: SynthesisConfig, rng: random.Random) -> Topology:
    n = rng.randint(*config.node_count_range)
    m = rng.randint(2, max(2, min(config.max_levels, n)))
    names = rng.sample(entity_name_pool(config.kind), n)
    entities = tuple(enumerate(names))

    # one entity pinned per level so no level is empty; the rest spread below
    # the single root
    levels = {i: i for i in range(m)}
    for i in range(m, n):
        levels[i] = rng.randint(1, m - 1)
    by_level: dict[int, list[int]] = {k: [] for k in range(m)}
    for ent, lvl in levels.items():
        by_level[lvl].append(ent)

    own = config.kind is DiagramKind.OWNERSHIP
    edges: list[tuple[int, int, str]] = []
    pairs: set[tuple[int, int]] = set()
    bus_groups: list[tuple[tuple[int, ...], tuple[int, ...]]] = []

    def add_edge(parent: int, child: int) -> None:
        pairs.add((parent, child))
        edges.append((parent, child, _percentage(rng) if own else ""))

    for k in range(1, m):
        uncovered = sorted(by_level[k])
        prev = sorted(by_level[k - 1])
        while uncovered:
            pattern = draw_pattern(rng, config.fan_weights)
            if pattern == "one_to_many" and len(uncovered) >= 2:
                size = min(rng.randint(2, config.max_fan), len(uncovered))
                children = [uncovered.pop(0) for _ in range(size)]
                parent = rng.choice(prev)
                for c in children:
                    add_edge(parent, c)
                if rng.random() < config.bus_probability:
                    bus_groups.append(((parent,), tuple(children)))
            elif pattern == "many_to_one" and len(prev) >= 2:
                child = uncovered.pop(0)
                size = min(rng.randint(2, config.max_fan), len(prev))
                parents = sorted(rng.sample(prev, size))
                for p in parents:
                    add_edge(p, child)
                if rng.random() < config.bus_probability:
                    bus_groups.append((tuple(parents), (child,)))
            else:
                child = uncovered.pop(0)
                add_edge(rng.choice(prev), child)

    # shortcuts skip at least one level and are always drawn as plain chains
    if m >= 3:
        for child in range(n):
            if levels[child] < 2 or rng.random() >= config.shortcut_probability:
                continue
            plevel = rng.randint(0, levels[child] - 2)
            parent = rng.choice(sorted(by_level[plevel]))
            if (parent, child) not in pairs:
                add_edge(parent, child)

    return Topology(
        kind=config.kind,
        entities=entities,
        levels=levels,
        edges=tuple(edges),
        bus_groups=tuple(bus_groups),
    )
