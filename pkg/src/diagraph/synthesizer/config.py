"""Generator knobs and the entity name pools."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..errors import ConfigError
from ..model import DiagramKind

_COMPANY_FIRST = (
    "Acme", "Aldrin", "Apex", "Atlas", "Beacon", "Borealis", "Cascade",
    "Cedar", "Citadel", "Cobalt", "Crescent", "Delta", "Everline",
    "Fairmont", "Falcon", "Gladstone", "Harbor", "Helix", "Ironwood",
    "Juniper", "Keystone", "Lakeshore", "Meridian", "Northgate", "Orchid",
    "Pinnacle", "Quarry", "Redwood", "Sterling", "Summit", "Vanguard",
    "Westfield",
)
_COMPANY_SECOND = (
    "Holdings", "Capital", "Group", "Partners", "Industries", "Ventures",
    "Trust", "International", "Enterprises", "Investments", "Logistics",
    "Properties",
)
_UNIT_FIRST = (
    "Global", "Regional", "Corporate", "Group", "Digital", "Field",
    "Central", "Strategic", "Technical", "Commercial",
)
_UNIT_SECOND = (
    "Finance", "Engineering", "Operations", "Marketing", "Legal",
    "Compliance", "Research", "Sales", "Procurement", "Quality", "Security",
    "Design", "Analytics", "Support", "Logistics", "Strategy", "Product",
    "Audit", "Treasury", "Communications",
)


def entity_name_pool(kind: DiagramKind) -> list[str]:
    """Deterministic name pool for one diagram kind (several hundred names)."""
    if kind is DiagramKind.OWNERSHIP:
        return [f"{a} {b}" for a in _COMPANY_FIRST for b in _COMPANY_SECOND]
    return [f"{a} {b}" for a in _UNIT_FIRST for b in _UNIT_SECOND]


@dataclass(frozen=True)
class StyleConfig:
    """Visual style ranges; concrete values are drawn per diagram.

    orientation "auto" keeps ownership charts top-down and lets a share of
    organization charts read left to right.
    """

    orientation: str = "auto"  # auto | top-down | left-right
    arrow_probability: float = 0.5
    curve_probability: float = 0.25
    curvature: float = 0.5
    incline_probability: float = 0.35
    palette: str = "auto"  # auto | mono | blueprint | warm

    def __post_init__(self):
        if self.orientation not in ("auto", "top-down", "left-right"):
            raise ConfigError(f"unknown orientation {self.orientation!r}")
        if self.palette not in ("auto", "mono", "blueprint", "warm"):
            raise ConfigError(f"unknown palette {self.palette!r}")
        for name in ("arrow_probability", "curve_probability", "incline_probability"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be within [0, 1], got {v}")
        if not 0.0 <= self.curvature <= 1.0:
            raise ConfigError(f"curvature must be within [0, 1], got {self.curvature}")


@dataclass(frozen=True)
class SynthesisConfig:
    kind: DiagramKind
    node_count_range: tuple[int, int] = (4, 14)
    max_levels: int = 5
    fan_weights: tuple[float, float, float] = (0.45, 0.35, 0.20)
    max_fan: int = 4
    bus_probability: float = 0.6
    shortcut_probability: float = 0.15
    style: StyleConfig = field(default_factory=StyleConfig)

    def __post_init__(self):
        lo, hi = self.node_count_range
        if lo < 2 or hi < lo:
            raise ConfigError(f"node_count_range {self.node_count_range} is not usable")
        if self.max_levels < 2:
            raise ConfigError("max_levels must be at least 2")
        if self.max_fan < 2:
            raise ConfigError("max_fan must be at least 2")
        if len(self.fan_weights) != 3 or min(self.fan_weights) < 0 or sum(self.fan_weights) <= 0:
            raise ConfigError(f"fan_weights {self.fan_weights} is not a usable weighting")
        for name in ("bus_probability", "shortcut_probability"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be within [0, 1], got {v}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "node_count_range": list(self.node_count_range),
            "max_levels": self.max_levels,
            "fan_weights": list(self.fan_weights),
            "max_fan": self.max_fan,
            "bus_probability": self.bus_probability,
            "shortcut_probability": self.shortcut_probability,
            "style": {
                "orientation": self.style.orientation,
                "arrow_probability": self.style.arrow_probability,
                "curve_probability": self.style.curve_probability,
                "curvature": self.style.curvature,
                "incline_probability": self.style.incline_probability,
                "palette": self.style.palette,
            },
        }


def config_from_dict(d: dict) -> SynthesisConfig:
    style = d.get("style", {})
    return SynthesisConfig(
        kind=DiagramKind(d["kind"]),
        node_count_range=tuple(d.get("node_count_range", (4, 14))),
        max_levels=d.get("max_levels", 5),
        fan_weights=tuple(d.get("fan_weights", (0.45, 0.35, 0.20))),
        max_fan=d.get("max_fan", 4),
        bus_probability=d.get("bus_probability", 0.6),
        shortcut_probability=d.get("shortcut_probability", 0.15),
        style=StyleConfig(
            orientation=style.get("orientation", "auto"),
            arrow_probability=style.get("arrow_probability", 0.5),
            curve_probability=style.get("curve_probability", 0.25),
            curvature=style.get("curvature", 0.5),
            incline_probability=style.get("incline_probability", 0.35),
            palette=style.get("palette", "auto"),
        ),
    )


@dataclass(frozen=True)
class ResolvedStyle:
    """Concrete per-diagram style after the dice are rolled."""

    orientation: str
    arrows: bool
    curve_probability: float
    curvature: float
    incline_probability: float
    palette: str
    font_size: float = 12.0


def resolve_style(
    config: SynthesisConfig, rng: random.Random, demotion: int = 0
) -> ResolvedStyle:
    """Roll the per-diagram style. Demotion strips risky features: level 1
    drops curves, level 2 additionally drops inclined links."""
    orientation = config.style.orientation
    if orientation == "auto":
        if config.kind is DiagramKind.ORGANIZATION and rng.random() < 0.3:
            orientation = "left-right"
        else:
            orientation = "top-down"
    arrows = rng.random() < config.style.arrow_probability
    palette = config.style.palette
    if palette == "auto":
        palette = rng.choice(("mono", "blueprint", "warm"))
    curve_p = config.style.curve_probability if demotion < 1 else 0.0
    incline_p = config.style.incline_probability if demotion < 2 else 0.0
    return ResolvedStyle(
        orientation=orientation,
        arrows=arrows,
        curve_probability=curve_p,
        curvature=config.style.curvature,
        incline_probability=incline_p,
        palette=palette,
    )
