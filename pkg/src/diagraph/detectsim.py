"""Simulate detector output by perturbing ground-truth annotations.

The simulator applies independent, seeded noise processes: per-class box
drops, Gaussian position/size/angle jitter, keypoint drop and jitter,
Poisson-distributed spurious boxes, confidence scores drawn from a Beta
distribution, and digit substitution inside text blocks. With an all-zero
config the output boxes, keypoints, and texts are bit-identical to the
input; only the scores differ, because a detector never reports certainty.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .errors import ConfigError
from .geometry import OrientedBox
from .model import (
    AnnotationSet,
    DiagramObject,
    ObjectClass,
    TextBlock,
)

_DIGITS = "0123456789"


@dataclass(frozen=True)
class NoiseConfig:
    drop_rate: float = 0.0
    class_drop_rates: dict = field(default_factory=dict)
    position_jitter: float = 0.0
    size_jitter: float = 0.0
    angle_jitter: float = 0.0
    keypoint_jitter: float = 0.0
    keypoint_drop_rate: float = 0.0
    spurious_rate: float = 0.0
    text_drop_rate: float = 0.0
    digit_error_rate: float = 0.0
    score_alpha: float = 9.0
    score_beta: float = 1.0

    def __post_init__(self):
        for name in (
            "drop_rate",
            "keypoint_drop_rate",
            "text_drop_rate",
            "digit_error_rate",
        ):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        for name in (
            "position_jitter",
            "size_jitter",
            "angle_jitter",
            "keypoint_jitter",
            "spurious_rate",
        ):
            v = getattr(self, name)
            if v < 0.0:
                raise ConfigError(f"{name} must be >= 0, got {v}")
        for name, rate in self.class_drop_rates.items():
            ObjectClass(name)
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"class drop rate for {name} out of [0, 1]")
        if self.score_alpha <= 0.0 or self.score_beta <= 0.0:
            raise ConfigError("score_alpha and score_beta must be positive")

    def drop_rate_for(self, cls: ObjectClass) -> float:
        return self.class_drop_rates.get(cls.value, self.drop_rate)

    def to_dict(self) -> dict:
        return {
            "drop_rate": self.drop_rate,
            "class_drop_rates": dict(self.class_drop_rates),
            "position_jitter": self.position_jitter,
            "size_jitter": self.size_jitter,
            "angle_jitter": self.angle_jitter,
            "keypoint_jitter": self.keypoint_jitter,
            "keypoint_drop_rate": self.keypoint_drop_rate,
            "spurious_rate": self.spurious_rate,
            "text_drop_rate": self.text_drop_rate,
            "digit_error_rate": self.digit_error_rate,
            "score_alpha": self.score_alpha,
            "score_beta": self.score_beta,
        }


def noise_from_dict(d: dict) -> NoiseConfig:
    return NoiseConfig(**d)


def _as_rng(rng) -> random.Random:
    if isinstance(rng, random.Random):
        return rng
    return random.Random(rng)


def _poisson(rng: random.Random, lam: float) -> int:
    """Knuth's product-of-uniforms sampler."""
    if lam <= 0.0:
        return 0
    threshold = math.exp(-lam)
    k = 0
    p = 1.0
    while True:
        p *= rng.random()
        if p <= threshold:
            return k
        k += 1


def _score(rng: random.Random, noise: NoiseConfig) -> float:
    s = rng.betavariate(noise.score_alpha, noise.score_beta)
    return min(max(s, 1e-6), 1.0 - 1e-6)


def _jitter_box(box: OrientedBox, noise: NoiseConfig, rng: random.Random) -> OrientedBox:
    cx, cy, w, h, theta = box.cx, box.cy, box.w, box.h, box.theta
    if noise.position_jitter > 0.0:
        cx += rng.gauss(0.0, noise.position_jitter)
        cy += rng.gauss(0.0, noise.position_jitter)
    if noise.size_jitter > 0.0:
        w = max(1.0, w + rng.gauss(0.0, noise.size_jitter))
        h = max(1.0, h + rng.gauss(0.0, noise.size_jitter))
    if noise.angle_jitter > 0.0:
        theta += rng.gauss(0.0, noise.angle_jitter)
    return OrientedBox(cx, cy, w, h, theta)


def _jitter_point(p, noise: NoiseConfig, rng: random.Random):
    if noise.keypoint_jitter <= 0.0:
        return p
    return (
        p[0] + rng.gauss(0.0, noise.keypoint_jitter),
        p[1] + rng.gauss(0.0, noise.keypoint_jitter),
    )


def _corrupt_digits(content: str, noise: NoiseConfig, rng: random.Random) -> str:
    positions = [i for i, ch in enumerate(content) if ch.isdigit()]
    if not positions or rng.random() >= noise.digit_error_rate:
        return content
    i = rng.choice(positions)
    wrong = rng.choice([d for d in _DIGITS if d != content[i]])
    return content[:i] + wrong + content[i + 1 :]


def _spurious_objects(
    s: AnnotationSet, noise: NoiseConfig, rng: random.Random, next_id: int
) -> list[DiagramObject]:
    out = []
    count = _poisson(rng, noise.spurious_rate)
    for _ in range(count):
        cls = rng.choice((ObjectClass.NODE, ObjectClass.LINE, ObjectClass.BUS))
        w = rng.uniform(20.0, 120.0)
        h = rng.uniform(6.0, 40.0)
        box = OrientedBox(
            rng.uniform(0.1 * s.width, 0.9 * s.width),
            rng.uniform(0.1 * s.height, 0.9 * s.height),
            w,
            h,
            rng.uniform(-math.pi / 4, 3 * math.pi / 4),
        )
        out.append(DiagramObject(next_id, cls, box, _score(rng, noise)))
        next_id += 1
    return out


def perturb(
    s: AnnotationSet, noise: NoiseConfig, rng: random.Random | int | str = 0
) -> AnnotationSet:
    """Detector-style copy of an annotation set under a noise model.

    Deterministic for a given (set, noise, seed). Object ids survive for
    everything that is kept; spurious boxes get fresh ids past the input's
    maximum. The result is not guaranteed to pass validation, real detector
    output would not either."""
    rng = _as_rng(rng)
    objects: list[DiagramObject] = []
    for obj in s.objects:
        if rng.random() < noise.drop_rate_for(obj.cls):
            continue
        box = _jitter_box(obj.box, noise, rng)
        keypoints = obj.keypoints
        if keypoints is not None:
            if rng.random() < noise.keypoint_drop_rate:
                keypoints = None
            else:
                keypoints = (
                    _jitter_point(keypoints[0], noise, rng),
                    _jitter_point(keypoints[1], noise, rng),
                )
        objects.append(
            DiagramObject(obj.id, obj.cls, box, _score(rng, noise), keypoints)
        )
    texts: list[TextBlock] = []
    for tb in s.texts:
        if rng.random() < noise.text_drop_rate:
            continue
        texts.append(
            TextBlock(tb.id, tb.box, _corrupt_digits(tb.content, noise, rng))
        )
    used = [o.id for o in s.objects] + [t.id for t in s.texts]
    next_id = max(used, default=-1) + 1
    objects.extend(_spurious_objects(s, noise, rng, next_id))
    return AnnotationSet(
        s.diagram_id, s.kind, s.width, s.height, tuple(objects), tuple(texts)
    )
