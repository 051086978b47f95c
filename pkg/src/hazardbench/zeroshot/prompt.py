"""Prompt construction for zero-shot hazard explanation with an external VLM.

The image is rendered with outlined (not filled) boxes so the scene stays
fully visible, and the text spells out which color marks which entity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataset.types import MAX_ENTITIES, Sample
from ..errors import DataError
from ..preprocess.palette import OUTLINE_COLOR_NAMES, OUTLINE_PALETTE
from ..preprocess.render import RenderedImage, RenderMode, RenderStyle, render_entity_boxes

ZEROSHOT_PROMPT_VERSION = "zeroshot-prompt-v1"

ZEROSHOT_INSTRUCTION = (
    "You are shown a scene from the point of view of a driving vehicle. "
    "Anticipate the traffic hazard that could occur a few seconds later and "
    "describe it in one short explanation, referring to each marked object "
    "as Entity #n."
)

_SPEED_STATEMENT = "The vehicle is traveling at {speed} km/h."
_COUNT_STATEMENT_ONE = "1 entity is involved in the hazard."
_COUNT_STATEMENT_MANY = "{count} entities are involved in the hazard."
_COLOR_STATEMENT = "Entity #{index} is highlighted by the {color} box."

OUTLINE_STYLE = RenderStyle(mode=RenderMode.OUTLINE, palette=OUTLINE_PALETTE)


@dataclass(frozen=True)
class ZeroShotContext:
    """Scene facts embedded into the otherwise fixed prompt."""

    speed_kmh: int
    n_entities: int
    color_map: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.n_entities <= MAX_ENTITIES:
            raise DataError(f"n_entities must be 1..{MAX_ENTITIES}, got {self.n_entities}")
        expected = {i: OUTLINE_COLOR_NAMES[i] for i in range(1, self.n_entities + 1)}
        if dict(self.color_map) != expected:
            raise DataError(f"color_map must be {expected}, got {dict(self.color_map)}")

    @classmethod
    def from_sample(cls, sample: Sample) -> "ZeroShotContext":
        indices = sorted(sample.entity_indices())
        return cls(
            speed_kmh=sample.speed_kmh,
            n_entities=len(indices),
            color_map={i: OUTLINE_COLOR_NAMES[i] for i in indices},
        )


@dataclass(frozen=True)
class ZeroShotPrompt:
    text: str
    image: RenderedImage
    version: str = ZEROSHOT_PROMPT_VERSION


def build_zeroshot_prompt(
    sample: Sample,
    image: np.ndarray,
    context: ZeroShotContext,
    degraded: bool = False,
) -> ZeroShotPrompt:
    """Render outline boxes and assemble the instruction text.

    ``degraded=True`` drops the scene facts (speed, entity count, colors) and
    sends the bare instruction; useful only for probing how much the context
    statements matter.
    """
    if len(sample.entities) != context.n_entities:
        raise DataError(
            f"sample {sample.id} has {len(sample.entities)} entities, "
            f"context says {context.n_entities}"
        )
    rendered = render_entity_boxes(image, sample.entities, OUTLINE_STYLE)
    lines = [ZEROSHOT_INSTRUCTION]
    if not degraded:
        lines.append(_SPEED_STATEMENT.format(speed=context.speed_kmh))
        if context.n_entities == 1:
            lines.append(_COUNT_STATEMENT_ONE)
        else:
            lines.append(_COUNT_STATEMENT_MANY.format(count=context.n_entities))
        for index in sorted(context.color_map):
            lines.append(_COLOR_STATEMENT.format(index=index, color=context.color_map[index]))
    return ZeroShotPrompt(text="\n".join(lines), image=rendered)
