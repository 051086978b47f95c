"""Color-coded entity box rendering and pixel-space input ablations."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from ..dataset.types import EntityAnnotation
from ..errors import DataError
from .palette import FILLED_PALETTE, GRAY, RGB


class RenderMode(Enum):
    FILLED_ALPHA = "filled_alpha"
    OUTLINE = "outline"


class AblationMode(Enum):
    FULL = "full"
    POSITION_ONLY = "position_only"
    NO_ENTITY = "no_entity"
    NO_CONTEXT = "no_context"
    ONLY_CONTEXT = "only_context"


@dataclass(frozen=True)
class RenderStyle:
    mode: RenderMode = RenderMode.FILLED_ALPHA
    alpha: float = 0.6
    palette: Mapping[int, RGB] = field(default_factory=lambda: dict(FILLED_PALETTE))
    stroke: int = 3

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        missing = {1, 2, 3} - set(self.palette)
        if missing:
            raise ValueError(f"palette missing entries for indices {sorted(missing)}")
        if self.stroke < 1:
            raise ValueError("stroke must be at least 1 px")


@dataclass
class RenderedImage:
    pixels: np.ndarray
    style: RenderStyle | AblationMode
    provenance: str = ""


def _blend_region(img: np.ndarray, box, color: RGB, alpha: float) -> None:
    """In-place alpha blend of a solid color over one box region.

    Arithmetic runs in float64 with round-half-up so every channel value is
    floor(alpha*c + (1-alpha)*p + 0.5), bit for bit.
    """
    region = img[box.y_min : box.y_max, box.x_min : box.x_max, :].astype(np.float64)
    for ch in range(3):
        region[:, :, ch] = np.floor(alpha * color[ch] + (1.0 - alpha) * region[:, :, ch] + 0.5)
    img[box.y_min : box.y_max, box.x_min : box.x_max, :] = region.astype(np.uint8)


def _fill_region(img: np.ndarray, box, color: RGB) -> None:
    img[box.y_min : box.y_max, box.x_min : box.x_max, :] = color


def _stroke_region(img: np.ndarray, box, color: RGB, stroke: int) -> None:
    """Solid perimeter stroke drawn fully inside the box bounds."""
    x0, y0, x1, y1 = box.x_min, box.y_min, box.x_max, box.y_max
    s = stroke
    if (x1 - x0) <= 2 * s or (y1 - y0) <= 2 * s:
        img[y0:y1, x0:x1, :] = color
        return
    img[y0 : y0 + s, x0:x1, :] = color
    img[y1 - s : y1, x0:x1, :] = color
    img[y0:y1, x0 : x0 + s, :] = color
    img[y0:y1, x1 - s : x1, :] = color


def _sorted_entities(entities: Sequence[EntityAnnotation], palette) -> list[EntityAnnotation]:
    out = sorted(entities, key=lambda e: e.index)
    for e in out:
        if e.index not in palette:
            raise DataError(f"entity index {e.index} has no palette color")
    return out


def render_entity_boxes(
    image: np.ndarray,
    entities: Sequence[EntityAnnotation],
    style: RenderStyle | None = None,
    provenance: str = "",
) -> RenderedImage:
    """Paint each entity's box in its slot color; pixels outside boxes untouched.

    Overlapping boxes are composited in ascending index order.
    """
    if style is None:
        style = RenderStyle()
    out = np.array(image, dtype=np.uint8, copy=True)
    for e in _sorted_entities(entities, style.palette):
        color = style.palette[e.index]
        if style.mode is RenderMode.FILLED_ALPHA:
            _blend_region(out, e.bbox, color, style.alpha)
        else:
            _stroke_region(out, e.bbox, color, style.stroke)
    return RenderedImage(pixels=out, style=style, provenance=provenance)


def apply_ablation_mode(
    image: np.ndarray,
    entities: Sequence[EntityAnnotation],
    mode: AblationMode,
    style: RenderStyle | None = None,
    provenance: str = "",
) -> RenderedImage:
    """Render one of the five input variants used for image-side ablations.

    FULL: alpha-blended boxes over the photo. POSITION_ONLY: solid boxes on
    a gray canvas. NO_ENTITY: solid boxes over the photo (entity pixels
    occluded). NO_CONTEXT: gray canvas whose box interiors show the blended
    entity pixels. ONLY_CONTEXT: photo with box interiors grayed out.
    """
    if style is None:
        style = RenderStyle()
    ordered = _sorted_entities(entities, style.palette)
    img = np.array(image, dtype=np.uint8, copy=True)

    if mode is AblationMode.FULL:
        return render_entity_boxes(img, ordered, style, provenance)

    if mode is AblationMode.POSITION_ONLY:
        out = np.full_like(img, GRAY)
        for e in ordered:
            _fill_region(out, e.bbox, style.palette[e.index])
    elif mode is AblationMode.NO_ENTITY:
        out = img
        for e in ordered:
            _fill_region(out, e.bbox, style.palette[e.index])
    elif mode is AblationMode.NO_CONTEXT:
        blended = render_entity_boxes(img, ordered, style).pixels
        out = np.full_like(img, GRAY)
        for e in ordered:
            out[e.bbox.y_min : e.bbox.y_max, e.bbox.x_min : e.bbox.x_max, :] = blended[
                e.bbox.y_min : e.bbox.y_max, e.bbox.x_min : e.bbox.x_max, :
            ]
    elif mode is AblationMode.ONLY_CONTEXT:
        out = img
        for e in ordered:
            _fill_region(out, e.bbox, GRAY)
    else:  # pragma: no cover
        raise ValueError(f"unknown mode {mode}")
    return RenderedImage(pixels=out, style=mode, provenance=provenance)
