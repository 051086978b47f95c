"""Geometric and photometric input pipeline.

Order of operations for a training sample: color jitter, square resize
(with box rescaling), entity box rendering, random crop. Evaluation skips
jitter, center-crops, and consumes no randomness. Horizontal flip is never
applied because it would desync box colors from "left/right" phrases in
the texts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from PIL import Image

from ..dataset.types import BBox, EntityAnnotation
from .render import AblationMode, RenderStyle, apply_ablation_mode

HFLIP_ENABLED = False


@dataclass(frozen=True)
class JitterConfig:
    brightness: float = 0.5
    hue: float = 0.3
    saturation: float = 0.3


@dataclass(frozen=True)
class GeomConfig:
    crop_side: int = 224
    jitter: JitterConfig = field(default_factory=JitterConfig)

    @property
    def resize_side(self) -> int:
        # crop margin of 16 px is part of the contract, not tunable
        return self.crop_side + 16


def color_jitter(image: np.ndarray, rng: np.random.Generator, cfg: JitterConfig) -> np.ndarray:
    """Random brightness/hue/saturation shift. Always draws three factors."""
    b = float(rng.uniform(max(0.0, 1.0 - cfg.brightness), 1.0 + cfg.brightness))
    h = float(rng.uniform(-cfg.hue, cfg.hue))
    s = float(rng.uniform(max(0.0, 1.0 - cfg.saturation), 1.0 + cfg.saturation))

    out = np.clip(image.astype(np.float64) * b, 0, 255).astype(np.uint8)

    hsv = np.asarray(Image.fromarray(out).convert("HSV")).copy()
    shift = int(round(h * 255.0))
    hsv[:, :, 0] = ((hsv[:, :, 0].astype(np.int64) + shift) % 256).astype(np.uint8)
    out = np.asarray(Image.fromarray(hsv, mode="HSV").convert("RGB"))

    gray = out.astype(np.float64).mean(axis=2, keepdims=True)
    out = np.clip(gray + s * (out.astype(np.float64) - gray), 0, 255).astype(np.uint8)
    return out


def rescale_box(box: BBox, ratio_x: float, ratio_y: float, side: int) -> BBox:
    """Scale box corners by per-axis ratios, rounding half up, clipped to the frame."""
    x0 = int(math.floor(box.x_min * ratio_x + 0.5))
    y0 = int(math.floor(box.y_min * ratio_y + 0.5))
    x1 = int(math.floor(box.x_max * ratio_x + 0.5))
    y1 = int(math.floor(box.y_max * ratio_y + 0.5))
    x0 = min(max(x0, 0), side - 1)
    y0 = min(max(y0, 0), side - 1)
    x1 = min(max(x1, x0 + 1), side)
    y1 = min(max(y1, y0 + 1), side)
    return BBox(x0, y0, x1, y1)


def resize_square(
    image: np.ndarray, entities: Sequence[EntityAnnotation], side: int
) -> tuple[np.ndarray, list[EntityAnnotation]]:
    """Resize to side x side (bilinear) and rescale entity boxes to match."""
    h, w = image.shape[:2]
    resized = np.asarray(
        Image.fromarray(image).resize((side, side), resample=Image.BILINEAR)
    )
    ratio_x, ratio_y = side / w, side / h
    rescaled = [
        EntityAnnotation(e.index, rescale_box(e.bbox, ratio_x, ratio_y, side), e.description)
        for e in entities
    ]
    return resized, rescaled


def random_crop(image: np.ndarray, crop_side: int, rng: np.random.Generator) -> np.ndarray:
    max_off = image.shape[0] - crop_side
    top = int(rng.integers(0, max_off + 1))
    left = int(rng.integers(0, max_off + 1))
    return image[top : top + crop_side, left : left + crop_side, :]


def center_crop(image: np.ndarray, crop_side: int) -> np.ndarray:
    off = (image.shape[0] - crop_side) // 2
    return image[off : off + crop_side, off : off + crop_side, :]


def prepare_image(
    image: np.ndarray,
    entities: Sequence[EntityAnnotation],
    config: GeomConfig,
    train: bool = False,
    rng: np.random.Generator | None = None,
    mode: AblationMode = AblationMode.FULL,
    style: RenderStyle | None = None,
) -> np.ndarray:
    """Full image pipeline; returns a crop_side x crop_side x 3 uint8 array."""
    if train:
        if rng is None:
            raise ValueError("training pipeline needs an rng")
        image = color_jitter(image, rng, config.jitter)
    resized, rescaled = resize_square(image, entities, config.resize_side)
    rendered = apply_ablation_mode(resized, rescaled, mode, style=style).pixels
    if train:
        return random_crop(rendered, config.crop_side, rng)
    return center_crop(rendered, config.crop_side)
