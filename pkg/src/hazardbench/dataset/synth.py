"""Synthetic corpus generation.

Produces small fully-deterministic corpora for desk-scale experiments:
banded background scenes with solid-colour entity patches, templated
hazard texts that reference every annotated entity, and round-robin
hazard categories on the evaluation splits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .io import save_corpus
from .types import (
    SPEEDS_KMH,
    BBox,
    Corpus,
    EntityAnnotation,
    HazardType,
    Sample,
)

# Solid patch colours, one per entity slot.
_PATCH_COLORS = (
    (220, 40, 40),
    (40, 40, 220),
    (240, 240, 240),
)

_DESCRIPTIONS = (
    "white sedan braking hard",
    "cyclist drifting off the curb",
    "pedestrian stepping into the road",
    "delivery van blocking the lane",
    "motorbike weaving between cars",
    "truck merging without signalling",
    "dog running across the street",
    "bus pulling out from the stop",
)

_ACTIONS = (
    "suddenly swerves toward",
    "brakes sharply in front of",
    "cuts across the path of",
    "drifts into the lane of",
    "accelerates straight at",
    "rolls backwards into",
)

_SCENES = (
    "near the junction",
    "on the wet road",
    "beside the parked cars",
    "under the overpass",
    "at the crosswalk",
    "along the narrow street",
    "past the roadworks",
    "by the bus stop",
)

_TAILS = (
    "so my car cannot stop in time",
    "while my car keeps the same speed",
    "forcing my car to brake hard",
    "and my car must swerve to avoid a collision",
    "leaving my car no room to pass",
    "just as my car begins to overtake",
)


@dataclass
class SynthSpec:
    """Sizes and determinism knobs for a synthetic corpus."""

    train: int = 64
    val: int = 18
    test: int = 18
    image_width: int = 96
    image_height: int = 64
    seed: int = 0
    source: str = "SYNTH"
    counts: dict[str, int] = field(init=False)

    def __post_init__(self) -> None:
        self.counts = {"train": self.train, "val": self.val, "test": self.test}


def _background(rng: np.random.Generator, width: int, height: int) -> np.ndarray:
    """Horizontal colour bands with per-image random shades."""
    bands = rng.integers(40, 200, size=(4, 3), dtype=np.int64)
    img = np.zeros((height, width, 3), dtype=np.uint8)
    band_h = max(1, height // 4)
    for i in range(4):
        y0 = i * band_h
        y1 = height if i == 3 else (i + 1) * band_h
        img[y0:y1, :, :] = bands[i]
    return img


def _entity_boxes(rng: np.random.Generator, n: int, width: int, height: int) -> list[BBox]:
    """n non-overlapping boxes, one per horizontal third of the frame."""
    boxes = []
    cell_w = width // 3
    for slot in range(n):
        x_lo = slot * cell_w
        bw = int(rng.integers(cell_w // 3, cell_w - 4))
        bh = int(rng.integers(height // 4, height // 2))
        x0 = x_lo + int(rng.integers(0, cell_w - bw - 1))
        y0 = int(rng.integers(2, height - bh - 2))
        boxes.append(BBox(x0, y0, x0 + bw, y0 + bh))
    return boxes


def _hazard_text(rng: np.random.Generator, indices: list[int], seen: set[str]) -> str:
    """One templated explanation, distinct from every text drawn so far.

    Distinct texts keep retrieval well-posed: with duplicates, two queries
    would tie on every candidate and the gold image would be ambiguous.
    """
    for _ in range(1000):
        action = _ACTIONS[int(rng.integers(len(_ACTIONS)))]
        scene = _SCENES[int(rng.integers(len(_SCENES)))]
        tail = _TAILS[int(rng.integers(len(_TAILS)))]
        if len(indices) == 1:
            text = f"Entity #{indices[0]} {action} my car {scene} {tail}."
        else:
            refs = " and ".join(f"Entity #{i}" for i in indices[1:])
            text = f"Entity #{indices[0]} {action} {refs} {scene} {tail}."
        if text not in seen:
            seen.add(text)
            return text
    raise ValueError("hazard template pool exhausted; corpus too large for unique texts")


_TYPES = tuple(HazardType)


def synthesize_corpus(spec: SynthSpec, out_dir: str | Path) -> Corpus:
    """Generate images plus records under out_dir and return the corpus.

    Identical specs yield byte-identical image files and corpus files.
    """
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    w, h = spec.image_width, spec.image_height

    samples: list[Sample] = []
    seen_texts: set[str] = set()
    for split in ("train", "val", "test"):
        for i in range(spec.counts[split]):
            sid = f"{split}-{i:04d}"
            img = _background(rng, w, h)
            n_entities = 1 + int(rng.integers(0, 3))
            boxes = _entity_boxes(rng, n_entities, w, h)
            entities = []
            for slot, box in enumerate(boxes):
                img[box.y_min : box.y_max, box.x_min : box.x_max, :] = _PATCH_COLORS[slot]
                desc = _DESCRIPTIONS[int(rng.integers(len(_DESCRIPTIONS)))]
                entities.append(
                    EntityAnnotation(index=slot + 1, bbox=box, description=desc)
                )

            image_ref = f"images/{sid}.png"
            Image.fromarray(img).save(out / image_ref, format="PNG")

            hazard_type = None if split == "train" else _TYPES[i % len(_TYPES)]
            samples.append(
                Sample(
                    id=sid,
                    image_ref=image_ref,
                    source=spec.source,
                    speed_kmh=SPEEDS_KMH[i % len(SPEEDS_KMH)],
                    entities=entities,
                    hazard=_hazard_text(rng, [e.index for e in entities], seen_texts),
                    split=split,
                    hazard_type=hazard_type,
                )
            )

    corpus = Corpus(samples=samples)
    save_corpus(corpus, out)
    return corpus
