"""Core record types for annotated driving scenes.

A sample ties one scene image to a hypothesized speed, 1-3 visual entities
(box + short description), and a free-text hazard explanation that refers to
each entity as "Entity #n".
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

SPEEDS_KMH = (15, 45, 75)
SOURCES = frozenset({"BDD", "ECP", "SYNTH"})
SPLITS = ("train", "val", "test")

MAX_ENTITIES = 3
MIN_HAZARD_WORDS = 5

# Case-insensitive "Entity #n"; whitespace tolerated between "#" and the digit.
# Group 1 is the "Entity #" prefix (casing/spacing preserved for rewrites),
# group 2 the one-digit index.
ENTITY_REF_PATTERN = re.compile(r"(entity\s*#\s*)([1-9])", re.IGNORECASE)


class HazardType(Enum):
    PEDESTRIAN = "Pedestrian"
    STATIONARY_OBJECT = "StationaryObject"
    TRAFFIC_SIGNAL = "TrafficSignal"
    UNUSUAL_CONDITION = "UnusualCondition"
    SPEEDING_BRAKING = "SpeedingBraking"
    SIDESWIPE = "Sideswipe"
    MERGING_MANEUVER = "MergingManeuver"
    UNEXPECTED_EVENT = "UnexpectedEvent"
    CHAIN_REACTION = "ChainReaction"


@dataclass(frozen=True)
class BBox:
    """Pixel-coordinate box, x_max/y_max exclusive."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def as_list(self) -> list[int]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min


@dataclass(frozen=True)
class EntityAnnotation:
    index: int
    bbox: BBox
    description: str


@dataclass
class Sample:
    """One annotated scene."""

    id: str
    image_ref: str
    source: str
    speed_kmh: int
    entities: list[EntityAnnotation]
    hazard: str
    split: str
    hazard_type: HazardType | None = None

    def entity_indices(self) -> list[int]:
        return [e.index for e in self.entities]

    def referenced_indices(self) -> list[int]:
        """Entity indices mentioned as "Entity #n" in the hazard text."""
        return [int(m.group(2)) for m in ENTITY_REF_PATTERN.finditer(self.hazard)]


@dataclass
class Corpus:
    samples: list[Sample] = field(default_factory=list)

    @property
    def split_counts(self) -> dict[str, int]:
        counts = {s: 0 for s in SPLITS}
        for sample in self.samples:
            counts[sample.split] = counts.get(sample.split, 0) + 1
        return counts

    def split_samples(self, split: str) -> list[Sample]:
        return [s for s in self.samples if s.split == split]

    def by_id(self) -> dict[str, Sample]:
        return {s.id: s for s in self.samples}

    def __len__(self) -> int:
        return len(self.samples)
