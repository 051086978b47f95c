"""Sample validation.

Violations are data, not failures: the validator accepts arbitrary candidate
records and reports every broken rule by name.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .types import (
    MAX_ENTITIES,
    MIN_HAZARD_WORDS,
    SOURCES,
    SPEEDS_KMH,
    SPLITS,
    Sample,
)


@dataclass
class ValidationReport:
    sample_id: str
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_sample(sample: Sample, image_dims: tuple[int, int]) -> ValidationReport:
    """Check every sample invariant against the given (width, height).

    Returns a report whose ``ok`` flag is true iff no rule failed; each
    violation names the rule and the offending field.
    """
    width, height = image_dims
    report = ValidationReport(sample_id=sample.id)
    bad = report.violations.append

    if not sample.id:
        bad("id: empty")
    if sample.source not in SOURCES:
        bad(f"source: {sample.source!r} not one of {sorted(SOURCES)}")
    if sample.split not in SPLITS:
        bad(f"split: {sample.split!r} not one of {list(SPLITS)}")
    if sample.speed_kmh not in SPEEDS_KMH:
        bad(f"speed_kmh: {sample.speed_kmh!r} not one of {list(SPEEDS_KMH)}")

    n = len(sample.entities)
    if not 1 <= n <= MAX_ENTITIES:
        bad(f"entities: count {n} outside 1..{MAX_ENTITIES}")

    seen: set[int] = set()
    for ent in sample.entities:
        if not 1 <= ent.index <= MAX_ENTITIES:
            bad(f"entity index {ent.index} outside 1..{MAX_ENTITIES}")
        if ent.index in seen:
            bad(f"entity index {ent.index} duplicated")
        seen.add(ent.index)
        if not ent.description.strip():
            bad(f"entity {ent.index} description empty")
        b = ent.bbox
        if not (0 <= b.x_min < b.x_max <= width):
            bad(
                f"entity {ent.index} bbox x-range ({b.x_min},{b.x_max}) violates "
                f"0 <= x_min < x_max <= width={width}"
            )
        if not (0 <= b.y_min < b.y_max <= height):
            bad(
                f"entity {ent.index} bbox y-range ({b.y_min},{b.y_max}) violates "
                f"0 <= y_min < y_max <= height={height}"
            )

    words = sample.hazard.split()
    if len(words) < MIN_HAZARD_WORDS:
        bad(f"hazard shorter than {MIN_HAZARD_WORDS} words ({len(words)})")

    referenced = set(sample.referenced_indices())
    for idx in sorted(seen):
        if idx not in referenced:
            bad(f"entity {idx} unreferenced in hazard")
    for idx in sorted(referenced):
        if idx not in seen:
            bad(f'hazard references "Entity #{idx}" with no matching annotation')

    return report
