"""Text-side augmentation and input variants."""

from __future__ import annotations

import re
from dataclasses import replace
from typing import Mapping

import numpy as np

from ..dataset.types import ENTITY_REF_PATTERN as _REF
from ..dataset.types import EntityAnnotation, Sample
from ..errors import DataError


def random_entity_permutation(indices: list[int], rng: np.random.Generator) -> dict[int, int]:
    """Uniform random bijection over the given entity indices."""
    shuffled = list(indices)
    rng.shuffle(shuffled)
    return dict(zip(indices, shuffled))


def shuffle_entities(sample: Sample, permutation: Mapping[int, int]) -> Sample:
    """Relabel entity indices by a permutation, rewriting every text reference.

    All references are rewritten in one pass, so swaps cannot cascade
    (1->2 never feeds a later 2->1 rewrite). The index-to-color palette is
    left alone: after relabeling, each physical entity is drawn in the
    color of its new index.
    """
    indices = sample.entity_indices()
    if sorted(permutation.keys()) != indices or sorted(permutation.values()) != indices:
        raise DataError(
            f"permutation {dict(permutation)} is not a bijection over entity indices {indices}"
        )

    def _rewrite(m: re.Match) -> str:
        old = int(m.group(2))
        return m.group(1) + str(permutation.get(old, old))

    hazard = _REF.sub(_rewrite, sample.hazard)
    entities = sorted(
        (
            EntityAnnotation(permutation[e.index], e.bbox, e.description)
            for e in sample.entities
        ),
        key=lambda e: e.index,
    )
    return replace(sample, hazard=hazard, entities=entities)


def make_comprehensive_text(sample: Sample) -> str:
    """Expand the first mention of each entity with its description.

    "Entity #n" becomes "Entity #n, <description>," at its first occurrence
    only; later mentions are untouched. Deleting the inserted ", <desc>,"
    spans recovers the original hazard text exactly.
    """
    descriptions = {e.index: e.description for e in sample.entities}
    expanded: set[int] = set()
    out: list[str] = []
    pos = 0
    for m in _REF.finditer(sample.hazard):
        idx = int(m.group(2))
        if idx in expanded or idx not in descriptions:
            continue
        expanded.add(idx)
        out.append(sample.hazard[pos : m.end()])
        out.append(f", {descriptions[idx]},")
        pos = m.end()
    out.append(sample.hazard[pos:])
    return "".join(out)
