"""Retrieval evaluation subsets with fixed per-category composition."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from ..errors import InsufficientSamplesError
from .types import Corpus, HazardType

# Per-category sample counts for a 100-item retrieval pool. The same
# composition is used for both evaluation splits.
DEFAULT_RETRIEVAL_COUNTS: dict[HazardType, int] = {
    HazardType.PEDESTRIAN: 10,
    HazardType.STATIONARY_OBJECT: 10,
    HazardType.TRAFFIC_SIGNAL: 10,
    HazardType.UNUSUAL_CONDITION: 10,
    HazardType.SPEEDING_BRAKING: 20,
    HazardType.SIDESWIPE: 10,
    HazardType.MERGING_MANEUVER: 20,
    HazardType.UNEXPECTED_EVENT: 5,
    HazardType.CHAIN_REACTION: 5,
}


def select_retrieval_subset(
    corpus: Corpus,
    split: str,
    counts: Mapping[HazardType, int] | None = None,
    seed: int = 0,
) -> list[str]:
    """Sample ``counts[t]`` ids of each category from a split, without replacement.

    Deterministic for a fixed (corpus, split, counts, seed): categories are
    visited in enum order and each draw uses an independent seeded generator.
    Samples lacking a category label are ignored. Raises
    InsufficientSamplesError naming the first category whose pool is too small.
    Ids come back in corpus order.
    """
    if counts is None:
        counts = DEFAULT_RETRIEVAL_COUNTS
    pool = [s for s in corpus.split_samples(split) if s.hazard_type is not None]
    by_type: dict[HazardType, list[str]] = {t: [] for t in HazardType}
    for sample in pool:
        by_type[sample.hazard_type].append(sample.id)

    rng = np.random.default_rng(seed)
    chosen: set[str] = set()
    for hazard_type in HazardType:  # enum order, not counts order
        need = counts.get(hazard_type, 0)
        have = by_type[hazard_type]
        if len(have) < need:
            raise InsufficientSamplesError(
                f"split {split!r} has {len(have)} samples of type "
                f"{hazard_type.value!r}, need {need}"
            )
        if need:
            picked = rng.choice(len(have), size=need, replace=False)
            chosen.update(have[i] for i in picked)
    return [s.id for s in pool if s.id in chosen]
