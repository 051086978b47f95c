from .types import (
    BBox,
    Corpus,
    EntityAnnotation,
    HazardType,
    SOURCES,
    SPEEDS_KMH,
    SPLITS,
    Sample,
)
from .validate import ValidationReport, validate_sample
from .io import load_corpus, save_corpus
from .synth import SynthSpec, synthesize_corpus
from .subset import DEFAULT_RETRIEVAL_COUNTS, select_retrieval_subset

__all__ = [
    "BBox",
    "Corpus",
    "DEFAULT_RETRIEVAL_COUNTS",
    "EntityAnnotation",
    "HazardType",
    "SOURCES",
    "SPEEDS_KMH",
    "SPLITS",
    "Sample",
    "SynthSpec",
    "ValidationReport",
    "load_corpus",
    "save_corpus",
    "select_retrieval_subset",
    "synthesize_corpus",
    "validate_sample",
]
