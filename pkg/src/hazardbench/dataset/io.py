"""Corpus file I/O.

Corpora are newline-delimited UTF-8 records (one JSON object per line), with
scene images stored as files referenced by relative path from the corpus
file's directory.
"""

from __future__ import annotations

import json
from pathlib import Path

from PIL import Image

from ..errors import CorpusParseError, DataError
from .types import BBox, Corpus, EntityAnnotation, HazardType, Sample
from .validate import validate_sample

CORPUS_FILENAME = "corpus.jsonl"


def corpus_file(path: str | Path) -> Path:
    """Resolve a corpus argument that may be a file or its directory."""
    p = Path(path)
    if p.is_dir():
        p = p / CORPUS_FILENAME
    return p


def sample_to_record(sample: Sample) -> dict:
    record = {
        "id": sample.id,
        "image": sample.image_ref,
        "source": sample.source,
        "speed_kmh": sample.speed_kmh,
        "split": sample.split,
        "hazard": sample.hazard,
        "entities": [
            {"index": e.index, "bbox": e.bbox.as_list(), "description": e.description}
            for e in sample.entities
        ],
    }
    if sample.hazard_type is not None:
        record["hazard_type"] = sample.hazard_type.value
    return record


def record_to_sample(record: dict) -> Sample:
    try:
        entities = [
            EntityAnnotation(
                index=int(e["index"]),
                bbox=BBox(*[int(v) for v in e["bbox"]]),
                description=str(e["description"]),
            )
            for e in record["entities"]
        ]
        hazard_type = record.get("hazard_type")
        return Sample(
            id=str(record["id"]),
            image_ref=str(record["image"]),
            source=str(record["source"]),
            speed_kmh=int(record["speed_kmh"]),
            entities=entities,
            hazard=str(record["hazard"]),
            split=str(record["split"]),
            hazard_type=HazardType(hazard_type) if hazard_type is not None else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusParseError(f"bad record: {exc}") from None


def image_dims(corpus_root: Path, image_ref: str) -> tuple[int, int]:
    """(width, height) of a referenced image, from the file header."""
    with Image.open(corpus_root / image_ref) as im:
        return im.size


def load_image(corpus_root: str | Path, image_ref: str):
    import numpy as np

    with Image.open(Path(corpus_root) / image_ref) as im:
        return np.asarray(im.convert("RGB"))


def load_corpus(path: str | Path, validate: bool = True) -> Corpus:
    """Load and validate a corpus file, preserving record order.

    Raises CorpusParseError (with line number) on malformed lines and
    DataError naming the offending sample ids on validation failures.
    """
    file = corpus_file(path)
    if not file.is_file():
        raise DataError(f"corpus file not found: {file}")
    root = file.parent

    samples: list[Sample] = []
    seen_ids: set[str] = set()
    problems: list[str] = []
    with open(file, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(str(exc), line_no=line_no) from None
            try:
                sample = record_to_sample(record)
            except CorpusParseError as exc:
                raise CorpusParseError(str(exc), line_no=line_no) from None
            if sample.id in seen_ids:
                raise DataError(f"duplicate sample id {sample.id!r} (line {line_no})")
            seen_ids.add(sample.id)
            samples.append(sample)

            if validate:
                try:
                    dims = image_dims(root, sample.image_ref)
                except FileNotFoundError:
                    problems.append(f"{sample.id}: image file missing ({sample.image_ref})")
                    continue
                report = validate_sample(sample, dims)
                if not report.ok:
                    problems.extend(f"{sample.id}: {v}" for v in report.violations)

    if problems:
        raise DataError(
            "corpus failed validation for %d sample(s):\n  %s"
            % (len({p.split(":")[0] for p in problems}), "\n  ".join(problems))
        )
    return Corpus(samples=samples)


def save_corpus(corpus: Corpus, path: str | Path) -> Path:
    """Write corpus records as one JSON object per line."""
    file = corpus_file(path)
    file.parent.mkdir(parents=True, exist_ok=True)
    with open(file, "w", encoding="utf-8") as fh:
        for sample in corpus.samples:
            fh.write(json.dumps(sample_to_record(sample), sort_keys=True) + "\n")
    return file
