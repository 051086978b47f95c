import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hazardbench.dataset import (
    DEFAULT_RETRIEVAL_COUNTS,
    BBox,
    EntityAnnotation,
    HazardType,
    Sample,
    SynthSpec,
    load_corpus,
    save_corpus,
    select_retrieval_subset,
    synthesize_corpus,
    validate_sample,
)
from hazardbench.errors import CorpusParseError, DataError, InsufficientSamplesError

DIMS = (96, 64)


def make_sample(**overrides) -> Sample:
    base = dict(
        id="s1",
        image_ref="images/s1.png",
        source="SYNTH",
        speed_kmh=45,
        entities=[
            EntityAnnotation(1, BBox(0, 0, 10, 10), "white sedan"),
            EntityAnnotation(2, BBox(20, 5, 40, 30), "cyclist on the right"),
        ],
        hazard="Entity #1 swerves toward Entity #2 and my car cannot stop.",
        split="train",
    )
    base.update(overrides)
    return Sample(**base)


class TestValidation:
    def test_valid_sample_passes(self):
        assert validate_sample(make_sample(), DIMS).ok

    def test_speed_must_be_supported(self):
        report = validate_sample(make_sample(speed_kmh=50), DIMS)
        assert not report.ok
        assert any("speed" in v for v in report.violations)

    def test_entity_count_bounds(self):
        report = validate_sample(make_sample(entities=[]), DIMS)
        assert any("entities" in v for v in report.violations)
        many = [
            EntityAnnotation(i, BBox(0, 0, 5, 5), "x") for i in range(1, 5)
        ]
        report = validate_sample(
            make_sample(entities=many, hazard="Entity #1 Entity #2 Entity #3 Entity #4 crash now"),
            DIMS,
        )
        assert any("entities" in v for v in report.violations)

    def test_duplicate_entity_index_rejected(self):
        ents = [
            EntityAnnotation(1, BBox(0, 0, 5, 5), "a"),
            EntityAnnotation(1, BBox(10, 10, 20, 20), "b"),
        ]
        report = validate_sample(
            make_sample(entities=ents, hazard="Entity #1 hits my car very hard today"), DIMS
        )
        assert any("index" in v for v in report.violations)

    def test_degenerate_bbox_rejected(self):
        ents = [EntityAnnotation(1, BBox(5, 5, 5, 10), "a")]
        report = validate_sample(
            make_sample(entities=ents, hazard="Entity #1 hits my car very hard today"), DIMS
        )
        assert any("bbox" in v for v in report.violations)

    def test_bbox_outside_image_rejected(self):
        ents = [EntityAnnotation(1, BBox(0, 0, 200, 10), "a")]
        report = validate_sample(
            make_sample(entities=ents, hazard="Entity #1 hits my car very hard today"), DIMS
        )
        assert any("bbox" in v for v in report.violations)

    def test_short_hazard_rejected(self):
        report = validate_sample(
            make_sample(hazard="Entity #1 Entity #2"), DIMS
        )
        assert any("words" in v for v in report.violations)

    def test_unreferenced_entity_rejected(self):
        # entity 2 annotated but never mentioned
        report = validate_sample(
            make_sample(hazard="Entity #1 swerves toward my car and cannot stop."), DIMS
        )
        assert not report.ok

    def test_dangling_reference_rejected(self):
        report = validate_sample(
            make_sample(hazard="Entity #1 pushes Entity #2 into Entity #3 near my car."),
            DIMS,
        )
        assert not report.ok

    def test_reference_matching_is_case_insensitive(self):
        report = validate_sample(
            make_sample(hazard="entity #1 swerves toward ENTITY #2 and my car stops."),
            DIMS,
        )
        assert report.ok


class TestSynthAndIO:
    def test_synth_corpus_validates_and_round_trips(self, tmp_path):
        spec = SynthSpec(train=8, val=9, test=9, seed=3)
        corpus = synthesize_corpus(spec, tmp_path)
        loaded = load_corpus(tmp_path)
        assert [s.id for s in loaded.samples] == [s.id for s in corpus.samples]
        assert loaded.split_counts == {"train": 8, "val": 9, "test": 9}
        # eval splits carry categories, train does not
        assert all(s.hazard_type is None for s in loaded.split_samples("train"))
        assert all(s.hazard_type is not None for s in loaded.split_samples("val"))

    def test_synth_hazard_texts_are_unique(self, tmp_path):
        # duplicate texts would make text-to-image retrieval ambiguous
        corpus = synthesize_corpus(SynthSpec(train=120, val=40, test=40, seed=1), tmp_path)
        texts = [s.hazard for s in corpus.samples]
        assert len(set(texts)) == len(texts)

    def test_synth_is_byte_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        spec = SynthSpec(train=4, val=2, test=2, seed=11)
        synthesize_corpus(spec, a)
        synthesize_corpus(spec, b)
        assert (a / "corpus.jsonl").read_bytes() == (b / "corpus.jsonl").read_bytes()
        for img in sorted(p.name for p in (a / "images").iterdir()):
            assert (a / "images" / img).read_bytes() == (b / "images" / img).read_bytes()

    def test_parse_error_carries_line_number(self, tmp_path):
        spec = SynthSpec(train=2, val=1, test=1, seed=0)
        synthesize_corpus(spec, tmp_path)
        file = tmp_path / "corpus.jsonl"
        lines = file.read_text().splitlines()
        lines[2] = "{not json"
        file.write_text("\n".join(lines) + "\n")
        with pytest.raises(CorpusParseError, match="line 3"):
            load_corpus(tmp_path)

    def test_duplicate_id_rejected(self, tmp_path):
        spec = SynthSpec(train=2, val=1, test=1, seed=0)
        corpus = synthesize_corpus(spec, tmp_path)
        corpus.samples.append(corpus.samples[0])
        save_corpus(corpus, tmp_path)
        with pytest.raises(DataError, match="duplicate"):
            load_corpus(tmp_path)

    def test_validation_failure_names_sample_id(self, tmp_path):
        spec = SynthSpec(train=2, val=1, test=1, seed=0)
        synthesize_corpus(spec, tmp_path)
        file = tmp_path / "corpus.jsonl"
        lines = file.read_text().splitlines()
        record = json.loads(lines[0])
        record["hazard"] = "too short"
        lines[0] = json.dumps(record)
        file.write_text("\n".join(lines) + "\n")
        with pytest.raises(DataError, match=record["id"]):
            load_corpus(tmp_path)

    def test_missing_image_reported(self, tmp_path):
        spec = SynthSpec(train=2, val=1, test=1, seed=0)
        corpus = synthesize_corpus(spec, tmp_path)
        (tmp_path / corpus.samples[0].image_ref).unlink()
        with pytest.raises(DataError, match="image file missing"):
            load_corpus(tmp_path)

    def test_hazard_type_survives_round_trip(self, tmp_path):
        spec = SynthSpec(train=1, val=9, test=0, seed=0)
        synthesize_corpus(spec, tmp_path)
        loaded = load_corpus(tmp_path)
        types = [s.hazard_type for s in loaded.split_samples("val")]
        assert set(types) == set(HazardType)


class TestRetrievalSubset:
    def _corpus_with(self, per_type: int) -> "Corpus":
        from hazardbench.dataset import Corpus

        samples = []
        i = 0
        for t in HazardType:
            for _ in range(per_type):
                samples.append(
                    make_sample(
                        id=f"v{i:03d}",
                        split="val",
                        hazard_type=t,
                        entities=[EntityAnnotation(1, BBox(0, 0, 5, 5), "x")],
                        hazard="Entity #1 hits my car very hard today",
                    )
                )
                i += 1
        return Corpus(samples=samples)

    def test_composition_matches_default_counts(self):
        corpus = self._corpus_with(per_type=20)
        subset = select_retrieval_subset(corpus, "val")
        assert len(subset) == 100
        from collections import Counter

        by_id = corpus.by_id()
        got = Counter(by_id[i].hazard_type for i in subset)
        assert dict(got) == DEFAULT_RETRIEVAL_COUNTS

    def test_selection_is_deterministic_and_order_preserving(self):
        corpus = self._corpus_with(per_type=20)
        ids_a = select_retrieval_subset(corpus, "val", seed=3)
        ids_b = select_retrieval_subset(corpus, "val", seed=3)
        assert ids_a == ids_b
        assert ids_a == sorted(ids_a)  # corpus order == id order here

    def test_seed_changes_selection(self):
        corpus = self._corpus_with(per_type=20)
        assert select_retrieval_subset(corpus, "val", seed=0) != select_retrieval_subset(
            corpus, "val", seed=1
        )

    def test_insufficient_pool_names_category(self):
        corpus = self._corpus_with(per_type=19)  # two types need 20
        with pytest.raises(InsufficientSamplesError, match="19"):
            select_retrieval_subset(corpus, "val")

    def test_default_counts_total_100(self):
        assert sum(DEFAULT_RETRIEVAL_COUNTS.values()) == 100


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=3),
    speed=st.sampled_from([15, 45, 75]),
    data=st.data(),
)
def test_generated_samples_always_validate(n, speed, data):
    entities = []
    for i in range(1, n + 1):
        x0 = data.draw(st.integers(0, 80))
        y0 = data.draw(st.integers(0, 50))
        w = data.draw(st.integers(1, 96 - x0 - 1)) if x0 < 95 else 1
        h = data.draw(st.integers(1, 64 - y0 - 1)) if y0 < 63 else 1
        entities.append(EntityAnnotation(i, BBox(x0, y0, x0 + w, y0 + h), f"thing {i}"))
    refs = " ".join(f"Entity #{i}" for i in range(1, n + 1))
    hazard = f"{refs} moves quickly toward my car right now"
    sample = make_sample(entities=entities, hazard=hazard, speed_kmh=speed)
    assert validate_sample(sample, DIMS).ok
