"""Declarative end-to-end runs: one YAML config in, staged artifacts out.

Stages share a single output directory; each consumes files the previous
stages wrote, so any prefix of the stage list is a valid run and later stages
can resume from disk.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import torch
import yaml

from .dataset.io import load_corpus
from .dataset.synth import SynthSpec, synthesize_corpus
from .errors import DataError, HazardBenchError, StageError
from .evaluation.caption_metrics import caption_metrics
from .evaluation.io import read_preds_tsv, read_scores_tsv, write_preds_tsv, write_scores_tsv
from .evaluation.judge import MockJudgeClient, run_judge
from .evaluation.report import ReportBundle, emit_report
from .evaluation.retrieval_metrics import RetrievalMetrics, retrieval_metrics
from .generation.train import GenTrainConfig, load_gen_checkpoint, prepare_gen_images, save_gen_checkpoint, train_generation
from .retrieval.train import (
    RetrievalTrainConfig,
    eval_batch,
    load_checkpoint,
    save_checkpoint,
    train_retrieval,
)

DEFAULT_STAGES = ("synth", "retrieval_train", "score", "eval_retrieval", "report")
KNOWN_STAGES = (
    "synth",
    "retrieval_train",
    "score",
    "eval_retrieval",
    "gen_train",
    "gen_infer",
    "eval_generation",
    "judge",
    "report",
)

RETRIEVAL_CKPT = "retrieval_ckpt"
GENERATION_CKPT = "generation_ckpt"


@dataclass
class RunConfig:
    corpus_root: Path
    out_dir: Path
    seed: int = 0
    stages: tuple[str, ...] = DEFAULT_STAGES
    synth: dict[str, Any] = field(default_factory=lambda: {"train": 32, "val": 8, "test": 8})
    retrieval: dict[str, Any] = field(default_factory=dict)
    generation: dict[str, Any] = field(default_factory=dict)
    judge_score: int = 80  # scripted mock judge reply, pipeline never calls a live judge
    eval_split: str = "test"
    recall_ks: tuple[int, ...] = (1, 5, 10)

    def __post_init__(self):
        self.corpus_root = Path(self.corpus_root)
        self.out_dir = Path(self.out_dir)
        self.stages = tuple(self.stages)
        self.recall_ks = tuple(self.recall_ks)

    def semantic_dict(self) -> dict:
        """Everything that determines results; filesystem locations excluded."""
        return {
            "seed": self.seed,
            "stages": list(self.stages),
            "synth": self.synth,
            "retrieval": self.retrieval,
            "generation": self.generation,
            "judge_score": self.judge_score,
            "eval_split": self.eval_split,
            "recall_ks": list(self.recall_ks),
        }

    def digest(self) -> str:
        canonical = json.dumps(self.semantic_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def load_run_config(path: str | Path) -> RunConfig:
    """Parse a YAML run config; relative paths resolve against the file."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    raw = yaml.safe_load(path.read_text())
    if not isinstance(raw, dict):
        raise DataError(f"config must be a mapping, got {type(raw).__name__}")
    for key in ("corpus_root", "out_dir"):
        if key not in raw:
            raise DataError(f"config missing required key {key!r}")
    known = {f.name for f in RunConfig.__dataclass_fields__.values()}
    unknown = set(raw) - known
    if unknown:
        raise DataError(f"unknown config keys: {sorted(unknown)}")
    base = path.parent
    raw["corpus_root"] = base / raw["corpus_root"]
    raw["out_dir"] = base / raw["out_dir"]
    return RunConfig(**raw)


@dataclass
class PipelineResult:
    out_dir: Path
    config_hash: str
    retrieval: dict[str, RetrievalMetrics] = field(default_factory=dict)
    caption: dict[str, float] = field(default_factory=dict)
    judge_mean: float | None = None
    notes: list[str] = field(default_factory=list)
    report_md: Path | None = None


class _Run:
    """Mutable state threaded through the stages of one pipeline execution."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.result = PipelineResult(out_dir=config.out_dir, config_hash=config.digest())
        self.retrieval_model = None
        self.generation_model = None
        self._corpus = None

    def corpus(self):
        if self._corpus is None:
            if not (self.config.corpus_root / "corpus.jsonl").exists():
                raise StageError(f"missing upstream artifact: corpus at {self.config.corpus_root}")
            self._corpus = load_corpus(self.config.corpus_root)
        return self._corpus

    def eval_samples(self):
        samples = self.corpus().split_samples(self.config.eval_split)
        if not samples:
            raise StageError(f"no samples in eval split {self.config.eval_split!r}")
        return samples


def _stage_synth(run: _Run) -> None:
    spec = SynthSpec(seed=run.config.seed, **run.config.synth)
    synthesize_corpus(spec, run.config.corpus_root)
    run._corpus = None  # force reload from disk


def _stage_retrieval_train(run: _Run) -> None:
    cfg = RetrievalTrainConfig(seed=run.config.seed, **run.config.retrieval)
    model, log = train_retrieval(run.corpus(), run.config.corpus_root, cfg)
    save_checkpoint(run.config.out_dir / RETRIEVAL_CKPT, model, cfg, log)
    run.retrieval_model = model


def _stage_score(run: _Run) -> None:
    model = run.retrieval_model
    if model is None:
        ckpt = run.config.out_dir / RETRIEVAL_CKPT
        if not (ckpt / "weights.pt").exists():
            raise StageError(f"missing upstream artifact: retrieval checkpoint at {ckpt}")
        model, _ = load_checkpoint(ckpt)
    samples = run.eval_samples()
    images, texts = eval_batch(samples, run.config.corpus_root, model.backbone_cfg)
    scores = model.score_matrix(images, texts)
    ids = [s.id for s in samples]
    write_scores_tsv(run.config.out_dir / "scores.tsv", scores, ids, ids)


def _stage_eval_retrieval(run: _Run) -> None:
    path = run.config.out_dir / "scores.tsv"
    if not path.exists():
        raise StageError(f"missing upstream artifact: {path}")
    matrix = read_scores_tsv(path)
    run.result.retrieval["TR"] = retrieval_metrics(matrix, ks=run.config.recall_ks)


def _stage_gen_train(run: _Run) -> None:
    cfg = GenTrainConfig(seed=run.config.seed, **run.config.generation)
    model, log = train_generation(run.corpus(), run.config.corpus_root, cfg)
    save_gen_checkpoint(run.config.out_dir / GENERATION_CKPT, model, cfg, log)
    run.generation_model = model


def _stage_gen_infer(run: _Run) -> None:
    model = run.generation_model
    if model is None:
        ckpt = run.config.out_dir / GENERATION_CKPT
        if not (ckpt / "weights.pt").exists():
            raise StageError(f"missing upstream artifact: generation checkpoint at {ckpt}")
        model, _ = load_gen_checkpoint(ckpt)
    samples = run.eval_samples()
    images = prepare_gen_images(samples, run.config.corpus_root, model.vision_cfg)
    texts = model.generate(images)
    write_preds_tsv(run.config.out_dir / "preds.tsv", {s.id: t for s, t in zip(samples, texts)})


def _stage_eval_generation(run: _Run) -> None:
    path = run.config.out_dir / "preds.tsv"
    if not path.exists():
        raise StageError(f"missing upstream artifact: {path}")
    preds = read_preds_tsv(path)
    refs = {s.id: s.hazard for s in run.eval_samples() if s.id in preds}
    metrics, notes = caption_metrics(preds, refs)
    run.result.caption = metrics
    run.result.notes.extend(notes)


def _stage_judge(run: _Run) -> None:
    path = run.config.out_dir / "preds.tsv"
    if not path.exists():
        raise StageError(f"missing upstream artifact: {path}")
    preds = read_preds_tsv(path)
    refs = {s.id: s.hazard for s in run.eval_samples()}
    pairs = {i: (refs[i], preds[i]) for i in preds if i in refs}
    client = MockJudgeClient(constant_score=run.config.judge_score)
    outcome = run_judge(client, pairs, run.config.out_dir / "judge_cache", backoff=0.0)
    run.result.judge_mean = outcome.mean
    if outcome.failures:
        run.result.notes.append(f"judge failures: {len(outcome.failures)} pairs unscored")


def _stage_report(run: _Run) -> None:
    bundle = ReportBundle(
        config_hash=run.result.config_hash,
        retrieval=run.result.retrieval,
        caption=run.result.caption,
        judge_mean=run.result.judge_mean,
        notes=run.result.notes,
    )
    md_path, _ = emit_report(bundle, run.config.out_dir)
    run.result.report_md = md_path


_STAGE_FNS: dict[str, Callable[[_Run], None]] = {
    "synth": _stage_synth,
    "retrieval_train": _stage_retrieval_train,
    "score": _stage_score,
    "eval_retrieval": _stage_eval_retrieval,
    "gen_train": _stage_gen_train,
    "gen_infer": _stage_gen_infer,
    "eval_generation": _stage_eval_generation,
    "judge": _stage_judge,
    "report": _stage_report,
}


def run_pipeline(config: RunConfig) -> PipelineResult:
    """Execute the configured stages in order; first failure halts the run."""
    unknown = [s for s in config.stages if s not in _STAGE_FNS]
    if unknown:
        raise StageError(f"unknown stage(s): {unknown}; known: {list(_STAGE_FNS)}")
    # single-threaded math keeps reruns bit-identical
    torch.set_num_threads(1)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    snapshot = dict(config.semantic_dict(), config_hash=config.digest())
    (config.out_dir / "run_config.json").write_text(json.dumps(snapshot, indent=2, sort_keys=True))

    run = _Run(config)
    for stage in config.stages:
        try:
            _STAGE_FNS[stage](run)
        except (StageError, DataError):
            raise
        except HazardBenchError as exc:
            raise StageError(f"stage {stage!r} failed: {exc}") from exc
        except Exception as exc:  # noqa: BLE001 - surface with stage context
            raise StageError(f"stage {stage!r} failed: {type(exc).__name__}: {exc}") from exc
    return run.result
