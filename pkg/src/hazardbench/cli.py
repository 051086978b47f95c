"""Command-line entrypoint.

Exit codes: 0 ok, 1 usage error, 2 data error, 3 stage/runtime failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .dataset.io import load_corpus, load_image
from .dataset.subset import select_retrieval_subset
from .dataset.synth import SynthSpec, synthesize_corpus
from .errors import DataError, HazardBenchError, StageError
from .evaluation.caption_metrics import caption_metrics
from .evaluation.io import read_preds_tsv, read_scores_tsv, write_preds_tsv, write_scores_tsv
from .evaluation.judge import HttpJudgeClient, MockJudgeClient, run_judge
from .evaluation.report import ReportBundle, emit_report
from .evaluation.retrieval_metrics import retrieval_metrics
from .pipeline import load_run_config, run_pipeline
from .preprocess.render import AblationMode

_MODE_NAMES = {m.value.replace("_", "-").lower(): m for m in AblationMode}


@click.group()
def cli():
    """Driving-hazard retrieval and explanation toolkit."""


# --------------------------------------------------------------------------- data


@cli.group()
def data():
    """Corpus validation, synthesis, and subset selection."""


@data.command("validate")
@click.argument("corpus", type=click.Path(exists=True, path_type=Path))
def data_validate(corpus: Path):
    loaded = load_corpus(corpus)
    counts = loaded.split_counts
    click.echo(f"ok: {len(loaded)} samples " + json.dumps(counts, sort_keys=True))


@data.command("synth")
@click.option("--train", default=32, show_default=True, type=int)
@click.option("--val", default=8, show_default=True, type=int)
@click.option("--test", default=8, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(path_type=Path))
def data_synth(train: int, val: int, test: int, seed: int, out: Path):
    corpus = synthesize_corpus(SynthSpec(train=train, val=val, test=test, seed=seed), out)
    click.echo(f"wrote {len(corpus)} samples to {out}")


@data.command("subset")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--split", default="test", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", type=click.Path(path_type=Path), help="Write ids here, one per line.")
def data_subset(corpus_path: Path, split: str, seed: int, out: Path | None):
    ids = select_retrieval_subset(load_corpus(corpus_path), split, seed=seed)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text("\n".join(ids) + "\n")
        click.echo(f"wrote {len(ids)} ids to {out}")
    else:
        for sample_id in ids:
            click.echo(sample_id)


# ---------------------------------------------------------------------------- prep


@cli.group()
def prep():
    """Image preparation inspection."""


@prep.command("preview")
@click.argument("corpus", type=click.Path(exists=True, path_type=Path))
@click.argument("sample_id")
@click.option("--mode", default="full", show_default=True, type=click.Choice(sorted(_MODE_NAMES)))
@click.option("--out", required=True, type=click.Path(path_type=Path))
def prep_preview(corpus: Path, sample_id: str, mode: str, out: Path):
    """Render one sample's boxes under the chosen ablation and save a PNG."""
    from PIL import Image

    from .preprocess.render import apply_ablation_mode

    loaded = load_corpus(corpus)
    sample = loaded.by_id().get(sample_id)
    if sample is None:
        raise DataError(f"no sample with id {sample_id!r}")
    image = load_image(corpus if corpus.is_dir() else corpus.parent, sample.image_ref)
    rendered = apply_ablation_mode(image, sample.entities, _MODE_NAMES[mode])
    out.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(rendered.pixels, mode="RGB").save(out)
    click.echo(f"wrote {out}")


# ----------------------------------------------------------------------- retrieval


@cli.group()
def retrieval():
    """Dual-encoder retrieval training and scoring."""


@retrieval.command("train")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
def retrieval_train_cmd(corpus_path: Path, config_path: Path | None, out: Path):
    """Train on the train split.

    The JSON config holds RetrievalTrainConfig fields, plus an optional
    "backbone" object with "vision"/"text"/"embed_dim" overrides.
    """
    from .retrieval.backbone import BackboneConfig, TextConfig, VisionConfig
    from .retrieval.train import RetrievalTrainConfig, save_checkpoint, train_retrieval

    kwargs = _load_json_config(config_path)
    if "ablation" in kwargs:
        kwargs["ablation"] = AblationMode(kwargs["ablation"])
    backbone = None
    if "backbone" in kwargs:
        spec = kwargs.pop("backbone")
        backbone = BackboneConfig(
            vision=VisionConfig(**spec.get("vision", {})),
            text=TextConfig(**spec.get("text", {})),
            embed_dim=spec.get("embed_dim", 64),
        )
    cfg = RetrievalTrainConfig(**kwargs)
    corpus = load_corpus(corpus_path)
    model, log = train_retrieval(corpus, corpus_path, cfg, backbone=backbone)
    save_checkpoint(out, model, cfg, log)
    click.echo(f"saved checkpoint to {out}")


@retrieval.command("score")
@click.option("--ckpt", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--split", default="test", show_default=True)
@click.option("--subset", "subset_path", type=click.Path(exists=True, path_type=Path),
              help="Optional file of sample ids (one per line) to score.")
@click.option("--out", required=True, type=click.Path(path_type=Path))
def retrieval_score_cmd(ckpt: Path, corpus_path: Path, split: str, subset_path: Path | None, out: Path):
    """Score every text query against every image candidate; write scores.tsv."""
    from .retrieval.train import eval_batch, load_checkpoint

    model, _ = load_checkpoint(ckpt)
    corpus = load_corpus(corpus_path)
    samples = corpus.split_samples(split)
    if subset_path is not None:
        wanted = set(subset_path.read_text().split())
        samples = [s for s in samples if s.id in wanted]
        missing = wanted - {s.id for s in samples}
        if missing:
            raise DataError(f"subset ids not in split {split!r}: {sorted(missing)[:5]}")
    if not samples:
        raise DataError(f"no samples to score in split {split!r}")
    images, texts = eval_batch(samples, corpus_path, model.backbone_cfg)
    scores = model.score_matrix(images, texts)
    ids = [s.id for s in samples]
    write_scores_tsv(out, scores, ids, ids)
    click.echo(f"wrote {scores.shape[0]}x{scores.shape[1]} scores to {out}")


# ----------------------------------------------------------------------------- gen


@cli.group()
def gen():
    """Explanation generator training and inference."""


@gen.command("train")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--init-vision", "init_vision", type=click.Path(exists=True, path_type=Path),
              help="Retrieval checkpoint whose vision tower seeds the generator.")
@click.option("--out", required=True, type=click.Path(path_type=Path))
def gen_train_cmd(corpus_path: Path, config_path: Path | None, init_vision: Path | None, out: Path):
    import torch

    from .generation.model import GEN_TAP_CONFIG, GEN_VISION_CONFIG, TapConfig
    from .generation.train import GenTrainConfig, save_gen_checkpoint, train_generation
    from .retrieval.backbone import VisionConfig

    kwargs = _load_json_config(config_path)
    if "ablation" in kwargs:
        kwargs["ablation"] = AblationMode(kwargs["ablation"])
    cfg = GenTrainConfig(**kwargs)
    vision_cfg, tap = GEN_VISION_CONFIG, GEN_TAP_CONFIG
    vision_state = None
    if init_vision is not None:
        # adopt the donor tower's geometry; taps stay evenly spaced
        donor = json.loads((init_vision / "config.json").read_text())
        if donor.get("kind") != "retrieval":
            raise DataError(f"{init_vision} is not a retrieval checkpoint")
        vision_cfg = VisionConfig(**donor["backbone"]["vision"])
        if vision_cfg.layers % tap.expected_taps != 0:
            raise DataError(
                f"vision tower has {vision_cfg.layers} layers, "
                f"not divisible into {tap.expected_taps} taps"
            )
        tap = TapConfig(stride=vision_cfg.layers // tap.expected_taps)
        blob = torch.load(init_vision / "weights.pt", weights_only=True)
        vision_state = {
            k.removeprefix("vision."): v for k, v in blob.items() if k.startswith("vision.")
        }
        if not vision_state:
            raise DataError(f"{init_vision} holds no vision tower weights")
    corpus = load_corpus(corpus_path)
    model, log = train_generation(
        corpus, corpus_path, cfg, vision_cfg=vision_cfg, tap=tap, vision_state=vision_state
    )
    save_gen_checkpoint(out, model, cfg, log)
    click.echo(f"saved checkpoint to {out}")


@gen.command("infer")
@click.option("--ckpt", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--split", default="test", show_default=True)
@click.option("--out", required=True, type=click.Path(path_type=Path))
def gen_infer_cmd(ckpt: Path, corpus_path: Path, split: str, out: Path):
    from .generation.train import load_gen_checkpoint, prepare_gen_images

    model, _ = load_gen_checkpoint(ckpt)
    corpus = load_corpus(corpus_path)
    samples = corpus.split_samples(split)
    if not samples:
        raise DataError(f"no samples in split {split!r}")
    images = prepare_gen_images(samples, corpus_path, model.vision_cfg)
    texts = model.generate(images)
    write_preds_tsv(out, {s.id: t for s, t in zip(samples, texts)})
    click.echo(f"wrote {len(samples)} predictions to {out}")


# ---------------------------------------------------------------------------- eval


@cli.group(name="eval")
def eval_group():
    """Retrieval and generation evaluation."""


@eval_group.command("retrieval")
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--ks", default="1,5,10", show_default=True, help="Comma-separated recall cutoffs.")
def eval_retrieval_cmd(scores_path: Path, ks: str):
    matrix = read_scores_tsv(scores_path)
    cutoffs = [int(k) for k in ks.split(",") if k]
    metrics = retrieval_metrics(matrix, ks=cutoffs)
    click.echo(f"mean_rank\t{metrics.mean_rank:.4f}")
    for k in cutoffs:
        click.echo(f"recall@{k}\t{metrics.recall_at[k]:.4f}")


@eval_group.command("generation")
@click.option("--preds", "preds_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--refs", "refs_path", required=True, type=click.Path(exists=True, path_type=Path),
              help="Corpus whose hazard texts are the references.")
@click.option("--split", default="test", show_default=True)
@click.option("--judge", default="off", show_default=True, type=click.Choice(["on", "off", "mock"]))
@click.option("--judge-model", default="judge-model", show_default=True)
@click.option("--cache-dir", type=click.Path(path_type=Path), help="Judge response cache.")
def eval_generation_cmd(preds_path: Path, refs_path: Path, split: str, judge: str,
                        judge_model: str, cache_dir: Path | None):
    preds = read_preds_tsv(preds_path)
    corpus = load_corpus(refs_path)
    refs = {s.id: s.hazard for s in corpus.split_samples(split) if s.id in preds}
    missing = set(preds) - set(refs)
    if missing:
        raise DataError(f"predictions without references: {sorted(missing)[:5]}")
    metrics, notes = caption_metrics(preds, refs)
    for name in sorted(metrics):
        click.echo(f"{name}\t{metrics[name]:.4f}")
    if judge != "off":
        client = MockJudgeClient(constant_score=80) if judge == "mock" else HttpJudgeClient()
        pairs = {i: (refs[i], preds[i]) for i in preds}
        outcome = run_judge(client, pairs, cache_dir or preds_path.parent / "judge_cache",
                            model=judge_model)
        mean = "n/a" if outcome.mean is None else f"{outcome.mean:.1f}"
        click.echo(f"judge_mean\t{mean}")
        if outcome.failures:
            click.echo(f"judge_failures\t{len(outcome.failures)}", err=True)
    for note in notes:
        click.echo(f"note: {note}", err=True)


# -------------------------------------------------------------------------- zeroshot


@cli.group()
def zeroshot():
    """Zero-shot prompting of an external vision-language model."""


@zeroshot.command("run")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--split", default="test", show_default=True)
@click.option("--client", "client_kind", default="mock", show_default=True,
              type=click.Choice(["mock", "live"]))
@click.option("--model", default="mock-vlm", show_default=True)
@click.option("--degraded", is_flag=True, help="Omit scene facts from the prompt.")
@click.option("--cache-dir", type=click.Path(path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
def zeroshot_run_cmd(corpus_path: Path, split: str, client_kind: str, model: str,
                     degraded: bool, cache_dir: Path | None, out: Path):
    from .zeroshot import HttpVlmClient, MockVlmClient, ZeroShotRunConfig, run_zeroshot

    client = MockVlmClient() if client_kind == "mock" else HttpVlmClient()
    cfg = ZeroShotRunConfig(model=model, cache_dir=cache_dir, degraded=degraded)
    result = run_zeroshot(client, corpus_path, split, out, cfg)
    click.echo(
        f"wrote {len(result.preds)} predictions to {out} "
        f"({result.client_calls} calls, {result.cache_hits} cache hits)"
    )
    if result.failures:
        click.echo(f"failed samples: {','.join(result.failures)}", err=True)


# -------------------------------------------------------------------- report / run


@cli.command("report")
@click.option("--scores", "scores_path", type=click.Path(exists=True, path_type=Path))
@click.option("--preds", "preds_path", type=click.Path(exists=True, path_type=Path))
@click.option("--refs", "refs_path", type=click.Path(exists=True, path_type=Path))
@click.option("--split", default="test", show_default=True)
@click.option("--out", required=True, type=click.Path(path_type=Path),
              help="Directory receiving report.md and metrics.tsv.")
def report_cmd(scores_path: Path | None, preds_path: Path | None, refs_path: Path | None,
               split: str, out: Path):
    """Assemble a report from previously produced artifacts."""
    import hashlib

    if scores_path is None and preds_path is None:
        raise DataError("nothing to report: pass --scores and/or --preds")
    digest = hashlib.sha256()
    retrieval_part = {}
    caption_part: dict[str, float] = {}
    notes: list[str] = []
    if scores_path is not None:
        digest.update(scores_path.read_bytes())
        retrieval_part["TR"] = retrieval_metrics(read_scores_tsv(scores_path))
    if preds_path is not None:
        if refs_path is None:
            raise DataError("--preds requires --refs")
        digest.update(preds_path.read_bytes())
        preds = read_preds_tsv(preds_path)
        refs = {s.id: s.hazard for s in load_corpus(refs_path).split_samples(split) if s.id in preds}
        caption_part, notes = caption_metrics(preds, refs)
    bundle = ReportBundle(
        config_hash=digest.hexdigest()[:16],
        retrieval=retrieval_part,
        caption=caption_part,
        notes=notes,
    )
    md_path, tsv_path = emit_report(bundle, out)
    click.echo(f"wrote {md_path} and {tsv_path}")


@cli.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path))
def run_cmd(config_path: Path):
    """Execute a full pipeline described by a YAML config."""
    result = run_pipeline(load_run_config(config_path))
    click.echo(f"config hash {result.config_hash}")
    if result.report_md is not None:
        click.echo(f"report at {result.report_md}")


def _load_json_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise DataError(f"config {path} must hold a JSON object")
    return raw


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except StageError as exc:
        click.echo(f"stage error: {exc}", err=True)
        return 3
    except HazardBenchError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
