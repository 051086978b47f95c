"""Retrieval training loop, scoring helpers, and checkpointing."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..dataset.io import load_image
from ..dataset.types import Corpus, Sample
from ..errors import DataError, TrainingDivergedError
from ..preprocess.augment import random_entity_permutation, shuffle_entities
from ..preprocess.geometry import GeomConfig
from ..preprocess.geometry import prepare_image as _prepare
from ..preprocess.render import AblationMode
from .aux_encoder import AuxEncoderConfig
from .backbone import BackboneConfig, BackboneKind, TextConfig, VisionConfig
from .model import RetrievalModel, image_to_tensor


@dataclass(frozen=True)
class RetrievalTrainConfig:
    epochs: int = 15
    batch_size: int = 8
    lr: float = 1e-3
    weight_decay: float = 0.0
    seed: int = 0
    itm_mismatch_rate: float = 0.5
    entity_shuffle: bool = True
    use_itm: bool = True
    jitter: bool = True
    ablation: AblationMode = AblationMode.FULL

    def __post_init__(self) -> None:
        if not 0.0 < self.itm_mismatch_rate < 1.0:
            raise ValueError("itm_mismatch_rate must be in (0, 1)")


def _geom_for(backbone: BackboneConfig) -> GeomConfig:
    return GeomConfig(crop_side=backbone.vision.image_side)


def prepare_train_example(
    sample: Sample,
    root: Path,
    geom: GeomConfig,
    rng: np.random.Generator,
    cfg: RetrievalTrainConfig,
) -> tuple[torch.Tensor, str]:
    """Augmented (image tensor, text) pair for one training step."""
    if cfg.entity_shuffle and len(sample.entities) > 1:
        perm = random_entity_permutation(sample.entity_indices(), rng)
        sample = shuffle_entities(sample, perm)
    image = load_image(root, sample.image_ref)
    if cfg.jitter:
        pixels = _prepare(image, sample.entities, geom, train=True, rng=rng, mode=cfg.ablation)
    else:
        # still random-crop, but skip photometric jitter
        from ..preprocess.geometry import random_crop, resize_square
        from ..preprocess.render import apply_ablation_mode

        resized, ents = resize_square(image, sample.entities, geom.resize_side)
        rendered = apply_ablation_mode(resized, ents, cfg.ablation).pixels
        pixels = random_crop(rendered, geom.crop_side, rng)
    return image_to_tensor(pixels), sample.hazard


def prepare_eval_example(
    sample: Sample, root: Path, geom: GeomConfig, ablation: AblationMode = AblationMode.FULL
) -> tuple[torch.Tensor, str]:
    image = load_image(root, sample.image_ref)
    pixels = _prepare(image, sample.entities, geom, train=False, mode=ablation)
    return image_to_tensor(pixels), sample.hazard


def eval_batch(
    samples: list[Sample], root: Path, backbone: BackboneConfig, ablation: AblationMode = AblationMode.FULL
) -> tuple[torch.Tensor, list[str]]:
    geom = _geom_for(backbone)
    pairs = [prepare_eval_example(s, root, geom, ablation) for s in samples]
    return torch.stack([p[0] for p in pairs]), [p[1] for p in pairs]


def train_retrieval(
    corpus: Corpus,
    corpus_root: str | Path,
    config: RetrievalTrainConfig | None = None,
    backbone: BackboneConfig | None = None,
    aux: AuxEncoderConfig | None = None,
    split: str = "train",
) -> tuple[RetrievalModel, list[dict]]:
    """Train on one split; returns the model and a per-epoch loss log.

    Deterministic for a fixed config: model init, batch order, entity
    shuffles, crops, and mismatch draws all derive from config.seed.
    """
    config = config or RetrievalTrainConfig()
    backbone = backbone or BackboneConfig()
    aux = aux or AuxEncoderConfig()
    samples = corpus.split_samples(split)
    if not samples:
        raise DataError(f"corpus has no samples in split {split!r}")

    root = Path(corpus_root)
    geom = _geom_for(backbone)
    torch.manual_seed(config.seed)
    model = RetrievalModel(backbone, aux)
    rng = np.random.default_rng(config.seed)
    gen = torch.Generator().manual_seed(config.seed)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.lr, weight_decay=config.weight_decay)

    log: list[dict] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(samples))
        model.train()
        sums = {"itc": 0.0, "itm_t2i": 0.0, "itm_i2t": 0.0, "total": 0.0}
        steps = 0
        for start in range(0, len(order), config.batch_size):
            batch_idx = order[start : start + config.batch_size]
            if len(batch_idx) < 2:
                continue  # contrastive loss needs at least one negative
            examples = [
                prepare_train_example(samples[i], root, geom, rng, config) for i in batch_idx
            ]
            images = torch.stack([e[0] for e in examples])
            texts = [e[1] for e in examples]
            losses = model.forward_losses(
                images, texts, gen, mismatch_rate=config.itm_mismatch_rate, use_itm=config.use_itm
            )
            if not torch.isfinite(losses["total"]):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch} step {steps}: "
                    + ", ".join(f"{k}={float(v):.4f}" for k, v in losses.items())
                )
            optimizer.zero_grad()
            losses["total"].backward()
            optimizer.step()
            for k in sums:
                sums[k] += float(losses[k].detach())
            steps += 1
        entry = {"epoch": epoch} | {k: sums[k] / max(steps, 1) for k in sums}
        log.append(entry)
    model.eval()
    return model, log


def _cfg_to_json(cfg) -> dict:
    def convert(v):
        if dataclasses.is_dataclass(v) and not isinstance(v, type):
            return {k: convert(x) for k, x in dataclasses.asdict(v).items()}
        if hasattr(v, "value"):
            return v.value
        return v

    return {f.name: convert(getattr(cfg, f.name)) for f in dataclasses.fields(cfg)}


def save_checkpoint(
    out_dir: str | Path,
    model: RetrievalModel,
    train_config: RetrievalTrainConfig,
    log: list[dict] | None = None,
) -> Path:
    """Write config snapshot, parameter blob, and RNG state to a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = {
        "kind": "retrieval",
        "backbone": _cfg_to_json(model.backbone_cfg),
        "aux": _cfg_to_json(model.aux_cfg),
        "train": _cfg_to_json(train_config),
    }
    (out / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True))
    torch.save(model.state_dict(), out / "weights.pt")
    torch.save({"torch": torch.get_rng_state()}, out / "rng_state.pt")
    if log is not None:
        with open(out / "metrics.jsonl", "w") as fh:
            for entry in log:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
    return out


def load_checkpoint(ckpt_dir: str | Path) -> tuple[RetrievalModel, RetrievalTrainConfig]:
    ckpt = Path(ckpt_dir)
    config = json.loads((ckpt / "config.json").read_text())
    if config.get("kind") != "retrieval":
        raise DataError(f"{ckpt} is not a retrieval checkpoint")
    b = config["backbone"]
    backbone = BackboneConfig(
        kind=BackboneKind(b["kind"]),
        vision=VisionConfig(**b["vision"]),
        text=TextConfig(**b["text"]),
        embed_dim=b["embed_dim"],
    )
    aux = AuxEncoderConfig(**config["aux"])
    t = dict(config["train"])
    t["ablation"] = AblationMode(t["ablation"])
    train_config = RetrievalTrainConfig(**t)
    torch.manual_seed(0)  # placeholder init, immediately overwritten
    model = RetrievalModel(backbone, aux)
    model.load_state_dict(torch.load(ckpt / "weights.pt", weights_only=True))
    model.eval()
    return model, train_config
