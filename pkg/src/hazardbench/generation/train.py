"""Generator training: adapter-only optimization over frozen backbones."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..dataset.types import Corpus
from ..errors import DataError, TrainingDivergedError
from ..preprocess.render import AblationMode
from ..retrieval.backbone import ToyVisionBackbone, VisionConfig
from ..retrieval.train import _geom_for, prepare_eval_example
from ..retrieval.backbone import BackboneConfig
from .adapters import AdapterConfig
from .decoder import DecoderConfig
from .model import (
    GEN_TAP_CONFIG,
    GEN_VISION_CONFIG,
    INSTRUCTION_TEMPLATE,
    GenerationModel,
    TapConfig,
)
from .tokenizer import WordTokenizer


@dataclass(frozen=True)
class GenTrainConfig:
    epochs: int = 20
    effective_batch: int = 32
    micro_batch: int = 8
    lr: float = 1e-2
    weight_decay: float = 0.0
    seed: int = 0
    ablation: AblationMode = AblationMode.FULL

    def __post_init__(self) -> None:
        if self.effective_batch % self.micro_batch != 0:
            raise ValueError("effective_batch must be a multiple of micro_batch")


def frozen_state_digest(model: GenerationModel) -> str:
    """SHA-256 over every frozen parameter, in name order."""
    h = hashlib.sha256()
    for name, p in sorted(model.frozen_parameters(), key=lambda kv: kv[0]):
        h.update(name.encode())
        h.update(p.detach().cpu().numpy().tobytes())
    return h.hexdigest()


def prepare_gen_images(
    samples, root, vision_cfg: VisionConfig, ablation: AblationMode = AblationMode.FULL
) -> torch.Tensor:
    backbone_cfg = BackboneConfig(vision=vision_cfg)
    geom = _geom_for(backbone_cfg)
    tensors = [prepare_eval_example(s, root, geom, ablation)[0] for s in samples]
    return torch.stack(tensors)


def train_generation(
    corpus: Corpus,
    corpus_root: str | Path,
    config: GenTrainConfig | None = None,
    vision_cfg: VisionConfig = GEN_VISION_CONFIG,
    tap: TapConfig = GEN_TAP_CONFIG,
    decoder_cfg: DecoderConfig | None = None,
    adapter_cfg: AdapterConfig | None = None,
    vision_state: dict | None = None,
    split: str = "train",
) -> tuple[GenerationModel, list[dict]]:
    """Train adapters/projector/router; everything else stays frozen.

    Returns the model and a per-epoch log with mean loss and perplexity.
    """
    config = config or GenTrainConfig()
    samples = corpus.split_samples(split)
    if not samples:
        raise DataError(f"corpus has no samples in split {split!r}")
    root = Path(corpus_root)

    torch.manual_seed(config.seed)
    tokenizer = WordTokenizer.build([s.hazard for s in samples] + [INSTRUCTION_TEMPLATE])
    vision = ToyVisionBackbone(vision_cfg)
    if vision_state is not None:
        vision.load_state_dict(vision_state)
    model = GenerationModel(
        tokenizer,
        vision_cfg=vision_cfg,
        tap=tap,
        decoder_cfg=decoder_cfg,
        adapter_cfg=adapter_cfg,
        vision=vision,
    )
    optimizer = torch.optim.AdamW(
        model.trainable_parameters(), lr=config.lr, weight_decay=config.weight_decay
    )

    # fixed eval-style renders: generation training has no stochastic
    # image augmentation, explanations must stay aligned with pixels
    images = prepare_gen_images(samples, root, vision_cfg, config.ablation)
    texts = [s.hazard for s in samples]
    rng = np.random.default_rng(config.seed)

    accum = config.effective_batch // config.micro_batch
    log: list[dict] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(samples))
        model.train()
        total, steps = 0.0, 0
        optimizer.zero_grad()
        micro_done = 0
        for start in range(0, len(order), config.micro_batch):
            idx = order[start : start + config.micro_batch]
            loss = model.forward_loss(images[idx], [texts[i] for i in idx])
            if not torch.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite generation loss at epoch {epoch} step {steps}"
                )
            (loss / accum).backward()
            micro_done += 1
            total += float(loss.detach())
            steps += 1
            if micro_done == accum:
                optimizer.step()
                optimizer.zero_grad()
                micro_done = 0
        if micro_done:
            optimizer.step()
            optimizer.zero_grad()
        mean = total / max(steps, 1)
        log.append({"epoch": epoch, "loss": mean, "perplexity": math.exp(min(mean, 50.0))})
    model.eval()
    return model, log


def _cfg_json(cfg) -> dict:
    out = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        out[f.name] = v.value if hasattr(v, "value") else v
    return out


def save_gen_checkpoint(
    out_dir: str | Path,
    model: GenerationModel,
    train_config: GenTrainConfig,
    log: list[dict] | None = None,
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = {
        "kind": "generation",
        "vision": _cfg_json(model.vision_cfg),
        "tap": _cfg_json(model.tap),
        "decoder": _cfg_json(model.decoder_cfg),
        "adapter": _cfg_json(model.adapter_cfg),
        "train": _cfg_json(train_config),
    }
    (out / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True))
    model.tokenizer.save(out / "vocab.json")
    torch.save(model.state_dict(), out / "weights.pt")
    torch.save({"torch": torch.get_rng_state()}, out / "rng_state.pt")
    if log is not None:
        with open(out / "metrics.jsonl", "w") as fh:
            for entry in log:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
    return out


def load_gen_checkpoint(ckpt_dir: str | Path) -> tuple[GenerationModel, GenTrainConfig]:
    ckpt = Path(ckpt_dir)
    config = json.loads((ckpt / "config.json").read_text())
    if config.get("kind") != "generation":
        raise DataError(f"{ckpt} is not a generation checkpoint")
    tokenizer = WordTokenizer.load(ckpt / "vocab.json")
    torch.manual_seed(0)  # placeholder init, immediately overwritten
    model = GenerationModel(
        tokenizer,
        vision_cfg=VisionConfig(**config["vision"]),
        tap=TapConfig(**config["tap"]),
        decoder_cfg=DecoderConfig(**config["decoder"]),
        adapter_cfg=AdapterConfig(**config["adapter"]),
    )
    model.load_state_dict(torch.load(ckpt / "weights.pt", weights_only=True))
    model.eval()
    t = dict(config["train"])
    t["ablation"] = AblationMode(t["ablation"])
    return model, GenTrainConfig(**t)
