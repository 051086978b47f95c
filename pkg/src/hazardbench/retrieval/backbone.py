"""Pluggable vision/text backbones.

The TOY kind is a small ViT plus a small text transformer sized for CPU
tests. The PRETRAINED kind is a registry hook: callers register a factory
(wrapping e.g. a large contrastive vision-language checkpoint) and the
rest of the stack is agnostic to which kind it got.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import torch
from torch import nn

from ..errors import DataError
from .tokenizer import PAD_ID, HashedTokenizer


class BackboneKind(Enum):
    TOY = "toy"
    PRETRAINED = "pretrained"


@dataclass(frozen=True)
class VisionConfig:
    layers: int = 4
    width: int = 64
    patch_size: int = 8
    image_side: int = 32

    def __post_init__(self) -> None:
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.image_side % self.patch_size != 0:
            raise ValueError("image_side must be divisible by patch_size")

    @property
    def num_tokens(self) -> int:
        return (self.image_side // self.patch_size) ** 2 + 1


@dataclass(frozen=True)
class TextConfig:
    layers: int = 2
    width: int = 64
    vocab_size: int = 2048
    max_len: int = 40

    def __post_init__(self) -> None:
        if self.layers < 1:
            raise ValueError("layers must be >= 1")


@dataclass(frozen=True)
class BackboneConfig:
    kind: BackboneKind = BackboneKind.TOY
    vision: VisionConfig = field(default_factory=VisionConfig)
    text: TextConfig = field(default_factory=TextConfig)
    embed_dim: int = 64


def _encoder_layers(width: int, layers: int, heads: int = 4) -> nn.TransformerEncoder:
    layer = nn.TransformerEncoderLayer(
        d_model=width,
        nhead=heads,
        dim_feedforward=width * 4,
        dropout=0.0,
        activation="gelu",
        batch_first=True,
        norm_first=True,
    )
    return nn.TransformerEncoder(layer, num_layers=layers, enable_nested_tensor=False)


class ToyVisionBackbone(nn.Module):
    """Small ViT: patchify, prepend CLS, add positions, run encoder layers."""

    def __init__(self, cfg: VisionConfig):
        super().__init__()
        self.cfg = cfg
        self.patch_embed = nn.Conv2d(3, cfg.width, kernel_size=cfg.patch_size, stride=cfg.patch_size)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, cfg.width))
        self.pos_embed = nn.Parameter(torch.zeros(1, cfg.num_tokens, cfg.width))
        nn.init.trunc_normal_(self.pos_embed, std=0.02)
        nn.init.trunc_normal_(self.cls_token, std=0.02)
        self.encoder = _encoder_layers(cfg.width, cfg.layers)
        self.norm = nn.LayerNorm(cfg.width)

    def embed_tokens(self, images: torch.Tensor) -> torch.Tensor:
        """Pre-encoder token sequence: patches plus CLS plus positions."""
        side = self.cfg.image_side
        if images.ndim != 4 or images.shape[1:] != (3, side, side):
            raise DataError(
                f"expected image batch of shape (B, 3, {side}, {side}), got {tuple(images.shape)}"
            )
        x = self.patch_embed(images).flatten(2).transpose(1, 2)  # (B, P, W)
        cls = self.cls_token.expand(x.shape[0], -1, -1)
        return torch.cat([cls, x], dim=1) + self.pos_embed

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """images: (B, 3, side, side) float in [-1, 1]. Returns (B, T, width)."""
        return self.norm(self.encoder(self.embed_tokens(images)))


class ToyTextBackbone(nn.Module):
    """Small text transformer over hashed word ids, CLS pooled."""

    def __init__(self, cfg: TextConfig):
        super().__init__()
        self.cfg = cfg
        self.tokenizer = HashedTokenizer(vocab_size=cfg.vocab_size, max_len=cfg.max_len)
        self.embed = nn.Embedding(cfg.vocab_size, cfg.width, padding_idx=PAD_ID)
        self.pos_embed = nn.Parameter(torch.zeros(1, cfg.max_len, cfg.width))
        nn.init.trunc_normal_(self.pos_embed, std=0.02)
        self.encoder = _encoder_layers(cfg.width, cfg.layers)
        self.norm = nn.LayerNorm(cfg.width)

    def forward(self, ids: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        """ids: (B, L) int64; pad_mask: (B, L) True at padding. Returns (B, L, width)."""
        x = self.embed(ids) + self.pos_embed[:, : ids.shape[1], :]
        out = self.encoder(x, src_key_padding_mask=pad_mask)
        return self.norm(out)

    def encode_batch(self, texts: list[str], device: torch.device) -> tuple[torch.Tensor, torch.Tensor]:
        rows, lengths = self.tokenizer.batch(texts)
        ids = torch.tensor(rows, dtype=torch.long, device=device)
        pad_mask = ids.eq(PAD_ID)
        return ids, pad_mask


_PRETRAINED_REGISTRY: dict[str, Callable[[BackboneConfig], tuple[nn.Module, nn.Module]]] = {}


def register_pretrained_backbone(
    name: str, factory: Callable[[BackboneConfig], tuple[nn.Module, nn.Module]]
) -> None:
    """Register a factory returning (vision_module, text_module) for PRETRAINED configs."""
    _PRETRAINED_REGISTRY[name] = factory


def build_backbones(cfg: BackboneConfig, pretrained_name: str = "default") -> tuple[nn.Module, nn.Module]:
    if cfg.kind is BackboneKind.TOY:
        return ToyVisionBackbone(cfg.vision), ToyTextBackbone(cfg.text)
    if pretrained_name not in _PRETRAINED_REGISTRY:
        raise DataError(
            f"no pretrained backbone registered under {pretrained_name!r}; "
            "call register_pretrained_backbone() with a factory first"
        )
    return _PRETRAINED_REGISTRY[pretrained_name](cfg)
