"""Toy autoregressive decoder with adapter insertion points.

Small causal transformer behind the same interface a pretrained decoder
would implement: embeddings in, next-token logits out. Adapters sit after
the attention and feed-forward sublayers of every block.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .adapters import AdapterConfig, RoutedAdapter


@dataclass(frozen=True)
class DecoderConfig:
    width: int = 64
    layers: int = 2
    heads: int = 4
    max_positions: int = 160


class DecoderBlock(nn.Module):
    def __init__(self, cfg: DecoderConfig, adapter_cfg: AdapterConfig):
        super().__init__()
        self.attn = nn.MultiheadAttention(cfg.width, cfg.heads, batch_first=True)
        self.ffn = nn.Sequential(
            nn.Linear(cfg.width, cfg.width * 4),
            nn.GELU(),
            nn.Linear(cfg.width * 4, cfg.width),
        )
        self.norm1 = nn.LayerNorm(cfg.width)
        self.norm2 = nn.LayerNorm(cfg.width)
        self.attn_adapter = RoutedAdapter(cfg.width, adapter_cfg)
        self.ffn_adapter = RoutedAdapter(cfg.width, adapter_cfg)

    def forward(self, x: torch.Tensor, causal_mask: torch.Tensor, routing: torch.Tensor) -> torch.Tensor:
        h = self.norm1(x)
        attn, _ = self.attn(h, h, h, attn_mask=causal_mask, need_weights=False)
        x = self.attn_adapter(x + attn, routing)
        x = self.ffn_adapter(x + self.ffn(self.norm2(x)), routing)
        return x


class ToyDecoder(nn.Module):
    def __init__(self, vocab_size: int, cfg: DecoderConfig, adapter_cfg: AdapterConfig):
        super().__init__()
        self.cfg = cfg
        self.embed = nn.Embedding(vocab_size, cfg.width)
        # position signal must be comparable to the (frozen, unit-std) token
        # embeddings or repeated tokens become indistinguishable downstream
        self.pos_embed = nn.Parameter(torch.zeros(1, cfg.max_positions, cfg.width))
        nn.init.trunc_normal_(self.pos_embed, std=0.5)
        self.blocks = nn.ModuleList(
            DecoderBlock(cfg, adapter_cfg) for _ in range(cfg.layers)
        )
        self.final_norm = nn.LayerNorm(cfg.width)
        self.lm_head = nn.Linear(cfg.width, vocab_size)

    def forward(self, inputs_embeds: torch.Tensor, routing: torch.Tensor) -> torch.Tensor:
        """inputs_embeds: (B, L, width). Returns next-token logits (B, L, vocab)."""
        length = inputs_embeds.shape[1]
        if length > self.cfg.max_positions:
            raise ValueError(f"sequence of {length} exceeds max positions {self.cfg.max_positions}")
        x = inputs_embeds + self.pos_embed[:, :length, :]
        mask = torch.full((length, length), float("-inf"), device=x.device)
        mask = torch.triu(mask, diagonal=1)
        for block in self.blocks:
            x = block(x, mask, routing)
        return self.lm_head(self.final_norm(x))
