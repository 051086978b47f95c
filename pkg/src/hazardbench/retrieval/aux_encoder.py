"""Auxiliary cross-modal encoders with matching heads.

Each encoder refines one modality's token sequence (queries) by attending
to the other modality's tokens (context), then reads a binary match logit
off the refined pooled token. Self-attention over the queries carries a
bucketed relative position bias; cross-attention does not, since query and
context positions live on different axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class AuxEncoderConfig:
    layers: int = 2
    dim: int = 512
    heads: int = 8
    dropout: float = 0.1
    relpos_max_distance: int = 128
    relpos_buckets: int = 32


def relative_position_bucket(
    relative_position: torch.Tensor, num_buckets: int = 32, max_distance: int = 128
) -> torch.Tensor:
    """Map signed position offsets to symmetric log-spaced buckets.

    Offsets with |d| below num_buckets//2 get exact buckets; larger offsets
    share logarithmically wider buckets up to max_distance, beyond which
    everything lands in the last bucket.
    """
    n = relative_position.abs()
    max_exact = num_buckets // 2
    is_small = n < max_exact

    n_clamped = n.clamp(min=1).to(torch.float64)
    val_if_large = max_exact + (
        torch.log(n_clamped / max_exact)
        / math.log(max_distance / max_exact)
        * (num_buckets - max_exact)
    ).to(torch.long)
    val_if_large = val_if_large.clamp(max=num_buckets - 1)
    return torch.where(is_small, n, val_if_large)


class RelativePositionBias(nn.Module):
    def __init__(self, heads: int, num_buckets: int, max_distance: int):
        super().__init__()
        self.num_buckets = num_buckets
        self.max_distance = max_distance
        self.table = nn.Embedding(num_buckets, heads)

    def forward(self, length: int, device: torch.device) -> torch.Tensor:
        """(heads, length, length) additive attention bias."""
        pos = torch.arange(length, device=device)
        rel = pos[None, :] - pos[:, None]
        buckets = relative_position_bucket(rel, self.num_buckets, self.max_distance)
        return self.table(buckets).permute(2, 0, 1)


class CrossRefineLayer(nn.Module):
    """Pre-norm block: biased self-attention, cross-attention, feed-forward."""

    def __init__(self, cfg: AuxEncoderConfig):
        super().__init__()
        self.self_attn = nn.MultiheadAttention(cfg.dim, cfg.heads, dropout=cfg.dropout, batch_first=True)
        self.cross_attn = nn.MultiheadAttention(cfg.dim, cfg.heads, dropout=cfg.dropout, batch_first=True)
        self.ffn = nn.Sequential(
            nn.Linear(cfg.dim, cfg.dim * 4),
            nn.GELU(),
            nn.Dropout(cfg.dropout),
            nn.Linear(cfg.dim * 4, cfg.dim),
        )
        self.norm1 = nn.LayerNorm(cfg.dim)
        self.norm2 = nn.LayerNorm(cfg.dim)
        self.norm3 = nn.LayerNorm(cfg.dim)
        self.dropout = nn.Dropout(cfg.dropout)
        self.heads = cfg.heads

    def forward(
        self,
        query: torch.Tensor,
        context: torch.Tensor,
        self_bias: torch.Tensor,
        query_pad: torch.Tensor | None,
        context_pad: torch.Tensor | None,
    ) -> torch.Tensor:
        b, lq, _ = query.shape
        bias = self_bias.unsqueeze(0).expand(b, -1, -1, -1).reshape(b * self.heads, lq, lq)
        # float pad mask keeps mask dtypes consistent with the additive bias
        float_pad = None
        if query_pad is not None:
            float_pad = torch.zeros(query_pad.shape, dtype=bias.dtype, device=bias.device)
            float_pad = float_pad.masked_fill(query_pad, float("-inf"))
        q = self.norm1(query)
        attn, _ = self.self_attn(q, q, q, attn_mask=bias, key_padding_mask=float_pad, need_weights=False)
        query = query + self.dropout(attn)
        q = self.norm2(query)
        attn, _ = self.cross_attn(q, context, context, key_padding_mask=context_pad, need_weights=False)
        query = query + self.dropout(attn)
        return query + self.dropout(self.ffn(self.norm3(query)))


class AuxCrossEncoder(nn.Module):
    """Project, refine, and score one (query sequence, context sequence) pair."""

    def __init__(self, cfg: AuxEncoderConfig, query_width: int, context_width: int):
        super().__init__()
        self.cfg = cfg
        self.query_proj = nn.Linear(query_width, cfg.dim)
        self.context_proj = nn.Linear(context_width, cfg.dim)
        self.relpos = RelativePositionBias(cfg.heads, cfg.relpos_buckets, cfg.relpos_max_distance)
        self.layers = nn.ModuleList(CrossRefineLayer(cfg) for _ in range(cfg.layers))
        self.final_norm = nn.LayerNorm(cfg.dim)
        self.itm_head = nn.Linear(cfg.dim, 1)

    def forward(
        self,
        query_tokens: torch.Tensor,
        context_tokens: torch.Tensor,
        query_pad: torch.Tensor | None = None,
        context_pad: torch.Tensor | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Returns (refined query tokens, match logit per batch row)."""
        if context_tokens.shape[1] == 0:
            raise ValueError("context sequence must be non-empty")
        q = self.query_proj(query_tokens)
        c = self.context_proj(context_tokens)
        bias = self.relpos(q.shape[1], q.device)
        for layer in self.layers:
            q = layer(q, c, bias, query_pad, context_pad)
        refined = self.final_norm(q)
        logit = self.itm_head(refined[:, 0, :]).squeeze(-1)
        return refined, logit
