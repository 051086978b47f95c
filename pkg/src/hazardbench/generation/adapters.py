"""Bottleneck adapters with learned routing over branches.

Adapters are the only capacity added to otherwise frozen networks. Each
adapter holds a few parallel bottleneck branches whose outputs are mixed
by routing weights derived from the decoder's BOS embedding, shared by
every adapter in a forward pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class AdapterConfig:
    bottleneck_dim: int = 8
    branches: int = 2


class AdapterBranch(nn.Module):
    def __init__(self, dim: int, bottleneck: int):
        super().__init__()
        self.down = nn.Linear(dim, bottleneck)
        self.up = nn.Linear(bottleneck, dim)
        # small but nonzero start: outputs begin near zero while the
        # routing map still receives gradient from the first step
        nn.init.normal_(self.up.weight, std=0.02)
        nn.init.zeros_(self.up.bias)
        self.act = nn.GELU()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.up(self.act(self.down(x)))


class RoutedAdapter(nn.Module):
    """Residual delta: sum over branches of routing_weight * branch(x)."""

    def __init__(self, dim: int, cfg: AdapterConfig):
        super().__init__()
        self.branches = nn.ModuleList(
            AdapterBranch(dim, cfg.bottleneck_dim) for _ in range(cfg.branches)
        )

    def forward(self, x: torch.Tensor, routing: torch.Tensor) -> torch.Tensor:
        delta = torch.zeros_like(x)
        for k, branch in enumerate(self.branches):
            delta = delta + routing[k] * branch(x)
        return x + delta


class Router(nn.Module):
    """BOS embedding -> softmax weights over adapter branches."""

    def __init__(self, embed_width: int, branches: int = 2):
        super().__init__()
        self.map = nn.Linear(embed_width, branches)

    def forward(self, bos_embedding: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.map(bos_embedding), dim=-1)
