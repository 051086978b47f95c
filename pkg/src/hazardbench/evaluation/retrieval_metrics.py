"""Rank-based retrieval metrics over score matrices."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass
class ScoreMatrix:
    """Q x C score grid with the gold candidate index per query row.

    direction is "TR" (text queries ranking images) or "IR" (the reverse);
    it only labels the table, the math is identical.
    """

    scores: np.ndarray
    gold: np.ndarray
    direction: str = "TR"

    def __post_init__(self) -> None:
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.gold = np.asarray(self.gold, dtype=np.int64)
        if self.scores.ndim != 2 or min(self.scores.shape) < 1:
            raise ValueError(f"scores must be a Q x C matrix, got shape {self.scores.shape}")
        if self.gold.shape != (self.scores.shape[0],):
            raise ValueError("gold must hold one index per query row")
        if (self.gold < 0).any() or (self.gold >= self.scores.shape[1]).any():
            raise ValueError("gold indices out of candidate range")
        if self.direction not in ("TR", "IR"):
            raise ValueError(f"direction must be TR or IR, got {self.direction!r}")

    @classmethod
    def identity_gold(cls, scores: np.ndarray, direction: str = "TR") -> "ScoreMatrix":
        scores = np.asarray(scores)
        return cls(scores=scores, gold=np.arange(scores.shape[0]), direction=direction)


@dataclass
class RetrievalMetrics:
    mean_rank: float
    recall_at: dict[int, float] = field(default_factory=dict)


def rank_of_gold(score_row: np.ndarray, gold_index: int) -> int:
    """1 + number of candidates scoring strictly higher than gold.

    Ties resolve in gold's favor: a row of identical scores gives rank 1.
    """
    row = np.asarray(score_row, dtype=np.float64)
    return 1 + int((row > row[gold_index]).sum())


def retrieval_metrics(matrix: ScoreMatrix, ks: Sequence[int] = (1, 5, 10)) -> RetrievalMetrics:
    ranks = np.array(
        [rank_of_gold(matrix.scores[q], int(matrix.gold[q])) for q in range(matrix.scores.shape[0])]
    )
    recall = {int(k): float((ranks <= k).mean()) for k in ks}
    return RetrievalMetrics(mean_rank=float(ranks.mean()), recall_at=recall)
