"""Training losses for the dual-encoder retrieval model."""

from __future__ import annotations

import torch
import torch.nn.functional as F


def itc_loss(image_pooled: torch.Tensor, text_pooled: torch.Tensor, temperature) -> torch.Tensor:
    """Symmetric contrastive cross-entropy with in-batch negatives.

    Similarity logits are S / temperature with the diagonal as gold; the
    loss is the mean of the image-to-text and text-to-image directions.
    """
    if image_pooled.shape[0] != text_pooled.shape[0]:
        raise ValueError(
            f"batch size mismatch: {image_pooled.shape[0]} images vs {text_pooled.shape[0]} texts"
        )
    logits = image_pooled @ text_pooled.T / temperature
    gold = torch.arange(logits.shape[0], device=logits.device)
    return (F.cross_entropy(logits, gold) + F.cross_entropy(logits.T, gold)) / 2


def itm_loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean binary cross-entropy on match logits; labels 1 = matched pair."""
    if logits.shape != labels.shape:
        raise ValueError(f"shape mismatch: logits {tuple(logits.shape)} vs labels {tuple(labels.shape)}")
    return F.binary_cross_entropy_with_logits(logits, labels.to(logits.dtype))


def mismatch_assignment(
    batch_size: int, mismatch_rate: float, generator: torch.Generator
) -> tuple[torch.Tensor, torch.Tensor]:
    """Pick pairs to corrupt and a replacement text index for each.

    Returns (labels, text_index): labels are 1 for kept pairs and 0 for the
    randomly chosen mismatch_rate fraction, whose text index is rotated
    among the corrupted rows so no corrupted row keeps its own text.
    """
    labels = torch.ones(batch_size)
    text_index = torch.arange(batch_size)
    n_mis = int(round(batch_size * mismatch_rate))
    if n_mis < 2:
        return labels, text_index
    chosen = torch.randperm(batch_size, generator=generator)[:n_mis]
    rotated = torch.roll(chosen, shifts=1)
    labels[chosen] = 0.0
    text_index[chosen] = rotated
    return labels, text_index
