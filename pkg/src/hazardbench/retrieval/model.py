"""Dual-encoder retrieval model with auxiliary cross-modal match heads."""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .aux_encoder import AuxCrossEncoder, AuxEncoderConfig
from .backbone import BackboneConfig, BackboneKind, build_backbones
from .losses import itc_loss, itm_loss, mismatch_assignment

MAX_LOGIT_SCALE = math.log(100.0)  # keeps temperature >= 0.01


def image_to_tensor(image: np.ndarray) -> torch.Tensor:
    """uint8 HxWx3 to float32 (3,H,W) scaled to [-1, 1]."""
    x = torch.from_numpy(np.ascontiguousarray(image)).float().permute(2, 0, 1)
    return x / 127.5 - 1.0


class RetrievalModel(nn.Module):
    def __init__(
        self,
        backbone: BackboneConfig | None = None,
        aux: AuxEncoderConfig | None = None,
        pretrained_name: str = "default",
    ):
        super().__init__()
        self.backbone_cfg = backbone or BackboneConfig()
        self.aux_cfg = aux or AuxEncoderConfig()
        self.vision, self.text = build_backbones(self.backbone_cfg, pretrained_name)

        vision_width = self.backbone_cfg.vision.width
        text_width = self.backbone_cfg.text.width
        embed_dim = self.backbone_cfg.embed_dim
        self.vision_proj = nn.Linear(vision_width, embed_dim)
        self.text_proj = nn.Linear(text_width, embed_dim)
        self.logit_scale = nn.Parameter(torch.tensor(math.log(1.0 / 0.07)))

        # independent parameters per direction
        self.t2i_aux = AuxCrossEncoder(self.aux_cfg, query_width=text_width, context_width=vision_width)
        self.i2t_aux = AuxCrossEncoder(self.aux_cfg, query_width=vision_width, context_width=text_width)

    @property
    def temperature(self) -> torch.Tensor:
        return 1.0 / self.logit_scale.clamp(max=MAX_LOGIT_SCALE).exp()

    @property
    def device(self) -> torch.device:
        return next(self.parameters()).device

    def encode_image(self, images: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Returns (token sequence, unit-norm pooled embedding)."""
        tokens = self.vision(images)
        pooled = F.normalize(self.vision_proj(tokens[:, 0, :]), dim=-1)
        return tokens, pooled

    def encode_text(self, texts: list[str]) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Returns (token sequence, unit-norm pooled embedding, pad mask)."""
        ids, pad_mask = self.text.encode_batch(texts, self.device)
        tokens = self.text(ids, pad_mask)
        pooled = F.normalize(self.text_proj(tokens[:, 0, :]), dim=-1)
        return tokens, pooled, pad_mask

    @torch.no_grad()
    def retrieval_score(self, image: torch.Tensor, text: str) -> float:
        """Cosine similarity of the pooled backbone embeddings.

        The auxiliary encoders and match heads play no part here; they
        shape the embedding space only through training.
        """
        _, img_pooled = self.encode_image(image.unsqueeze(0))
        _, txt_pooled, _ = self.encode_text([text])
        return float((img_pooled * txt_pooled).sum())

    @torch.no_grad()
    def score_matrix(self, images: torch.Tensor, texts: list[str], batch_size: int = 32) -> np.ndarray:
        """S[i, j] = cosine(text_i, image_j) over all pairs."""
        img_pooled = []
        for start in range(0, images.shape[0], batch_size):
            _, pooled = self.encode_image(images[start : start + batch_size])
            img_pooled.append(pooled)
        img = torch.cat(img_pooled)
        txt_pooled = []
        for start in range(0, len(texts), batch_size):
            _, pooled, _ = self.encode_text(texts[start : start + batch_size])
            txt_pooled.append(pooled)
        txt = torch.cat(txt_pooled)
        return (txt @ img.T).cpu().numpy()

    def forward_losses(
        self,
        images: torch.Tensor,
        texts: list[str],
        generator: torch.Generator,
        mismatch_rate: float = 0.5,
        use_itm: bool = True,
    ) -> dict[str, torch.Tensor]:
        """One training forward pass: contrastive plus both match losses."""
        img_tokens, img_pooled = self.encode_image(images)
        txt_tokens, txt_pooled, txt_pad = self.encode_text(texts)
        losses = {"itc": itc_loss(img_pooled, txt_pooled, self.temperature)}

        if use_itm:
            b = images.shape[0]
            labels, text_index = mismatch_assignment(b, mismatch_rate, generator)
            labels = labels.to(self.device)
            sel_tokens = txt_tokens[text_index]
            sel_pad = txt_pad[text_index]
            _, t2i_logit = self.t2i_aux(sel_tokens, img_tokens, query_pad=sel_pad)
            _, i2t_logit = self.i2t_aux(img_tokens, sel_tokens, context_pad=sel_pad)
            losses["itm_t2i"] = itm_loss(t2i_logit, labels)
            losses["itm_i2t"] = itm_loss(i2t_logit, labels)
        else:
            zero = torch.zeros((), device=self.device)
            losses["itm_t2i"] = zero
            losses["itm_i2t"] = zero

        losses["total"] = losses["itc"] + losses["itm_t2i"] + losses["itm_i2t"]
        return losses
