"""Explanation generator: frozen vision encoder and decoder, trainable
adapters, multi-tap CLS projection, BOS-routed branch mixing."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from ..retrieval.backbone import ToyVisionBackbone, VisionConfig
from .adapters import AdapterConfig, Router, RoutedAdapter
from .decoder import DecoderConfig, ToyDecoder
from .tokenizer import BOS_ID, EOS_ID, PAD_ID, WordTokenizer

# Fixed wording; changing it invalidates trained checkpoints.
INSTRUCTION_TEMPLATE = (
    "Explain the driving hazard in this scene, referring to each marked "
    "object as Entity #n."
)


@dataclass(frozen=True)
class TapConfig:
    stride: int = 8
    expected_taps: int = 3

    def tap_layers(self, total_layers: int) -> list[int]:
        """Layer indices (1-based) whose CLS tokens feed the decoder."""
        if total_layers % self.stride != 0:
            raise ValueError(
                f"{total_layers} layers not divisible by tap stride {self.stride}"
            )
        taps = list(range(self.stride, total_layers + 1, self.stride))
        if len(taps) != self.expected_taps:
            raise ValueError(
                f"{total_layers} layers / stride {self.stride} gives {len(taps)} taps, "
                f"expected {self.expected_taps}"
            )
        return taps


@dataclass(frozen=True)
class DecodeConfig:
    strategy: str = "greedy"
    beam_width: int = 1
    max_new_tokens: int = 80

    def __post_init__(self) -> None:
        if self.strategy not in ("greedy", "beam"):
            raise ValueError(f"unknown decode strategy {self.strategy!r}")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")
        if self.strategy == "beam" and self.beam_width < 2:
            raise ValueError("beam strategy needs beam_width >= 2")


def extract_cls_sequence(
    vision: ToyVisionBackbone, images: torch.Tensor, tap: TapConfig
) -> list[torch.Tensor]:
    """CLS embedding after every `stride` encoder layers, unadapted."""
    taps = set(tap.tap_layers(len(vision.encoder.layers)))
    x = vision.embed_tokens(images)
    out = []
    for i, layer in enumerate(vision.encoder.layers, start=1):
        x = layer(x)
        if i in taps:
            out.append(x[:, 0, :])
    return out


# toy vision default sized so the tap rule lands on three layers
GEN_VISION_CONFIG = VisionConfig(layers=6, width=64, patch_size=8, image_side=32)
GEN_TAP_CONFIG = TapConfig(stride=2, expected_taps=3)


class GenerationModel(nn.Module):
    def __init__(
        self,
        tokenizer: WordTokenizer,
        vision_cfg: VisionConfig = GEN_VISION_CONFIG,
        tap: TapConfig = GEN_TAP_CONFIG,
        decoder_cfg: DecoderConfig | None = None,
        adapter_cfg: AdapterConfig | None = None,
        vision: ToyVisionBackbone | None = None,
    ):
        super().__init__()
        self.tokenizer = tokenizer
        self.tap = tap
        self.vision_cfg = vision_cfg
        self.decoder_cfg = decoder_cfg or DecoderConfig()
        self.adapter_cfg = adapter_cfg or AdapterConfig()
        self.vision = vision if vision is not None else ToyVisionBackbone(vision_cfg)
        self.tap_layers = tap.tap_layers(len(self.vision.encoder.layers))

        width = self.decoder_cfg.width
        self.decoder = ToyDecoder(tokenizer.vocab_size, self.decoder_cfg, self.adapter_cfg)
        self.vision_adapters = nn.ModuleList(
            RoutedAdapter(vision_cfg.width, self.adapter_cfg)
            for _ in range(len(self.vision.encoder.layers))
        )
        self.projector = nn.Linear(vision_cfg.width, width)
        self.router = Router(width, self.adapter_cfg.branches)
        self.register_buffer(
            "instruction_ids", torch.tensor(tokenizer.encode(INSTRUCTION_TEMPLATE), dtype=torch.long)
        )
        self._freeze_backbones()

    def _freeze_backbones(self) -> None:
        for p in self.parameters():
            p.requires_grad_(False)
        for module in self.modules():
            if isinstance(module, (RoutedAdapter, Router)):
                for p in module.parameters():
                    p.requires_grad_(True)
        for p in self.projector.parameters():
            p.requires_grad_(True)

    def trainable_parameters(self):
        return (p for p in self.parameters() if p.requires_grad)

    def frozen_parameters(self):
        return (
            (name, p) for name, p in self.named_parameters() if not p.requires_grad
        )

    @property
    def device(self) -> torch.device:
        return next(self.parameters()).device

    def routing_weights(self) -> torch.Tensor:
        """Branch mixing weights from the decoder's BOS embedding.

        Computed once per forward pass and shared by every adapter."""
        bos = self.decoder.embed(torch.tensor(BOS_ID, device=self.device))
        return self.router(bos)

    def visual_tokens(self, images: torch.Tensor, routing: torch.Tensor) -> torch.Tensor:
        """Tapped CLS embeddings projected to decoder space: (B, taps, width)."""
        taps = set(self.tap_layers)
        x = self.vision.embed_tokens(images)
        collected = []
        for i, layer in enumerate(self.vision.encoder.layers, start=1):
            x = self.vision_adapters[i - 1](layer(x), routing)
            if i in taps:
                collected.append(x[:, 0, :])
        return self.projector(torch.stack(collected, dim=1))

    def prompt_embeds(self, images: torch.Tensor, routing: torch.Tensor) -> torch.Tensor:
        """[BOS, visual tokens, instruction tokens] as embeddings."""
        b = images.shape[0]
        visual = self.visual_tokens(images, routing)
        bos = self.decoder.embed(
            torch.full((b, 1), BOS_ID, dtype=torch.long, device=self.device)
        )
        instr = self.decoder.embed(self.instruction_ids).unsqueeze(0).expand(b, -1, -1)
        return torch.cat([bos, visual, instr], dim=1)

    def forward_loss(self, images: torch.Tensor, texts: list[str]) -> torch.Tensor:
        """Next-token cross-entropy over the explanation tokens."""
        routing = self.routing_weights()
        prompt = self.prompt_embeds(images, routing)
        targets = [self.tokenizer.encode(t) + [EOS_ID] for t in texts]
        width = max(len(t) for t in targets)
        padded = torch.full((len(targets), width), PAD_ID, dtype=torch.long, device=self.device)
        for r, ids in enumerate(targets):
            padded[r, : len(ids)] = torch.tensor(ids, device=self.device)
        # teacher forcing: drop the final step's embedding, it predicts nothing
        tgt_in = self.decoder.embed(padded[:, :-1])
        full = torch.cat([prompt, tgt_in], dim=1)
        logits = self.decoder(full, routing)
        lp = prompt.shape[1]
        pred = logits[:, lp - 1 : lp - 1 + width, :]
        return F.cross_entropy(
            pred.reshape(-1, pred.shape[-1]), padded.reshape(-1), ignore_index=PAD_ID
        )

    @torch.no_grad()
    def generate(self, images: torch.Tensor, decode: DecodeConfig | None = None) -> list[str]:
        decode = decode or DecodeConfig()
        self.eval()
        routing = self.routing_weights()
        prompt = self.prompt_embeds(images, routing)
        if decode.strategy == "beam":
            return [
                self._beam_one(prompt[i : i + 1], routing, decode) for i in range(prompt.shape[0])
            ]
        return self._greedy(prompt, routing, decode)

    def _greedy(self, prompt: torch.Tensor, routing: torch.Tensor, decode: DecodeConfig) -> list[str]:
        b = prompt.shape[0]
        embeds = prompt
        ids = torch.full((b, 0), PAD_ID, dtype=torch.long, device=self.device)
        finished = torch.zeros(b, dtype=torch.bool, device=self.device)
        for _ in range(decode.max_new_tokens):
            logits = self.decoder(embeds, routing)[:, -1, :]
            nxt = logits.argmax(dim=-1)
            nxt = torch.where(finished, torch.full_like(nxt, PAD_ID), nxt)
            ids = torch.cat([ids, nxt[:, None]], dim=1)
            finished |= nxt.eq(EOS_ID)
            if bool(finished.all()):
                break
            embeds = torch.cat([embeds, self.decoder.embed(nxt)[:, None, :]], dim=1)
        return [self.tokenizer.decode(row.tolist()) for row in ids]

    def _beam_one(self, prompt: torch.Tensor, routing: torch.Tensor, decode: DecodeConfig) -> str:
        beams: list[tuple[list[int], float, torch.Tensor, bool]] = [([], 0.0, prompt, False)]
        for _ in range(decode.max_new_tokens):
            candidates = []
            for ids, score, embeds, done in beams:
                if done:
                    candidates.append((ids, score, embeds, True))
                    continue
                logprobs = F.log_softmax(self.decoder(embeds, routing)[0, -1, :], dim=-1)
                top = torch.topk(logprobs, decode.beam_width)
                for lp, tid in zip(top.values.tolist(), top.indices.tolist()):
                    new_embeds = torch.cat(
                        [embeds, self.decoder.embed(torch.tensor([[tid]], device=self.device))],
                        dim=1,
                    )
                    candidates.append((ids + [tid], score + lp, new_embeds, tid == EOS_ID))
            candidates.sort(key=lambda c: c[1], reverse=True)
            beams = candidates[: decode.beam_width]
            if all(b[3] for b in beams):
                break
        return self.tokenizer.decode(beams[0][0])
