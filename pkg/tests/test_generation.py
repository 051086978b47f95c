import math

import pytest
import torch

from hazardbench.dataset import SynthSpec, synthesize_corpus
from hazardbench.errors import DataError
from hazardbench.generation import (
    BOS_ID,
    EOS_ID,
    GEN_TAP_CONFIG,
    GEN_VISION_CONFIG,
    INSTRUCTION_TEMPLATE,
    UNK_ID,
    AdapterConfig,
    DecodeConfig,
    GenerationModel,
    GenTrainConfig,
    TapConfig,
    WordTokenizer,
    extract_cls_sequence,
    frozen_state_digest,
    load_gen_checkpoint,
    save_gen_checkpoint,
    train_generation,
)
from hazardbench.generation.train import prepare_gen_images
from hazardbench.retrieval import ToyVisionBackbone, VisionConfig


def build_model(seed=0, **kwargs):
    torch.manual_seed(seed)
    tok = WordTokenizer.build(
        ["Entity #1 brakes hard near my car", INSTRUCTION_TEMPLATE]
    )
    return GenerationModel(tok, **kwargs).eval()


class TestWordTokenizer:
    def test_round_trip_preserves_case(self):
        tok = WordTokenizer.build(["Entity #1 Stops Suddenly"])
        ids = tok.encode("Entity #1 Stops")
        assert tok.decode(ids) == "Entity #1 Stops"

    def test_unknown_word_maps_to_unk(self):
        tok = WordTokenizer.build(["a b c"])
        assert tok.encode("zebra") == [UNK_ID]

    def test_decode_stops_at_eos(self):
        tok = WordTokenizer.build(["a b c"])
        ids = tok.encode("a b") + [EOS_ID] + tok.encode("c")
        assert tok.decode(ids) == "a b"

    def test_save_load(self, tmp_path):
        tok = WordTokenizer.build(["Entity #1 stops"])
        tok.save(tmp_path / "vocab.json")
        loaded = WordTokenizer.load(tmp_path / "vocab.json")
        assert loaded.encode("Entity #1 stops") == tok.encode("Entity #1 stops")

    def test_empty_build_rejected(self):
        with pytest.raises(DataError):
            WordTokenizer.build([])


class TestTaps:
    def test_deep_config_taps(self):
        assert TapConfig(stride=8).tap_layers(24) == [8, 16, 24]

    def test_toy_config_taps(self):
        assert TapConfig(stride=2).tap_layers(6) == [2, 4, 6]

    def test_indivisible_rejected(self):
        with pytest.raises(ValueError, match="divisible"):
            TapConfig(stride=8).tap_layers(10)

    def test_wrong_tap_count_rejected(self):
        with pytest.raises(ValueError, match="expected"):
            TapConfig(stride=8).tap_layers(16)

    def test_extract_cls_sequence_shapes(self):
        torch.manual_seed(0)
        vision = ToyVisionBackbone(GEN_VISION_CONFIG).eval()
        images = torch.randn(2, 3, 32, 32)
        taps = extract_cls_sequence(vision, images, GEN_TAP_CONFIG)
        assert len(taps) == 3
        assert all(t.shape == (2, 64) for t in taps)


class TestPromptAssembly:
    def test_projector_affine_identity_case(self):
        model = build_model()
        zero = torch.zeros(1, 3, model.vision_cfg.width)
        out = model.projector(zero)
        assert torch.allclose(out[0, 0], model.projector.bias)
        assert out.shape == (1, 3, model.decoder_cfg.width)

    def test_prompt_layout_and_length(self):
        model = build_model()
        images = torch.randn(2, 3, 32, 32)
        routing = model.routing_weights()
        prompt = model.prompt_embeds(images, routing)
        n_instr = len(model.tokenizer.encode(INSTRUCTION_TEMPLATE))
        assert prompt.shape[1] == 1 + 3 + n_instr
        bos_embed = model.decoder.embed(torch.tensor(BOS_ID))
        assert torch.allclose(prompt[0, 0], bos_embed + 0.0)

    def test_instruction_template_snapshot(self):
        assert INSTRUCTION_TEMPLATE == (
            "Explain the driving hazard in this scene, referring to each marked "
            "object as Entity #n."
        )
        assert "Entity #n" in INSTRUCTION_TEMPLATE


class TestRouting:
    def test_weights_sum_to_one(self):
        model = build_model()
        with torch.no_grad():
            w = model.routing_weights()
        assert w.shape == (2,)
        assert float(w.sum()) == pytest.approx(1.0, abs=1e-6)

    def test_eval_deterministic(self):
        model = build_model()
        assert torch.equal(model.routing_weights(), model.routing_weights())

    def test_gradient_reaches_router(self):
        model = build_model()
        model.train()
        images = torch.randn(2, 3, 32, 32)
        loss = model.forward_loss(images, ["Entity #1 brakes hard near my car"] * 2)
        loss.backward()
        grad = model.router.map.weight.grad
        assert grad is not None and float(grad.abs().sum()) > 0


class TestFreeze:
    def test_only_adapters_projector_router_trainable(self):
        model = build_model()
        trainable = {n for n, p in model.named_parameters() if p.requires_grad}
        for name in trainable:
            assert (
                "adapter" in name or "projector" in name or "router" in name
            ), f"unexpected trainable parameter {name}"
        assert any("projector" in n for n in trainable)
        assert any("router" in n for n in trainable)
        assert any("vision_adapters" in n for n in trainable)

    def test_frozen_digest_unchanged_after_training(self, tmp_path):
        corpus = synthesize_corpus(SynthSpec(train=4, val=0, test=0, seed=6), tmp_path)
        cfg = GenTrainConfig(epochs=2, effective_batch=4, micro_batch=2, seed=0)
        model, _ = train_generation(corpus, tmp_path, cfg)
        digest_after = frozen_state_digest(model)
        # rebuild with identical seeds: frozen blobs must coincide
        torch.manual_seed(cfg.seed)
        fresh, _ = train_generation(corpus, tmp_path, GenTrainConfig(epochs=0, effective_batch=4, micro_batch=2, seed=0))
        assert frozen_state_digest(fresh) == digest_after


class TestTrainingAndDecoding:
    def test_loss_decreases(self, tmp_path):
        corpus = synthesize_corpus(SynthSpec(train=6, val=0, test=0, seed=7), tmp_path)
        cfg = GenTrainConfig(epochs=5, effective_batch=6, micro_batch=3, seed=0)
        _, log = train_generation(corpus, tmp_path, cfg)
        assert log[4]["loss"] < log[0]["loss"]
        assert all(math.isfinite(e["perplexity"]) for e in log)

    def test_greedy_deterministic_and_bounded(self, tmp_path):
        corpus = synthesize_corpus(SynthSpec(train=4, val=0, test=0, seed=8), tmp_path)
        cfg = GenTrainConfig(epochs=1, effective_batch=4, micro_batch=2, seed=0)
        model, _ = train_generation(corpus, tmp_path, cfg)
        images = prepare_gen_images(corpus.split_samples("train"), tmp_path, model.vision_cfg, cfg.ablation)
        short = DecodeConfig(max_new_tokens=4)
        a = model.generate(images, short)
        b = model.generate(images, short)
        assert a == b
        assert all(len(t.split()) <= 4 for t in a)

    def test_beam_decode_returns_strings(self, tmp_path):
        corpus = synthesize_corpus(SynthSpec(train=4, val=0, test=0, seed=8), tmp_path)
        cfg = GenTrainConfig(epochs=1, effective_batch=4, micro_batch=2, seed=0)
        model, _ = train_generation(corpus, tmp_path, cfg)
        images = prepare_gen_images(corpus.split_samples("train")[:2], tmp_path, model.vision_cfg, cfg.ablation)
        outs = model.generate(images, DecodeConfig(strategy="beam", beam_width=2, max_new_tokens=6))
        assert len(outs) == 2
        assert all(isinstance(t, str) for t in outs)

    def test_decode_config_validation(self):
        with pytest.raises(ValueError):
            DecodeConfig(strategy="sampling")
        with pytest.raises(ValueError):
            DecodeConfig(max_new_tokens=0)
        with pytest.raises(ValueError):
            DecodeConfig(strategy="beam", beam_width=1)

    def test_checkpoint_round_trip(self, tmp_path):
        corpus = synthesize_corpus(SynthSpec(train=4, val=0, test=0, seed=9), tmp_path / "d")
        cfg = GenTrainConfig(epochs=2, effective_batch=4, micro_batch=2, seed=0)
        model, log = train_generation(corpus, tmp_path / "d", cfg)
        images = prepare_gen_images(corpus.split_samples("train"), tmp_path / "d", model.vision_cfg, cfg.ablation)
        before = model.generate(images)
        save_gen_checkpoint(tmp_path / "ckpt", model, cfg, log)
        restored, _ = load_gen_checkpoint(tmp_path / "ckpt")
        assert restored.generate(images) == before

    def test_vision_state_loads_from_retrieval_checkpoint(self, tmp_path):
        from hazardbench.retrieval import (
            AuxEncoderConfig,
            BackboneConfig,
            RetrievalTrainConfig,
            train_retrieval,
        )

        corpus = synthesize_corpus(SynthSpec(train=4, val=0, test=0, seed=10), tmp_path / "d")
        backbone = BackboneConfig(vision=GEN_VISION_CONFIG)
        rmodel, _ = train_retrieval(
            corpus,
            tmp_path / "d",
            RetrievalTrainConfig(epochs=1, batch_size=2, seed=0),
            backbone=backbone,
            aux=AuxEncoderConfig(layers=1, dim=32, heads=4),
        )
        vision_state = rmodel.vision.state_dict()
        cfg = GenTrainConfig(epochs=1, effective_batch=4, micro_batch=2, seed=0)
        model, _ = train_generation(corpus, tmp_path / "d", cfg, vision_state=vision_state)
        for key, value in vision_state.items():
            assert torch.equal(model.vision.state_dict()[key], value)
