from .adapters import AdapterBranch, AdapterConfig, RoutedAdapter, Router
from .decoder import DecoderConfig, ToyDecoder
from .model import (
    GEN_TAP_CONFIG,
    GEN_VISION_CONFIG,
    INSTRUCTION_TEMPLATE,
    DecodeConfig,
    GenerationModel,
    TapConfig,
    extract_cls_sequence,
)
from .tokenizer import BOS_ID, EOS_ID, PAD_ID, UNK_ID, WordTokenizer
from .train import (
    GenTrainConfig,
    frozen_state_digest,
    load_gen_checkpoint,
    prepare_gen_images,
    save_gen_checkpoint,
    train_generation,
)

__all__ = [
    "AdapterConfig",
    "AdapterBranch",
    "RoutedAdapter",
    "Router",
    "DecoderConfig",
    "ToyDecoder",
    "TapConfig",
    "DecodeConfig",
    "GenerationModel",
    "extract_cls_sequence",
    "INSTRUCTION_TEMPLATE",
    "GEN_VISION_CONFIG",
    "GEN_TAP_CONFIG",
    "WordTokenizer",
    "PAD_ID",
    "BOS_ID",
    "EOS_ID",
    "UNK_ID",
    "GenTrainConfig",
    "train_generation",
    "prepare_gen_images",
    "save_gen_checkpoint",
    "load_gen_checkpoint",
    "frozen_state_digest",
]
