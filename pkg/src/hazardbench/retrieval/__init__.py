from .aux_encoder import AuxCrossEncoder, AuxEncoderConfig, relative_position_bucket
from .backbone import (
    BackboneConfig,
    BackboneKind,
    TextConfig,
    ToyTextBackbone,
    ToyVisionBackbone,
    VisionConfig,
    build_backbones,
    register_pretrained_backbone,
)
from .losses import itc_loss, itm_loss, mismatch_assignment
from .model import RetrievalModel, image_to_tensor
from .tokenizer import CLS_ID, PAD_ID, HashedTokenizer
from .train import (
    RetrievalTrainConfig,
    eval_batch,
    load_checkpoint,
    prepare_eval_example,
    prepare_train_example,
    save_checkpoint,
    train_retrieval,
)

__all__ = [
    "AuxCrossEncoder",
    "AuxEncoderConfig",
    "relative_position_bucket",
    "BackboneConfig",
    "BackboneKind",
    "VisionConfig",
    "TextConfig",
    "ToyVisionBackbone",
    "ToyTextBackbone",
    "build_backbones",
    "register_pretrained_backbone",
    "itc_loss",
    "itm_loss",
    "mismatch_assignment",
    "RetrievalModel",
    "image_to_tensor",
    "HashedTokenizer",
    "PAD_ID",
    "CLS_ID",
    "RetrievalTrainConfig",
    "train_retrieval",
    "save_checkpoint",
    "load_checkpoint",
    "eval_batch",
    "prepare_train_example",
    "prepare_eval_example",
]
