from .layers import AvgPool2D, Conv2D, Dense, Flatten, Param, ReLU
from .loss import cross_entropy_loss
from .network import (
    N_BEAMS,
    VARIANTS,
    CnnModel,
    build_model,
    load_model,
    predict_logits,
    predict_topk,
    save_model,
    topk_indices,
)
from .training import Adam, TrainConfig, TrainData, train

__all__ = [
    "Adam",
    "AvgPool2D",
    "CnnModel",
    "Conv2D",
    "Dense",
    "Flatten",
    "N_BEAMS",
    "Param",
    "ReLU",
    "TrainConfig",
    "TrainData",
    "VARIANTS",
    "build_model",
    "cross_entropy_loss",
    "load_model",
    "predict_logits",
    "predict_topk",
    "save_model",
    "topk_indices",
    "train",
]
