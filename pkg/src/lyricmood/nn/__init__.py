from .layers import (
    BatchNorm1d,
    Conv1d,
    Dense,
    Dropout,
    GlobalMaxPool,
    Tanh,
    softmax_cross_entropy,
)
from .models import ARCHITECTURES, CnnClassifier, LstmClassifier, RnnClassifier
from .optim import Adam, clip_global_norm, global_norm
from .training import TrainConfig, fit, predict, sequence_lengths
from .gradcheck import run_checks
from .serialize import load_model, save_model

__all__ = [
    "ARCHITECTURES",
    "Adam",
    "BatchNorm1d",
    "CnnClassifier",
    "Conv1d",
    "Dense",
    "Dropout",
    "GlobalMaxPool",
    "LstmClassifier",
    "RnnClassifier",
    "Tanh",
    "TrainConfig",
    "clip_global_norm",
    "fit",
    "global_norm",
    "load_model",
    "predict",
    "run_checks",
    "save_model",
    "sequence_lengths",
    "softmax_cross_entropy",
]
