from .base import EncodedSource, ModelError, ScoreModel
from .count import CountModel, train_count
from .io import load_model, save_model
from .neural import (
    NeuralConfig,
    NeuralScoreModel,
    ce_loss,
    grad_check,
    init_neural,
    train_neural,
)

__all__ = [
    "CountModel",
    "EncodedSource",
    "ModelError",
    "NeuralConfig",
    "NeuralScoreModel",
    "ScoreModel",
    "ce_loss",
    "grad_check",
    "init_neural",
    "load_model",
    "save_model",
    "train_count",
    "train_neural",
]
