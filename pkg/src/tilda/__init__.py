"""Streaming incremental classification with per-subspace anchor vectors."""

from .model import (
    AnchorStore,
    ModelConfig,
    Prediction,
    learn_augmented,
    learn_one,
    memory_footprint,
    new_model,
    predict_augmented,
    predict_one,
    split,
)

__all__ = [
    "AnchorStore",
    "ModelConfig",
    "Prediction",
    "learn_augmented",
    "learn_one",
    "memory_footprint",
    "new_model",
    "predict_augmented",
    "predict_one",
    "split",
]

__version__ = "0.1.0"
