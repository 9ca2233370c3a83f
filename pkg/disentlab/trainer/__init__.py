"""Training orchestration: class weights, the two training regimes, inference."""

from disentlab.trainer.history import EpochRecord, TrainHistory, write_history
from disentlab.trainer.loop import train, train_baseline, train_disentangled
from disentlab.trainer.predict import extract_latents, predict, predict_scores
from disentlab.trainer.state import (
    TrainingState,
    load_model,
    load_state,
    save_model,
    save_state,
)
from disentlab.trainer.weights import compute_class_weights

__all__ = [
    "EpochRecord",
    "TrainHistory",
    "TrainingState",
    "compute_class_weights",
    "extract_latents",
    "load_model",
    "load_state",
    "predict",
    "predict_scores",
    "save_model",
    "save_state",
    "train",
    "train_baseline",
    "train_disentangled",
    "write_history",
]
