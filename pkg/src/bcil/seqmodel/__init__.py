"""From-scratch LSTM sequence models trained by teacher forcing or free running."""

from .adam import AdamState, adam_step, clip_by_global_norm
from .checkpoint import load_model, save_model
from .lstm import bptt_gradients, forward, init_weights, loss_mse, model_step, zero_state
from .normalizer import Normalizer, fit_normalizer
from .train import ModelConfig, SequenceModel, TrainReport, evaluate_windows, train
from .variants import S2M, S2S, SM2SM, VARIANTS, ModelVariant, get_variant

__all__ = [
    "AdamState", "adam_step", "clip_by_global_norm", "load_model", "save_model",
    "bptt_gradients", "forward", "init_weights", "loss_mse", "model_step", "zero_state",
    "Normalizer", "fit_normalizer", "ModelConfig", "SequenceModel", "TrainReport",
    "evaluate_windows", "train", "S2M", "S2S", "SM2SM", "VARIANTS", "ModelVariant",
    "get_variant",
]
