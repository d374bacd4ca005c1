"""Promptable 3D segmentation network, loss, training recipe, and inference."""

from .model import NetworkConfig, ResidualUNet3D, build_network, RESENC_L
from .loss import dice_ce_loss, soft_dice
from .infer import predict_full, gaussian_importance, SlidingWindowPredictor
from .train import TrainConfig, poly_lr, sample_training_instance, train
from .weights import save_weights, load_weights, config_fingerprint, WeightsError

__all__ = [
    "NetworkConfig", "ResidualUNet3D", "build_network", "RESENC_L",
    "dice_ce_loss", "soft_dice",
    "predict_full", "gaussian_importance", "SlidingWindowPredictor",
    "TrainConfig", "poly_lr", "sample_training_instance", "train",
    "save_weights", "load_weights", "config_fingerprint", "WeightsError",
]
