"""Offline training for the beamsynth step-size network."""

from .data import TrainConfig, TrainSample, build_sample, generate_dataset
from .export import export_weights
from .model import StepSizeNet, abs_combine, crelu, unfold_loss, unfold_objectives
from .train import TrainResult, smoothed, train

__version__ = "0.1.0"
