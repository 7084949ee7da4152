"""Layers, networks and the SGD optimizer, with hand-written backward passes."""
from .network import Network
from .sgd import PRESETS, TrainConfig, lr_at, sgd_step, zero_velocities
from .spec import LayerKind, LayerSpec

__all__ = ["Network", "TrainConfig", "PRESETS", "lr_at", "sgd_step", "zero_velocities",
           "LayerKind", "LayerSpec"]
