"""Stochastic gradient descent with momentum, weight decay and step decay."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from decimal import Decimal

import numpy as np

from ..errors import ConstraintError


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    gamma: float = 0.01
    weight_decay: float = 0.0005
    momentum: float = 0.9
    batch_size: int = 64
    num_iters: int = 25000
    steps: tuple[int, ...] = field(default=(5000, 20000))

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(int(s) for s in self.steps))
        for name in ("lr", "gamma", "batch_size"):
            if getattr(self, name) <= 0:
                raise ConstraintError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("weight_decay", "momentum", "num_iters"):
            if getattr(self, name) < 0:
                raise ConstraintError(f"{name} must be non-negative, got {getattr(self, name)}")
        if any(b <= a for a, b in zip(self.steps, self.steps[1:])):
            raise ConstraintError(f"steps must be strictly increasing, got {self.steps}")
        if any(s <= 0 for s in self.steps):
            raise ConstraintError(f"steps must be positive, got {self.steps}")

    def replace(self, **changes) -> "TrainConfig":
        return replace(self, **changes)


# Hyperparameter rows per dataset family.
PRESETS = {
    "dyntex++": TrainConfig(0.01, 0.01, 0.0005, 0.9, 64, 25000, (5000, 20000)),
    "ucla-9": TrainConfig(0.01, 0.01, 0.0005, 0.9, 64, 4000, (1000, 3000)),
    "dyntex": TrainConfig(0.0001, 0.1, 0.004, 0.9, 64, 2000, (1500,)),
}
PRESETS["ucla-50"] = PRESETS["ucla-8"] = PRESETS["dyntex"]


def lr_at(cfg: TrainConfig, iteration: int) -> float:
    """Learning rate after every step ``<= iteration`` has applied ``gamma``.

    The power is evaluated in decimal so that e.g. ``0.01 * 0.01**2`` is
    exactly ``1e-6`` rather than its binary rounding.
    """
    n = sum(1 for s in cfg.steps if s <= iteration)
    return float(Decimal(repr(cfg.lr)) * Decimal(repr(cfg.gamma)) ** n)


def sgd_step(params, grads, velocities, cfg: TrainConfig, iteration: int) -> float:
    """Update ``params`` and ``velocities`` in place; return the rate used.

    ``v <- momentum * v - lr * (g + weight_decay * w)`` then ``w <- w + v``.
    """
    lr = lr_at(cfg, iteration)
    for w, g, v in zip(params, grads, velocities):
        step = g + cfg.weight_decay * w if cfg.weight_decay else g
        v *= cfg.momentum
        v -= (lr * step).astype(v.dtype, copy=False)
        w += v
    return lr


def zero_velocities(params):
    return [np.zeros_like(p) for p in params]
