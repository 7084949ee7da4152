"""Declarative layer descriptions and per-layer shape/parameter arithmetic."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..errors import ConstraintError, ShapeError
from .ops import conv_output_side, pool_output_side


class LayerKind(str, Enum):
    CROP = "Crop"
    CONV = "Conv"
    RELU = "ReLU"
    MAXPOOL = "MaxPool"
    LRN = "LRN"
    ENERGY = "Energy"
    FC = "FullyConnected"
    DROPOUT = "Dropout"
    SOFTMAX_LOSS = "SoftmaxLoss"


_WINDOWED = {LayerKind.CONV, LayerKind.MAXPOOL}
_HAS_OUT = {LayerKind.CONV, LayerKind.FC}


@dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    kernel: int | None = None
    pad: int | None = None
    stride: int | None = None
    out: int | None = None
    size: int | None = None
    rate: float = 0.5
    n_local: int = 5
    alpha: float = 1e-4
    beta: float = 0.75
    k: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", LayerKind(self.kind))
        windowed = (self.kernel, self.pad, self.stride)
        if self.kind in _WINDOWED:
            if any(v is None for v in windowed):
                raise ConstraintError(f"{self.kind.value} needs kernel, pad and stride")
            if self.kernel < 1 or self.stride < 1 or self.pad < 0:
                raise ConstraintError(f"bad window {windowed} for {self.kind.value}")
        elif any(v is not None for v in windowed):
            raise ConstraintError(f"{self.kind.value} takes no kernel/pad/stride")
        if (self.out is not None) != (self.kind in _HAS_OUT):
            raise ConstraintError("output width is required exactly for Conv and FullyConnected")
        if (self.size is not None) != (self.kind is LayerKind.CROP):
            raise ConstraintError("crop size is required exactly for Crop")
        if self.kind is LayerKind.MAXPOOL and self.pad != 0:
            raise ConstraintError("max pooling is unpadded")
        if self.kind is LayerKind.LRN and self.n_local % 2 != 1:
            raise ConstraintError("LRN window must be odd")

    # -- shape arithmetic ------------------------------------------------

    def output_shape(self, in_shape: tuple[int, ...]) -> tuple[int, ...]:
        """Output shape for an input of shape ``(H, W, C)`` or ``(F,)``."""
        kind = self.kind
        if kind is LayerKind.CROP:
            h, w, c = _map(in_shape, kind)
            if self.size > h or self.size > w:
                raise ShapeError(f"crop {self.size} larger than input {h}x{w}")
            return (self.size, self.size, c)
        if kind is LayerKind.CONV:
            h, w, _ = _map(in_shape, kind)
            return (conv_output_side(h, self.kernel, self.pad, self.stride),
                    conv_output_side(w, self.kernel, self.pad, self.stride), self.out)
        if kind is LayerKind.MAXPOOL:
            h, w, c = _map(in_shape, kind)
            return (pool_output_side(h, self.kernel, self.stride),
                    pool_output_side(w, self.kernel, self.stride), c)
        if kind is LayerKind.ENERGY:
            return (_map(in_shape, kind)[2],)
        if kind is LayerKind.FC:
            if len(in_shape) != 1:
                raise ShapeError(f"FullyConnected expects a vector, got {in_shape}")
            return (self.out,)
        return tuple(in_shape)

    def param_count(self, in_shape: tuple[int, ...]) -> int:
        if self.kind is LayerKind.CONV:
            in_c = _map(in_shape, self.kind)[2]
            return self.kernel * self.kernel * in_c * self.out + self.out
        if self.kind is LayerKind.FC:
            return in_shape[0] * self.out + self.out
        return 0

    def describe(self) -> str:
        if self.kind in _WINDOWED:
            return f"{self.kernel}, {self.pad}, {self.stride}"
        return "-"


def _map(shape, kind):
    if len(shape) != 3:
        raise ShapeError(f"{kind.value} expects an H x W x C map, got {shape}")
    return shape
