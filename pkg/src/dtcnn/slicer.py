"""Slicing of dynamic texture volumes on the xy, xt and yt planes.

A volume is stored ``(rows=y, cols=x, frames=t, channels)``. Temporal slices
put time along the image rows: an xt slice is one pixel row followed over
time (``d x w``) and a yt slice is one pixel column over time (``d x h``).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConstraintError, ShapeError
from .tensor import bilinear_resize


class PlaneId(str, Enum):
    XY = "xy"
    XT = "xt"
    YT = "yt"


PLANES = (PlaneId.XY, PlaneId.XT, PlaneId.YT)


@dataclass(frozen=True)
class VideoVolume:
    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 4:
            raise ShapeError(f"volume must be h x w x d x c, got shape {self.data.shape}")
        h, w, d, c = self.data.shape
        if min(h, w, d) < 1:
            raise ShapeError(f"empty volume {self.data.shape}")
        if c not in (1, 3):
            raise ShapeError(f"volume must have 1 or 3 channels, got {c}")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape

    @property
    def h(self) -> int:
        return self.data.shape[0]

    @property
    def w(self) -> int:
        return self.data.shape[1]

    @property
    def d(self) -> int:
        return self.data.shape[2]

    @property
    def c(self) -> int:
        return self.data.shape[3]


@dataclass(frozen=True)
class SliceConfig:
    m: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ConstraintError(f"m and n must be >= 1, got m={self.m}, n={self.n}")

    def check(self, v: VideoVolume) -> None:
        # n <= min(d, h, w) is deliberately not enforced
        if self.m > min(v.d, v.h, v.w):
            raise ConstraintError(
                f"m={self.m} exceeds min(d, h, w)={min(v.d, v.h, v.w)} "
                f"for volume {v.h}x{v.w}x{v.d}")


def slice_indices(extent: int, m: int) -> list[int]:
    """``m`` equally spaced indices in ``[0, extent)``, endpoints included.

    Index ``i`` is ``round_half_up(i * (extent - 1) / (m - 1))``, computed in
    integers; a single slice is taken from the middle.
    """
    if m < 1 or m > extent:
        raise ConstraintError(f"cannot take {m} slices from an extent of {extent}")
    if m == 1:
        return [(extent - 1) // 2]
    span, den = extent - 1, m - 1
    return [(2 * i * span + den) // (2 * den) for i in range(m)]


def plane_indices(v: VideoVolume, plane: PlaneId, m: int) -> list[int]:
    extent = {PlaneId.XY: v.d, PlaneId.XT: v.h, PlaneId.YT: v.w}[PlaneId(plane)]
    return slice_indices(extent, m)


def raw_slices(v: VideoVolume, plane: PlaneId, m: int) -> list[np.ndarray]:
    """Un-resized slices of one plane, each ``rows x cols x c``."""
    plane = PlaneId(plane)
    idx = plane_indices(v, plane, m)
    data = v.data
    if plane is PlaneId.XY:
        return [data[:, :, t, :] for t in idx]
    if plane is PlaneId.XT:
        return [data[y].transpose(1, 0, 2) for y in idx]
    return [data[:, x].transpose(1, 0, 2) for x in idx]


def extract_plane(v: VideoVolume, plane: PlaneId, cfg: SliceConfig) -> np.ndarray:
    """Return the ``n x n x m x c`` stack of resized slices for one plane."""
    cfg.check(v)
    slices = [bilinear_resize(s, cfg.n, cfg.n) for s in raw_slices(v, plane, cfg.m)]
    return np.stack(slices, axis=2)


def extract_all(v: VideoVolume, cfg: SliceConfig) -> dict[PlaneId, np.ndarray]:
    return {p: extract_plane(v, p, cfg) for p in PLANES}
