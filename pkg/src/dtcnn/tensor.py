"""Numeric substrate: dense arrays, seeded randomness and bilinear resizing.

Tensors are plain :class:`numpy.ndarray` objects in row-major order. Images
use the axis order ``(rows, cols, channels)`` and video volumes
``(rows, cols, frames, channels)``. Batched feature maps put the batch axis
first: ``(batch, rows, cols, channels)``.

Randomness goes through :func:`make_rng`, which wraps numpy's PCG64 bit
generator. PCG64 is a documented, platform independent permuted congruential
generator, so a seed reproduces the same stream on every machine.
"""
from __future__ import annotations

import numpy as np

from .errors import ShapeError

FLOAT = np.float32
FLOAT64 = np.float64


def check_shape(shape) -> tuple[int, ...]:
    """Validate a shape: every extent must be a positive integer."""
    shape = tuple(int(s) for s in shape)
    if any(s < 1 for s in shape):
        raise ShapeError(f"all extents must be >= 1, got {shape}")
    return shape


def zeros(shape, dtype=FLOAT) -> np.ndarray:
    return np.zeros(check_shape(shape), dtype=dtype)


def flatten_index(index, shape) -> int:
    """Row-major flat offset of a multi-index."""
    return int(np.ravel_multi_index(tuple(index), check_shape(shape)))


def unflatten_index(offset: int, shape) -> tuple[int, ...]:
    """Inverse of :func:`flatten_index`."""
    return tuple(int(i) for i in np.unravel_index(offset, check_shape(shape)))


def make_rng(seed: int) -> np.random.Generator:
    """Return a PCG64 generator seeded with a 64-bit integer."""
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def rng_state(rng: np.random.Generator) -> dict:
    return rng.bit_generator.state


def set_rng_state(rng: np.random.Generator, state: dict) -> None:
    rng.bit_generator.state = state


def fill_gaussian(t: np.ndarray, rng: np.random.Generator, mean: float = 0.0,
                  std: float = 0.01) -> np.ndarray:
    """Fill ``t`` in place with i.i.d. normal samples and return it."""
    if std < 0:
        raise ValueError(f"std must be >= 0, got {std}")
    if std == 0:
        t[...] = mean
        return t
    t[...] = rng.normal(mean, std, size=t.shape)
    return t


def _axis_weights(src_len: int, out_len: int):
    pos = (np.arange(out_len, dtype=np.float64) + 0.5) * (src_len / out_len) - 0.5
    pos = np.clip(pos, 0.0, src_len - 1)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, src_len - 1)
    return lo, hi, pos - lo


def bilinear_resize(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize an ``h x w (x c)`` image with the half-pixel-center convention.

    Output pixel ``(i, j)`` samples the source at
    ``((i + 0.5) * h / out_h - 0.5, (j + 0.5) * w / out_w - 0.5)``, clamped
    to the image border. Channels are interpolated independently. Float
    inputs keep their dtype; integer inputs produce float64.
    """
    src = np.asarray(src)
    if src.ndim not in (2, 3):
        raise ShapeError(f"expected h x w or h x w x c image, got shape {src.shape}")
    check_shape(src.shape)
    out_h, out_w = check_shape((out_h, out_w))
    h, w = src.shape[:2]
    out_dtype = src.dtype if np.issubdtype(src.dtype, np.floating) else FLOAT64
    img = src.astype(np.float64, copy=False)

    y0, y1, wy = _axis_weights(h, out_h)
    x0, x1, wx = _axis_weights(w, out_w)
    extra = (1,) * (img.ndim - 2)
    wy = wy.reshape((-1, 1) + extra)
    wx = wx.reshape((1, -1) + extra)

    # a + w * (b - a) keeps constant regions exact
    rows0, rows1 = img[y0], img[y1]
    top = rows0[:, x0] + wx * (rows0[:, x1] - rows0[:, x0])
    bot = rows1[:, x0] + wx * (rows1[:, x1] - rows1[:, x0])
    out = top + wy * (bot - top)
    np.clip(out, img.min(), img.max(), out=out)
    return out.astype(out_dtype, copy=False)
