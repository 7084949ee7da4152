"""Forward and backward passes for the layer types used by the texture CNNs.

Feature maps are channels-last. Every spatial op accepts either a single map
``(rows, cols, channels)`` or a batch ``(batch, rows, cols, channels)`` and
returns the same rank it was given. Convolution weights are laid out
``(k, k, in_channels, out_channels)`` and fully-connected weights
``(in_features, out_features)``.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError


def _batched(x):
    x = np.asarray(x)
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise ShapeError(f"expected a (B,) H x W x C feature map, got shape {x.shape}")


def _unbatch(y, single):
    return y[0] if single else y


def conv_output_side(side: int, kernel: int, pad: int, stride: int) -> int:
    span = side + 2 * pad - kernel
    if span < 0:
        raise ShapeError(f"kernel {kernel} larger than padded input {side + 2 * pad}")
    return span // stride + 1


def pool_output_side(side: int, kernel: int, stride: int) -> int:
    return conv_output_side(side, kernel, 0, stride)


# -- convolution -----------------------------------------------------------

def im2col(x: np.ndarray, kernel: int, stride: int, pad: int) -> np.ndarray:
    """Unfold a batch into a ``(B*Ho*Wo, C*k*k)`` patch matrix.

    Patch columns are ordered (channel, row, col), matching
    :func:`_weight_matrix`.
    """
    b, h, w, c = x.shape
    ho = conv_output_side(h, kernel, pad, stride)
    wo = conv_output_side(w, kernel, pad, stride)
    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    win = sliding_window_view(x, (kernel, kernel), axis=(1, 2))
    win = win[:, ::stride, ::stride][:, :ho, :wo]
    return win.reshape(b * ho * wo, c * kernel * kernel)


def _weight_matrix(w: np.ndarray) -> np.ndarray:
    k, _, c, o = w.shape
    return w.transpose(2, 0, 1, 3).reshape(c * k * k, o)


def conv_forward(x, w, b, stride: int = 1, pad: int = 0, return_cols: bool = False):
    """Cross-correlate ``x`` with ``w`` (no kernel flip) and add ``b``."""
    xb, single = _batched(x)
    k, k2, c, o = w.shape
    if k != k2:
        raise ShapeError(f"kernels must be square, got {w.shape}")
    if xb.shape[3] != c:
        raise ShapeError(f"input has {xb.shape[3]} channels, weights expect {c}")
    bsz, h, wd, _ = xb.shape
    ho = conv_output_side(h, k, pad, stride)
    wo = conv_output_side(wd, k, pad, stride)
    cols = im2col(xb, k, stride, pad)
    y = (cols @ _weight_matrix(w) + b).reshape(bsz, ho, wo, o)
    y = _unbatch(y, single)
    return (y, cols) if return_cols else y


def conv_backward(dy, x, w, stride: int = 1, pad: int = 0, cols=None, need_dx: bool = True):
    """Return ``(dx, dw, db)`` for :func:`conv_forward`.

    With ``need_dx=False`` the input gradient is skipped and ``dx`` is None.
    """
    xb, single = _batched(x)
    dyb, _ = _batched(dy)
    k, _, c, o = w.shape
    bsz, h, wd, _ = xb.shape
    ho = conv_output_side(h, k, pad, stride)
    wo = conv_output_side(wd, k, pad, stride)
    if dyb.shape != (bsz, ho, wo, o):
        raise ShapeError(f"dy shape {dyb.shape} does not match output {(bsz, ho, wo, o)}")
    if cols is None:
        cols = im2col(xb, k, stride, pad)
    dy2 = dyb.reshape(-1, o)
    wmat = _weight_matrix(w)
    dw = (cols.T @ dy2).reshape(c, k, k, o).transpose(1, 2, 0, 3)
    db = dy2.sum(axis=0)
    if not need_dx:
        return None, np.ascontiguousarray(dw), db
    dcols = (dy2 @ wmat.T).reshape(bsz, ho, wo, c, k, k)
    dxp = np.zeros((bsz, h + 2 * pad, wd + 2 * pad, c), dtype=dcols.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, i:i + stride * (ho - 1) + 1:stride,
                j:j + stride * (wo - 1) + 1:stride, :] += dcols[..., i, j]
    dx = dxp[:, pad:pad + h, pad:pad + wd, :]
    return _unbatch(dx, single), np.ascontiguousarray(dw), db


# -- elementwise -----------------------------------------------------------

def relu(x):
    return np.maximum(x, 0)


def relu_backward(dy, x):
    # gradient at exactly 0 is 0
    return np.where(x > 0, dy, 0).astype(dy.dtype, copy=False)


# -- pooling ---------------------------------------------------------------

def _pool_windows(xb, kernel, stride):
    ho = pool_output_side(xb.shape[1], kernel, stride)
    wo = pool_output_side(xb.shape[2], kernel, stride)
    win = sliding_window_view(xb, (kernel, kernel), axis=(1, 2))
    return win[:, ::stride, ::stride][:, :ho, :wo]


def maxpool_forward(x, kernel: int, stride: int, return_argmax: bool = False):
    """Max pooling without padding; ``argmax`` indexes the window row-major."""
    xb, single = _batched(x)
    win = _pool_windows(xb, kernel, stride)
    flat = win.reshape(win.shape[:4] + (kernel * kernel,))
    arg = flat.argmax(axis=-1)  # first maximum on ties
    y = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    y = _unbatch(y, single)
    return (y, _unbatch(arg, single)) if return_argmax else y


def maxpool_backward(dy, x, kernel: int, stride: int, argmax=None):
    xb, single = _batched(x)
    dyb, _ = _batched(dy)
    if argmax is None:
        _, argmax = maxpool_forward(xb, kernel, stride, return_argmax=True)
    elif single:
        argmax = argmax[None]
    ho, wo = argmax.shape[1:3]
    if dyb.shape != argmax.shape:
        raise ShapeError(f"dy shape {dyb.shape} does not match pooled {argmax.shape}")
    dx = np.zeros_like(xb, dtype=dyb.dtype)
    for i in range(kernel):
        for j in range(kernel):
            hit = argmax == i * kernel + j
            dx[:, i:i + stride * (ho - 1) + 1:stride,
               j:j + stride * (wo - 1) + 1:stride, :] += np.where(hit, dyb, 0)
    return _unbatch(dx, single)


def avg_pool(x, kernel_h: int, kernel_w: int, stride: int = 1):
    """Average pooling over ``kernel_h x kernel_w`` windows, no padding."""
    xb, single = _batched(x)
    ho = pool_output_side(xb.shape[1], kernel_h, stride)
    wo = pool_output_side(xb.shape[2], kernel_w, stride)
    win = sliding_window_view(xb, (kernel_h, kernel_w), axis=(1, 2))
    win = win[:, ::stride, ::stride][:, :ho, :wo]
    y = win.sum(axis=(-2, -1)) / (kernel_h * kernel_w)
    return _unbatch(y.astype(xb.dtype, copy=False), single)


# -- energy ----------------------------------------------------------------

def energy(x):
    """Mean response of each feature map: ``(B,) N x M x K -> (B,) K``.

    Computed as an average pool whose window covers the whole map.
    """
    xb, single = _batched(x)
    e = avg_pool(xb, xb.shape[1], xb.shape[2])[:, 0, 0, :]
    return _unbatch(e, single)


def energy_backward(dy, x_shape):
    rows, cols = x_shape[-3], x_shape[-2]
    dy = np.asarray(dy)
    scaled = dy / (rows * cols)
    return np.broadcast_to(scaled[..., None, None, :], x_shape).astype(dy.dtype)


# -- local response normalization -----------------------------------------

LRN_DEFAULTS = {"n_local": 5, "alpha": 1e-4, "beta": 0.75, "k": 1.0}


def _channel_window_sum(v, n_local):
    half = n_local // 2
    c = v.shape[-1]
    out = np.zeros_like(v)
    for off in range(-half, half + 1):
        lo, hi = max(0, -off), min(c, c - off)
        if lo < hi:
            out[..., lo:hi] += v[..., lo + off:hi + off]
    return out


def _lrn_scale(x, n_local, alpha, k):
    if n_local % 2 != 1:
        raise ValueError(f"n_local must be odd, got {n_local}")
    return k + (alpha / n_local) * _channel_window_sum(x * x, n_local)


def lrn(x, n_local=5, alpha=1e-4, beta=0.75, k=1.0):
    """Across-channel LRN; the window is truncated at the channel edges."""
    scale = _lrn_scale(x, n_local, alpha, k)
    return x * scale ** -beta


def lrn_backward(dy, x, n_local=5, alpha=1e-4, beta=0.75, k=1.0, scale=None):
    if scale is None:
        scale = _lrn_scale(x, n_local, alpha, k)
    t = dy * x * scale ** (-beta - 1)
    return dy * scale ** -beta - (2 * alpha * beta / n_local) * x * _channel_window_sum(t, n_local)


# -- fully connected -------------------------------------------------------

def fc_forward(x, w, b):
    if x.shape[-1] != w.shape[0]:
        raise ShapeError(f"input width {x.shape[-1]} does not match weights {w.shape}")
    return x @ w + b


def fc_backward(dy, x, w):
    """Return ``(dx, dw, db)``; accepts a single vector or a batch."""
    x2 = np.atleast_2d(x)
    dy2 = np.atleast_2d(dy)
    if dy2.shape != (x2.shape[0], w.shape[1]):
        raise ShapeError(f"dy shape {np.shape(dy)} does not match output width {w.shape[1]}")
    dx = dy2 @ w.T
    return dx.reshape(np.shape(x)), x2.T @ dy2, dy2.sum(axis=0)


# -- dropout ---------------------------------------------------------------

def dropout(x, rate: float, rng=None, train: bool = True):
    """Inverted dropout. Returns ``(y, mask)``; ``mask`` is None at inference."""
    if not 0 <= rate < 1:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not train or rate == 0:
        return x, None
    keep = rng.random(x.shape) >= rate
    mask = keep.astype(x.dtype) / x.dtype.type(1 - rate)
    return x * mask, mask


def dropout_backward(dy, mask):
    return dy if mask is None else dy * mask


# -- loss ------------------------------------------------------------------

def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_loss(logits, label):
    """Multinomial logistic loss of the softmax.

    For a single logit vector returns ``(loss, dlogits)``. For a batch
    ``(B, N)`` with ``B`` labels the loss and gradient are averaged over the
    batch.
    """
    logits = np.asarray(logits)
    single = logits.ndim == 1
    z = np.atleast_2d(logits)
    labels = np.atleast_1d(np.asarray(label))
    n = z.shape[1]
    if labels.shape[0] != z.shape[0]:
        raise ShapeError(f"{labels.shape[0]} labels for {z.shape[0]} logit rows")
    if np.any(labels < 0) or np.any(labels >= n):
        raise ValueError(f"label out of range [0, {n})")
    shifted = z - z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(z.shape[0])
    losses = logsum - shifted[rows, labels]
    grad = np.exp(shifted - logsum[:, None])
    grad[rows, labels] -= 1
    if single:
        return float(losses[0]), grad[0]
    bsz = z.shape[0]
    return float(losses.mean()), grad / bsz
