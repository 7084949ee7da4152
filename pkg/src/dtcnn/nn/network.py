"""Sequential network assembled from a list of :class:`LayerSpec`."""
from __future__ import annotations

import math

import numpy as np

from ..errors import ShapeError
from ..tensor import FLOAT, fill_gaussian
from . import ops
from .spec import LayerKind, LayerSpec


class Layer:
    params: tuple = ()

    def __init__(self, spec: LayerSpec, in_shape):
        self.spec = spec
        self.in_shape = tuple(in_shape)
        self.out_shape = spec.output_shape(self.in_shape)
        self.grads = ()

    def forward(self, x, train, rng):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError


class Crop(Layer):
    """Random crop plus optional horizontal mirror in training, center crop otherwise."""

    def __init__(self, spec, in_shape, mirror=True):
        super().__init__(spec, in_shape)
        self.mirror = mirror

    def forward(self, x, train, rng):
        size = self.spec.size
        _, h, w, _ = x.shape
        if h < size or w < size:
            raise ShapeError(f"crop {size} larger than input {h}x{w}")
        if not train:
            top, left = (h - size) // 2, (w - size) // 2
            return x[:, top:top + size, left:left + size]
        out = np.empty((x.shape[0], size, size, x.shape[3]), dtype=x.dtype)
        for i in range(x.shape[0]):
            top = int(rng.integers(0, h - size + 1))
            left = int(rng.integers(0, w - size + 1))
            patch = x[i, top:top + size, left:left + size]
            if self.mirror and rng.random() < 0.5:
                patch = patch[:, ::-1]
            out[i] = patch
        return out

    def backward(self, dy):
        return None


class Conv(Layer):
    def __init__(self, spec, in_shape, dtype=FLOAT):
        super().__init__(spec, in_shape)
        k, c = spec.kernel, self.in_shape[2]
        self.w = np.zeros((k, k, c, spec.out), dtype=dtype)
        self.b = np.zeros(spec.out, dtype=dtype)
        self.params = (self.w, self.b)
        self.fan_in = k * k * c
        self.need_dx = True

    def forward(self, x, train, rng):
        s = self.spec
        self.x = x
        y, self.cols = ops.conv_forward(x, self.w, self.b, s.stride, s.pad, return_cols=True)
        return y

    def backward(self, dy):
        s = self.spec
        dx, dw, db = ops.conv_backward(dy, self.x, self.w, s.stride, s.pad, cols=self.cols,
                                       need_dx=self.need_dx)
        self.grads = (dw, db)
        return dx


class ReLU(Layer):
    def forward(self, x, train, rng):
        self.x = x
        return ops.relu(x)

    def backward(self, dy):
        return ops.relu_backward(dy, self.x)


class MaxPool(Layer):
    def forward(self, x, train, rng):
        self.x = x
        y, self.argmax = ops.maxpool_forward(x, self.spec.kernel, self.spec.stride,
                                             return_argmax=True)
        return y

    def backward(self, dy):
        return ops.maxpool_backward(dy, self.x, self.spec.kernel, self.spec.stride,
                                    argmax=self.argmax)


class LRN(Layer):
    def _kw(self):
        s = self.spec
        return dict(n_local=s.n_local, alpha=s.alpha, beta=s.beta, k=s.k)

    def forward(self, x, train, rng):
        self.x = x
        return ops.lrn(x, **self._kw())

    def backward(self, dy):
        return ops.lrn_backward(dy, self.x, **self._kw())


class Energy(Layer):
    def forward(self, x, train, rng):
        self.x_shape = x.shape
        return ops.energy(x)

    def backward(self, dy):
        return ops.energy_backward(dy, self.x_shape)


class FullyConnected(Layer):
    def __init__(self, spec, in_shape, dtype=FLOAT):
        super().__init__(spec, in_shape)
        self.w = np.zeros((self.in_shape[0], spec.out), dtype=dtype)
        self.b = np.zeros(spec.out, dtype=dtype)
        self.params = (self.w, self.b)
        self.fan_in = self.in_shape[0]

    def forward(self, x, train, rng):
        self.x = x
        return ops.fc_forward(x, self.w, self.b)

    def backward(self, dy):
        dx, dw, db = ops.fc_backward(dy, self.x, self.w)
        self.grads = (dw, db)
        return dx


class Dropout(Layer):
    def forward(self, x, train, rng):
        y, self.mask = ops.dropout(x, self.spec.rate, rng, train)
        return y

    def backward(self, dy):
        return ops.dropout_backward(dy, self.mask)


_LAYERS = {
    LayerKind.CONV: Conv,
    LayerKind.RELU: ReLU,
    LayerKind.MAXPOOL: MaxPool,
    LayerKind.LRN: LRN,
    LayerKind.ENERGY: Energy,
    LayerKind.FC: FullyConnected,
    LayerKind.DROPOUT: Dropout,
}


class Network:
    """Trainable stack of layers described by a network spec.

    The trailing SoftmaxLoss layer is not part of :meth:`forward`, which
    returns the raw scores of the last fully-connected layer; :meth:`loss`
    applies it.
    """

    def __init__(self, spec, mirror: bool = True, dtype=FLOAT):
        self.spec = spec
        self.dtype = dtype
        shape = (spec.input_side, spec.input_side, spec.input_channels)
        self.layers: list[Layer] = []
        for ls in spec.layers:
            if ls.kind is LayerKind.SOFTMAX_LOSS:
                continue
            if ls.kind is LayerKind.CROP:
                layer = Crop(ls, shape, mirror=mirror)
            elif ls.kind in (LayerKind.CONV, LayerKind.FC):
                layer = _LAYERS[ls.kind](ls, shape, dtype=dtype)
            else:
                layer = _LAYERS[ls.kind](ls, shape)
            self.layers.append(layer)
            shape = layer.out_shape
        for layer in self.layers:
            if isinstance(layer, Conv):
                layer.need_dx = False  # nothing trainable upstream
            if not isinstance(layer, Crop):
                break

    @property
    def param_layers(self):
        return [l for l in self.layers if l.params]

    def params(self):
        return [p for l in self.layers for p in l.params]

    def grads(self):
        return [g for l in self.layers for g in l.grads]

    def init_weights(self, rng, method: str = "gaussian", std: float = 0.01):
        """Draw weights from N(0, std) ("gaussian") or N(0, 2/fan_in) ("he"); zero biases."""
        for layer in self.param_layers:
            if method == "gaussian":
                sigma = std
            elif method == "he":
                sigma = math.sqrt(2.0 / layer.fan_in)
            else:
                raise ValueError(f"unknown init method {method!r}")
            fill_gaussian(layer.w, rng, 0.0, sigma)
            layer.b[...] = 0
        return self

    def forward(self, x, train: bool = False, rng=None):
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 3:
            x = x[None]
        for layer in self.layers:
            x = layer.forward(x, train, rng)
        return x

    def loss(self, scores, labels):
        return ops.softmax_loss(scores, labels)

    def backward(self, dscores):
        d = dscores
        for layer in reversed(self.layers):
            d = layer.backward(d)
            if d is None:
                break
        return d

    def predict_scores(self, x, batch_size: int = 64):
        """Raw class scores in inference mode, evaluated in fixed-size chunks."""
        out = [self.forward(x[i:i + batch_size], train=False)
               for i in range(0, len(x), batch_size)]
        return np.concatenate(out, axis=0)
