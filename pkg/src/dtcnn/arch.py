"""Texture CNN architectures: T-CNN-3 (227 px inputs) and T-CNN50 (48 px inputs).

Builders return immutable :class:`NetworkSpec` values. Shapes and trainable
parameter counts are derived symbolically, without allocating weights, so
they can be diffed against the published layer tables.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import ConstraintError
from .nn.spec import LayerKind, LayerSpec

K = LayerKind


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    layers: tuple[LayerSpec, ...]
    input_channels: int
    num_classes: int
    input_side: int

    def digest(self) -> bytes:
        """SHA-256 of a canonical text rendering; identifies the architecture."""
        return hashlib.sha256(self.canonical().encode()).digest()

    def canonical(self) -> str:
        parts = [f"{self.name}|c={self.input_channels}|N={self.num_classes}|in={self.input_side}"]
        for l in self.layers:
            parts.append(f"{l.kind.value}:{l.kernel},{l.pad},{l.stride},{l.out},{l.size},"
                         f"{l.rate},{l.n_local},{l.alpha},{l.beta},{l.k}")
        return "\n".join(parts)


@dataclass(frozen=True)
class LayerRow:
    label: str
    kind: LayerKind
    shape: tuple[int, ...]
    window: str
    params: int


def _block(conv_kps, conv_out, pool_ks, lrn=True):
    k, p, s = conv_kps
    rows = [LayerSpec(K.CONV, k, p, s, out=conv_out), LayerSpec(K.RELU)]
    if pool_ks is not None:
        rows.append(LayerSpec(K.MAXPOOL, pool_ks[0], 0, pool_ks[1]))
    if lrn:
        rows.append(LayerSpec(K.LRN))
    return rows


def _texture_cnn(name, c, n_classes, crop, src_side, convs, widths, fc_width, dropout=0.5):
    if c not in (1, 3):
        raise ConstraintError(f"input channels must be 1 or 3, got {c}")
    if n_classes < 2:
        raise ConstraintError(f"need at least 2 classes, got {n_classes}")
    (k1, w1, p1), (k2, w2, p2), k3 = convs
    layers = [LayerSpec(K.CROP, size=crop)]
    layers += _block(k1, widths[0], p1)
    layers += _block(k2, widths[1], p2)
    layers += _block(k3, widths[2], None, lrn=False)
    layers.append(LayerSpec(K.ENERGY))
    for _ in range(2):
        layers += [LayerSpec(K.FC, out=fc_width), LayerSpec(K.RELU),
                   LayerSpec(K.DROPOUT, rate=dropout)]
    layers += [LayerSpec(K.FC, out=n_classes), LayerSpec(K.SOFTMAX_LOSS)]
    return NetworkSpec(name, tuple(layers), c, n_classes, src_side)


def build_tcnn3(c: int, n_classes: int, src_side: int = 256) -> NetworkSpec:
    """T-CNN-3: three conv layers on 227x227 crops, energy pooling, 4096-wide FCs.

    ``src_side`` is the side of the resized input the crop is taken from.
    """
    return _texture_cnn(
        "tcnn3", c, n_classes, 227, src_side,
        convs=(((11, 0, 4), 96, (3, 2)), ((5, 2, 1), 256, (3, 2)), (3, 1, 1)),
        widths=(96, 256, 384), fc_width=4096)


def build_tcnn50(c: int, n_classes: int, src_side: int = 50) -> NetworkSpec:
    """T-CNN50: small-receptive-field variant for 48x48 crops, 3000-wide FCs."""
    return _texture_cnn(
        "tcnn50", c, n_classes, 48, src_side,
        convs=(((5, 2, 1), 96, (2, 2)), ((3, 1, 1), 256, (2, 2)), (3, 1, 1)),
        widths=(96, 256, 384), fc_width=3000)


def build_tcnn50_micro(c: int, n_classes: int, src_side: int = 48) -> NetworkSpec:
    """T-CNN50 with conv widths divided by 8 and 256-wide FCs.

    Not a published architecture: a reduced-cost variant for tests and
    synthetic experiments on a CPU.
    """
    return _texture_cnn(
        "tcnn50-micro", c, n_classes, 48, src_side,
        convs=(((5, 2, 1), 96 // 8, (2, 2)), ((3, 1, 1), 256 // 8, (2, 2)), (3, 1, 1)),
        widths=(96 // 8, 256 // 8, 384 // 8), fc_width=256)


BUILDERS = {
    "tcnn3": build_tcnn3,
    "tcnn50": build_tcnn50,
    "tcnn50-micro": build_tcnn50_micro,
}


def build(name: str, c: int, n_classes: int, src_side: int | None = None) -> NetworkSpec:
    try:
        builder = BUILDERS[name]
    except KeyError:
        raise ConstraintError(f"unknown architecture {name!r}; choose from {sorted(BUILDERS)}")
    return builder(c, n_classes) if src_side is None else builder(c, n_classes, src_side)


def infer_shapes(spec: NetworkSpec) -> list[tuple[int, ...]]:
    """Output shape of every layer, evaluated symbolically.

    Maps are ``(H, W, C)``; vectors ``(F,)``. The input is taken to be the
    crop size, i.e. the shape the first conv layer actually sees.
    """
    first = spec.layers[0] if spec.layers else None
    side = first.size if first is not None and first.kind is K.CROP else spec.input_side
    shape = (side, side, spec.input_channels)
    shapes = []
    for layer in spec.layers:
        shape = layer.output_shape(shape)
        shapes.append(shape)
    return shapes


def layer_rows(spec: NetworkSpec) -> list[LayerRow]:
    rows, counters = [], {K.CONV: 0, K.FC: 0, K.MAXPOOL: 0}
    first = spec.layers[0] if spec.layers else None
    side = first.size if first is not None and first.kind is K.CROP else spec.input_side
    shape = (side, side, spec.input_channels)
    for layer in spec.layers:
        params = layer.param_count(shape)
        shape = layer.output_shape(shape)
        label = _LABELS[layer.kind]
        if layer.kind in counters:
            counters[layer.kind] += 1
            label += f" ({_PREFIX[layer.kind]}{counters[layer.kind]})"
        rows.append(LayerRow(label, layer.kind, shape, layer.describe(), params))
    return rows


def count_params(spec: NetworkSpec) -> tuple[list[int], int]:
    """Per-layer trainable parameter counts and their total."""
    per_layer = [r.params for r in layer_rows(spec)]
    return per_layer, sum(per_layer)


_LABELS = {
    K.CROP: "crop", K.CONV: "Conv", K.RELU: "ReLU", K.MAXPOOL: "Pool", K.LRN: "LRN",
    K.ENERGY: "Energy", K.FC: "Fully-con.", K.DROPOUT: "Dropout", K.SOFTMAX_LOSS: "Softmax",
}
_PREFIX = {K.CONV: "C", K.FC: "FC", K.MAXPOOL: "P"}


def format_shape(shape) -> str:
    """Table-style size: ``C x H x W`` for maps, the width for vectors."""
    if len(shape) == 3:
        h, w, c = shape
        return f"{c}x{h}x{w}"
    return str(shape[0])


def format_table(spec: NetworkSpec) -> str:
    """Render the layer table with columns type, output size, kernel/pad/stride, params."""
    header = ("Layer type", "output size", "kernel, pad, stride", "train. param.")
    body = [(r.label, format_shape(r.shape), r.window, f"{r.params:,}") for r in layer_rows(spec)]
    widths = [max(len(row[i]) for row in [header] + body) for i in range(4)]
    lines = [" | ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("-+-".join("-" * w for w in widths))
    lines += [" | ".join(v.ljust(w) for v, w in zip(row, widths)) for row in body]
    _, total = count_params(spec)
    lines.append(f"total trainable parameters: {total:,}")
    return "\n".join(lines)
