"""Slow, obviously-correct reference implementations used as test oracles.

None of these share code with the package paths they check.
"""
import math

import numpy as np


def numerical_grad(f, x, eps=1e-3):
    """Central differences of scalar ``f()`` w.r.t. every entry of ``x`` (mutated in place)."""
    g = np.zeros_like(x, dtype=np.float64)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        orig = x[i]
        x[i] = orig + eps
        fp = f()
        x[i] = orig - eps
        fm = f()
        x[i] = orig
        g[i] = (fp - fm) / (2 * eps)
    return g


def max_rel_error(analytic, numeric, floor=1e-6):
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom))


def bilinear_pixel(src, i, j, out_h, out_w):
    """Scalar evaluation of the half-pixel-center bilinear formula for one pixel."""
    h, w = src.shape[:2]
    sy = min(max((i + 0.5) * h / out_h - 0.5, 0.0), h - 1)
    sx = min(max((j + 0.5) * w / out_w - 0.5, 0.0), w - 1)
    y0, x0 = int(math.floor(sy)), int(math.floor(sx))
    y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
    fy, fx = sy - y0, sx - x0
    return ((1 - fy) * (1 - fx) * src[y0, x0] + (1 - fy) * fx * src[y0, x1]
            + fy * (1 - fx) * src[y1, x0] + fy * fx * src[y1, x1])


def bilinear_loop(src, out_h, out_w):
    src = np.asarray(src, dtype=np.float64)
    out = np.zeros((out_h, out_w) + src.shape[2:])
    for i in range(out_h):
        for j in range(out_w):
            out[i, j] = bilinear_pixel(src, i, j, out_h, out_w)
    return out


def conv_loop(x, w, b, stride, pad):
    """Direct cross-correlation of one ``H x W x C`` map."""
    h, wd, c = x.shape
    k, _, _, o = w.shape
    xp = np.zeros((h + 2 * pad, wd + 2 * pad, c))
    xp[pad:pad + h, pad:pad + wd] = x
    ho = (h + 2 * pad - k) // stride + 1
    wo = (wd + 2 * pad - k) // stride + 1
    y = np.zeros((ho, wo, o))
    for r in range(ho):
        for q in range(wo):
            for f in range(o):
                acc = b[f]
                for i in range(k):
                    for j in range(k):
                        for ch in range(c):
                            acc += xp[r * stride + i, q * stride + j, ch] * w[i, j, ch, f]
                y[r, q, f] = acc
    return y


def naive_slices(vol, plane, indices):
    """Element-by-element slice extraction, no slicing or transposes."""
    h, w, d, c = vol.shape
    out = []
    for s in indices:
        if plane == "xy":
            img = np.empty((h, w, c), dtype=vol.dtype)
            for y in range(h):
                for x in range(w):
                    for ch in range(c):
                        img[y, x, ch] = vol[y, x, s, ch]
        elif plane == "xt":
            img = np.empty((d, w, c), dtype=vol.dtype)
            for t in range(d):
                for x in range(w):
                    for ch in range(c):
                        img[t, x, ch] = vol[s, x, t, ch]
        else:
            img = np.empty((d, h, c), dtype=vol.dtype)
            for t in range(d):
                for y in range(h):
                    for ch in range(c):
                        img[t, y, ch] = vol[y, s, t, ch]
        out.append(img)
    return out


def equal_spacing(extent, m):
    """Endpoint-inclusive equally spaced indices, rounding halves up, via fractions."""
    from fractions import Fraction
    if m == 1:
        return [(extent - 1) // 2]
    return [math.floor(Fraction(i * (extent - 1), m - 1) + Fraction(1, 2)) for i in range(m)]


def brute_evaluate(seq_scores, labels, subset, n_classes):
    """Loop evaluator: sum every slice score of every chosen plane, argmax with low-index ties."""
    conf = [[0] * n_classes for _ in range(n_classes)]
    for seq, truth in labels.items():
        total = [0.0] * n_classes
        for plane in subset:
            for row in seq_scores[seq][plane]:
                for k in range(n_classes):
                    total[k] += float(row[k])
        best = 0
        for k in range(1, n_classes):
            if total[k] > total[best]:
                best = k
        conf[truth][best] += 1
    correct = sum(conf[i][i] for i in range(n_classes))
    return correct / len(labels), conf
