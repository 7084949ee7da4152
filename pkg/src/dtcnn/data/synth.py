"""Synthetic dynamic textures with controlled spatial and temporal content.

Every kind starts from the same family of stationary, periodic band-pass
noise textures, so single frames of different kinds are drawn from matched
distributions. The kinds differ in how the texture evolves over time:

``STATIC_TEXTURE``
    texture with a per-sequence global gain ``1 + a*sin(phase)``;
``FLICKER``
    same texture, gain ``1 + a*sin(phase + 2*pi*t/period)`` varies over time.
    For any fixed frame the phase is uniform, so the frame distribution equals
    that of ``STATIC_TEXTURE``; frame 0 is identical for equal seeds;
``DRIFT_X`` / ``DRIFT_Y``
    texture translated along x (resp. y) at an integer speed, static gain;
    ``DRIFT_Y(seed, h, w, d)`` is ``DRIFT_X(seed, w, h, d)`` with x and y swapped;
``ADVECTED_NOISE``
    diagonal translation while the pattern morphs into a second texture;
``WAVE``
    texture plus a travelling plane wave.

Values are in [0, 1]; the same i.i.d. sensor noise field is added for every
kind given a seed.
"""
from __future__ import annotations

from enum import Enum
from pathlib import Path

import numpy as np

from ..slicer import VideoVolume
from ..tensor import make_rng
from .frames import frame_suffix, to_uint8, write_frame

GAIN_AMPLITUDE = 0.3
FLICKER_PERIOD = 12.0
CONTRAST = 0.15
NOISE_STD = 0.02


class DTKind(str, Enum):
    STATIC_TEXTURE = "static"
    DRIFT_X = "drift_x"
    DRIFT_Y = "drift_y"
    FLICKER = "flicker"
    ADVECTED_NOISE = "advected"
    WAVE = "wave"


def periodic_texture(rng, h: int, w: int) -> np.ndarray:
    """Zero-mean, unit-variance band-pass noise that tiles seamlessly."""
    center = rng.uniform(0.08, 0.2)
    width = 0.35 * center
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    radius = np.hypot(fy, fx)
    spectrum = np.exp(-0.5 * ((radius - center) / width) ** 2)
    spectrum[0, 0] = 0.0
    noise = rng.standard_normal((h, w))
    tex = np.real(np.fft.ifft2(np.fft.fft2(noise) * spectrum))
    std = tex.std()
    return (tex - tex.mean()) / (std if std > 0 else 1.0)


def _common(rng, h, w, d):
    """Draws shared by every kind, in a fixed order."""
    tex = periodic_texture(rng, h, w)
    phase = rng.uniform(0, 2 * np.pi)
    noise = rng.normal(0.0, NOISE_STD, size=(h, w, d))
    return tex, phase, noise


def _render(pattern, gain, noise):
    """``pattern`` is ``h x w x d`` zero-mean; ``gain`` broadcasts over frames."""
    return np.clip(gain * (0.5 + CONTRAST * pattern) + noise, 0.0, 1.0)


def synth_dt(kind: DTKind | str, seed: int, h: int, w: int, d: int) -> VideoVolume:
    """Generate one ``h x w x d x 1`` float volume of the given kind."""
    kind = DTKind(kind)
    if kind is DTKind.DRIFT_Y:
        v = synth_dt(DTKind.DRIFT_X, seed, w, h, d)
        return VideoVolume(np.ascontiguousarray(v.data.transpose(1, 0, 2, 3)))

    rng = make_rng(seed)
    tex, phase, noise = _common(rng, h, w, d)
    t = np.arange(d, dtype=np.float64)
    static_gain = 1.0 + GAIN_AMPLITUDE * np.sin(phase)

    if kind is DTKind.STATIC_TEXTURE:
        pattern = np.repeat(tex[:, :, None], d, axis=2)
        gain = static_gain
    elif kind is DTKind.FLICKER:
        pattern = np.repeat(tex[:, :, None], d, axis=2)
        gain = 1.0 + GAIN_AMPLITUDE * np.sin(phase + 2 * np.pi * t / FLICKER_PERIOD)
    elif kind is DTKind.DRIFT_X:
        speed = int(rng.integers(1, 3)) * (1 if rng.random() < 0.5 else -1)
        pattern = np.stack([np.roll(tex, speed * i, axis=1) for i in range(d)], axis=2)
        gain = static_gain
    elif kind is DTKind.ADVECTED_NOISE:
        other = periodic_texture(rng, h, w)
        theta = 0.5 * np.pi * t / max(d - 1, 1)
        frames = []
        for i in range(d):
            mix = np.cos(theta[i]) * tex + np.sin(theta[i]) * other
            frames.append(np.roll(mix, (i, i), axis=(0, 1)))
        pattern = np.stack(frames, axis=2)
        gain = static_gain
    else:  # WAVE
        angle = rng.uniform(0, 2 * np.pi)
        k = rng.uniform(0.15, 0.4)
        omega = rng.uniform(0.2, 0.6)
        yy, xx = np.mgrid[0:h, 0:w]
        arg = k * (np.cos(angle) * xx + np.sin(angle) * yy)
        wave = np.sin(arg[:, :, None] - omega * t[None, None, :])
        pattern = 0.6 * tex[:, :, None] + 0.8 * wave
        gain = static_gain

    return VideoVolume(_render(pattern, gain, noise)[..., None])


def sequence_seed(seed: int, class_index: int, index: int) -> int:
    ss = np.random.SeedSequence([int(seed), int(class_index), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def write_synthetic_dataset(root, kinds, per_class: int, seed: int, h: int = 48,
                            w: int = 48, d: int = 48) -> Path:
    """Write ``per_class`` sequences of each kind as 8-bit frame files.

    Layout: ``root/<kind>/<kind>_<NNN>/frame_<TTTTT>.pgm``.
    """
    root = Path(root)
    for ci, kind in enumerate(DTKind(k) for k in kinds):
        for i in range(per_class):
            vol = synth_dt(kind, sequence_seed(seed, ci, i), h, w, d)
            seq_dir = root / kind.value / f"{kind.value}_{i:03d}"
            pixels = to_uint8(vol.data, 255.0)
            for t in range(d):
                write_frame(seq_dir / f"frame_{t:05d}{frame_suffix(vol.c)}", pixels[:, :, t])
    return root
