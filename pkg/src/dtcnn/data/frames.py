"""Binary PGM (P5) and PPM (P6) frame files with 8-bit samples."""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from ..errors import DataError

FRAME_SUFFIXES = (".pgm", ".ppm")


def _tokens(buf: bytes, count: int, pos: int):
    """Read ``count`` whitespace separated header tokens, skipping comments."""
    out = []
    n = len(buf)
    while len(out) < count:
        while pos < n and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos:pos + 1] == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise DataError("truncated PNM header")
        out.append(buf[start:pos])
    return out, pos


def decode_pnm(buf: bytes, name: str = "<bytes>") -> np.ndarray:
    """Decode P5/P6 bytes into ``h x w`` (gray) or ``h x w x 3`` uint8 pixels."""
    magic = buf[:2]
    if magic not in (b"P5", b"P6"):
        raise DataError(f"{name}: not a binary PGM/PPM file (magic {magic!r})")
    try:
        (w, h, maxval), pos = _tokens(buf, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise DataError(f"{name}: bad header: {exc}") from exc
    if w < 1 or h < 1 or not 0 < maxval < 256:
        raise DataError(f"{name}: unsupported geometry {w}x{h} maxval {maxval}")
    pos += 1  # single whitespace byte ends the header
    channels = 3 if magic == b"P6" else 1
    size = w * h * channels
    data = buf[pos:pos + size]
    if len(data) != size:
        raise DataError(f"{name}: expected {size} pixel bytes, found {len(data)}")
    px = np.frombuffer(data, dtype=np.uint8)
    return px.reshape(h, w, 3) if channels == 3 else px.reshape(h, w)


def encode_pnm(img: np.ndarray) -> bytes:
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise ValueError(f"frames must be uint8, got {img.dtype}")
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"cannot encode image of shape {img.shape}")
    h, w = img.shape[:2]
    return magic + f"\n{w} {h}\n255\n".encode() + np.ascontiguousarray(img).tobytes()


def read_frame(path) -> np.ndarray:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read frame {path}: {exc}") from exc
    return decode_pnm(buf, str(path))


def write_frame(path, img: np.ndarray) -> None:
    """Write a frame; grayscale (``h x w`` or ``h x w x 1``) as PGM, RGB as PPM."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(encode_pnm(img))
    os.replace(tmp, path)


def frame_suffix(channels: int) -> str:
    return ".ppm" if channels == 3 else ".pgm"


def list_frames(directory) -> list[Path]:
    """Frame files of a directory in lexicographic filename order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"frame directory {directory} does not exist")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in FRAME_SUFFIXES)


def to_uint8(values: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Round ``values * scale`` half-up into [0, 255]."""
    return np.clip(np.floor(np.asarray(values, dtype=np.float64) * scale + 0.5), 0, 255).astype(np.uint8)
