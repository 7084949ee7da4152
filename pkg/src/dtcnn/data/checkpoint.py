"""Binary checkpoints of a training run.

All integers are little-endian. Layout, in order::

    magic       8 bytes   b"DTCNNCKP"
    version     u32       FORMAT_VERSION
    digest      32 bytes  SHA-256 of the network spec (NetworkSpec.digest)
    iteration   u64       number of SGD steps taken
    meta_len    u32       then meta_len bytes of UTF-8 JSON (sorted keys)
    rng_len     u32       then rng_len bytes of UTF-8 JSON: PCG64 state
    n_tensors   u32
    n_tensors records:
        name_len  u16, name (UTF-8)
        dtype     u8      0 = float32, 1 = float64, 2 = uint8
        ndim      u8, then ndim x u32 extents
        data      row-major little-endian values
    crc32       u32       zlib.crc32 of every preceding byte

Tensor names are ``L<i>.w``, ``L<i>.b``, ``L<i>.vw``, ``L<i>.vb`` (weights,
biases and their momentum buffers for the i-th parameterized layer) plus
``mean`` for the input mean image.
"""
from __future__ import annotations

import json
import os
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import CheckpointError

MAGIC = b"DTCNNCKP"
FORMAT_VERSION = 1
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8"), 2: np.dtype("u1")}
_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1, np.dtype(np.uint8): 2}


@dataclass
class Checkpoint:
    digest: bytes
    iteration: int
    tensors: dict[str, np.ndarray]
    rng_state: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def equals(self, other: "Checkpoint") -> bool:
        """Bit-exact comparison."""
        if (self.digest, self.iteration, self.meta, self.rng_state) != \
                (other.digest, other.iteration, other.meta, other.rng_state):
            return False
        if list(self.tensors) != list(other.tensors):
            return False
        return all(a.dtype == b.dtype and a.shape == b.shape and a.tobytes() == b.tobytes()
                   for a, b in zip(self.tensors.values(), other.tensors.values()))


def _json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def encode_checkpoint(ck: Checkpoint) -> bytes:
    if len(ck.digest) != 32:
        raise ValueError("spec digest must be 32 bytes")
    out = [MAGIC, struct.pack("<I", FORMAT_VERSION), ck.digest, struct.pack("<Q", ck.iteration)]
    for blob in (_json(ck.meta), _json(ck.rng_state)):
        out += [struct.pack("<I", len(blob)), blob]
    out.append(struct.pack("<I", len(ck.tensors)))
    for name, arr in ck.tensors.items():
        arr = np.asarray(arr)
        code = _CODES.get(arr.dtype)
        if code is None:
            raise ValueError(f"tensor {name}: unsupported dtype {arr.dtype}")
        raw = name.encode()
        out += [struct.pack("<H", len(raw)), raw, struct.pack("<BB", code, arr.ndim),
                struct.pack(f"<{arr.ndim}I", *arr.shape),
                np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes()]
    body = b"".join(out)
    return body + struct.pack("<I", zlib.crc32(body))


class _Reader:
    def __init__(self, buf):
        self.buf, self.pos = buf, 0

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise CheckpointError("truncated checkpoint")
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_checkpoint(buf: bytes, expected_digest: bytes | None = None) -> Checkpoint:
    r = _Reader(buf)
    if r.take(8) != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic)")
    (version,) = r.unpack("<I")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if len(buf) < 4 or zlib.crc32(buf[:-4]) != struct.unpack("<I", buf[-4:])[0]:
        raise CheckpointError("checkpoint is truncated or corrupt (crc mismatch)")
    digest = r.take(32)
    if expected_digest is not None and digest != expected_digest:
        raise CheckpointError("checkpoint was saved for a different network spec")
    (iteration,) = r.unpack("<Q")
    blobs = []
    for _ in range(2):
        (n,) = r.unpack("<I")
        blobs.append(json.loads(r.take(n)))
    meta, rng_state = blobs
    (count,) = r.unpack("<I")
    tensors = {}
    for _ in range(count):
        (n,) = r.unpack("<H")
        name = r.take(n).decode()
        code, ndim = r.unpack("<BB")
        if code not in _DTYPES:
            raise CheckpointError(f"tensor {name}: unknown dtype code {code}")
        shape = r.unpack(f"<{ndim}I")
        dt = _DTYPES[code]
        size = int(np.prod(shape, dtype=np.int64)) * dt.itemsize
        arr = np.frombuffer(r.take(size), dtype=dt).reshape(shape)
        tensors[name] = arr.astype(dt.newbyteorder("="), copy=True)
    if r.pos != len(buf) - 4:
        raise CheckpointError("trailing bytes after checkpoint tensors")
    return Checkpoint(digest, iteration, tensors, rng_state, meta)


def save_checkpoint(path, ck: Checkpoint) -> Path:
    """Write atomically: temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(encode_checkpoint(ck))
    os.replace(tmp, path)
    return path


def load_checkpoint(path, expected_digest: bytes | None = None) -> Checkpoint:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    return decode_checkpoint(buf, expected_digest)


def network_tensors(net, velocities=None) -> dict[str, np.ndarray]:
    out = {}
    vel = iter(velocities) if velocities is not None else None
    for i, layer in enumerate(net.param_layers):
        out[f"L{i}.w"] = layer.w.copy()
        out[f"L{i}.b"] = layer.b.copy()
        if vel is not None:
            out[f"L{i}.vw"] = next(vel).copy()
            out[f"L{i}.vb"] = next(vel).copy()
    return out


def restore_network(net, ck: Checkpoint, velocities=None) -> None:
    """Copy weights (and momentum buffers, if given) from a checkpoint into ``net``."""
    vel = iter(velocities) if velocities is not None else None
    for i, layer in enumerate(net.param_layers):
        for key, dst in ((f"L{i}.w", layer.w), (f"L{i}.b", layer.b)):
            src = ck.tensors.get(key)
            if src is None or src.shape != dst.shape:
                raise CheckpointError(f"checkpoint tensor {key} missing or misshapen")
            dst[...] = src
        if vel is not None:
            for key in (f"L{i}.vw", f"L{i}.vb"):
                dst = next(vel)
                if key in ck.tensors:
                    dst[...] = ck.tensors[key]
