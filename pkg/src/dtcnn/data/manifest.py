"""Dataset manifests: which sequences exist, their class and geometry.

On disk a dataset is ``root/<class_name>/<sequence_id>/frame_%05d.pgm`` (or
``.ppm``). The manifest is ``root/manifest.tsv``, a header line followed by
one sequence per line: ``id  class  frames  h  w  c``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..slicer import VideoVolume
from .frames import decode_pnm, list_frames, read_frame

MANIFEST_NAME = "manifest.tsv"
MANIFEST_COLUMNS = ("id", "class", "frames", "h", "w", "c")


@dataclass(frozen=True)
class SequenceInfo:
    id: str
    class_index: int
    frames: int
    h: int
    w: int
    c: int


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    classes: tuple[str, ...]
    sequences: tuple[SequenceInfo, ...]

    def __post_init__(self):
        ids = [s.id for s in self.sequences]
        if len(set(ids)) != len(ids):
            raise DataError("sequence ids must be unique across classes")
        used = {s.class_index for s in self.sequences}
        if used - set(range(len(self.classes))):
            raise DataError("class indices must lie in [0, N)")

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def ids(self) -> list[str]:
        return [s.id for s in self.sequences]

    def labels(self) -> dict[str, int]:
        return {s.id: s.class_index for s in self.sequences}

    def get(self, seq_id: str) -> SequenceInfo:
        for s in self.sequences:
            if s.id == seq_id:
                return s
        raise DataError(f"sequence {seq_id!r} not in manifest")

    def sequence_dir(self, seq_id: str) -> Path:
        info = self.get(seq_id)
        return self.root / self.classes[info.class_index] / info.id


def scan(root) -> DatasetManifest:
    """Build a manifest by walking ``root/<class>/<sequence>/`` directories."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} does not exist")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    classes, sequences = [], []
    for class_dir in class_dirs:
        seq_dirs = sorted(p for p in class_dir.iterdir() if p.is_dir())
        if not seq_dirs:
            continue
        idx = len(classes)
        classes.append(class_dir.name)
        for seq_dir in seq_dirs:
            frames = list_frames(seq_dir)
            if not frames:
                raise DataError(f"{seq_dir}: no frame files")
            first = read_frame(frames[0])
            c = 3 if first.ndim == 3 else 1
            sequences.append(SequenceInfo(seq_dir.name, idx, len(frames), first.shape[0],
                                          first.shape[1], c))
    if not sequences:
        raise DataError(f"{root}: no sequences found")
    return DatasetManifest(root, tuple(classes), tuple(sequences))


def write_manifest(manifest: DatasetManifest, path=None) -> Path:
    path = Path(path) if path is not None else manifest.root / MANIFEST_NAME
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(MANIFEST_COLUMNS)
        for s in manifest.sequences:
            w.writerow([s.id, manifest.classes[s.class_index], s.frames, s.h, s.w, s.c])
    return path


def read_manifest(path) -> DatasetManifest:
    """Read ``manifest.tsv``; a directory argument means ``<dir>/manifest.tsv``.

    Classes are indexed in sorted name order.
    """
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    with fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    if not rows or tuple(rows[0]) != MANIFEST_COLUMNS:
        raise DataError(f"{path}: bad manifest header")
    body = rows[1:]
    classes = tuple(sorted({r[1] for r in body}))
    index = {name: i for i, name in enumerate(classes)}
    try:
        seqs = tuple(SequenceInfo(r[0], index[r[1]], int(r[2]), int(r[3]), int(r[4]), int(r[5]))
                     for r in body)
    except (IndexError, ValueError) as exc:
        raise DataError(f"{path}: malformed manifest line: {exc}") from exc
    return DatasetManifest(path.parent, classes, seqs)


def load_sequence(manifest: DatasetManifest, seq_id: str) -> VideoVolume:
    """Load a sequence's frames (lexicographic order) as an ``h x w x d x c`` uint8 volume."""
    info = manifest.get(seq_id)
    directory = manifest.sequence_dir(seq_id)
    frames = list_frames(directory)
    if not frames:
        raise DataError(f"{directory}: missing frames")
    if len(frames) != info.frames:
        raise DataError(f"{directory}: manifest lists {info.frames} frames, found {len(frames)}")
    imgs = []
    for p in frames:
        try:
            img = decode_pnm(p.read_bytes(), str(p))
        except OSError as exc:
            raise DataError(f"cannot read frame {p}: {exc}") from exc
        if img.ndim == 2:
            img = img[:, :, None]
        if imgs and img.shape != imgs[0].shape:
            raise DataError(f"{p}: frame size {img.shape} differs from {imgs[0].shape}")
        imgs.append(img)
    return VideoVolume(np.stack(imgs, axis=2))
