"""Late fusion of per-slice classifier outputs into a collective label.

Raw (non-normalized) last-layer scores are summed over the slices of a
sequence within a plane, then over a subset of planes, and the label is the
argmax of the total. All sums use :func:`math.fsum`, which is correctly
rounded and therefore independent of summation order.
"""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import DataError
from .nn.ops import softmax
from .slicer import PLANES, PlaneId

# Row order of the plane-combination ablation.
SUBSETS: tuple[tuple[PlaneId, ...], ...] = tuple(
    c for r in (1, 2, 3) for c in combinations(PLANES, r))

FUSION_METHODS = ("sum", "softmax-sum", "majority", "borda")


@dataclass(frozen=True)
class ScoreVector:
    values: np.ndarray
    plane: PlaneId
    slice_index: int
    sequence_id: str


def subset_name(subset) -> str:
    return "+".join(PlaneId(p).value for p in subset)


def parse_subset(text: str) -> tuple[PlaneId, ...]:
    """Parse ``"xy+xt"`` (or comma separated) into an ordered plane subset."""
    names = [t for t in text.replace(",", "+").split("+") if t.strip()]
    planes = [PlaneId(t.strip().lower()) for t in names]
    if not planes or len(set(planes)) != len(planes):
        raise ValueError(f"plane subset must name 1-3 distinct planes, got {text!r}")
    return tuple(p for p in PLANES if p in planes)


def _fsum_rows(vectors) -> np.ndarray:
    mat = np.asarray(vectors, dtype=np.float64)
    return np.array([math.fsum(col) for col in mat.T], dtype=np.float64)


def plane_score(slices) -> np.ndarray:
    """Sum of the slice score vectors of one sequence on one plane."""
    slices = list(slices)
    if not slices:
        raise ValueError("plane_score needs at least one slice")
    if isinstance(slices[0], ScoreVector):
        seq, plane = slices[0].sequence_id, slices[0].plane
        if any(s.sequence_id != seq or s.plane != plane for s in slices):
            raise ValueError("slices must share sequence_id and plane")
        slices = [s.values for s in slices]
    lengths = {len(s) for s in slices}
    if len(lengths) != 1:
        raise ValueError(f"slice score vectors have mismatched lengths {sorted(lengths)}")
    return _fsum_rows(slices)


def global_score(per_plane, subset) -> np.ndarray:
    """Sum of per-plane scores over the planes in ``subset`` only."""
    missing = [p for p in subset if p not in per_plane]
    if missing:
        raise KeyError(f"no scores for plane(s) {subset_name(missing)}")
    return _fsum_rows([per_plane[p] for p in subset])


def predict_label(s) -> int:
    """Index of the maximum score; ties go to the lowest index."""
    return int(np.argmax(np.asarray(s)))


def _slice_votes(scores: np.ndarray, method: str) -> np.ndarray:
    """Per-slice contribution matrix ``(m, N)`` for a fusion method."""
    scores = np.asarray(scores, dtype=np.float64)
    if method == "sum":
        return scores
    if method == "softmax-sum":
        return softmax(scores)
    if method == "majority":
        votes = np.zeros_like(scores)
        votes[np.arange(len(scores)), scores.argmax(axis=1)] = 1.0
        return votes
    if method == "borda":
        # top class gets N-1 points, bottom gets 0; stable ranking
        order = np.argsort(-scores, axis=1, kind="stable")
        points = np.empty_like(scores)
        n = scores.shape[1]
        rows = np.arange(len(scores))[:, None]
        points[rows, order] = np.arange(n - 1, -1, -1, dtype=np.float64)
        return points
    raise ValueError(f"unknown fusion method {method!r}; choose from {FUSION_METHODS}")


def fuse(slice_scores: dict, subset, method: str = "sum") -> np.ndarray:
    """Collective score of one sequence from its ``plane -> (m, N)`` slice scores."""
    per_plane = {p: plane_score(_slice_votes(slice_scores[p], method))
                 for p in subset if p in slice_scores}
    return global_score(per_plane, subset)


@dataclass
class Evaluation:
    subset: tuple[PlaneId, ...]
    confusion: np.ndarray
    sequence_ids: list[str]
    truth: list[int]
    predicted: list[int]
    method: str = "sum"
    scores: dict = field(default_factory=dict, repr=False)

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.confusion) / self.confusion.sum())

    @property
    def per_class_accuracy(self) -> np.ndarray:
        """Recall per true class; NaN for classes absent from the test set."""
        totals = self.confusion.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.diag(self.confusion) / totals

    def normalized_confusion(self) -> np.ndarray:
        totals = self.confusion.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(totals > 0, self.confusion / np.maximum(totals, 1), 0.0)


def evaluate(dataset_scores: dict, labels: dict, subset, n_classes: int,
             method: str = "sum") -> Evaluation:
    """Fuse every sequence in ``labels`` and tabulate predictions.

    ``dataset_scores`` maps ``sequence_id -> {plane -> (m, N) slice scores}``;
    ``labels`` maps ``sequence_id -> true class``. Confusion rows are true
    classes and columns predicted classes.
    """
    subset = tuple(PlaneId(p) for p in subset)
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    ids, truth, pred, fused = [], [], [], {}
    for seq in sorted(labels):
        if seq not in dataset_scores:
            raise DataError(f"no scores for test sequence {seq!r}")
        planes = dataset_scores[seq]
        missing = [p for p in subset if p not in planes]
        if missing:
            raise DataError(f"sequence {seq!r} lacks scores for {subset_name(missing)}")
        s = fuse(planes, subset, method)
        label = predict_label(s)
        conf[labels[seq], label] += 1
        ids.append(seq)
        truth.append(int(labels[seq]))
        pred.append(label)
        fused[seq] = s
    if not ids:
        raise DataError("no test sequences to evaluate")
    return Evaluation(subset, conf, ids, truth, pred, method, fused)


def ablate(dataset_scores: dict, labels: dict, n_classes: int, method: str = "sum"):
    """Evaluate every non-empty plane subset, in ablation-table order."""
    return [evaluate(dataset_scores, labels, s, n_classes, method) for s in SUBSETS]


# -- score dumps -------------------------------------------------------------

DUMP_COLUMNS = ("sequence_id", "plane", "slice_index")


def write_score_dump(path, records) -> None:
    """Write one tab-separated line per slice; floats use their shortest exact repr."""
    records = list(records)
    n = len(records[0].values) if records else 0
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(DUMP_COLUMNS + tuple(f"s{i}" for i in range(n)))
        for r in records:
            if len(r.values) != n:
                raise ValueError("all score vectors in a dump must have the same length")
            w.writerow([r.sequence_id, PlaneId(r.plane).value, r.slice_index]
                       + [repr(float(v)) for v in r.values])


def read_score_dump(path) -> list[ScoreVector]:
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read score dump {path}: {exc}") from exc
    with fh:
        rows = csv.reader(fh, delimiter="\t")
        header = next(rows, None)
        if header is None or tuple(header[:3]) != DUMP_COLUMNS:
            raise DataError(f"{path}: bad score dump header {header}")
        n = len(header) - 3
        out = []
        for lineno, row in enumerate(rows, start=2):
            if len(row) != n + 3:
                raise DataError(f"{path}:{lineno}: expected {n + 3} fields, got {len(row)}")
            out.append(ScoreVector(np.array([float(v) for v in row[3:]]), PlaneId(row[1]),
                                   int(row[2]), row[0]))
    return out


def group_scores(records) -> dict:
    """``sequence_id -> {plane -> (m, N)}``, slices ordered by slice index."""
    bucket = defaultdict(lambda: defaultdict(list))
    for r in records:
        bucket[r.sequence_id][PlaneId(r.plane)].append(r)
    return {seq: {p: np.array([r.values for r in sorted(rs, key=lambda r: r.slice_index)])
                  for p, rs in planes.items()}
            for seq, planes in bucket.items()}


def pair_accuracy(dataset_scores: dict, labels: dict, subset, classes,
                  method: str = "sum") -> float:
    """Accuracy on sequences of ``classes`` only, deciding among those classes."""
    classes = list(classes)
    hits = total = 0
    for seq, truth in sorted(labels.items()):
        if truth not in classes:
            continue
        s = fuse(dataset_scores[seq], subset, method)
        hits += classes[predict_label(s[classes])] == truth
        total += 1
    if not total:
        raise DataError(f"no test sequences of classes {classes}")
    return hits / total
