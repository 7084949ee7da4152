"""End-to-end steps: slice a dataset, train one network per plane, score, fuse.

A run directory holds everything a step produces::

    <out>/splits.txt                  split plan (created once, then reused)
    <out>/slices/index.tsv            one line per slice file
    <out>/slices/<plane>/<seq>/slice_<i>.pgm
    <out>/models/<plane>.ckpt         final checkpoint
    <out>/models/<plane>_iter<k>.ckpt checkpoint taken when the lr steps at k
    <out>/logs/train_<plane>.tsv      iteration, lr, loss
    <out>/scores/<plane>.tsv          per-slice raw scores of the test sequences
    <out>/reports/                    evaluation text, JSON and figures
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import arch
from .config import RunConfig
from .data.checkpoint import (Checkpoint, load_checkpoint, network_tensors, restore_network,
                              save_checkpoint)
from .data.frames import frame_suffix, read_frame, to_uint8, write_frame
from .data.manifest import DatasetManifest, load_sequence, read_manifest
from .data.splits import Protocol, SplitPlan, make_splits, read_splits, write_splits
from .ensemble import (ScoreVector, ablate, evaluate, group_scores, parse_subset,
                       read_score_dump, write_score_dump)
from .errors import ConfigError, DataError, NumericError
from .nn import Network, lr_at, sgd_step, zero_velocities
from .report import write_ablation, write_evaluation
from .slicer import PLANES, PlaneId, SliceConfig, extract_plane
from .tensor import make_rng, rng_state, set_rng_state

log = logging.getLogger(__name__)

INDEX_COLUMNS = ("sequence_id", "plane", "slice_index", "path")


# -- run setup ---------------------------------------------------------------

def manifest_for(cfg: RunConfig) -> DatasetManifest:
    return read_manifest(cfg.dataset)


def splits_for(cfg: RunConfig, manifest: DatasetManifest) -> SplitPlan:
    """Load ``<out>/splits.txt``, creating it from the config on first use."""
    path = cfg.out_dir / "splits.txt"
    protocol = Protocol.parse(cfg.protocol)
    if path.exists():
        plan = read_splits(path)
        if plan.protocol != protocol or plan.seed != cfg.seed:
            raise ConfigError(f"{path} was made with {plan.protocol} seed {plan.seed}; "
                              f"config asks for {protocol} seed {cfg.seed}")
    else:
        plan = make_splits(manifest, protocol, cfg.seed)
        path.parent.mkdir(parents=True, exist_ok=True)
        write_splits(plan, path)
    if not 0 <= cfg.trial < len(plan.trials):
        raise ConfigError(f"trial {cfg.trial} out of range; plan has {len(plan.trials)}")
    return plan


def _plane_seed(seed: int, plane: PlaneId, *extra: int) -> int:
    ss = np.random.SeedSequence([int(seed), PLANES.index(plane), *extra])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def network_spec(cfg: RunConfig, manifest: DatasetManifest) -> arch.NetworkSpec:
    channels = {s.c for s in manifest.sequences}
    if len(channels) != 1:
        raise DataError(f"mixed channel counts {sorted(channels)} in dataset")
    return arch.build(cfg.arch, channels.pop(), manifest.num_classes, src_side=cfg.n)


# -- slicing -----------------------------------------------------------------

def slice_dataset(cfg: RunConfig, manifest: DatasetManifest | None = None) -> Path:
    """Write ``3 x m`` slice images per sequence plus the slice index."""
    manifest = manifest or manifest_for(cfg)
    scfg = SliceConfig(cfg.m, cfg.n)
    root = cfg.out_dir / "slices"
    rows = []
    for info in manifest.sequences:
        vol = load_sequence(manifest, info.id)
        try:
            scfg.check(vol)
        except Exception as exc:
            raise type(exc)(f"sequence {info.id}: {exc}") from exc
        for plane in PLANES:
            stack = extract_plane(vol, plane, scfg)
            for i in range(stack.shape[2]):
                rel = Path(plane.value) / info.id / f"slice_{i:03d}{frame_suffix(vol.c)}"
                write_frame(root / rel, to_uint8(stack[:, :, i, :]))
                rows.append((info.id, plane.value, i, rel.as_posix()))
    with open(root / "index.tsv", "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(INDEX_COLUMNS)
        w.writerows(rows)
    return root


def read_slice_index(out_dir) -> list[tuple[str, PlaneId, int, Path]]:
    root = Path(out_dir) / "slices"
    path = root / "index.tsv"
    if not path.exists():
        raise DataError(f"no slices at {root}; run the slice command first")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    if not rows or tuple(rows[0]) != INDEX_COLUMNS:
        raise DataError(f"{path}: bad slice index header")
    return [(r[0], PlaneId(r[1]), int(r[2]), root / r[3]) for r in rows[1:]]


def load_plane_slices(out_dir, plane: PlaneId, seq_ids):
    """Slices of ``plane`` for ``seq_ids`` as ``(count, n, n, c)`` uint8.

    Returns ``(pixels, sequence_ids, slice_indices)`` ordered by sequence
    (in the order given) then slice index.
    """
    wanted = {s: k for k, s in enumerate(seq_ids)}
    entries = [e for e in read_slice_index(out_dir) if e[1] == plane and e[0] in wanted]
    entries.sort(key=lambda e: (wanted[e[0]], e[2]))
    missing = set(wanted) - {e[0] for e in entries}
    if missing:
        raise DataError(f"no {plane.value} slices for {len(missing)} sequence(s), "
                        f"e.g. {sorted(missing)[0]}")
    imgs = []
    for _, _, _, path in entries:
        img = read_frame(path)
        imgs.append(img[:, :, None] if img.ndim == 2 else img)
    return np.stack(imgs), [e[0] for e in entries], [e[2] for e in entries]


# -- training ----------------------------------------------------------------

class BatchStream:
    """Minibatches drawn from a stream of per-epoch permutations.

    The permutation of epoch ``e`` depends only on ``(seed, plane, e)``, so the
    batch of any iteration can be recomputed when a run resumes.
    """

    def __init__(self, count: int, batch_size: int, seed: int, plane: PlaneId):
        self.count, self.batch_size = count, batch_size
        self.seed, self.plane = seed, plane
        self._cache: dict[int, np.ndarray] = {}

    def _perm(self, epoch: int) -> np.ndarray:
        if epoch not in self._cache:
            self._cache = {k: v for k, v in self._cache.items() if k >= epoch - 1}
            rng = make_rng(_plane_seed(self.seed, self.plane, 1, epoch))
            self._cache[epoch] = rng.permutation(self.count)
        return self._cache[epoch]

    def indices(self, iteration: int) -> np.ndarray:
        out, pos = [], iteration * self.batch_size
        end = pos + self.batch_size
        while pos < end:
            epoch, off = divmod(pos, self.count)
            take = min(end - pos, self.count - off)
            out.append(self._perm(epoch)[off:off + take])
            pos += take
        return np.concatenate(out)


def _checkpoint(spec, net, vel, it, rng, mean, meta) -> Checkpoint:
    tensors = network_tensors(net, vel)
    tensors["mean"] = mean
    return Checkpoint(spec.digest(), it, tensors, rng_state(rng), meta)


def _write_log(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(("iteration", "lr", "loss"))
        w.writerows((it, repr(lr), repr(loss)) for it, lr, loss in rows)


def _read_log(path: Path, before: int):
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))[1:]
    return [(int(r[0]), float(r[1]), float(r[2])) for r in rows if int(r[0]) < before]


def model_path(cfg: RunConfig, plane: PlaneId) -> Path:
    return cfg.out_dir / "models" / f"{PlaneId(plane).value}.ckpt"


def train_plane(cfg: RunConfig, plane: PlaneId | str, resume: str | Path | None = None) -> Path:
    """Train the network of one plane on the training split; return the checkpoint path."""
    plane = PlaneId(plane)
    manifest = manifest_for(cfg)
    plan = splits_for(cfg, manifest)
    tc = cfg.train_config()
    spec = network_spec(cfg, manifest)
    crop = spec.layers[0].size
    if cfg.n < crop:
        raise ConfigError(f"slices of side {cfg.n} are smaller than the {cfg.arch} crop {crop}")

    labels = manifest.labels()
    train_ids = plan.train(cfg.trial)
    pixels, seqs, _ = load_plane_slices(cfg.out_dir, plane, train_ids)
    x = pixels.astype(np.float32) / np.float32(255)
    if cfg.mean_subtract:
        mean = x.mean(axis=0, dtype=np.float64).astype(np.float32)
    else:
        mean = np.zeros(x.shape[1:], dtype=np.float32)
    x -= mean
    y = np.array([labels[s] for s in seqs])

    net = Network(spec, mirror=cfg.mirror)
    net.init_weights(make_rng(_plane_seed(cfg.seed, plane, 0)), cfg.init, cfg.init_std)
    params = net.params()
    vel = zero_velocities(params)
    rng = make_rng(_plane_seed(cfg.seed, plane, 2))
    meta = {
        "arch": cfg.arch, "channels": spec.input_channels, "num_classes": spec.num_classes,
        "input_side": spec.input_side, "plane": plane.value, "classes": list(manifest.classes),
        "trial": cfg.trial, "train": {k: (list(v) if isinstance(v, tuple) else v)
                                      for k, v in vars(tc).items()},
    }
    start = 0
    log_path = cfg.out_dir / "logs" / f"train_{plane.value}.tsv"
    history = []
    if resume is not None:
        ck = load_checkpoint(resume, expected_digest=spec.digest())
        restore_network(net, ck, vel)
        set_rng_state(rng, ck.rng_state)
        mean = ck.tensors["mean"]
        x = pixels.astype(np.float32) / np.float32(255) - mean
        start = ck.iteration
        history = _read_log(log_path, start)

    stream = BatchStream(len(x), tc.batch_size, cfg.seed, plane)
    models = cfg.out_dir / "models"
    for it in range(start, tc.num_iters):
        idx = stream.indices(it)
        scores = net.forward(x[idx], train=True, rng=rng)
        loss, dscores = net.loss(scores, y[idx])
        if not math.isfinite(loss):
            _write_log(log_path, history)
            raise NumericError(f"{plane.value}: loss became {loss} at iteration {it} "
                               f"(lr {lr_at(tc, it)})")
        net.backward(dscores.astype(np.float32))
        lr = sgd_step(params, net.grads(), vel, tc, it)
        history.append((it, lr, loss))
        if it + 1 in tc.steps:
            save_checkpoint(models / f"{plane.value}_iter{it + 1}.ckpt",
                            _checkpoint(spec, net, vel, it + 1, rng, mean, meta))
            _write_log(log_path, history)
    _write_log(log_path, history)
    final = max(start, tc.num_iters)
    path = save_checkpoint(model_path(cfg, plane),
                           _checkpoint(spec, net, vel, final, rng, mean, meta))
    log.info("trained %s plane: %d iterations, final loss %s", plane.value, final,
             history[-1][2] if history else "n/a")
    return path


def train_planes(cfg: RunConfig, planes=PLANES) -> list[Path]:
    """Train several planes, concurrently when ``cfg.jobs > 1``."""
    planes = [PlaneId(p) for p in planes]
    manifest = manifest_for(cfg)
    splits_for(cfg, manifest)  # create the plan once, before workers race for it
    if cfg.jobs > 1 and len(planes) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(planes))) as pool:
            return list(pool.map(train_plane, [cfg] * len(planes), planes))
    return [train_plane(cfg, p) for p in planes]


# -- scoring and evaluation --------------------------------------------------

def load_plane_model(cfg: RunConfig, plane: PlaneId, manifest: DatasetManifest):
    spec = network_spec(cfg, manifest)
    path = model_path(cfg, plane)
    ck = load_checkpoint(path, expected_digest=spec.digest())
    net = Network(spec, mirror=False)
    restore_network(net, ck)
    return net, ck.tensors["mean"]


def score_plane(cfg: RunConfig, plane: PlaneId | str, manifest=None, plan=None) -> Path:
    """Raw last-layer scores of every test slice of one plane, written as a dump."""
    plane = PlaneId(plane)
    manifest = manifest or manifest_for(cfg)
    plan = plan or splits_for(cfg, manifest)
    net, mean = load_plane_model(cfg, plane, manifest)
    pixels, seqs, idx = load_plane_slices(cfg.out_dir, plane, plan.test(cfg.trial))
    x = pixels.astype(np.float32) / np.float32(255) - mean
    scores = net.predict_scores(x)
    records = [ScoreVector(s, plane, i, q) for s, q, i in zip(scores, seqs, idx)]
    path = cfg.out_dir / "scores" / f"{plane.value}.tsv"
    write_score_dump(path, records)
    return path


def load_dumps(cfg: RunConfig, planes) -> dict:
    merged: dict = {}
    for plane in planes:
        path = cfg.out_dir / "scores" / f"{PlaneId(plane).value}.tsv"
        for seq, per_plane in group_scores(read_score_dump(path)).items():
            merged.setdefault(seq, {}).update(per_plane)
    return merged


def held_out_labels(cfg: RunConfig, manifest, plan) -> dict:
    labels = manifest.labels()
    return {s: labels[s] for s in plan.test(cfg.trial)}


def evaluate_run(cfg: RunConfig, subset=None, rescore: bool = True, figures: bool = True):
    """Fuse the dumps of ``subset`` and write reports; returns the Evaluation."""
    subset = parse_subset(subset or cfg.subset)
    manifest = manifest_for(cfg)
    plan = splits_for(cfg, manifest)
    if rescore:
        for plane in subset:
            score_plane(cfg, plane, manifest, plan)
    ev = evaluate(load_dumps(cfg, subset), held_out_labels(cfg, manifest, plan), subset,
                  manifest.num_classes, cfg.fusion)
    write_evaluation(ev, manifest.classes, cfg.out_dir / "reports", figures=figures)
    return ev


def ablate_run(cfg: RunConfig, rescore: bool = True, figures: bool = True):
    """Evaluate all seven plane subsets from one set of dumps."""
    manifest = manifest_for(cfg)
    plan = splits_for(cfg, manifest)
    if rescore:
        for plane in PLANES:
            score_plane(cfg, plane, manifest, plan)
    evals = ablate(load_dumps(cfg, PLANES), held_out_labels(cfg, manifest, plan),
                   manifest.num_classes, cfg.fusion)
    write_ablation(evals, manifest.classes, cfg.out_dir / "reports", figures=figures)
    return evals
