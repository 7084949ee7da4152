"""Evaluation reports: delimited text, JSON and matplotlib figures.

Text outputs contain no timestamps or timings so that repeated runs with the
same seed produce identical files.
"""
from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .ensemble import Evaluation, subset_name  # noqa: E402
from .slicer import PLANES  # noqa: E402

PLANE_COLORS = {"xy": "#4c72b0", "xt": "#dd8452", "yt": "#55a868"}

_RC = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "figure.dpi": 100,
    "savefig.bbox": "tight",
}


def _fmt(x) -> str:
    return "nan" if x != x else repr(float(x))


def _savefig(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # no Software/date metadata so reruns are byte-stable
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def evaluation_dict(ev: Evaluation, classes) -> dict:
    return {
        "subset": subset_name(ev.subset),
        "fusion": ev.method,
        "accuracy": ev.accuracy,
        "num_sequences": len(ev.sequence_ids),
        "classes": list(classes),
        "per_class_accuracy": [None if a != a else float(a) for a in ev.per_class_accuracy],
        "confusion": ev.confusion.tolist(),
        "predictions": [{"sequence_id": s, "truth": t, "predicted": p}
                        for s, t, p in zip(ev.sequence_ids, ev.truth, ev.predicted)],
    }


def format_evaluation(ev: Evaluation, classes) -> str:
    lines = [f"planes: {subset_name(ev.subset)}", f"fusion: {ev.method}",
             f"sequences: {len(ev.sequence_ids)}", f"accuracy: {ev.accuracy:.4f}", "",
             "per-class accuracy:"]
    width = max(len(c) for c in classes)
    for name, acc in zip(classes, ev.per_class_accuracy):
        lines.append(f"  {name.ljust(width)}  " + ("   n/a" if acc != acc else f"{acc:.4f}"))
    lines += ["", "confusion (rows = true, cols = predicted):"]
    cell = max(5, max(len(str(v)) for v in ev.confusion.ravel()) + 1)
    lines.append(" " * (width + 2) + "".join(str(j).rjust(cell) for j in range(len(classes))))
    for i, name in enumerate(classes):
        lines.append(f"{name.ljust(width)}  " + "".join(str(v).rjust(cell) for v in ev.confusion[i]))
    return "\n".join(lines) + "\n"


def write_evaluation(ev: Evaluation, classes, out_dir, figures: bool = True) -> dict:
    """Write ``eval_<subset>.{txt,json}``, the confusion TSV and figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = "eval_" + subset_name(ev.subset).replace("+", "-")
    paths = {
        "text": out_dir / f"{stem}.txt",
        "json": out_dir / f"{stem}.json",
        "confusion": out_dir / f"{stem}_confusion.tsv",
    }
    paths["text"].write_text(format_evaluation(ev, classes))
    paths["json"].write_text(json.dumps(evaluation_dict(ev, classes), indent=1) + "\n")
    rows = ["true\\pred\t" + "\t".join(classes)]
    rows += [classes[i] + "\t" + "\t".join(str(v) for v in ev.confusion[i])
             for i in range(len(classes))]
    paths["confusion"].write_text("\n".join(rows) + "\n")
    if figures:
        paths["confusion_png"] = plot_confusion(ev, classes, out_dir / f"{stem}_confusion.png")
        paths["per_class_png"] = plot_per_class(ev, classes, out_dir / f"{stem}_per_class.png")
    return paths


def plot_confusion(ev: Evaluation, classes, path):
    with plt.rc_context(_RC):
        n = len(classes)
        fig, ax = plt.subplots(figsize=(1.2 + 0.45 * n, 1.0 + 0.45 * n))
        norm = ev.normalized_confusion()
        ax.imshow(norm, cmap="Blues", vmin=0, vmax=1)
        for i in range(n):
            for j in range(n):
                ax.text(j, i, str(ev.confusion[i, j]), ha="center", va="center",
                        color="white" if norm[i, j] > 0.5 else "black", fontsize=7)
        ax.set_xticks(range(n), classes, rotation=45, ha="right")
        ax.set_yticks(range(n), classes)
        ax.set_xlabel("predicted")
        ax.set_ylabel("true")
        ax.set_title(f"{subset_name(ev.subset)}  acc {ev.accuracy:.3f}")
        return _savefig(fig, path)


def plot_per_class(ev: Evaluation, classes, path):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(max(3.0, 0.5 * len(classes) + 1), 2.6))
        acc = np.nan_to_num(ev.per_class_accuracy) * 100
        ax.bar(range(len(classes)), acc, color="#4c72b0")
        ax.set_xticks(range(len(classes)), classes, rotation=45, ha="right")
        ax.set_ylim(0, 100)
        ax.set_ylabel("classification rate (%)")
        ax.set_title(subset_name(ev.subset))
        return _savefig(fig, path)


def format_ablation(evals) -> str:
    lines = ["planes\taccuracy"]
    lines += [f"{subset_name(ev.subset)}\t{_fmt(ev.accuracy)}" for ev in evals]
    return "\n".join(lines) + "\n"


def write_ablation(evals, classes, out_dir, figures: bool = True) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"tsv": out_dir / "ablation.tsv", "json": out_dir / "ablation.json"}
    paths["tsv"].write_text(format_ablation(evals))
    paths["json"].write_text(json.dumps([evaluation_dict(ev, classes) for ev in evals],
                                        indent=1) + "\n")
    if figures:
        paths["ablation_png"] = plot_ablation(evals, out_dir / "ablation.png")
        singles = [ev for ev in evals if len(ev.subset) == 1]
        if singles:
            paths["planes_png"] = plot_planes_per_class(singles, classes,
                                                        out_dir / "planes_per_class.png")
    return paths


def plot_ablation(evals, path):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.5, 2.6))
        names = [subset_name(ev.subset) for ev in evals]
        acc = [ev.accuracy * 100 for ev in evals]
        ax.bar(range(len(names)), acc, color="#8172b2")
        for i, a in enumerate(acc):
            ax.text(i, a + 1, f"{a:.1f}", ha="center", fontsize=7)
        ax.set_xticks(range(len(names)), names, rotation=30, ha="right")
        ax.set_ylim(0, 105)
        ax.set_ylabel("accuracy (%)")
        return _savefig(fig, path)


def plot_planes_per_class(singles, classes, path):
    """Grouped bars: per-class rate of each single-plane classifier."""
    with plt.rc_context(_RC):
        n = len(classes)
        fig, ax = plt.subplots(figsize=(max(4.0, 0.7 * n + 1), 2.6))
        width = 0.8 / len(singles)
        for k, ev in enumerate(singles):
            name = subset_name(ev.subset)
            ax.bar(np.arange(n) + (k - (len(singles) - 1) / 2) * width,
                   np.nan_to_num(ev.per_class_accuracy) * 100, width,
                   label=name, color=PLANE_COLORS.get(name))
        ax.set_xticks(range(n), classes, rotation=45, ha="right")
        ax.set_ylim(0, 105)
        ax.set_ylabel("classification rate (%)")
        ax.legend(ncol=len(PLANES), loc="lower right")
        return _savefig(fig, path)
