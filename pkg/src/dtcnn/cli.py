"""Command-line entry point: ``dtcnn <command> [options]``.

Exit status is 0 on success, 2 for configuration errors, 3 for missing or
corrupt data and 4 for numeric failures such as a diverging loss.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import arch, pipeline
from .config import RunConfig, format_config, load_config
from .data.manifest import scan, write_manifest
from .data.synth import DTKind, write_synthetic_dataset
from .errors import DTCNNError
from .report import format_ablation, format_evaluation
from .slicer import PLANES

log = logging.getLogger("dtcnn")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name == "steps":
            p.add_argument(flag, help="comma separated lr step iterations")
        else:
            p.add_argument(flag, help=f"(default: {f.default})")


def _run_config(args) -> RunConfig:
    flags = {f.name: getattr(args, f.name) for f in fields(RunConfig)}
    return load_config(args.config, flags)


def cmd_scan(args) -> int:
    manifest = scan(args.root)
    path = write_manifest(manifest)
    print(f"{len(manifest.sequences)} sequences in {manifest.num_classes} classes -> {path}")
    return 0


def cmd_synth(args) -> int:
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    write_synthetic_dataset(args.root, kinds, args.per_class, args.seed, args.h, args.w, args.d)
    manifest = scan(args.root)
    path = write_manifest(manifest)
    print(f"wrote {len(manifest.sequences)} synthetic sequences -> {path}")
    return 0


def cmd_slice(args) -> int:
    cfg = _run_config(args)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "config.txt").write_text(format_config(cfg))
    root = pipeline.slice_dataset(cfg)
    print(f"slices written under {root}")
    return 0


def cmd_train(args) -> int:
    cfg = _run_config(args)
    planes = PLANES if args.plane == "all" else [args.plane]
    for path in pipeline.train_planes(cfg, planes):
        print(f"checkpoint {path}")
    return 0


def cmd_eval(args) -> int:
    cfg = _run_config(args)
    ev = pipeline.evaluate_run(cfg, rescore=not args.from_dumps, figures=not args.no_figures)
    print(format_evaluation(ev, pipeline.manifest_for(cfg).classes), end="")
    return 0


def cmd_ablate(args) -> int:
    cfg = _run_config(args)
    evals = pipeline.ablate_run(cfg, rescore=not args.from_dumps, figures=not args.no_figures)
    print(format_ablation(evals), end="")
    return 0


def cmd_table(args) -> int:
    spec = arch.build(args.arch, args.channels, args.classes)
    print(arch.format_table(spec))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dtcnn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="build root/manifest.tsv from a frame directory tree")
    p.add_argument("root")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("synth", help="generate a synthetic dynamic texture dataset")
    p.add_argument("root")
    p.add_argument("--kinds", default="static,flicker,drift_x",
                   help="comma separated: " + ",".join(k.value for k in DTKind))
    p.add_argument("--per-class", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=int, default=48)
    p.add_argument("--w", type=int, default=48)
    p.add_argument("--d", type=int, default=48)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("slice", help="extract m slices per plane from every sequence")
    _add_run_flags(p)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("train", help="train the network of one plane (or all three)")
    _add_run_flags(p)
    p.add_argument("--plane", choices=[pl.value for pl in PLANES] + ["all"], required=True)
    p.set_defaults(func=cmd_train)

    for name, func, help_ in (("eval", cmd_eval, "score test slices and fuse a plane subset"),
                              ("ablate", cmd_ablate, "evaluate all seven plane subsets")):
        p = sub.add_parser(name, help=help_)
        _add_run_flags(p)
        p.add_argument("--from-dumps", action="store_true",
                       help="reuse existing score dumps instead of running inference")
        p.add_argument("--no-figures", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("table", help="print an architecture's layer table")
    p.add_argument("--arch", default="tcnn3", choices=sorted(arch.BUILDERS))
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--classes", type=int, default=1000)
    p.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DTCNNError as exc:
        print(f"dtcnn: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"dtcnn: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
