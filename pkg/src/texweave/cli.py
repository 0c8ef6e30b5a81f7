"""Command-line surface: decompose / render / edit / metrics.

The CLI is a thin shell over the library: every number it produces is
reproducible through the API. Exit codes: 0 success, 2 unreadable input or
corrupt project, 64 invalid flags.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
from pathlib import Path

from .optimize import LossConfig, decompose, export_trace
from .pipeline import FILTER_NAMES, MASK_NAMES, PipelineConfig, ablation_config
from .project import (
    FormatError,
    Project,
    load_image,
    load_project,
    save_image,
    save_project,
)
from .slic import slic_segment
from .tensor import InvalidArgument

EXIT_BAD_INPUT = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _labels(text):
    return [int(v) for v in text.split(",") if v != ""]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="texweave")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[], add_help=True)
    p.add_argument("--input", required=True)
    p.add_argument("--segments", type=int, default=1000)
    p.add_argument("--compactness", type=float, default=10.0)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--tv", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.add_argument("--disable", action="append", default=[],
                   choices=list(FILTER_NAMES))

    p = sub.add_parser("render")
    p.add_argument("--project", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mask-previews")

    p = sub.add_parser("edit")
    p.add_argument("--project", required=True)
    esub = p.add_subparsers(dest="edit_op", required=True)

    e = esub.add_parser("global")
    e.add_argument("--mask", required=True, choices=list(MASK_NAMES))
    e.add_argument("--factor", type=float, default=1.0)
    e.add_argument("--offset", type=float, default=0.0)

    e = esub.add_parser("brush")
    e.add_argument("--mask", required=True, choices=list(MASK_NAMES))
    e.add_argument("--x", type=float, required=True)
    e.add_argument("--y", type=float, required=True)
    e.add_argument("--radius", type=float, required=True)
    e.add_argument("--hardness", type=float, default=1.0)
    e.add_argument("--value", type=float, required=True)
    e.add_argument("--mode", choices=["set", "add"], default="set")

    e = esub.add_parser("blend")
    e.add_argument("--a", required=True)
    e.add_argument("--b", required=True)
    e.add_argument("--mask-file", required=True)

    e = esub.add_parser("match")
    e.add_argument("--source", type=_labels, required=True)
    e.add_argument("--reference", type=_labels, required=True)

    e = esub.add_parser("lod")
    e.add_argument("--labels", type=_labels, required=True)
    e.add_argument("--s-local", type=int, required=True)

    e = esub.add_parser("copy")
    e.add_argument("--labels", type=_labels, required=True)
    e.add_argument("--dx", type=int, required=True)
    e.add_argument("--dy", type=int, required=True)

    p = sub.add_parser("metrics")
    p.add_argument("--project", required=True)
    p.add_argument("--against")

    return parser


def _configure_threads():
    cap = os.environ.get("TEXWEAVE_THREADS")
    if cap:
        try:
            from numba import set_num_threads
            set_num_threads(max(1, int(cap)))
        except ImportError:
            pass


def cmd_decompose(args) -> int:
    try:
        image = load_image(args.input)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read input image: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT

    cfg = PipelineConfig()
    for name in args.disable:
        cfg = ablation_config(name, cfg)
    seg = slic_segment(image, args.segments, m=args.compactness)

    def progress(t, row):
        if (t + 1) % 10 == 0 or t == 0:
            print(f"iter {t + 1}/{args.iters}  l1={row['l1']:.5f}  "
                  f"tv={row['tv']:.5f}  total={row['total']:.5f}",
                  file=sys.stderr)

    masks, trace = decompose(image, seg, cfg=cfg,
                             loss_cfg=LossConfig(lambda_tv=args.tv),
                             iters=args.iters, base_lr=args.lr,
                             progress=progress)
    out = Path(args.out)
    project = Project(image=image, config=cfg, base_seg=seg, base_masks=masks,
                      seg_params={"s": args.segments, "m": args.compactness,
                                  "iters": args.iters, "lr": args.lr,
                                  "tv": args.tv},
                      root=out)
    save_project(project, out)
    export_trace(trace, out / "trace.csv")
    return 0


def cmd_render(args) -> int:
    project = load_project(args.project)
    save_image(project.render(), args.out)
    if args.mask_previews:
        previews = Path(args.mask_previews)
        previews.mkdir(parents=True, exist_ok=True)
        for name in MASK_NAMES:
            save_image(project.masks.normalized(name), previews / f"{name}.png")
    return 0


def cmd_edit(args) -> int:
    root = Path(args.project)
    project = load_project(root)
    if args.edit_op == "global":
        entry = {"op": "global", "mask": args.mask, "factor": args.factor,
                 "offset": args.offset}
    elif args.edit_op == "brush":
        entry = {"op": "brush", "mask": args.mask, "x": args.x, "y": args.y,
                 "radius": args.radius, "hardness": args.hardness,
                 "value": args.value, "mode": args.mode}
    elif args.edit_op == "blend":
        edits = root / "edits"
        edits.mkdir(exist_ok=True)
        entry = {"op": "blend"}
        for key, src in (("a", args.a), ("b", args.b),
                         ("mask_file", args.mask_file)):
            dest = edits / f"edit{len(project.edit_log)}_{key}{Path(src).suffix}"
            shutil.copyfile(src, dest)
            entry[key] = str(dest.relative_to(root))
    elif args.edit_op == "match":
        entry = {"op": "match", "source": args.source,
                 "reference": args.reference}
    elif args.edit_op == "lod":
        entry = {"op": "lod", "labels": args.labels, "s_local": args.s_local}
    else:
        entry = {"op": "copy", "labels": args.labels, "dx": args.dx,
                 "dy": args.dy}
    project.apply_edit(entry)
    save_project(project, root)
    return 0


def cmd_metrics(args) -> int:
    project = load_project(args.project)
    against = load_image(args.against) if args.against else None
    print(json.dumps(project.metrics(against=against)))
    return 0


def main(argv=None) -> int:
    _configure_threads()
    args = build_parser().parse_args(argv)
    handler = {"decompose": cmd_decompose, "render": cmd_render,
               "edit": cmd_edit, "metrics": cmd_metrics}[args.command]
    try:
        code = handler(args)
    except (FormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except InvalidArgument as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())
