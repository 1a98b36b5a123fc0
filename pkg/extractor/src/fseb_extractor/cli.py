"""CLI: fseb-extract --input DIR --output FILE.fseb --mode pooled|grid --grid 5 --batch 64"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .extract import ExtractorConfig, extract


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="fseb-extract", description=__doc__)
    ap.add_argument("--version", action="version", version=f"fseb-extract {__version__}")
    ap.add_argument("--input", required=True, help="folder with one subfolder per class")
    ap.add_argument("--output", required=True, help="FSEB v1 output path")
    ap.add_argument("--mode", choices=("pooled", "grid"), default="pooled")
    ap.add_argument("--grid", type=int, default=5, help="grid side for --mode grid")
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--backbone", default="resnet18")
    ap.add_argument("--weights", default="default",
                    help="'default' (published pretrained), 'random' (seeded), or a .pth path")
    ap.add_argument("--device", default="cpu")
    ap.add_argument("--seed", type=int, default=0, help="init seed for --weights random")
    args = ap.parse_args(argv)
    try:
        summary = extract(ExtractorConfig(
            input_dir=args.input, output=args.output, mode=args.mode,
            grid_size=args.grid, backbone=args.backbone, weights=args.weights,
            device=args.device, batch_size=args.batch, seed=args.seed))
    except (ValueError, OSError) as exc:
        print(f"fseb-extract: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.output}: {summary.records} records, "
          f"{len(summary.classes)} classes, {summary.dim} channels, "
          f"{summary.height}x{summary.width} nodes, {summary.skipped} skipped "
          f"(resize 256 / center-crop 224 / imagenet normalization)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
