"""Adapter command line: segment an image into the pipeline's file formats."""

from __future__ import annotations

import argparse
import sys

from .backends import make_backend
from .bridge import segment_everything_file, segment_prompted_file
from .errors import AdapterError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segchange-adapter",
        description="Run a promptable segmenter and emit mask-set / "
                    "prompted-result documents.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def add_backend_flags(p):
        p.add_argument("--backend", choices=("region", "sam"), default="region",
                       help="'region' is the built-in deterministic "
                            "color-region segmenter; 'sam' loads a local "
                            "checkpoint (default region)")
        p.add_argument("--checkpoint", help="model weights for --backend sam")
        p.add_argument("--model-type", default="vit_h")
        p.add_argument("--device", default="cpu")
        p.add_argument("--points-per-side", type=int, default=32)
        p.add_argument("--color-bits", type=int, default=5,
                       help="color quantization for --backend region")
        p.add_argument("--min-region-area", type=int, default=16,
                       help="smallest region emitted by --backend region")

    p = sub.add_parser("everything", help="segment the whole image")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True, help="mask set .json")
    add_backend_flags(p)
    p.set_defaults(func=_cmd_everything)

    p = sub.add_parser("prompted", help="segment once per exported prompt")
    p.add_argument("image")
    p.add_argument("prompts", help="prompt export .json")
    p.add_argument("-o", "--output", required=True, help="results .json")
    p.add_argument("--mode", choices=("box", "mask"), default="mask")
    add_backend_flags(p)
    p.set_defaults(func=_cmd_prompted)

    return parser


def _backend_from(ns):
    return make_backend(
        ns.backend,
        checkpoint=ns.checkpoint,
        model_type=ns.model_type,
        device=ns.device,
        points_per_side=ns.points_per_side,
        color_bits=ns.color_bits,
        min_region_area=ns.min_region_area,
    )


def _cmd_everything(ns) -> int:
    count = segment_everything_file(ns.image, ns.output, _backend_from(ns))
    print(f"wrote {count} masks to {ns.output}", file=sys.stderr)
    return 0


def _cmd_prompted(ns) -> int:
    count = segment_prompted_file(ns.image, ns.prompts, ns.output,
                                  _backend_from(ns), mode=ns.mode)
    print(f"wrote {count} results to {ns.output}", file=sys.stderr)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        return ns.func(ns)
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc.filename}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())
