"""Command line pipeline: ccl, prompts, detection, fusion, eval, synth.

Every subcommand reads and writes the documented file formats, so each is
usable on its own. Exit status is 0 on success, 1 on usage errors, 2 on
data or format errors; diagnostics go to standard error, machine-readable
output only to files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .components import label_components
from .errors import DimensionError, SegChangeError
from .metrics import evaluate, fuse
from .noprompt import AggregationParams, detect_changes_noprompt
from .prompting import detect_changes_prompt, export_prompts
from .synth import SceneParams, generate_scene

log = logging.getLogger("segchange")

OVERLAY_COLOR = (255, 0, 0)  # changed pixels in overlay renders

FORMATS_HELP = """\
file formats:
  graymap (.pgm)     ASCII header "P5\\n<width> <height>\\n<maxval>\\n" then raw
                     samples, big-endian 16-bit for maxval 65535, 8-bit for
                     maxval 255. Label rasters and instance maps use 65535;
                     change maps use 255 with 0=unchanged, 255=changed.
  pixmap (.ppm)      "P6\\n<width> <height>\\n255\\n" then raw RGB bytes; used
                     only for render overlays (changed pixels in red).
  legend (.txt)      UTF-8 lines "code,name,is_background" with
                     is_background in {0,1}; '#' starts a comment line.
  mask set (.json)   {"width":W,"height":H,"masks":[{"id":I,"score":S,
                     "runs":[...]},...]}. Runs alternate zero-run/one-run
                     over the row-major scan, starting with a zero-run
                     (only the first run may be 0); runs sum to W*H.
  instances (.json)  {"width":W,"height":H,"instances":[{"id":I,
                     "class_code":C,"runs":[...]},...]}.
  prompts (.json)    [{"instance_id":I,"class_code":C,"box":[x,y,w,h],
                     "runs":[...]},...]; one entry per background instance.
  results (.json)    {"width":W,"height":H,"results":[{"instance_id":I,
                     "runs":[...]},...]}; one segmenter output per prompt.
  verdicts (.csv)    instance_id,changed,best_overlap,n_masks_used
  metrics (.csv)     dataset,tp,fp,fn,tn,oa,f1,kc (ratios to 6 decimals)
  manifest (.json)   synth scene description: params echo, PRNG constants,
                     and per-object {id,class,role,shape,bbox,...} records.
  config             "key = value" lines naming any flag of the subcommand
                     (dashes or underscores); flags take precedence.
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's default 2
        raise UsageError(f"{self.prog}: {message}")


def _codes_arg(text: str) -> frozenset[int]:
    if not text:
        return frozenset()
    try:
        return frozenset(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _band_arg(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")


def _fractions_arg(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected 'shape,removal,new', got {text!r}")
    try:
        return (float(parts[0]), float(parts[1]), float(parts[2]))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected 'shape,removal,new', got {text!r}")


def build_parser() -> tuple[_Parser, dict[str, _Parser]]:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="FILE",
                        help="key = value file preloading any flag of this "
                             "subcommand; explicit flags win")
    common.add_argument("--verbose", action="store_true",
                        help="log progress at info level")

    parser = _Parser(
        prog="segchange",
        description="Detect land-cover changes between a class raster and "
                    "a segmentation mask set.",
        epilog=FORMATS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    subs: dict[str, _Parser] = {}

    def add(name: str, help_text: str) -> _Parser:
        sub = subparsers.add_parser(
            name, help=help_text, parents=[common],
            formatter_class=argparse.RawDescriptionHelpFormatter)
        subs[name] = sub
        return sub

    p = add("ccl", "label connected components of a class raster")
    p.add_argument("raster", help="label raster (.pgm)")
    p.add_argument("-o", "--output", required=True, help="instances .json")
    p.add_argument("--instance-map", metavar="FILE",
                   help="also export the instance map as a 16-bit graymap")
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=4)
    p.add_argument("--min-area", type=int, default=16,
                   help="suppress components smaller than this (default 16)")
    p.add_argument("--ignore-codes", type=_codes_arg, default=frozenset(),
                   metavar="C1,C2,...", help="class codes to leave unlabeled")
    p.set_defaults(func=_cmd_ccl)

    p = add("prompts", "export background instances as box/mask prompts")
    p.add_argument("instances", help="instances .json")
    p.add_argument("legend", help="legend .txt")
    p.add_argument("-o", "--output", required=True, help="prompts .json")
    p.set_defaults(func=_cmd_prompts)

    p = add("detect-noprompt",
            "strategy 1: aggregate masks per instance and compare overlap")
    p.add_argument("instances", help="instances .json")
    p.add_argument("masks", help="mask set .json")
    p.add_argument("-o", "--output", required=True, help="change map .pgm")
    p.add_argument("--verdicts", metavar="FILE", help="per-instance CSV")
    p.add_argument("--threshold", type=float, default=0.5,
                   help="overlap rate for an unchanged verdict (default 0.5)")
    p.add_argument("--min-intersection", type=int, default=8,
                   help="ignore masks overlapping fewer pixels (default 8)")
    p.add_argument("--patience", type=int, default=3,
                   help="stop after this many non-improving merges (default 3)")
    p.add_argument("--shape-check", action="store_true",
                   help="also require area/aspect ratios within the bands")
    p.add_argument("--area-band", type=_band_arg, default=(0.5, 2.0),
                   metavar="LO,HI")
    p.add_argument("--aspect-band", type=_band_arg, default=(0.5, 2.0),
                   metavar="LO,HI")
    p.add_argument("--workers", type=int, default=1,
                   help="instances processed concurrently (same output)")
    p.set_defaults(func=_cmd_detect_noprompt)

    p = add("detect-prompt",
            "strategy 2: extract unrecognized pixels inside background instances")
    p.add_argument("instances", help="instances .json")
    p.add_argument("results", help="prompted results .json")
    p.add_argument("legend", help="legend .txt")
    p.add_argument("-o", "--output", required=True, help="change map .pgm")
    p.add_argument("--min-blob-area", type=int, default=16,
                   help="drop 4-connected anomaly blobs smaller than this "
                        "(default 16)")
    p.add_argument("--workers", type=int, default=1,
                   help="instances processed concurrently (same output)")
    p.set_defaults(func=_cmd_detect_prompt)

    p = add("fuse", "pixelwise OR of two change maps")
    p.add_argument("a", help="change map .pgm")
    p.add_argument("b", help="change map .pgm")
    p.add_argument("out", help="fused change map .pgm")
    p.set_defaults(func=_cmd_fuse)

    p = add("eval", "score a change map against ground truth")
    p.add_argument("pred", help="predicted change map .pgm")
    p.add_argument("truth", help="ground-truth change map .pgm")
    p.add_argument("-o", "--output", required=True, help="metrics .csv")
    p.add_argument("--dataset", help="name for the CSV row (default: pred stem)")
    p.set_defaults(func=_cmd_eval)

    p = add("synth", "generate a deterministic synthetic scene")
    p.add_argument("-o", "--output", required=True, metavar="DIR",
                   help="directory for map.pgm, legend.txt, masks.json, "
                        "results.json, truth.pgm, manifest.json")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--objects", type=int, default=8)
    p.add_argument("--change-fractions", type=_fractions_arg,
                   default=(0.0, 0.0, 0.0), metavar="SHAPE,REMOVAL,NEW")
    p.add_argument("--split-k", type=int, default=1,
                   help="cut each surviving object into up to K masks")
    p.add_argument("--boundary-noise", type=int, default=0,
                   help="max dilation/erosion radius applied to masks")
    p.set_defaults(func=_cmd_synth)

    p = add("render", "re-encode a change map; optionally paint an overlay")
    p.add_argument("changemap", help="change map .pgm")
    p.add_argument("-o", "--output", required=True,
                   help="canonical 8-bit graymap .pgm")
    p.add_argument("--overlay", metavar="FILE",
                   help="also write a P6 pixmap with changed pixels in red")
    p.add_argument("--base", metavar="FILE",
                   help="graymap drawn under the overlay (default black)")
    p.set_defaults(func=_cmd_render)

    return parser, subs


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_ccl(ns) -> int:
    raster = fileio.read_label_raster(ns.raster)
    imap, instances = label_components(
        raster, connectivity=ns.connectivity, min_area=ns.min_area,
        ignore_codes=ns.ignore_codes)
    fileio.write_instances(ns.output, instances, raster.width, raster.height)
    if ns.instance_map:
        fileio.write_instance_map(ns.instance_map, imap)
    log.info("labeled %d instances in %s", len(instances), ns.raster)
    return 0


def _cmd_prompts(ns) -> int:
    instances, _, _ = fileio.read_instances(ns.instances)
    legend = fileio.read_legend(ns.legend)
    specs = export_prompts(instances, legend)
    fileio.write_prompts(ns.output, specs)
    log.info("exported %d prompts", len(specs))
    return 0


def _cmd_detect_noprompt(ns) -> int:
    instances, w, h = fileio.read_instances(ns.instances)
    mask_set = fileio.read_mask_set(ns.masks)
    if (w, h) != (mask_set.width, mask_set.height):
        raise DimensionError(
            f"{ns.instances} is {w}x{h} but {ns.masks} is "
            f"{mask_set.width}x{mask_set.height}")
    params = AggregationParams(
        overlap_threshold=ns.threshold,
        min_intersection=ns.min_intersection,
        patience=ns.patience,
        use_shape_check=ns.shape_check,
        area_ratio_band=ns.area_band,
        aspect_ratio_band=ns.aspect_band,
    )
    cmap, verdicts = detect_changes_noprompt(
        instances, mask_set, params, workers=ns.workers)
    fileio.write_change_map(ns.output, cmap)
    if ns.verdicts:
        fileio.write_verdicts_csv(ns.verdicts, verdicts)
    log.info("%d of %d instances changed",
             sum(v.changed for v in verdicts), len(verdicts))
    return 0


def _cmd_detect_prompt(ns) -> int:
    instances, w, h = fileio.read_instances(ns.instances)
    results, rw, rh = fileio.read_results(ns.results)
    legend = fileio.read_legend(ns.legend)
    if (w, h) != (rw, rh):
        raise DimensionError(
            f"{ns.instances} is {w}x{h} but {ns.results} is {rw}x{rh}")
    cmap, warnings = detect_changes_prompt(
        instances, results, legend, ns.min_blob_area, workers=ns.workers)
    for message in warnings:
        log.warning("%s", message)
    fileio.write_change_map(ns.output, cmap)
    log.info("%d pixels flagged as emerging objects", cmap.changed_count)
    return 0


def _cmd_fuse(ns) -> int:
    a = fileio.read_change_map(ns.a)
    b = fileio.read_change_map(ns.b)
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionError(
            f"{ns.a} is {a.width}x{a.height} but {ns.b} is {b.width}x{b.height}")
    fileio.write_change_map(ns.out, fuse(a, b))
    return 0


def _cmd_eval(ns) -> int:
    pred = fileio.read_change_map(ns.pred)
    truth = fileio.read_change_map(ns.truth)
    if (pred.width, pred.height) != (truth.width, truth.height):
        raise DimensionError(
            f"{ns.pred} is {pred.width}x{pred.height} but {ns.truth} is "
            f"{truth.width}x{truth.height}")
    record = evaluate(pred, truth)
    dataset = ns.dataset if ns.dataset else Path(ns.pred).stem
    fileio.write_metrics_csv(ns.output, record, dataset)
    log.info("oa=%.6f f1=%.6f kc=%.6f", record.oa, record.f1, record.kc)
    return 0


def _cmd_synth(ns) -> int:
    params = SceneParams(
        seed=ns.seed, width=ns.width, height=ns.height, n_objects=ns.objects,
        change_fractions=ns.change_fractions, split_k=ns.split_k,
        boundary_noise=ns.boundary_noise)
    scene = generate_scene(params)
    outdir = Path(ns.output)
    outdir.mkdir(parents=True, exist_ok=True)
    fileio.write_label_raster(outdir / "map.pgm", scene.raster)
    fileio.write_legend(outdir / "legend.txt", scene.legend)
    fileio.write_mask_set(outdir / "masks.json", scene.mask_set)
    fileio.write_results(outdir / "results.json", list(scene.prompted_results),
                         params.width, params.height)
    fileio.write_change_map(outdir / "truth.pgm", scene.truth)
    (outdir / "manifest.json").write_text(
        json.dumps(scene.manifest, indent=2) + "\n", encoding="utf-8")
    log.info("scene with %d objects written to %s",
             len(scene.manifest["objects"]), outdir)
    return 0


def _cmd_render(ns) -> int:
    cmap = fileio.read_change_map(ns.changemap)
    fileio.write_change_map(ns.output, cmap)
    if ns.overlay:
        if ns.base:
            values, maxval = fileio.decode_graymap(
                Path(ns.base).read_bytes(), source=ns.base)
            if values.shape != (cmap.height, cmap.width):
                raise DimensionError(
                    f"{ns.changemap} is {cmap.width}x{cmap.height} but "
                    f"{ns.base} is {values.shape[1]}x{values.shape[0]}")
            if maxval == 255:
                gray = values.astype(np.uint8)
            else:
                # Spread 16-bit samples over the present value range so
                # small class codes stay distinguishable.
                top = int(values.max())
                gray = ((values.astype(np.int64) * 255) // max(top, 1)
                        ).astype(np.uint8)
        else:
            gray = np.zeros((cmap.height, cmap.width), dtype=np.uint8)
        rgb = np.stack([gray, gray, gray], axis=-1)
        rgb[cmap.changed] = OVERLAY_COLOR
        fileio.write_pixmap(ns.overlay, rgb)
    return 0


# ---------------------------------------------------------------------------
# Config file support and entry point
# ---------------------------------------------------------------------------

def _load_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}: line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config(sub: _Parser, values: dict[str, str], path: str) -> None:
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None or key in ("help", "config"):
            raise UsageError(f"{path}: unknown config key '{key}'")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                defaults[key] = action.type(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"{path}: key '{key}': {exc}")
        else:
            defaults[key] = raw
    sub.set_defaults(**defaults)


def _peek_config(argv: list[str]) -> str | None:
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if token.startswith("--config="):
            return token.split("=", 1)[1]
    return None


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        sub_name = next((a for a in argv if not a.startswith("-")), None)
        config_path = _peek_config(argv)
        if config_path is not None and sub_name in subs:
            _apply_config(subs[sub_name], _load_config(config_path), config_path)
        ns = parser.parse_args(argv)
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.INFO if ns.verbose else logging.WARNING,
            format="%(levelname)s: %(message)s")
        return ns.func(ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (SegChangeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc.filename}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())
