"""Emit mask-set and prompted-result documents from a segmenter backend.

The output documents are byte-for-byte what the pipeline's own writers
produce, so they round-trip through its parsers unchanged. Run provenance
(backend, model settings, prompt mode) goes to a `.provenance.json`
sidecar next to each output instead of into the document itself.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import InputError, PromptError
from .images import load_image
from .mask_rle import decode_runs, encode_runs

ADAPTER_VERSION = "0.1.0"


def _write_provenance(out_path, backend, operation: str, extra: dict) -> None:
    doc = {
        "tool": "segchange-adapter",
        "version": ADAPTER_VERSION,
        "backend": backend.name,
        "settings": backend.settings(),
        "operation": operation,
        **extra,
    }
    sidecar = Path(str(out_path) + ".provenance.json")
    sidecar.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def segment_everything_file(image_path, out_path, backend) -> int:
    """Segment the whole image and write a mask-set document.

    Masks are sorted by descending score (ties keep discovery order) and
    numbered 1..n. Returns the number of masks written.
    """
    image = load_image(image_path)
    h, w = image.shape[:2]
    if w < 1 or h < 1:
        raise InputError(f"{image_path}: image dimensions are {w}x{h}")
    segments = backend.segment_everything(image)
    ordered = sorted(enumerate(segments), key=lambda item: (-item[1][1], item[0]))
    doc = {
        "width": w,
        "height": h,
        "masks": [
            {"id": idx, "score": score, "runs": encode_runs(mask)}
            for idx, (_, (mask, score)) in enumerate(ordered, start=1)
        ],
    }
    Path(out_path).write_text(json.dumps(doc, separators=(",", ":")) + "\n",
                              encoding="utf-8")
    _write_provenance(out_path, backend, "segment-everything",
                      {"image": str(image_path)})
    return len(ordered)


def _parse_prompts(text: str, width: int, height: int, source: str) -> list[dict]:
    try:
        entries = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PromptError(f"{source}: invalid JSON at byte {exc.pos}: {exc.msg}")
    if not isinstance(entries, list):
        raise PromptError(f"{source}: prompt export must be a list")
    prompts = []
    seen = set()
    for i, entry in enumerate(entries):
        where = f"{source}: entry [{i}]"
        if not isinstance(entry, dict):
            raise PromptError(f"{where}: expected an object")
        for key in ("instance_id", "class_code", "box", "runs"):
            if key not in entry:
                raise PromptError(f"{where}: missing field '{key}'")
        inst_id = entry["instance_id"]
        if not isinstance(inst_id, int):
            raise PromptError(f"{where}: instance_id must be an integer")
        if inst_id in seen:
            raise PromptError(f"{where}: duplicate instance_id {inst_id}")
        seen.add(inst_id)
        box = entry["box"]
        if not (isinstance(box, list) and len(box) == 4
                and all(isinstance(v, int) for v in box)):
            raise PromptError(f"{where}: box must be [x, y, w, h]")
        if box[2] < 1 or box[3] < 1:
            raise PromptError(f"{where}: box has zero extent")
        try:
            mask = decode_runs(entry["runs"], width, height)
        except (ValueError, TypeError) as exc:
            raise PromptError(f"{where}: bad runs: {exc}")
        prompts.append({"instance_id": inst_id, "box": tuple(box), "mask": mask})
    return prompts


def segment_prompted_file(image_path, prompts_path, out_path, backend,
                          mode: str = "mask") -> int:
    """Run one prompted segmentation per prompt and write the results.

    Returns the number of results written (one per prompt, same ids)."""
    if mode not in ("box", "mask"):
        raise ValueError(f"mode must be 'box' or 'mask', got {mode!r}")
    image = load_image(image_path)
    h, w = image.shape[:2]
    prompts = _parse_prompts(Path(prompts_path).read_text(encoding="utf-8"),
                             w, h, str(prompts_path))
    results = []
    for prompt in prompts:
        if mode == "box":
            segmented = backend.segment_prompted(image, box=prompt["box"])
        else:
            segmented = backend.segment_prompted(image, mask=prompt["mask"])
        results.append({"instance_id": prompt["instance_id"],
                        "runs": encode_runs(segmented)})
    doc = {"width": w, "height": h, "results": results}
    Path(out_path).write_text(json.dumps(doc, separators=(",", ":")) + "\n",
                              encoding="utf-8")
    _write_provenance(out_path, backend, "segment-prompted",
                      {"image": str(image_path), "prompts": str(prompts_path),
                       "prompt_mode": mode})
    return len(results)
