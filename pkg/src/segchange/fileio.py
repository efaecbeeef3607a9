"""File formats: binary graymaps, legend text, JSON documents, CSV tables.

Rasters travel as binary graymaps: an ASCII header ``P5\\n<width>
<height>\\n<maxval>\\n`` followed by raw samples, big-endian 16-bit when
maxval is 65535 and 8-bit when maxval is 255. Change maps always use
maxval 255 with 0 = unchanged and 255 = changed. Encode then decode is the
identity on canonical files, and decode then encode is the identity on
in-memory values.

Structured data (mask sets, instances, prompts, prompted results,
manifests) uses JSON documents; parse failures report the byte offset or
the offending field path.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import CorruptMaskError, DimensionError, ExportError, FormatError
from .masks import BinaryMask, MaskSet
from .components import Instance, InstanceMap
from .metrics import MetricsRecord
from .noprompt import InstanceVerdict
from .prompting import PromptedResult, PromptSpec
from .rasters import ChangeMap, LabelRaster, Legend, LegendEntry

__all__ = [
    "encode_graymap", "decode_graymap",
    "encode_label_raster", "decode_label_raster",
    "encode_change_map", "decode_change_map",
    "encode_instance_map", "encode_pixmap",
    "parse_legend", "format_legend",
    "maskset_to_json", "maskset_from_json",
    "instances_to_json", "instances_from_json",
    "prompts_to_json", "prompts_from_json",
    "results_to_json", "results_from_json",
    "verdicts_to_csv", "metrics_to_csv",
    "read_label_raster", "write_label_raster",
    "read_change_map", "write_change_map",
    "read_legend", "write_legend",
    "read_mask_set", "write_mask_set",
    "read_instances", "write_instances",
    "read_prompts", "write_prompts",
    "read_results", "write_results",
    "write_instance_map", "write_pixmap",
    "write_verdicts_csv", "write_metrics_csv",
]


# ---------------------------------------------------------------------------
# Binary graymaps (P5) and pixmaps (P6)
# ---------------------------------------------------------------------------

def _parse_uint(data: bytes, pos: int, what: str, source: str | None) -> tuple[int, int]:
    start = pos
    while pos < len(data) and 0x30 <= data[pos] <= 0x39:
        pos += 1
    if pos == start:
        raise FormatError(f"expected {what}", source=source, offset=start)
    return int(data[start:pos]), pos


def _expect(data: bytes, pos: int, token: bytes, what: str,
            source: str | None) -> int:
    if data[pos:pos + len(token)] != token:
        raise FormatError(f"expected {what}", source=source, offset=pos)
    return pos + len(token)


def decode_graymap(data: bytes, source: str | None = None) -> tuple[np.ndarray, int]:
    """Parse a P5 graymap into (uint16 array of shape (h, w), maxval)."""
    pos = _expect(data, 0, b"P5\n", "magic 'P5'", source)
    width_at = pos
    width, pos = _parse_uint(data, pos, "width", source)
    pos = _expect(data, pos, b" ", "single space between width and height", source)
    height_at = pos
    height, pos = _parse_uint(data, pos, "height", source)
    pos = _expect(data, pos, b"\n", "newline after dimensions", source)
    maxval_at = pos
    maxval, pos = _parse_uint(data, pos, "maxval", source)
    pos = _expect(data, pos, b"\n", "newline after maxval", source)

    if width < 1:
        raise FormatError("width must be >= 1", source=source, offset=width_at)
    if height < 1:
        raise FormatError("height must be >= 1", source=source, offset=height_at)
    if maxval not in (255, 65535):
        raise FormatError(f"maxval must be 255 or 65535, got {maxval}",
                          source=source, offset=maxval_at)
    sample_size = 2 if maxval == 65535 else 1
    expected = width * height * sample_size
    body = data[pos:]
    if len(body) < expected:
        raise FormatError(
            f"truncated pixel data: expected {expected} bytes, found {len(body)}",
            source=source, offset=len(data))
    if len(body) > expected:
        raise FormatError("trailing bytes after pixel data",
                          source=source, offset=pos + expected)
    dtype = ">u2" if sample_size == 2 else np.uint8
    arr = np.frombuffer(body, dtype=dtype).reshape(height, width)
    return arr.astype(np.uint16), maxval


def encode_graymap(values: np.ndarray, maxval: int) -> bytes:
    """Serialize a (h, w) integer array as a canonical P5 graymap."""
    if maxval not in (255, 65535):
        raise ValueError(f"maxval must be 255 or 65535, got {maxval}")
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D array, got ndim={arr.ndim}")
    if arr.size and int(arr.max()) > maxval:
        raise ValueError(f"sample {int(arr.max())} exceeds maxval {maxval}")
    h, w = arr.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    body = arr.astype(">u2" if maxval == 65535 else np.uint8).tobytes()
    return header + body


def encode_label_raster(raster: LabelRaster) -> bytes:
    return encode_graymap(raster.pixels, 65535)


def decode_label_raster(data: bytes, source: str | None = None) -> LabelRaster:
    arr, _ = decode_graymap(data, source)
    return LabelRaster.from_array(arr)


def encode_change_map(cmap: ChangeMap) -> bytes:
    return encode_graymap(cmap.changed.astype(np.uint8) * 255, 255)


def decode_change_map(data: bytes, source: str | None = None) -> ChangeMap:
    arr, maxval = decode_graymap(data, source)
    if maxval != 255:
        raise FormatError(f"change maps must use maxval 255, got {maxval}",
                          source=source)
    return ChangeMap.from_array(arr != 0)


def encode_instance_map(imap: InstanceMap) -> bytes:
    if imap.n_instances > 65535:
        raise ExportError(
            f"{imap.n_instances} instances exceed the 16-bit graymap range")
    return encode_graymap(imap.labels, 65535)


def encode_pixmap(rgb: np.ndarray) -> bytes:
    """Serialize a (h, w, 3) uint8 array as a binary P6 pixmap."""
    arr = np.asarray(rgb, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DimensionError(f"expected (h, w, 3), got shape {arr.shape}")
    h, w, _ = arr.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + arr.tobytes()


# ---------------------------------------------------------------------------
# Legend text: "code,name,is_background", '#' comments
# ---------------------------------------------------------------------------

def parse_legend(text: str, source: str | None = None) -> Legend:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError("expected 'code,name,is_background'",
                              source=source, field=f"line {lineno}")
        code_s, name, bg_s = (p.strip() for p in parts)
        if not code_s.isdigit():
            raise FormatError(f"class code {code_s!r} is not an integer",
                              source=source, field=f"line {lineno}")
        if bg_s not in ("0", "1"):
            raise FormatError(f"is_background must be 0 or 1, got {bg_s!r}",
                              source=source, field=f"line {lineno}")
        entries.append(LegendEntry(int(code_s), name, bg_s == "1"))
    try:
        return Legend(tuple(entries))
    except Exception as exc:
        raise FormatError(str(exc), source=source) from exc


def format_legend(legend: Legend) -> str:
    lines = ["# code,name,is_background"]
    lines.extend(f"{e.code},{e.name},{int(e.is_background)}"
                 for e in legend.entries)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------

def _load_json(text: str, source: str | None):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, source=source, offset=exc.pos) from exc


def _get(obj, key: str, path: str, source: str | None):
    if not isinstance(obj, dict):
        raise FormatError("expected an object", source=source, field=path)
    if key not in obj:
        raise FormatError(f"missing field '{key}'", source=source, field=path)
    return obj[key]


def _get_int(obj, key: str, path: str, source: str | None) -> int:
    val = _get(obj, key, path, source)
    if not isinstance(val, int) or isinstance(val, bool):
        raise FormatError(f"field '{key}' must be an integer",
                          source=source, field=path)
    return val


def _get_runs(obj, path: str, source: str | None) -> tuple[int, ...]:
    val = _get(obj, "runs", path, source)
    if not isinstance(val, list) or not all(
            isinstance(r, int) and not isinstance(r, bool) for r in val):
        raise FormatError("field 'runs' must be a list of integers",
                          source=source, field=path)
    return tuple(val)


def _build_mask(width: int, height: int, runs, mask_id: int, score: float,
                path: str, source: str | None) -> BinaryMask:
    try:
        return BinaryMask(width, height, runs, id=mask_id, score=score)
    except (CorruptMaskError, DimensionError, ValueError) as exc:
        raise FormatError(str(exc), source=source, field=path) from exc


def maskset_to_json(mask_set: MaskSet) -> str:
    doc = {
        "width": mask_set.width,
        "height": mask_set.height,
        "masks": [
            {"id": m.id, "score": m.score, "runs": list(m.runs)}
            for m in mask_set.masks
        ],
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


def maskset_from_json(text: str, source: str | None = None) -> MaskSet:
    obj = _load_json(text, source)
    width = _get_int(obj, "width", "width", source)
    height = _get_int(obj, "height", "height", source)
    masks_val = _get(obj, "masks", "masks", source)
    if not isinstance(masks_val, list):
        raise FormatError("field 'masks' must be a list", source=source,
                          field="masks")
    masks = []
    for i, entry in enumerate(masks_val):
        path = f"masks[{i}]"
        mask_id = _get_int(entry, "id", path, source)
        score = entry.get("score", 1.0) if isinstance(entry, dict) else 1.0
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise FormatError("field 'score' must be a number",
                              source=source, field=path)
        runs = _get_runs(entry, path, source)
        masks.append(_build_mask(width, height, runs, mask_id, float(score),
                                 path, source))
    try:
        return MaskSet(width, height, tuple(masks))
    except (DimensionError, ValueError) as exc:
        raise FormatError(str(exc), source=source) from exc


def instances_to_json(instances: list[Instance], width: int, height: int) -> str:
    doc = {
        "width": width,
        "height": height,
        "instances": [
            {"id": inst.id, "class_code": inst.class_code,
             "runs": list(inst.mask.runs)}
            for inst in instances
        ],
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


def instances_from_json(text: str, source: str | None = None,
                        ) -> tuple[list[Instance], int, int]:
    obj = _load_json(text, source)
    width = _get_int(obj, "width", "width", source)
    height = _get_int(obj, "height", "height", source)
    entries = _get(obj, "instances", "instances", source)
    if not isinstance(entries, list):
        raise FormatError("field 'instances' must be a list", source=source,
                          field="instances")
    instances = []
    seen = set()
    for i, entry in enumerate(entries):
        path = f"instances[{i}]"
        inst_id = _get_int(entry, "id", path, source)
        if inst_id in seen:
            raise FormatError(f"duplicate instance id {inst_id}",
                              source=source, field=path)
        seen.add(inst_id)
        class_code = _get_int(entry, "class_code", path, source)
        runs = _get_runs(entry, path, source)
        mask = _build_mask(width, height, runs, inst_id, 1.0, path, source)
        if mask.area == 0:
            raise FormatError("instance has no pixels", source=source, field=path)
        instances.append(Instance.from_mask(mask, class_code))
    return instances, width, height


def prompts_to_json(specs: list[PromptSpec]) -> str:
    doc = [
        {"instance_id": s.instance_id, "class_code": s.class_code,
         "box": list(s.prompt_box), "runs": list(s.prompt_mask.runs)}
        for s in specs
    ]
    return json.dumps(doc, separators=(",", ":")) + "\n"


def prompts_from_json(text: str, width: int, height: int,
                      source: str | None = None) -> list[PromptSpec]:
    """Parse a prompt export; the scene dimensions come from the caller
    (the prompt document itself is a bare list)."""
    obj = _load_json(text, source)
    if not isinstance(obj, list):
        raise FormatError("prompt export must be a list", source=source)
    specs = []
    for i, entry in enumerate(obj):
        path = f"[{i}]"
        inst_id = _get_int(entry, "instance_id", path, source)
        class_code = _get_int(entry, "class_code", path, source)
        box = _get(entry, "box", path, source)
        if (not isinstance(box, list) or len(box) != 4
                or not all(isinstance(v, int) and not isinstance(v, bool)
                           for v in box)):
            raise FormatError("field 'box' must be [x, y, w, h]",
                              source=source, field=path)
        runs = _get_runs(entry, path, source)
        mask = _build_mask(width, height, runs, inst_id, 1.0, path, source)
        specs.append(PromptSpec(instance_id=inst_id, class_code=class_code,
                                prompt_box=tuple(box), prompt_mask=mask))
    return specs


def results_to_json(results: list[PromptedResult], width: int, height: int) -> str:
    doc = {
        "width": width,
        "height": height,
        "results": [
            {"instance_id": r.instance_id, "runs": list(r.segmented.runs)}
            for r in results
        ],
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


def results_from_json(text: str, source: str | None = None,
                      ) -> tuple[list[PromptedResult], int, int]:
    obj = _load_json(text, source)
    width = _get_int(obj, "width", "width", source)
    height = _get_int(obj, "height", "height", source)
    entries = _get(obj, "results", "results", source)
    if not isinstance(entries, list):
        raise FormatError("field 'results' must be a list", source=source,
                          field="results")
    results = []
    for i, entry in enumerate(entries):
        path = f"results[{i}]"
        inst_id = _get_int(entry, "instance_id", path, source)
        runs = _get_runs(entry, path, source)
        mask = _build_mask(width, height, runs, inst_id, 1.0, path, source)
        results.append(PromptedResult(instance_id=inst_id, segmented=mask))
    return results, width, height


# ---------------------------------------------------------------------------
# CSV tables
# ---------------------------------------------------------------------------

def verdicts_to_csv(verdicts: list[InstanceVerdict]) -> str:
    lines = ["instance_id,changed,best_overlap,n_masks_used"]
    lines.extend(
        f"{v.instance_id},{int(v.changed)},{v.best_overlap:.6f},{len(v.masks_used)}"
        for v in verdicts
    )
    return "\n".join(lines) + "\n"


def metrics_to_csv(record: MetricsRecord, dataset: str) -> str:
    return (
        "dataset,tp,fp,fn,tn,oa,f1,kc\n"
        f"{dataset},{record.tp},{record.fp},{record.fn},{record.tn},"
        f"{record.oa:.6f},{record.f1:.6f},{record.kc:.6f}\n"
    )


# ---------------------------------------------------------------------------
# Path convenience wrappers
# ---------------------------------------------------------------------------

def read_label_raster(path) -> LabelRaster:
    return decode_label_raster(Path(path).read_bytes(), source=str(path))


def write_label_raster(path, raster: LabelRaster) -> None:
    Path(path).write_bytes(encode_label_raster(raster))


def read_change_map(path) -> ChangeMap:
    return decode_change_map(Path(path).read_bytes(), source=str(path))


def write_change_map(path, cmap: ChangeMap) -> None:
    Path(path).write_bytes(encode_change_map(cmap))


def read_legend(path) -> Legend:
    return parse_legend(Path(path).read_text(encoding="utf-8"), source=str(path))


def write_legend(path, legend: Legend) -> None:
    Path(path).write_text(format_legend(legend), encoding="utf-8")


def read_mask_set(path) -> MaskSet:
    return maskset_from_json(Path(path).read_text(encoding="utf-8"),
                             source=str(path))


def write_mask_set(path, mask_set: MaskSet) -> None:
    Path(path).write_text(maskset_to_json(mask_set), encoding="utf-8")


def read_instances(path) -> tuple[list[Instance], int, int]:
    return instances_from_json(Path(path).read_text(encoding="utf-8"),
                               source=str(path))


def write_instances(path, instances: list[Instance], width: int, height: int) -> None:
    Path(path).write_text(instances_to_json(instances, width, height),
                          encoding="utf-8")


def read_prompts(path, width: int, height: int) -> list[PromptSpec]:
    return prompts_from_json(Path(path).read_text(encoding="utf-8"),
                             width, height, source=str(path))


def write_prompts(path, specs: list[PromptSpec]) -> None:
    Path(path).write_text(prompts_to_json(specs), encoding="utf-8")


def read_results(path) -> tuple[list[PromptedResult], int, int]:
    return results_from_json(Path(path).read_text(encoding="utf-8"),
                             source=str(path))


def write_results(path, results: list[PromptedResult], width: int, height: int) -> None:
    Path(path).write_text(results_to_json(results, width, height),
                          encoding="utf-8")


def write_instance_map(path, imap: InstanceMap) -> None:
    Path(path).write_bytes(encode_instance_map(imap))


def write_pixmap(path, rgb: np.ndarray) -> None:
    Path(path).write_bytes(encode_pixmap(rgb))


def write_verdicts_csv(path, verdicts: list[InstanceVerdict]) -> None:
    Path(path).write_text(verdicts_to_csv(verdicts), encoding="utf-8")


def write_metrics_csv(path, record: MetricsRecord, dataset: str) -> None:
    Path(path).write_text(metrics_to_csv(record, dataset), encoding="utf-8")
