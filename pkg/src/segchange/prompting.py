"""Change detection with prompts derived from background instances.

Background map instances (flagged in the legend) are exported as box and
mask prompts for an external promptable segmenter. The segmenter returns
one mask per prompt covering what it recognizes as that background; pixels
of the instance the segmenter did not cover are emerging objects, kept
when their connected blobs are large enough to not be boundary jitter.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, LegendError, PairingError
from .masks import BinaryMask
from .components import Instance, label_components
from .rasters import ChangeMap, LabelRaster, Legend

__all__ = [
    "PromptSpec",
    "PromptedResult",
    "export_prompts",
    "anomaly_extract",
    "detect_changes_prompt",
]

DEFAULT_MIN_BLOB_AREA = 16


@dataclass(frozen=True)
class PromptSpec:
    """Box and mask prompt for one background instance."""

    instance_id: int
    class_code: int
    prompt_box: tuple[int, int, int, int]
    prompt_mask: BinaryMask


@dataclass(frozen=True)
class PromptedResult:
    """Segmenter output for one prompted instance."""

    instance_id: int
    segmented: BinaryMask


def export_prompts(instances: list[Instance], legend: Legend) -> list[PromptSpec]:
    """One PromptSpec per instance whose class is a background class,
    ordered by instance id."""
    specs: list[PromptSpec] = []
    for inst in sorted(instances, key=lambda i: i.id):
        if inst.class_code not in legend:
            raise LegendError(
                f"instance {inst.id} has class {inst.class_code} missing from legend")
        if legend.is_background(inst.class_code):
            specs.append(PromptSpec(
                instance_id=inst.id,
                class_code=inst.class_code,
                prompt_box=inst.bbox,
                prompt_mask=inst.mask,
            ))
    return specs


def anomaly_extract(instance: Instance, result: PromptedResult,
                    min_blob_area: int = DEFAULT_MIN_BLOB_AREA) -> BinaryMask:
    """Pixels of the instance the segmenter did not recognize.

    Computes instance minus segmented, then drops 4-connected blobs smaller
    than min_blob_area pixels. The result is always contained in the
    instance mask.
    """
    if result.instance_id != instance.id:
        raise PairingError(
            f"result for instance {result.instance_id} paired with instance "
            f"{instance.id}")
    if (instance.mask.width, instance.mask.height) != (
            result.segmented.width, result.segmented.height):
        raise DimensionError(
            f"instance {instance.id} is {instance.mask.width}x"
            f"{instance.mask.height} but its result is "
            f"{result.segmented.width}x{result.segmented.height}")
    diff = instance.mask.to_array() & ~result.segmented.to_array()
    if min_blob_area > 1 and diff.any():
        raster = LabelRaster.from_array(diff.astype(np.uint16))
        blob_map, _ = label_components(raster, connectivity=4,
                                       min_area=min_blob_area, ignore_codes={0})
        diff = blob_map.labels > 0
    return BinaryMask.from_array(diff, mask_id=instance.id)


def detect_changes_prompt(
    instances: list[Instance],
    results: list[PromptedResult],
    legend: Legend,
    min_blob_area: int = DEFAULT_MIN_BLOB_AREA,
    *,
    workers: int = 1,
) -> tuple[ChangeMap, list[str]]:
    """Union of anomaly extractions over all background instances.

    Background instances with no paired result contribute nothing; one
    warning string is returned for each. Results referencing unknown or
    non-background instances raise PairingError.
    """
    if not instances:
        if results:
            raise PairingError(
                f"result references unknown instance id {results[0].instance_id}")
        raise ValueError("no instances given")
    width = instances[0].mask.width
    height = instances[0].mask.height

    by_id = {inst.id: inst for inst in instances}
    for inst in instances:
        if inst.class_code not in legend:
            raise LegendError(
                f"instance {inst.id} has class {inst.class_code} missing "
                f"from legend")
    background = [inst for inst in sorted(instances, key=lambda i: i.id)
                  if legend.is_background(inst.class_code)]
    background_ids = {inst.id for inst in background}

    paired: dict[int, PromptedResult] = {}
    for res in results:
        if res.instance_id not in by_id:
            raise PairingError(
                f"result references unknown instance id {res.instance_id}")
        if res.instance_id not in background_ids:
            raise PairingError(
                f"result for instance {res.instance_id} targets a "
                f"non-background instance")
        if res.instance_id in paired:
            raise PairingError(
                f"duplicate result for instance {res.instance_id}")
        paired[res.instance_id] = res

    warnings: list[str] = []
    jobs: list[tuple[Instance, PromptedResult]] = []
    for inst in background:
        res = paired.get(inst.id)
        if res is None:
            warnings.append(
                f"background instance {inst.id} has no prompted result")
        else:
            jobs.append((inst, res))

    def extract(pair: tuple[Instance, PromptedResult]) -> np.ndarray:
        inst, res = pair
        return anomaly_extract(inst, res, min_blob_area).to_array()

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pieces = list(pool.map(extract, jobs))
    else:
        pieces = [extract(pair) for pair in jobs]

    changed = np.zeros((height, width), dtype=bool)
    for piece in pieces:
        changed |= piece
    return ChangeMap(width, height, changed), warnings
