"""Change detection without segmenter prompts.

For every map instance, the masks that intersect it are merged outward
from the instance's center. The overlap rate between the growing merged
mask and the instance is its IoU; an instance whose overlap rate reaches
the threshold during the merge is unchanged, otherwise it is changed. An
optional shape check can veto an unchanged verdict when the merged mask's
area or aspect ratio disagrees too much with the instance.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EmptyMaskError
from .masks import BinaryMask, MaskSet, mask_geometry
from .components import Instance
from .rasters import ChangeMap

__all__ = [
    "AggregationParams",
    "InstanceVerdict",
    "intersecting_masks",
    "hierarchical_aggregate",
    "detect_changes_noprompt",
]


@dataclass(frozen=True)
class AggregationParams:
    """Tunables for mask aggregation and the change decision.

    overlap_threshold: minimum IoU between merged mask and instance for an
        unchanged verdict.
    min_intersection: masks overlapping the instance by fewer pixels are
        not merge candidates.
    patience: stop merging after this many consecutive merges that fail to
        improve the best overlap seen so far.
    use_shape_check: when the overlap threshold is met, additionally
        require the merged mask's area and bbox aspect ratio to stay within
        the bands (as ratios to the instance's), inclusive; outside either
        band the verdict flips back to changed.
    """

    overlap_threshold: float = 0.5
    min_intersection: int = 8
    patience: int = 3
    use_shape_check: bool = False
    area_ratio_band: tuple[float, float] = (0.5, 2.0)
    aspect_ratio_band: tuple[float, float] = (0.5, 2.0)

    def __post_init__(self):
        if not 0.0 < self.overlap_threshold <= 1.0:
            raise ValueError(
                f"overlap_threshold must be in (0, 1], got {self.overlap_threshold}")
        if self.min_intersection < 1:
            raise ValueError(
                f"min_intersection must be >= 1, got {self.min_intersection}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        for name in ("area_ratio_band", "aspect_ratio_band"):
            lo, hi = getattr(self, name)
            if not lo < 1.0 < hi:
                raise ValueError(f"{name} must bracket 1.0, got ({lo}, {hi})")


@dataclass(frozen=True)
class InstanceVerdict:
    """Aggregation outcome for one instance."""

    instance_id: int
    changed: bool
    best_overlap: float
    merged_mask: BinaryMask
    masks_used: tuple[int, ...]


def intersecting_masks(instance: Instance, masks: MaskSet,
                       min_intersection: int = 8) -> list[int]:
    """Ids of masks overlapping the instance by at least min_intersection
    pixels, ordered by ascending centroid distance to the instance centroid
    (ties break by ascending mask id)."""
    if min_intersection < 1:
        raise ValueError(f"min_intersection must be >= 1, got {min_intersection}")
    if (instance.mask.width, instance.mask.height) != (masks.width, masks.height):
        raise DimensionError(
            f"instance {instance.id} is {instance.mask.width}x{instance.mask.height} "
            f"but mask set is {masks.width}x{masks.height}")
    inst_arr = instance.mask.to_array()
    cx, cy = instance.centroid
    ranked: list[tuple[float, int]] = []
    for m in masks:
        inter = int(np.count_nonzero(inst_arr & m.to_array()))
        if inter < min_intersection:
            continue
        mx, my = mask_geometry(m).centroid
        ranked.append(((mx - cx) ** 2 + (my - cy) ** 2, m.id))
    ranked.sort()
    return [mid for _, mid in ranked]


def hierarchical_aggregate(instance: Instance, masks: MaskSet,
                           params: AggregationParams) -> InstanceVerdict:
    """Merge candidate masks outward from the instance center and decide
    changed/unchanged from the best overlap rate reached."""
    if instance.area == 0:
        raise EmptyMaskError(f"instance {instance.id} is empty")
    order = intersecting_masks(instance, masks, params.min_intersection)

    inst_arr = instance.mask.to_array()
    inst_area = instance.area
    merged = np.zeros_like(inst_arr)
    used: list[int] = []
    best = 0.0
    stalled = 0
    for mid in order:
        merged |= masks.get(mid).to_array()
        used.append(mid)
        inter = int(np.count_nonzero(merged & inst_arr))
        union = int(np.count_nonzero(merged)) + inst_area - inter
        rate = inter / union
        if rate > best:
            best = rate
            stalled = 0
        else:
            stalled += 1
        if rate >= params.overlap_threshold:
            break
        if stalled >= params.patience:
            break

    changed = best < params.overlap_threshold
    if not changed and params.use_shape_check:
        geo = mask_geometry(BinaryMask.from_array(merged, mask_id=instance.id))
        inst_aspect = instance.bbox[2] / instance.bbox[3]
        area_ratio = geo.area / inst_area
        aspect_ratio = geo.aspect_ratio / inst_aspect
        lo_a, hi_a = params.area_ratio_band
        lo_r, hi_r = params.aspect_ratio_band
        if not (lo_a <= area_ratio <= hi_a and lo_r <= aspect_ratio <= hi_r):
            changed = True

    return InstanceVerdict(
        instance_id=instance.id,
        changed=changed,
        best_overlap=best,
        merged_mask=BinaryMask.from_array(merged, mask_id=instance.id),
        masks_used=tuple(used),
    )


def detect_changes_noprompt(
    instances: list[Instance],
    masks: MaskSet,
    params: AggregationParams | None = None,
    *,
    workers: int = 1,
) -> tuple[ChangeMap, list[InstanceVerdict]]:
    """Run aggregation for every instance and rasterize the verdicts.

    Pixels of changed instances are set in the change map; everything else
    (unchanged instances, unlabeled pixels) stays 0. Verdicts come back in
    instance id order. Results are identical for any worker count.
    """
    params = params or AggregationParams()
    ordered = sorted(instances, key=lambda inst: inst.id)
    for inst in ordered:
        if (inst.mask.width, inst.mask.height) != (masks.width, masks.height):
            raise DimensionError(
                f"instance {inst.id} is {inst.mask.width}x{inst.mask.height} "
                f"but mask set is {masks.width}x{masks.height}")

    def job(inst: Instance) -> InstanceVerdict:
        return hierarchical_aggregate(inst, masks, params)

    if workers > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts = list(pool.map(job, ordered))
    else:
        verdicts = [job(inst) for inst in ordered]

    changed = np.zeros((masks.height, masks.width), dtype=bool)
    for inst, verdict in zip(ordered, verdicts):
        if verdict.changed:
            changed |= inst.mask.to_array()
    return ChangeMap(masks.width, masks.height, changed), verdicts
