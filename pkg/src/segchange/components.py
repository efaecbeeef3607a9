"""Connected component labeling of class rasters into instance maps.

Two-pass labeling: a raster scan assigns provisional labels and records
label equivalences in a union-find forest, then a resolve step renumbers
the surviving components 1..N by the scan position of their first pixel.
Two pixels share an instance iff they carry the same class code and are
adjacent under the configured connectivity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DimensionError
from .masks import BinaryMask, mask_geometry
from .rasters import LabelRaster

__all__ = ["InstanceMap", "Instance", "label_components"]

DEFAULT_CONNECTIVITY = 4
DEFAULT_MIN_AREA = 16


@dataclass(frozen=True, eq=False)
class InstanceMap:
    """Per-pixel instance ids; 0 marks pixels not assigned to any instance."""

    width: int
    height: int
    labels: np.ndarray  # uint32, shape (height, width)
    n_instances: int

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.shape != (self.height, self.width):
            raise DimensionError(
                f"label array shape {arr.shape} != ({self.height}, {self.width})")
        arr = arr.astype(np.uint32, copy=True)
        ids = np.unique(arr)
        ids = ids[ids != 0]
        if ids.size != self.n_instances or (
                ids.size and (ids[0] != 1 or ids[-1] != self.n_instances)):
            raise ValueError(
                f"instance ids must be exactly 1..{self.n_instances}, "
                f"found {ids.size} distinct nonzero ids")
        arr.flags.writeable = False
        object.__setattr__(self, "labels", arr)

    def __eq__(self, other) -> bool:
        if not isinstance(other, InstanceMap):
            return NotImplemented
        return (self.width == other.width and self.height == other.height
                and self.n_instances == other.n_instances
                and np.array_equal(self.labels, other.labels))


@dataclass(frozen=True)
class Instance:
    """One connected same-class region with its derived shape attributes."""

    id: int
    class_code: int
    mask: BinaryMask
    area: int
    bbox: tuple[int, int, int, int]
    centroid: tuple[float, float]

    @classmethod
    def from_mask(cls, mask: BinaryMask, class_code: int) -> "Instance":
        geo = mask_geometry(mask)
        return cls(id=mask.id, class_code=class_code, mask=mask,
                   area=geo.area, bbox=geo.bbox, centroid=geo.centroid)


def _find(parent: list[int], x: int) -> int:
    # Path halving keeps the forest flat without recursion.
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _union(parent: list[int], a: int, b: int) -> None:
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra < rb:
        parent[rb] = ra
    elif rb < ra:
        parent[ra] = rb


def label_components(
    raster: LabelRaster,
    connectivity: int = DEFAULT_CONNECTIVITY,
    min_area: int = DEFAULT_MIN_AREA,
    ignore_codes: Iterable[int] = (),
) -> tuple[InstanceMap, list[Instance]]:
    """Label connected same-class regions of a class raster.

    Components smaller than `min_area` pixels and components whose class is
    in `ignore_codes` get label 0. Surviving instances are numbered 1..N in
    raster scan order of their first pixel, so identical inputs always
    produce identical numbering.

    Returns the InstanceMap and the instances in id order.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    if min_area < 1:
        raise ValueError(f"min_area must be >= 1, got {min_area}")
    w, h = raster.width, raster.height
    n = w * h
    codes = raster.pixels.reshape(-1).tolist()
    ignore = frozenset(int(c) for c in ignore_codes)
    eight = connectivity == 8

    labels = [0] * n
    parent = [0]  # index 0 is the background sentinel

    # Pass 1: provisional labels plus equivalences.
    for y in range(h):
        base = y * w
        for x in range(w):
            i = base + x
            c = codes[i]
            if c in ignore:
                continue
            lab = 0
            if x and codes[i - 1] == c:
                lab = labels[i - 1]
            if y:
                j = i - w
                if codes[j] == c:
                    up = labels[j]
                    if lab == 0:
                        lab = up
                    elif up != lab:
                        _union(parent, lab, up)
                if eight:
                    if x and codes[j - 1] == c:
                        ul = labels[j - 1]
                        if lab == 0:
                            lab = ul
                        elif ul != lab:
                            _union(parent, lab, ul)
                    if x < w - 1 and codes[j + 1] == c:
                        ur = labels[j + 1]
                        if lab == 0:
                            lab = ur
                        elif ur != lab:
                            _union(parent, lab, ur)
            if lab == 0:
                lab = len(parent)
                parent.append(lab)
            labels[i] = lab

    # Pass 2: resolve equivalences, suppress small components, renumber by
    # the scan position of each component's first pixel.
    roots = np.array([_find(parent, p) for p in range(len(parent))],
                     dtype=np.int64)
    flat = roots[np.asarray(labels, dtype=np.int64)]
    sizes = np.bincount(flat, minlength=len(parent))
    keep = sizes >= min_area
    keep[0] = False

    first_idx = np.full(len(parent), n, dtype=np.int64)
    np.minimum.at(first_idx, flat, np.arange(n, dtype=np.int64))
    kept_roots = np.flatnonzero(keep)
    ordered = kept_roots[np.argsort(first_idx[kept_roots], kind="stable")]
    remap = np.zeros(len(parent), dtype=np.uint32)
    remap[ordered] = np.arange(1, ordered.size + 1, dtype=np.uint32)
    final = remap[flat]
    n_instances = int(ordered.size)

    instance_map = InstanceMap(w, h, final.reshape(h, w), n_instances)
    instances = _build_instances(final.tolist(), codes, w, h, n_instances)
    return instance_map, instances


def _build_instances(final: list[int], codes: list[int], w: int, h: int,
                     n_instances: int) -> list[Instance]:
    # One scan builds runs, bbox, and centroid sums for every instance at
    # once; cheaper than a per-instance pixel pass when components are many.
    info = [None] * (n_instances + 1)
    i = 0
    for y in range(h):
        for x in range(w):
            lab = final[i]
            if lab:
                rec = info[lab]
                if rec is None:
                    # [runs, prev_index, minx, maxx, miny, maxy, sumx, sumy, area, class]
                    info[lab] = [[i, 1], i, x, x, y, y, x, y, 1, codes[i]]
                else:
                    runs = rec[0]
                    prev = rec[1]
                    if i == prev + 1:
                        runs[-1] += 1
                    else:
                        runs.append(i - prev - 1)
                        runs.append(1)
                    rec[1] = i
                    if x < rec[2]:
                        rec[2] = x
                    elif x > rec[3]:
                        rec[3] = x
                    if y > rec[5]:
                        rec[5] = y
                    rec[6] += x
                    rec[7] += y
                    rec[8] += 1
            i += 1

    n = w * h
    instances: list[Instance] = []
    for lab in range(1, n_instances + 1):
        runs, prev, minx, maxx, miny, maxy, sumx, sumy, area, code = info[lab]
        tail = n - prev - 1
        if tail:
            runs.append(tail)
        mask = BinaryMask(w, h, tuple(runs), id=lab)
        instances.append(Instance(
            id=lab,
            class_code=int(code),
            mask=mask,
            area=area,
            bbox=(minx, miny, maxx - minx + 1, maxy - miny + 1),
            centroid=(sumx / area, sumy / area),
        ))
    return instances
