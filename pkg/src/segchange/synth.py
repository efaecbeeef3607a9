"""Deterministic synthetic scenes for end-to-end verification.

A scene is a class raster (one background class plus rectangle and ellipse
objects of foreground classes), a mask set that plays the role of the
segmenter output, prompted results for the background instances, a ground
truth change map, and a manifest describing every object. Objects are
designated unchanged, shape-changed, or removed; extra "new" objects exist
only on the optical side and appear as holes in the prompted results.

Generation is driven by a splitmix64 stream seeded from SceneParams.seed,
so identical parameters always reproduce byte-identical scenes. The
algorithm name and its constants are echoed into the manifest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PlacementError
from .masks import BinaryMask, MaskSet
from .components import label_components
from .prompting import PromptedResult
from .rasters import ChangeMap, LabelRaster, Legend, LegendEntry

__all__ = [
    "SceneParams",
    "Scene",
    "SplitMix64",
    "generate_scene",
    "truth_from_manifest",
]

BACKGROUND_CODE = 1
FOREGROUND_CLASSES = ((2, "building"), (3, "water"), (4, "woodland"))

# Object geometry: sides are kept large enough that default aggregation
# parameters decide every role correctly even under 2 px boundary noise.
RECT_SIDE = (14, 26)
ELLIPSE_HALF_AXIS = (7, 13)
BORDER_MARGIN = 1
PLACEMENT_TRIES = 200

# Shape-changed objects get their longer bbox axis scaled by this factor,
# far outside the default (0.5, 2.0) comparison bands.
SHAPE_SCALE = 0.15

# Over-segmentation cuts never leave a strip thinner than this.
MIN_CUT_SEGMENT = 4

# Erosion noise backs off until the piece keeps at least this fraction of
# its area, so no mask can shrink past recognition.
ERODE_KEEP_FRACTION = 0.6

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """The splitmix64 generator; 64-bit state, documented constants."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform-ish draw in [0, n) by modulo reduction."""
        if n < 1:
            raise ValueError(f"below() needs n >= 1, got {n}")
        return self.next_u64() % n

    def randint(self, lo: int, hi: int) -> int:
        """Inclusive range draw."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        return lo + self.below(hi - lo + 1)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class SceneParams:
    """Knobs for scene generation; fully determines the scene with seed."""

    seed: int
    width: int = 128
    height: int = 128
    n_objects: int = 8
    change_fractions: tuple[float, float, float] = (0.0, 0.0, 0.0)
    split_k: int = 1
    boundary_noise: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(
                f"scene dimensions must be positive, got {self.width}x{self.height}")
        if self.n_objects < 0:
            raise ValueError(f"n_objects must be >= 0, got {self.n_objects}")
        fr = tuple(float(f) for f in self.change_fractions)
        object.__setattr__(self, "change_fractions", fr)
        if len(fr) != 3 or any(f < 0 for f in fr) or sum(fr) > 1.0 + 1e-9:
            raise ValueError(
                f"change_fractions must be 3 ratios >= 0 summing to <= 1, got {fr}")
        if self.split_k < 1:
            raise ValueError(f"split_k must be >= 1, got {self.split_k}")
        if self.boundary_noise < 0:
            raise ValueError(
                f"boundary_noise must be >= 0, got {self.boundary_noise}")


@dataclass(frozen=True)
class Scene:
    """Everything a pipeline run needs, plus truth and provenance."""

    params: SceneParams
    raster: LabelRaster
    legend: Legend
    mask_set: MaskSet
    prompted_results: tuple[PromptedResult, ...]
    truth: ChangeMap
    manifest: dict


def rasterize_shape(shape: str, bbox: tuple[int, int, int, int],
                    width: int, height: int) -> np.ndarray:
    """Pixel support of a rect or ellipse, a pure function of its bbox."""
    x, y, bw, bh = bbox
    out = np.zeros((height, width), dtype=bool)
    x0 = max(x, 0)
    y0 = max(y, 0)
    x1 = min(x + bw, width)
    y1 = min(y + bh, height)
    if x0 >= x1 or y0 >= y1:
        return out
    if shape == "rect":
        out[y0:y1, x0:x1] = True
        return out
    if shape == "ellipse":
        rx = max((bw - 1) / 2.0, 0.5)
        ry = max((bh - 1) / 2.0, 0.5)
        cx = x + (bw - 1) / 2.0
        cy = y + (bh - 1) / 2.0
        ys, xs = np.mgrid[y0:y1, x0:x1]
        inside = ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2 <= 1.0
        out[y0:y1, x0:x1] = inside
        return out
    raise ValueError(f"unknown shape {shape!r}")


def _dilate(arr: np.ndarray, radius: int) -> np.ndarray:
    """Chebyshev (square structuring element) binary dilation."""
    if radius <= 0:
        return arr.copy()
    h, w = arr.shape
    out = np.zeros_like(arr)
    for dy in range(-radius, radius + 1):
        ys = slice(max(dy, 0), min(h + dy, h))
        yt = slice(max(-dy, 0), min(h - dy, h))
        for dx in range(-radius, radius + 1):
            xs = slice(max(dx, 0), min(w + dx, w))
            xt = slice(max(-dx, 0), min(w - dx, w))
            out[yt, xt] |= arr[ys, xs]
    return out


def _erode(arr: np.ndarray, radius: int) -> np.ndarray:
    if radius <= 0:
        return arr.copy()
    return ~_dilate(~arr, radius)


def _place_object(rng: SplitMix64, width: int, height: int,
                  occupied: np.ndarray, clearance: int):
    """Sample a shape that fits and does not crowd existing objects."""
    for _ in range(PLACEMENT_TRIES):
        if rng.below(2) == 0:
            shape = "rect"
            bw = rng.randint(*RECT_SIDE)
            bh = rng.randint(*RECT_SIDE)
        else:
            shape = "ellipse"
            bw = 2 * rng.randint(*ELLIPSE_HALF_AXIS) + 1
            bh = 2 * rng.randint(*ELLIPSE_HALF_AXIS) + 1
        if bw > width - 2 * BORDER_MARGIN or bh > height - 2 * BORDER_MARGIN:
            continue
        x = rng.randint(BORDER_MARGIN, width - BORDER_MARGIN - bw)
        y = rng.randint(BORDER_MARGIN, height - BORDER_MARGIN - bh)
        footprint = rasterize_shape(shape, (x, y, bw, bh), width, height)
        if not (footprint & occupied).any():
            occupied |= _dilate(footprint, clearance)
            return shape, (x, y, bw, bh), footprint
    raise PlacementError(
        f"could not place an object after {PLACEMENT_TRIES} tries "
        f"({width}x{height}, clearance {clearance})")


def _split_pieces(rng: SplitMix64, footprint: np.ndarray, k: int) -> list[np.ndarray]:
    """Cut a footprint into at most k pieces with axis-parallel cuts."""
    pieces = [footprint]
    while len(pieces) < k:
        areas = [int(p.sum()) for p in pieces]
        idx = areas.index(max(areas))
        piece = pieces[idx]
        ys, xs = np.nonzero(piece)
        bw = int(xs.max()) - int(xs.min()) + 1
        bh = int(ys.max()) - int(ys.min()) + 1
        if bw >= bh and bw >= 2 * MIN_CUT_SEGMENT:
            cut = int(xs.min()) + rng.randint(MIN_CUT_SEGMENT, bw - MIN_CUT_SEGMENT)
            near = piece & (np.arange(piece.shape[1]) < cut)[None, :]
            far = piece & (np.arange(piece.shape[1]) >= cut)[None, :]
        elif bh >= 2 * MIN_CUT_SEGMENT:
            cut = int(ys.min()) + rng.randint(MIN_CUT_SEGMENT, bh - MIN_CUT_SEGMENT)
            near = piece & (np.arange(piece.shape[0]) < cut)[:, None]
            far = piece & (np.arange(piece.shape[0]) >= cut)[:, None]
        else:
            break
        pieces[idx] = near
        pieces.append(far)
    return pieces


def _apply_noise(rng: SplitMix64, piece: np.ndarray, max_radius: int) -> np.ndarray:
    mode = rng.below(3)
    radius = rng.randint(1, max_radius)
    if mode == 1:
        return _dilate(piece, radius)
    if mode == 2:
        keep_floor = math.ceil(ERODE_KEEP_FRACTION * int(piece.sum()))
        for r in range(radius, 0, -1):
            eroded = _erode(piece, r)
            if int(eroded.sum()) >= keep_floor:
                return eroded
        return piece.copy()
    return piece.copy()


def _scaled_bbox(bbox: tuple[int, int, int, int]) -> tuple[int, int, int, int]:
    """Shrink the longer bbox axis by SHAPE_SCALE, keeping the center."""
    x, y, bw, bh = bbox
    if bw >= bh:
        bw2 = max(1, int(bw * SHAPE_SCALE + 0.5))
        return (x + (bw - bw2) // 2, y, bw2, bh)
    bh2 = max(1, int(bh * SHAPE_SCALE + 0.5))
    return (x, y + (bh - bh2) // 2, bw, bh2)


def generate_scene(params: SceneParams) -> Scene:
    """Build one scene; every output is a pure function of the params."""
    rng = SplitMix64(params.seed)
    w, h = params.width, params.height
    n = params.n_objects

    legend = Legend((
        LegendEntry(BACKGROUND_CODE, "background", True),
        *(LegendEntry(code, name, False) for code, name in FOREGROUND_CLASSES),
    ))

    occupied = np.zeros((h, w), dtype=bool)
    clearance = params.boundary_noise + 1

    placed = []
    for _ in range(n):
        shape, bbox, footprint = _place_object(rng, w, h, occupied, clearance)
        code = FOREGROUND_CLASSES[rng.below(len(FOREGROUND_CLASSES))][0]
        placed.append({"shape": shape, "bbox": bbox, "footprint": footprint,
                       "class": code})

    f_shape, f_removed, f_new = params.change_fractions
    n_shape = int(f_shape * n + 0.5)
    n_removed = int(f_removed * n + 0.5)
    if n_shape + n_removed > n:
        n_removed = n - n_shape
    order = list(range(n))
    rng.shuffle(order)
    roles = ["unchanged"] * n
    for i in order[:n_shape]:
        roles[i] = "shape_changed"
    for i in order[n_shape:n_shape + n_removed]:
        roles[i] = "removed"
    for obj, role in zip(placed, roles):
        obj["role"] = role

    n_new = int(f_new * n + 0.5)
    for _ in range(n_new):
        shape, bbox, footprint = _place_object(rng, w, h, occupied, clearance)
        code = FOREGROUND_CLASSES[rng.below(len(FOREGROUND_CLASSES))][0]
        placed.append({"shape": shape, "bbox": bbox, "footprint": footprint,
                       "class": code, "role": "new"})

    pixels = np.full((h, w), BACKGROUND_CODE, dtype=np.uint16)
    for obj in placed:
        if obj["role"] != "new":
            pixels[obj["footprint"]] = obj["class"]
    raster = LabelRaster(w, h, pixels)

    full_map, full_instances = label_components(
        raster, connectivity=4, min_area=1)
    object_map, _ = label_components(
        raster, connectivity=4, min_area=1, ignore_codes={BACKGROUND_CODE})
    object_labels = object_map.labels

    # Optical-side geometry per object, then the simulated segmenter masks.
    masks: list[BinaryMask] = []
    next_mask_id = 1
    for obj in placed:
        role = obj["role"]
        if role == "removed":
            obj["optical_bbox"] = None
            obj["mask_ids"] = []
            continue
        if role == "shape_changed":
            obj["optical_bbox"] = _scaled_bbox(obj["bbox"])
            optical = rasterize_shape(obj["shape"], obj["optical_bbox"], w, h)
        else:
            obj["optical_bbox"] = obj["bbox"]
            optical = obj["footprint"]
        k = 1 + rng.below(params.split_k)
        pieces = _split_pieces(rng, optical, k)
        ids = []
        for piece in pieces:
            if params.boundary_noise > 0:
                piece = _apply_noise(rng, piece, params.boundary_noise)
            masks.append(BinaryMask.from_array(piece, mask_id=next_mask_id))
            ids.append(next_mask_id)
            next_mask_id += 1
        obj["mask_ids"] = ids
    mask_set = MaskSet(w, h, tuple(masks))

    new_pixels = np.zeros((h, w), dtype=bool)
    for obj in placed:
        if obj["role"] == "new":
            new_pixels |= obj["footprint"]

    results = []
    for inst in full_instances:
        if legend.is_background(inst.class_code):
            segmented = (full_map.labels == inst.id) & ~new_pixels
            results.append(PromptedResult(
                instance_id=inst.id,
                segmented=BinaryMask.from_array(segmented, mask_id=inst.id)))

    truth_arr = np.zeros((h, w), dtype=bool)
    for obj in placed:
        if obj["role"] in ("shape_changed", "removed", "new"):
            truth_arr |= obj["footprint"]
    truth = ChangeMap(w, h, truth_arr)

    objects_out = []
    for k_id, obj in enumerate(placed, start=1):
        if obj["role"] == "new":
            instance_id = None
        else:
            first = int(np.argmax(obj["footprint"].reshape(-1)))
            instance_id = int(object_labels.reshape(-1)[first])
        objects_out.append({
            "id": k_id,
            "class": int(obj["class"]),
            "role": obj["role"],
            "shape": obj["shape"],
            "bbox": [int(v) for v in obj["bbox"]],
            "optical_bbox": (None if obj["optical_bbox"] is None
                             else [int(v) for v in obj["optical_bbox"]]),
            "instance_id": instance_id,
            "mask_ids": obj["mask_ids"],
        })
    manifest = {
        "params": {
            "seed": params.seed,
            "width": w,
            "height": h,
            "n_objects": n,
            "change_fractions": list(params.change_fractions),
            "split_k": params.split_k,
            "boundary_noise": params.boundary_noise,
        },
        "prng": {
            "algorithm": "splitmix64",
            "increment": f"0x{_GAMMA:016x}",
            "mix_multipliers": [f"0x{_MIX1:016x}", f"0x{_MIX2:016x}"],
        },
        "background_class": BACKGROUND_CODE,
        "objects": objects_out,
    }

    return Scene(params=params, raster=raster, legend=legend,
                 mask_set=mask_set, prompted_results=tuple(results),
                 truth=truth, manifest=manifest)


def truth_from_manifest(manifest: dict) -> ChangeMap:
    """Reconstruct the ground-truth change map from object roles alone."""
    w = manifest["params"]["width"]
    h = manifest["params"]["height"]
    truth = np.zeros((h, w), dtype=bool)
    for obj in manifest["objects"]:
        if obj["role"] in ("shape_changed", "removed", "new"):
            truth |= rasterize_shape(obj["shape"], tuple(obj["bbox"]), w, h)
    return ChangeMap(w, h, truth)
