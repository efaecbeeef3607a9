"""Binary masks: run-length codec, set algebra, and shape attributes.

Masks are stored run-length encoded over a row-major pixel scan. The runs
alternate between zero-runs and one-runs and always start with a zero-run,
which is the only run allowed to have length zero. This keeps the encoding
canonical: every bit pattern has exactly one valid run list.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptMaskError, DimensionError, EmptyMaskError

__all__ = [
    "BinaryMask",
    "MaskSet",
    "MaskGeometry",
    "rle_encode",
    "rle_decode",
    "intersection_count",
    "union_mask",
    "difference_mask",
    "iou",
    "mask_geometry",
]


@dataclass(frozen=True)
class BinaryMask:
    """One run-length encoded binary mask on a width x height pixel grid."""

    width: int
    height: int
    runs: tuple[int, ...]
    id: int = 0
    score: float = 1.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DimensionError(
                f"mask dimensions must be positive, got {self.width}x{self.height}")
        runs = tuple(int(r) for r in self.runs)
        object.__setattr__(self, "runs", runs)
        if not runs:
            raise CorruptMaskError("run list is empty")
        for i, r in enumerate(runs):
            if r < 0:
                raise CorruptMaskError(f"run {i} is negative ({r})")
            if r == 0 and i != 0:
                raise CorruptMaskError(f"run {i} has length 0 (only the first may)")
        total = sum(runs)
        if total != self.width * self.height:
            raise CorruptMaskError(
                f"runs sum to {total}, expected {self.width * self.height} "
                f"for {self.width}x{self.height}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")

    @property
    def area(self) -> int:
        """Number of set pixels (defined for empty masks too)."""
        return sum(self.runs[1::2])

    @classmethod
    def from_array(cls, bits, *, mask_id: int = 0, score: float = 1.0) -> "BinaryMask":
        """Encode a 2-D boolean array (shape (height, width))."""
        arr = np.asarray(bits)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got ndim={arr.ndim}")
        h, w = arr.shape
        return rle_encode(arr, w, h, mask_id=mask_id, score=score)

    @classmethod
    def empty(cls, width: int, height: int, *, mask_id: int = 0) -> "BinaryMask":
        return cls(width, height, (width * height,), id=mask_id)

    def to_array(self) -> np.ndarray:
        """Decode to a boolean array of shape (height, width)."""
        return rle_decode(self)


def rle_encode(bits, width: int | None = None, height: int | None = None, *,
               mask_id: int = 0, score: float = 1.0) -> BinaryMask:
    """Run-length encode a row-major bitvector.

    `bits` may be a 2-D array of shape (height, width), in which case the
    dimensions are taken from the shape, or a flat sequence together with
    explicit `width` and `height`.
    """
    arr = np.asarray(bits)
    if arr.ndim == 2:
        h, w = arr.shape
        if width is not None and width != w or height is not None and height != h:
            raise DimensionError(
                f"array shape {w}x{h} does not match declared {width}x{height}")
        width, height = w, h
    elif arr.ndim == 1:
        if width is None or height is None:
            raise DimensionError("flat bitvector needs explicit width and height")
        if arr.size != width * height:
            raise DimensionError(
                f"bitvector length {arr.size} != {width}x{height}")
    else:
        raise DimensionError(f"expected 1-D or 2-D input, got ndim={arr.ndim}")

    flat = arr.reshape(-1).astype(bool)
    n = flat.size
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [n]))
    runs = np.diff(bounds)
    if flat[0]:
        runs = np.concatenate(([0], runs))
    return BinaryMask(width, height, tuple(int(r) for r in runs),
                      id=mask_id, score=score)


def rle_decode(mask: BinaryMask) -> np.ndarray:
    """Decode a mask to a boolean array of shape (height, width)."""
    runs = np.asarray(mask.runs, dtype=np.int64)
    total = int(runs.sum())
    if total != mask.width * mask.height:
        raise CorruptMaskError(
            f"runs sum to {total}, expected {mask.width * mask.height}")
    values = np.arange(runs.size, dtype=np.int64) % 2
    flat = np.repeat(values, runs).astype(bool)
    return flat.reshape(mask.height, mask.width)


@dataclass(frozen=True)
class MaskSet:
    """A collection of masks sharing one pixel grid, with unique ids."""

    width: int
    height: int
    masks: tuple[BinaryMask, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DimensionError(
                f"mask set dimensions must be positive, got {self.width}x{self.height}")
        object.__setattr__(self, "masks", tuple(self.masks))
        seen = set()
        for m in self.masks:
            if m.width != self.width or m.height != self.height:
                raise DimensionError(
                    f"mask {m.id} is {m.width}x{m.height}, set is "
                    f"{self.width}x{self.height}")
            if m.id in seen:
                raise ValueError(f"duplicate mask id {m.id}")
            seen.add(m.id)

    def get(self, mask_id: int) -> BinaryMask:
        for m in self.masks:
            if m.id == mask_id:
                return m
        raise KeyError(f"no mask with id {mask_id}")

    def __len__(self) -> int:
        return len(self.masks)

    def __iter__(self):
        return iter(self.masks)


def _require_same_dims(a: BinaryMask, b: BinaryMask) -> None:
    if a.width != b.width or a.height != b.height:
        raise DimensionError(
            f"mask {a.id} is {a.width}x{a.height} but mask {b.id} is "
            f"{b.width}x{b.height}")


def intersection_count(a: BinaryMask, b: BinaryMask) -> int:
    """|A intersect B| in pixels."""
    _require_same_dims(a, b)
    return int(np.count_nonzero(a.to_array() & b.to_array()))


def union_mask(a: BinaryMask, b: BinaryMask, *, mask_id: int | None = None) -> BinaryMask:
    """Mask of A union B. The result takes a's id unless overridden."""
    _require_same_dims(a, b)
    return BinaryMask.from_array(a.to_array() | b.to_array(),
                                 mask_id=a.id if mask_id is None else mask_id)


def difference_mask(a: BinaryMask, b: BinaryMask, *, mask_id: int | None = None) -> BinaryMask:
    """Mask of A minus B. The result takes a's id unless overridden."""
    _require_same_dims(a, b)
    return BinaryMask.from_array(a.to_array() & ~b.to_array(),
                                 mask_id=a.id if mask_id is None else mask_id)


def iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union; 0.0 when both masks are empty."""
    _require_same_dims(a, b)
    arr_a = a.to_array()
    arr_b = b.to_array()
    inter = int(np.count_nonzero(arr_a & arr_b))
    union = int(np.count_nonzero(arr_a | arr_b))
    if union == 0:
        return 0.0
    return inter / union


@dataclass(frozen=True)
class MaskGeometry:
    """Shape attributes of a nonempty mask."""

    area: int
    bbox: tuple[int, int, int, int]  # (x, y, w, h), tightest axis-aligned box
    centroid: tuple[float, float]    # fractional (x, y), mean of set pixels
    aspect_ratio: float              # bbox w / bbox h


def mask_geometry(mask: BinaryMask) -> MaskGeometry:
    """Area, bounding box, centroid, and aspect ratio of a mask.

    Raises EmptyMaskError for empty masks; only `BinaryMask.area` is
    defined there.
    """
    ys, xs = np.nonzero(mask.to_array())
    if xs.size == 0:
        raise EmptyMaskError(f"mask {mask.id} has no set pixels")
    x0 = int(xs.min())
    y0 = int(ys.min())
    bw = int(xs.max()) - x0 + 1
    bh = int(ys.max()) - y0 + 1
    return MaskGeometry(
        area=int(xs.size),
        bbox=(x0, y0, bw, bh),
        centroid=(float(xs.mean()), float(ys.mean())),
        aspect_ratio=bw / bh,
    )
