"""Grid types for the map modality: class rasters, legends, change maps.

All types are immutable after construction; the backing numpy arrays are
copied in and marked read-only, so values can be shared freely across
workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, LegendError

__all__ = ["LabelRaster", "Legend", "LegendEntry", "ChangeMap"]

MAX_CLASS_CODE = 0xFFFF


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = arr.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class LabelRaster:
    """A 2-D grid of land-cover class codes (row-major, unsigned 16-bit)."""

    width: int
    height: int
    pixels: np.ndarray  # uint16, shape (height, width)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DimensionError(
                f"raster dimensions must be positive, got {self.width}x{self.height}")
        arr = np.asarray(self.pixels)
        if arr.shape != (self.height, self.width):
            raise DimensionError(
                f"pixel array shape {arr.shape} != ({self.height}, {self.width})")
        if arr.dtype != np.uint16:
            if arr.size and (arr.min() < 0 or arr.max() > MAX_CLASS_CODE):
                raise ValueError("class codes must fit in unsigned 16 bits")
            arr = arr.astype(np.uint16)
        object.__setattr__(self, "pixels", _freeze(arr))

    @classmethod
    def from_array(cls, pixels) -> "LabelRaster":
        arr = np.asarray(pixels)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got ndim={arr.ndim}")
        h, w = arr.shape
        return cls(w, h, arr)

    def class_codes(self) -> set[int]:
        """Distinct class codes present in the raster."""
        return {int(c) for c in np.unique(self.pixels)}

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelRaster):
            return NotImplemented
        return (self.width == other.width and self.height == other.height
                and np.array_equal(self.pixels, other.pixels))


@dataclass(frozen=True)
class LegendEntry:
    code: int
    name: str
    is_background: bool


@dataclass(frozen=True)
class Legend:
    """Maps class codes to names and flags the background classes."""

    entries: tuple[LegendEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise LegendError("legend must have at least one entry")
        codes = [e.code for e in self.entries]
        if len(set(codes)) != len(codes):
            raise LegendError("legend codes must be unique")

    def __contains__(self, code: int) -> bool:
        return any(e.code == code for e in self.entries)

    def is_background(self, code: int) -> bool:
        for e in self.entries:
            if e.code == code:
                return e.is_background
        raise LegendError(f"class code {code} not in legend")

    @property
    def background_codes(self) -> frozenset[int]:
        return frozenset(e.code for e in self.entries if e.is_background)

    def check_covers(self, raster: LabelRaster) -> None:
        """Raise LegendError if the raster uses a code the legend lacks."""
        missing = raster.class_codes() - {e.code for e in self.entries}
        if missing:
            raise LegendError(
                f"raster uses class codes missing from legend: {sorted(missing)}")


@dataclass(frozen=True, eq=False)
class ChangeMap:
    """Binary per-pixel changed/unchanged raster."""

    width: int
    height: int
    changed: np.ndarray  # bool, shape (height, width)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DimensionError(
                f"change map dimensions must be positive, got {self.width}x{self.height}")
        arr = np.asarray(self.changed)
        if arr.shape != (self.height, self.width):
            raise DimensionError(
                f"change array shape {arr.shape} != ({self.height}, {self.width})")
        object.__setattr__(self, "changed", _freeze(arr.astype(bool)))

    @classmethod
    def from_array(cls, changed) -> "ChangeMap":
        arr = np.asarray(changed)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got ndim={arr.ndim}")
        h, w = arr.shape
        return cls(w, h, arr)

    @classmethod
    def zeros(cls, width: int, height: int) -> "ChangeMap":
        return cls(width, height, np.zeros((height, width), dtype=bool))

    @property
    def changed_count(self) -> int:
        return int(np.count_nonzero(self.changed))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ChangeMap):
            return NotImplemented
        return (self.width == other.width and self.height == other.height
                and np.array_equal(self.changed, other.changed))
