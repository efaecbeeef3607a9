"""Image loading for the adapter.

Binary netpbm files (P5 graymaps, P6 pixmaps) are read natively since the
pipeline already speaks that family; anything else is handed to Pillow
when it is installed. Images come back as (height, width, 3) uint8.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InputError


def _parse_netpbm(data: bytes, source: str) -> np.ndarray:
    magic = data[:2]
    channels = 1 if magic == b"P5" else 3
    pos = 3
    fields = []
    for _ in range(3):
        start = pos
        while pos < len(data) and 0x30 <= data[pos] <= 0x39:
            pos += 1
        if pos == start:
            raise InputError(f"{source}: malformed netpbm header at byte {start}")
        fields.append(int(data[start:pos]))
        pos += 1  # single separator byte
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise InputError(f"{source}: image dimensions are {width}x{height}")
    if maxval not in (255, 65535):
        raise InputError(f"{source}: unsupported maxval {maxval}")
    sample = 2 if maxval == 65535 else 1
    expected = width * height * channels * sample
    body = data[pos:pos + expected]
    if len(body) < expected:
        raise InputError(f"{source}: truncated pixel data")
    dtype = ">u2" if sample == 2 else np.uint8
    arr = np.frombuffer(body, dtype=dtype).reshape(height, width, channels)
    if sample == 2:
        arr = (arr >> 8).astype(np.uint8)
    if channels == 1:
        arr = np.repeat(arr, 3, axis=2)
    return np.ascontiguousarray(arr)


def load_image(path) -> np.ndarray:
    """Read an image file into an RGB uint8 array of shape (h, w, 3)."""
    source = str(path)
    data = Path(path).read_bytes()
    if data[:2] in (b"P5", b"P6"):
        return _parse_netpbm(data, source)
    try:
        from PIL import Image
    except ImportError:
        raise InputError(
            f"{source}: not a binary netpbm file; install Pillow for other "
            f"image formats")
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"{source}: image dimensions are "
                         f"{arr.shape[1]}x{arr.shape[0]}")
    return arr


def save_pixmap(path, rgb: np.ndarray) -> None:
    """Write an RGB uint8 array as a binary P6 pixmap."""
    arr = np.asarray(rgb, dtype=np.uint8)
    h, w, _ = arr.shape
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode("ascii") + arr.tobytes())
