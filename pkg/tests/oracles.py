"""Independent reference implementations used to cross-check the library.

These stay deliberately naive (stack-based flood fill, brute-force set
arithmetic) and share no code with the package under test.
"""

import numpy as np


def flood_partition(codes: np.ndarray, connectivity: int) -> np.ndarray:
    """Label every same-class connected component by flood fill."""
    h, w = codes.shape
    labels = np.zeros((h, w), dtype=np.int64)
    if connectivity == 4:
        steps = ((0, -1), (0, 1), (-1, 0), (1, 0))
    else:
        steps = ((0, -1), (0, 1), (-1, 0), (1, 0),
                 (-1, -1), (-1, 1), (1, -1), (1, 1))
    nxt = 1
    for y0 in range(h):
        for x0 in range(w):
            if labels[y0, x0]:
                continue
            c = codes[y0, x0]
            labels[y0, x0] = nxt
            stack = [(y0, x0)]
            while stack:
                y, x = stack.pop()
                for dy, dx in steps:
                    ny, nx = y + dy, x + dx
                    if (0 <= ny < h and 0 <= nx < w
                            and not labels[ny, nx] and codes[ny, nx] == c):
                        labels[ny, nx] = nxt
                        stack.append((ny, nx))
            nxt += 1
    return labels


def suppress_and_renumber(labels: np.ndarray, codes: np.ndarray,
                          min_area: int, ignore_codes) -> np.ndarray:
    """Zero out ignored/small components, renumber survivors in scan order."""
    out = np.zeros_like(labels)
    flat_labels = labels.ravel().tolist()
    flat_codes = codes.ravel().tolist()
    flat_out = out.ravel()
    sizes = {}
    for lab in flat_labels:
        sizes[lab] = sizes.get(lab, 0) + 1
    ignore = set(int(c) for c in ignore_codes)
    mapping = {}
    for i, lab in enumerate(flat_labels):
        if flat_codes[i] in ignore or sizes[lab] < min_area:
            continue
        if lab not in mapping:
            mapping[lab] = len(mapping) + 1
        flat_out[i] = mapping[lab]
    return out


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Renumber nonzero labels by first occurrence in scan order."""
    out = np.zeros_like(labels)
    mapping = {}
    flat_in = labels.ravel().tolist()
    flat_out = out.ravel()
    for i, v in enumerate(flat_in):
        if v == 0:
            continue
        if v not in mapping:
            mapping[v] = len(mapping) + 1
        flat_out[i] = mapping[v]
    return out


def chebyshev_dilate(arr: np.ndarray, radius: int) -> np.ndarray:
    """Brute-force dilation with a (2r+1) square structuring element."""
    out = arr.copy()
    h, w = arr.shape
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            shifted = np.zeros_like(arr)
            ys = slice(max(dy, 0), min(h + dy, h))
            yt = slice(max(-dy, 0), min(h - dy, h))
            xs = slice(max(dx, 0), min(w + dx, w))
            xt = slice(max(-dx, 0), min(w - dx, w))
            shifted[yt, xt] = arr[ys, xs]
            out |= shifted
    return out


def rle_by_linear_scan(flat_bits) -> list[int]:
    """Reference RLE: walk the bits, counting alternating runs."""
    runs = []
    current = 0
    count = 0
    for bit in flat_bits:
        b = 1 if bit else 0
        if b == current:
            count += 1
        else:
            runs.append(count)
            current = b
            count = 1
    runs.append(count)
    return runs
