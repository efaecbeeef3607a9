"""Run-length coding matching the pipeline's mask interchange convention:
row-major scan, alternating zero-runs and one-runs, leading zero-run
(possibly of length 0)."""

from __future__ import annotations

import numpy as np


def encode_runs(bits: np.ndarray) -> list[int]:
    flat = np.asarray(bits, dtype=bool).reshape(-1)
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds)
    if flat[0]:
        runs = np.concatenate(([0], runs))
    return [int(r) for r in runs]


def decode_runs(runs: list[int], width: int, height: int) -> np.ndarray:
    total = sum(runs)
    if total != width * height:
        raise ValueError(f"runs sum to {total}, expected {width * height}")
    values = np.arange(len(runs), dtype=np.int64) % 2
    return np.repeat(values, runs).astype(bool).reshape(height, width)
