"""Segmenter backends behind one small interface.

`RegionBackend` is the built-in deterministic fallback: it quantizes
colors and treats each connected same-color region as a segment, which is
enough to drive the pipeline on synthetic or flat-colored imagery without
any model weights. `SamBackend` wraps a real promptable segmentation
model; its heavyweight dependencies are imported lazily so the adapter
works without them installed.

A backend provides:
    segment_everything(image) -> list of (bool mask, score in [0, 1])
    segment_prompted(image, box=..., mask=...) -> bool mask
    settings() -> dict recorded in output provenance
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import SetupError


def _find(parent: list[int], x: int) -> int:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _union(parent: list[int], a: int, b: int) -> None:
    ra, rb = _find(parent, a), _find(parent, b)
    if ra < rb:
        parent[rb] = ra
    elif rb < ra:
        parent[ra] = rb


class RegionBackend:
    """Connected same-color regions of the quantized image as segments."""

    name = "region"

    def __init__(self, color_bits: int = 5, min_region_area: int = 16):
        if not 1 <= color_bits <= 8:
            raise ValueError(f"color_bits must be in 1..8, got {color_bits}")
        self.color_bits = color_bits
        self.min_region_area = max(1, min_region_area)

    def settings(self) -> dict:
        return {"color_bits": self.color_bits,
                "min_region_area": self.min_region_area}

    def _keys(self, image: np.ndarray) -> np.ndarray:
        q = (image >> (8 - self.color_bits)).astype(np.int64)
        return (q[:, :, 0] << 16) | (q[:, :, 1] << 8) | q[:, :, 2]

    def _label(self, keys: np.ndarray) -> tuple[np.ndarray, int]:
        # Row-run union-find; flat-colored images compress to few runs.
        h, w = keys.shape
        labels = np.zeros((h, w), dtype=np.int64)
        parent = [0]
        prev_runs: list[tuple[int, int, int, int]] = []
        for y in range(h):
            row = keys[y]
            change = np.flatnonzero(row[1:] != row[:-1]) + 1
            starts = np.concatenate(([0], change)).tolist()
            ends = np.concatenate((change, [w])).tolist()
            cur_runs = []
            pi = 0
            for s, e in zip(starts, ends):
                k = int(row[s])
                lab = 0
                while pi < len(prev_runs) and prev_runs[pi][1] <= s:
                    pi += 1
                pj = pi
                while pj < len(prev_runs) and prev_runs[pj][0] < e:
                    if prev_runs[pj][2] == k:
                        pl = prev_runs[pj][3]
                        if lab == 0:
                            lab = pl
                        elif pl != lab:
                            _union(parent, lab, pl)
                    pj += 1
                if lab == 0:
                    lab = len(parent)
                    parent.append(lab)
                labels[y, s:e] = lab
                cur_runs.append((s, e, k, lab))
            prev_runs = cur_runs

        roots = np.array([_find(parent, p) for p in range(len(parent))])
        resolved = roots[labels]
        order = {}
        flat = resolved.reshape(-1)
        for root in flat.tolist():
            if root not in order:
                order[root] = len(order) + 1
        remap = np.zeros(len(parent), dtype=np.int64)
        for root, idx in order.items():
            remap[root] = idx
        return remap[resolved], len(order)

    def segment_everything(self, image: np.ndarray) -> list[tuple[np.ndarray, float]]:
        keys = self._keys(image)
        labels, count = self._label(keys)
        total = labels.size
        areas = np.bincount(labels.reshape(-1), minlength=count + 1)
        kept = [lab for lab in range(1, count + 1)
                if areas[lab] >= self.min_region_area]
        if not kept:
            kept = [int(np.argmax(areas[1:])) + 1]
        return [(labels == lab, float(areas[lab] / total)) for lab in kept]

    def segment_prompted(self, image: np.ndarray, box=None, mask=None) -> np.ndarray:
        h, w = image.shape[:2]
        if mask is not None:
            region = np.asarray(mask, dtype=bool)
        else:
            x, y, bw, bh = box
            region = np.zeros((h, w), dtype=bool)
            region[max(y, 0):min(y + bh, h), max(x, 0):min(x + bw, w)] = True
        if not region.any():
            return region
        keys = self._keys(image)
        values, counts = np.unique(keys[region], return_counts=True)
        dominant = int(values[np.flatnonzero(counts == counts.max())[0]])
        return region & (keys == dominant)


class SamBackend:
    """Promptable segmentation model loaded from a local checkpoint."""

    name = "sam"

    def __init__(self, checkpoint: str, model_type: str = "vit_h",
                 device: str = "cpu", points_per_side: int = 32,
                 pred_iou_thresh: float = 0.88,
                 stability_score_thresh: float = 0.95):
        self.checkpoint = checkpoint
        self.model_type = model_type
        self.device = device
        self.points_per_side = points_per_side
        self.pred_iou_thresh = pred_iou_thresh
        self.stability_score_thresh = stability_score_thresh
        self._model = None

    def settings(self) -> dict:
        return {
            "checkpoint": str(self.checkpoint),
            "model_type": self.model_type,
            "device": self.device,
            "points_per_side": self.points_per_side,
            "pred_iou_thresh": self.pred_iou_thresh,
            "stability_score_thresh": self.stability_score_thresh,
        }

    def _load(self):
        if self._model is not None:
            return self._model
        try:
            from segment_anything import sam_model_registry
        except ImportError as exc:
            raise SetupError(
                "the sam backend needs the segment-anything and torch "
                "packages installed") from exc
        if not self.checkpoint or not Path(self.checkpoint).is_file():
            raise SetupError(f"model weights not found: {self.checkpoint}")
        model = sam_model_registry[self.model_type](checkpoint=self.checkpoint)
        model.to(self.device)
        self._model = model
        return model

    def segment_everything(self, image: np.ndarray) -> list[tuple[np.ndarray, float]]:
        from segment_anything import SamAutomaticMaskGenerator

        generator = SamAutomaticMaskGenerator(
            self._load(),
            points_per_side=self.points_per_side,
            pred_iou_thresh=self.pred_iou_thresh,
            stability_score_thresh=self.stability_score_thresh,
        )
        records = generator.generate(image)
        return [(rec["segmentation"].astype(bool),
                 float(min(max(rec["predicted_iou"], 0.0), 1.0)))
                for rec in records]

    def segment_prompted(self, image: np.ndarray, box=None, mask=None) -> np.ndarray:
        import numpy as _np
        from segment_anything import SamPredictor

        predictor = SamPredictor(self._load())
        predictor.set_image(image)
        if mask is not None:
            # The prompt encoder wants 256x256 logits; nearest-resample the
            # binary mask and map {0,1} to strong negative/positive logits.
            m = _np.asarray(mask, dtype=_np.float32)
            h, w = m.shape
            ys = (_np.arange(256) * h // 256).clip(0, h - 1)
            xs = (_np.arange(256) * w // 256).clip(0, w - 1)
            lowres = m[_np.ix_(ys, xs)] * 20.0 - 10.0
            out, _, _ = predictor.predict(mask_input=lowres[None, :, :],
                                          multimask_output=False)
        else:
            x, y, bw, bh = box
            out, _, _ = predictor.predict(
                box=_np.array([x, y, x + bw, y + bh]), multimask_output=False)
        return out[0].astype(bool)


def make_backend(name: str, **options) -> RegionBackend | SamBackend:
    if name == "region":
        return RegionBackend(
            color_bits=options.get("color_bits", 5),
            min_region_area=options.get("min_region_area", 16))
    if name == "sam":
        return SamBackend(
            checkpoint=options.get("checkpoint"),
            model_type=options.get("model_type", "vit_h"),
            device=options.get("device", "cpu"),
            points_per_side=options.get("points_per_side", 32),
            pred_iou_thresh=options.get("pred_iou_thresh", 0.88),
            stability_score_thresh=options.get("stability_score_thresh", 0.95))
    raise ValueError(f"unknown backend {name!r}")
