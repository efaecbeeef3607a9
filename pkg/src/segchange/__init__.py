"""Land-cover change detection between class rasters and mask sets.

The map modality arrives as a class raster with a legend; the optical
modality arrives as a set of run-length encoded segmentation masks from an
external promptable segmenter. Connected component labeling turns the
raster into instances, two detection strategies compare the modalities in
that shared segmentation domain, and their fused change map is scored with
overall accuracy, F1, and Cohen's kappa.
"""

from .errors import (
    SegChangeError,
    DimensionError,
    CorruptMaskError,
    EmptyMaskError,
    FormatError,
    LegendError,
    PairingError,
    PlacementError,
    ExportError,
)
from .masks import (
    BinaryMask,
    MaskSet,
    MaskGeometry,
    rle_encode,
    rle_decode,
    intersection_count,
    union_mask,
    difference_mask,
    iou,
    mask_geometry,
)
from .rasters import LabelRaster, Legend, LegendEntry, ChangeMap
from .components import InstanceMap, Instance, label_components
from .noprompt import (
    AggregationParams,
    InstanceVerdict,
    intersecting_masks,
    hierarchical_aggregate,
    detect_changes_noprompt,
)
from .prompting import (
    PromptSpec,
    PromptedResult,
    export_prompts,
    anomaly_extract,
    detect_changes_prompt,
)
from .metrics import MetricsRecord, evaluate, fuse
from .synth import SceneParams, Scene, SplitMix64, generate_scene, truth_from_manifest

__version__ = "0.1.0"

__all__ = [
    "SegChangeError", "DimensionError", "CorruptMaskError", "EmptyMaskError",
    "FormatError", "LegendError", "PairingError", "PlacementError",
    "ExportError",
    "BinaryMask", "MaskSet", "MaskGeometry", "rle_encode", "rle_decode",
    "intersection_count", "union_mask", "difference_mask", "iou",
    "mask_geometry",
    "LabelRaster", "Legend", "LegendEntry", "ChangeMap",
    "InstanceMap", "Instance", "label_components",
    "AggregationParams", "InstanceVerdict", "intersecting_masks",
    "hierarchical_aggregate", "detect_changes_noprompt",
    "PromptSpec", "PromptedResult", "export_prompts", "anomaly_extract",
    "detect_changes_prompt",
    "MetricsRecord", "evaluate", "fuse",
    "SceneParams", "Scene", "SplitMix64", "generate_scene",
    "truth_from_manifest",
    "__version__",
]
