"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings. Budgets are wall-clock on the machine running the
suite.
"""

import time

import numpy as np

from segchange import (
    AggregationParams,
    BinaryMask,
    ChangeMap,
    LabelRaster,
    MaskSet,
    MetricsRecord,
    SceneParams,
    anomaly_extract,
    detect_changes_noprompt,
    detect_changes_prompt,
    evaluate,
    fileio,
    generate_scene,
    intersecting_masks,
    intersection_count,
    iou,
    label_components,
    rle_decode,
    rle_encode,
)
from segchange.cli import main as cli_main
from segchange.prompting import PromptedResult
from oracles import canonical_labels, flood_partition

PASS = "[PASS]"


def test_ccl_oracle_equivalence():
    """200 seeded random rasters, both connectivities, zero mismatches."""
    started = time.perf_counter()
    rng = np.random.RandomState(1001)
    for trial in range(200):
        w = int(rng.randint(1, 65))
        h = int(rng.randint(1, 65))
        n_classes = int(rng.randint(1, 9))
        codes = rng.randint(0, n_classes, size=(h, w)).astype(np.uint16)
        connectivity = 4 if trial % 2 == 0 else 8
        imap, instances = label_components(
            LabelRaster.from_array(codes), connectivity, min_area=1)
        oracle = canonical_labels(flood_partition(codes, connectivity))
        assert np.array_equal(imap.labels.astype(np.int64), oracle), (
            f"partition mismatch on trial {trial}")
        assert imap.n_instances == len(instances)
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"took {elapsed:.2f}s, budget 5s"
    print(f"{PASS} CCL oracle equivalence: 200/200 rasters, {elapsed:.2f}s")


def test_rle_and_file_roundtrips():
    """1000 random masks and 100 random rasters round-trip bit-exactly."""
    started = time.perf_counter()
    rng = np.random.RandomState(1002)
    for _ in range(1000):
        w = int(rng.randint(1, 65))
        h = int(rng.randint(1, 65))
        bits = rng.rand(h, w) < rng.rand()
        mask = rle_encode(bits)
        assert np.array_equal(rle_decode(mask), bits)
        assert rle_encode(rle_decode(mask)).runs == mask.runs
    for _ in range(100):
        w = int(rng.randint(1, 65))
        h = int(rng.randint(1, 65))
        raster = LabelRaster.from_array(
            rng.randint(0, 65536, size=(h, w)).astype(np.uint16))
        data = fileio.encode_label_raster(raster)
        assert fileio.decode_label_raster(data) == raster
        assert fileio.encode_label_raster(fileio.decode_label_raster(data)) == data
        cmap = ChangeMap.from_array(rng.rand(h, w) < 0.5)
        cdata = fileio.encode_change_map(cmap)
        assert fileio.decode_change_map(cdata) == cmap
        assert fileio.encode_change_map(fileio.decode_change_map(cdata)) == cdata
    elapsed = time.perf_counter() - started
    assert elapsed < 2.0, f"took {elapsed:.2f}s, budget 2s"
    print(f"{PASS} RLE and file round-trips: 1000 masks + 100 rasters, "
          f"{elapsed:.2f}s")


def test_metric_oracle():
    """Hand-computed confusion matrix values within 1e-6; guards exact."""
    rec = MetricsRecord.from_counts(tp=2, fp=1, fn=1, tn=6)
    assert abs(rec.oa - 0.8) <= 1e-6
    assert abs(rec.f1 - 0.666667) <= 1e-6
    assert abs(rec.kc - 0.523810) <= 1e-6
    zero = ChangeMap.zeros(4, 4)
    degenerate = evaluate(zero, zero)
    assert degenerate.f1 == 0.0
    assert degenerate.kc == 0.0
    print(f"{PASS} metric oracle: oa={rec.oa:.6f} f1={rec.f1:.6f} "
          f"kc={rec.kc:.6f}, degenerate guards exact")


def _strategy1_scene(seed: int, boundary_noise: int):
    params = SceneParams(
        seed=seed, width=128, height=128, n_objects=8,
        change_fractions=(0.2, 0.2, 0.0), split_k=seed % 4 + 1,
        boundary_noise=boundary_noise)
    scene = generate_scene(params)
    _, instances = label_components(scene.raster, connectivity=4, min_area=1,
                                    ignore_codes={1})
    roles = {obj["instance_id"]: obj["role"]
             for obj in scene.manifest["objects"]
             if obj["instance_id"] is not None}
    return scene, instances, roles


def test_strategy1_clean_scenes_exact():
    """Verdicts equal manifest roles on 20 clean scenes (instance F1 = 1)."""
    started = time.perf_counter()
    params = AggregationParams(overlap_threshold=0.5)
    for seed in range(20):
        scene, instances, roles = _strategy1_scene(seed, boundary_noise=0)
        _, verdicts = detect_changes_noprompt(instances, scene.mask_set, params)
        tp = fp = fn = 0
        for verdict in verdicts:
            truly_changed = roles[verdict.instance_id] != "unchanged"
            assert verdict.changed == truly_changed, (
                f"seed {seed}, instance {verdict.instance_id}: verdict "
                f"{verdict.changed} vs role {roles[verdict.instance_id]}")
            tp += verdict.changed and truly_changed
            fp += verdict.changed and not truly_changed
            fn += truly_changed and not verdict.changed
        assert 2 * tp / (2 * tp + fp + fn) == 1.0
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"took {elapsed:.2f}s, budget 10s"
    print(f"{PASS} strategy 1 on clean scenes: 20/20 seeds at instance "
          f"F1=1.0, {elapsed:.2f}s")


def test_strategy1_noisy_scenes_robust():
    """Pixel-level F1 >= 0.90 on every boundary_noise=2 scene."""
    started = time.perf_counter()
    params = AggregationParams(overlap_threshold=0.5)
    worst = 1.0
    for seed in range(20):
        scene, instances, _ = _strategy1_scene(seed, boundary_noise=2)
        cmap, _ = detect_changes_noprompt(instances, scene.mask_set, params)
        record = evaluate(cmap, scene.truth)
        worst = min(worst, record.f1)
        assert record.f1 >= 0.90, f"seed {seed}: pixel F1 {record.f1:.4f}"
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"took {elapsed:.2f}s, budget 10s"
    print(f"{PASS} strategy 1 on noisy scenes: 20/20 seeds, worst pixel "
          f"F1={worst:.4f}, {elapsed:.2f}s")


def test_strategy2_exact_new_object_recovery():
    """Emerging objects recovered exactly from oracle prompted results."""
    started = time.perf_counter()
    for seed in range(20):
        scene = generate_scene(SceneParams(
            seed=1000 + seed, width=128, height=128, n_objects=6,
            change_fractions=(0.0, 0.0, 0.5), split_k=2, boundary_noise=0))
        _, instances = label_components(scene.raster, connectivity=4,
                                        min_area=1)
        cmap, warnings = detect_changes_prompt(
            instances, list(scene.prompted_results), scene.legend,
            min_blob_area=16)
        assert warnings == []
        assert cmap == scene.truth, f"seed {seed}: change map != truth"
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"took {elapsed:.2f}s, budget 5s"
    print(f"{PASS} strategy 2 exactness: 20/20 seeds recovered new objects "
          f"exactly, {elapsed:.2f}s")


def _run_pipeline(tmp_path, tag: str, workers: int) -> dict[str, bytes]:
    base = tmp_path / tag
    scene = base / "scene"
    outputs = {
        "objects": base / "objects.json",
        "all": base / "all.json",
        "cm1": base / "strategy1.pgm",
        "verdicts": base / "verdicts.csv",
        "cm2": base / "strategy2.pgm",
        "fused": base / "fused.pgm",
        "metrics": base / "metrics.csv",
    }
    steps = [
        ["synth", "--seed", "7", "-o", str(scene), "--objects", "8",
         "--change-fractions", "0.2,0.2,0.1", "--split-k", "3",
         "--boundary-noise", "1"],
        ["ccl", str(scene / "map.pgm"), "-o", str(outputs["objects"]),
         "--min-area", "1", "--ignore-codes", "1"],
        ["ccl", str(scene / "map.pgm"), "-o", str(outputs["all"]),
         "--min-area", "1"],
        ["detect-noprompt", str(outputs["objects"]), str(scene / "masks.json"),
         "-o", str(outputs["cm1"]), "--verdicts", str(outputs["verdicts"]),
         "--workers", str(workers)],
        ["detect-prompt", str(outputs["all"]), str(scene / "results.json"),
         str(scene / "legend.txt"), "-o", str(outputs["cm2"]),
         "--workers", str(workers)],
        ["fuse", str(outputs["cm1"]), str(outputs["cm2"]), str(outputs["fused"])],
        ["eval", str(outputs["fused"]), str(scene / "truth.pgm"),
         "-o", str(outputs["metrics"]), "--dataset", "seed7"],
    ]
    for argv in steps:
        assert cli_main(argv) == 0, f"step failed: {argv}"
    collected = {name: path.read_bytes() for name, path in outputs.items()}
    collected["manifest"] = (scene / "manifest.json").read_bytes()
    return collected


def test_pipeline_fusion_determinism(tmp_path):
    """Seed-7 chain is byte-identical across runs and worker counts."""
    runs = [
        _run_pipeline(tmp_path, "run1", workers=1),
        _run_pipeline(tmp_path, "run2", workers=1),
        _run_pipeline(tmp_path, "run3", workers=1),
        _run_pipeline(tmp_path, "run4", workers=4),
    ]
    reference = runs[0]
    for i, other in enumerate(runs[1:], start=2):
        for name, data in reference.items():
            assert other[name] == data, f"run {i} differs in {name}"
    metrics_line = reference["metrics"].decode().splitlines()[1]
    print(f"{PASS} pipeline determinism: 3 runs and 1-vs-4 workers byte-"
          f"identical; metrics: {metrics_line}")


def test_invariant_suites_500_cases_each():
    """IoU bounds/symmetry, monotone merges, support containment,
    blob-area monotonicity, 500 random cases each."""
    rng = np.random.RandomState(1008)

    for _ in range(500):
        w = int(rng.randint(1, 33))
        h = int(rng.randint(1, 33))
        a = rle_encode(rng.rand(h, w) < rng.rand(), mask_id=1)
        b = rle_encode(rng.rand(h, w) < rng.rand(), mask_id=2)
        ab = iou(a, b)
        assert 0.0 <= ab <= 1.0
        assert ab == iou(b, a)
        if a.area:
            assert iou(a, a) == 1.0

    checked = 0
    while checked < 500:
        w = int(rng.randint(8, 25))
        h = int(rng.randint(8, 25))
        grid = (rng.rand(h, w) < 0.45).astype(np.uint16)
        _, instances = label_components(LabelRaster.from_array(grid), 4,
                                        min_area=1, ignore_codes={0})
        masks = MaskSet(w, h, tuple(
            rle_encode(rng.rand(h, w) < rng.uniform(0.05, 0.5), mask_id=k + 1)
            for k in range(4)))
        for inst in instances:
            order = intersecting_masks(inst, masks, 1)
            merged = np.zeros((h, w), dtype=bool)
            previous = -1
            for mid in order:
                merged |= masks.get(mid).to_array()
                inter = intersection_count(BinaryMask.from_array(merged),
                                           inst.mask)
                assert inter >= previous
                previous = inter
            checked += 1

    for _ in range(500):
        w = int(rng.randint(8, 25))
        h = int(rng.randint(8, 25))
        grid = (rng.rand(h, w) < 0.4).astype(np.uint16)
        _, instances = label_components(LabelRaster.from_array(grid), 4,
                                        min_area=1, ignore_codes={0})
        masks = MaskSet(w, h, tuple(
            rle_encode(rng.rand(h, w) < 0.3, mask_id=k + 1) for k in range(3)))
        cmap, _ = detect_changes_noprompt(
            instances, masks, AggregationParams(min_intersection=1))
        support = np.zeros((h, w), dtype=bool)
        for inst in instances:
            support |= inst.mask.to_array()
        assert not np.any(cmap.changed & ~support)

    for _ in range(500):
        w = int(rng.randint(8, 25))
        h = int(rng.randint(8, 25))
        arr = np.zeros((h, w), dtype=bool)
        arr[1:h - 1, 1:w - 1] = True
        inst_mask = BinaryMask.from_array(arr, mask_id=1)
        from segchange import Instance
        inst = Instance.from_mask(inst_mask, class_code=1)
        seg = rng.rand(h, w) < rng.uniform(0.3, 0.9)
        res = PromptedResult(instance_id=1,
                             segmented=BinaryMask.from_array(seg, mask_id=1))
        areas = [anomaly_extract(inst, res, m).area for m in (1, 2, 4, 8)]
        assert areas == sorted(areas, reverse=True)

    print(f"{PASS} invariant suites: 500 cases each for IoU, monotone "
          f"merges, change support, blob-area monotonicity")
