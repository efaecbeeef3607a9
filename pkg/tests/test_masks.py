import numpy as np
import pytest

from segchange import (
    BinaryMask,
    CorruptMaskError,
    DimensionError,
    EmptyMaskError,
    MaskSet,
    difference_mask,
    intersection_count,
    iou,
    mask_geometry,
    rle_decode,
    rle_encode,
    union_mask,
)
from oracles import rle_by_linear_scan


def block(width, height, x, y, w, h, mask_id=0):
    arr = np.zeros((height, width), dtype=bool)
    arr[y:y + h, x:x + w] = True
    return BinaryMask.from_array(arr, mask_id=mask_id)


class TestRleEncode:
    def test_all_zero(self):
        assert rle_encode([0, 0, 0, 0], 2, 2).runs == (4,)

    def test_all_one_leading_zero_run(self):
        assert rle_encode([1, 1, 1, 1], 2, 2).runs == (0, 4)

    def test_mixed_runs_match_linear_scan(self):
        bits = [0, 1, 1, 0, 0, 1]
        assert rle_by_linear_scan(bits) == [1, 2, 2, 1]
        assert rle_encode(bits, 3, 2).runs == (1, 2, 2, 1)

    def test_2d_input(self):
        arr = np.array([[0, 1, 1], [0, 0, 1]], dtype=bool)
        assert rle_encode(arr).runs == (1, 2, 2, 1)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            rle_encode([0, 1, 0], 2, 2)

    def test_flat_needs_dims(self):
        with pytest.raises(DimensionError):
            rle_encode([0, 1, 0, 1])


class TestRleDecode:
    def test_all_zero(self):
        mask = BinaryMask(2, 2, (4,))
        assert rle_decode(mask).ravel().tolist() == [False] * 4

    def test_all_one(self):
        mask = BinaryMask(2, 2, (0, 4))
        assert rle_decode(mask).ravel().tolist() == [True] * 4

    def test_inverse_of_encode_example(self):
        mask = BinaryMask(3, 2, (1, 2, 2, 1))
        assert rle_decode(mask).ravel().astype(int).tolist() == [0, 1, 1, 0, 0, 1]

    def test_corrupt_sum_rejected_at_construction(self):
        with pytest.raises(CorruptMaskError):
            BinaryMask(2, 2, (3,))

    def test_zero_run_only_first(self):
        with pytest.raises(CorruptMaskError):
            BinaryMask(2, 2, (1, 0, 3))

    def test_negative_run(self):
        with pytest.raises(CorruptMaskError):
            BinaryMask(2, 2, (-1, 5))


def test_roundtrip_random_bitvectors():
    rng = np.random.RandomState(7)
    for _ in range(300):
        w = int(rng.randint(1, 65))
        h = int(rng.randint(1, 65))
        bits = rng.rand(h, w) < rng.rand()
        mask = rle_encode(bits)
        assert np.array_equal(rle_decode(mask), bits)
        # re-encoding the decoded bits reproduces the canonical runs
        assert rle_encode(rle_decode(mask)).runs == mask.runs


class TestAlgebra:
    def test_iou_identity(self):
        m = block(4, 4, 1, 1, 2, 2)
        assert iou(m, m) == 1.0

    def test_disjoint_halves(self):
        left = block(4, 4, 0, 0, 2, 4)
        right = block(4, 4, 2, 0, 2, 4)
        assert intersection_count(left, right) == 0
        assert iou(left, right) == 0.0

    def test_block_vs_column(self):
        # a = 2x2 block at (0,0), b = 1-wide 2-tall column at (0,0):
        # intersection 2 pixels, union 4 pixels
        a = block(4, 4, 0, 0, 2, 2)
        b = block(4, 4, 0, 0, 1, 2)
        assert intersection_count(a, b) == 2
        assert iou(a, b) == pytest.approx(2 / 4)

    def test_iou_both_empty(self):
        a = BinaryMask.empty(3, 3)
        b = BinaryMask.empty(3, 3)
        assert iou(a, b) == 0.0

    def test_union_and_difference(self):
        a = block(4, 4, 0, 0, 2, 2)
        b = block(4, 4, 1, 1, 2, 2)
        assert union_mask(a, b).area == 7
        assert difference_mask(a, b).area == 3
        assert difference_mask(b, a).area == 3

    def test_dimension_mismatch(self):
        a = block(4, 4, 0, 0, 2, 2)
        b = block(5, 4, 0, 0, 2, 2)
        for op in (intersection_count, union_mask, difference_mask, iou):
            with pytest.raises(DimensionError):
                op(a, b)

    def test_set_algebra_consistency_random(self):
        rng = np.random.RandomState(11)
        for _ in range(200):
            w = int(rng.randint(1, 33))
            h = int(rng.randint(1, 33))
            a = rle_encode(rng.rand(h, w) < 0.4)
            b = rle_encode(rng.rand(h, w) < 0.4)
            assert union_mask(a, b).area == (
                a.area + b.area - intersection_count(a, b))
            assert iou(a, b) == iou(b, a)
            assert 0.0 <= iou(a, b) <= 1.0
            if a.area:
                assert iou(a, a) == 1.0


class TestGeometry:
    def test_full_square(self):
        geo = mask_geometry(block(3, 3, 0, 0, 3, 3))
        assert geo.area == 9
        assert geo.bbox == (0, 0, 3, 3)
        assert geo.centroid == (1.0, 1.0)
        assert geo.aspect_ratio == 1.0

    def test_single_pixel(self):
        geo = mask_geometry(block(4, 4, 2, 1, 1, 1))
        assert geo.area == 1
        assert geo.bbox == (2, 1, 1, 1)
        assert geo.centroid == (2.0, 1.0)

    def test_horizontal_strip(self):
        geo = mask_geometry(block(4, 4, 0, 0, 3, 1))
        assert geo.area == 3
        assert geo.bbox == (0, 0, 3, 1)
        assert geo.aspect_ratio == 3.0

    def test_empty_mask_raises(self):
        empty = BinaryMask.empty(4, 4)
        assert empty.area == 0
        with pytest.raises(EmptyMaskError):
            mask_geometry(empty)


class TestMaskSet:
    def test_dimension_check(self):
        with pytest.raises(DimensionError):
            MaskSet(4, 4, (block(5, 4, 0, 0, 1, 1),))

    def test_unique_ids(self):
        with pytest.raises(ValueError):
            MaskSet(4, 4, (block(4, 4, 0, 0, 1, 1, mask_id=1),
                           block(4, 4, 1, 1, 1, 1, mask_id=1)))

    def test_get(self):
        ms = MaskSet(4, 4, (block(4, 4, 0, 0, 1, 1, mask_id=3),))
        assert ms.get(3).area == 1
        with pytest.raises(KeyError):
            ms.get(4)
