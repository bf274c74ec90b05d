import math

import numpy as np
from django.test import SimpleTestCase

from tracking.exceptions import GeometryError
from tracking.geometry import (
    BBox, LengthMode, SpatialMode, enclosing_box, giou, giou_flagged, iou, modulated_giou,
    modulated_giou_flagged, modulation_ratio, spatial_distance, spatial_distance_array,
    spatial_modulation,
)

STEP = 0.05
GRID = 160


def _raster(cells):
    left, top, width, height = cells
    mask = np.zeros((GRID, GRID), dtype=bool)
    mask[top:top + height, left:left + width] = True
    return mask


def _raster_overlaps(a_cells, b_cells):
    """
    IoU and GIoU counted cell by cell on a 0.05 px grid.
    """
    a, b = _raster(a_cells), _raster(b_cells)
    inter = np.logical_and(a, b).sum()
    union = np.logical_or(a, b).sum()
    rows = np.flatnonzero(np.logical_or(a, b).any(axis=1))
    cols = np.flatnonzero(np.logical_or(a, b).any(axis=0))
    hull = (rows[-1] - rows[0] + 1) * (cols[-1] - cols[0] + 1)
    value = inter / union
    return value, value - (hull - union) / hull


def _box(cells):
    return BBox(*(c * STEP for c in cells))


class BBoxTests(SimpleTestCase):

    def test_negative_size_rejected(self):
        with self.assertRaises(GeometryError):
            BBox(0, 0, -1, 2)

    def test_non_finite_rejected(self):
        with self.assertRaises(GeometryError):
            BBox(math.nan, 0, 1, 1)

    def test_helpers(self):
        box = BBox(10, 20, 30, 40)
        self.assertEqual(box.center, (25.0, 40.0))
        self.assertEqual(box.as_xyxy(), (10, 20, 40, 60))
        self.assertEqual(box.area, 1200)
        self.assertEqual(BBox.from_center(25, 40, 30, 40), box)

    def test_enclosing_box(self):
        hull = enclosing_box(BBox(0, 0, 2, 2), BBox(5, 1, 1, 4))
        self.assertEqual(hull.as_xyxy(), (0, 0, 6, 5))


class OverlapExamplesTests(SimpleTestCase):

    def test_iou_examples(self):
        a = BBox(0, 0, 2, 2)
        self.assertAlmostEqual(iou(a, a), 1.0, places=9)
        self.assertEqual(iou(a, BBox(10, 10, 2, 2)), 0.0)
        self.assertAlmostEqual(iou(a, BBox(1, 1, 2, 2)), 1 / 7, places=9)

    def test_giou_examples(self):
        a = BBox(0, 0, 2, 2)
        self.assertAlmostEqual(giou(a, a), 1.0, places=9)
        self.assertAlmostEqual(giou(a, BBox(1, 1, 2, 2)), 1 / 7 - 2 / 9, places=9)
        self.assertAlmostEqual(giou(a, BBox(1, 1, 2, 2)), -5 / 63, places=9)

    def test_giou_far_boxes_approach_minus_one(self):
        value = giou(BBox(0, 0, 1, 1), BBox(1e6, 0, 1, 1))
        self.assertAlmostEqual(value, -1.0, places=5)
        self.assertGreaterEqual(value, -1.0)

    def test_modulated_giou_examples(self):
        a = BBox(0, 0, 2, 2)
        self.assertAlmostEqual(modulated_giou(a, a), 0.0, places=9)
        self.assertAlmostEqual(modulated_giou(a, BBox(1, 1, 2, 2), LengthMode.DIAG), 68 / 63, places=9)
        nested = modulated_giou(BBox(0, 0, 4, 2), BBox(0, 0, 2, 2), LengthMode.WIDTH)
        self.assertAlmostEqual(nested, 0.75, places=9)

    def test_modulation_ratio_modes(self):
        a, b = BBox(0, 0, 4, 2), BBox(0, 0, 2, 3)
        self.assertAlmostEqual(modulation_ratio(a, b, 'width').value, 0.5)
        self.assertAlmostEqual(modulation_ratio(a, b, 'height').value, 2 / 3)
        self.assertAlmostEqual(modulation_ratio(a, b, 'diag').value, math.hypot(2, 3) / math.hypot(4, 2))
        self.assertEqual(modulation_ratio(a, b, 'none').value, 1.0)

    def test_none_mode_is_plain_giou_distance(self):
        a, b = BBox(0, 0, 4, 2), BBox(3, 1, 2, 3)
        self.assertAlmostEqual(modulated_giou(a, b, LengthMode.NONE), 1 - giou(a, b), places=12)

    def test_spatial_modulation_examples(self):
        self.assertAlmostEqual(spatial_modulation(0.0, 0.525), 0.525)
        self.assertEqual(spatial_modulation(2.0, 0.1), 1.0)
        self.assertAlmostEqual(spatial_modulation(1.0, 0.1), 0.6)

    def test_spatial_modulation_rejects_negative_offset(self):
        with self.assertRaises(ValueError):
            spatial_modulation(0.5, -0.1)

    def test_spatial_distance_dispatch(self):
        a, b = BBox(0, 0, 2, 2), BBox(1, 1, 2, 2)
        self.assertAlmostEqual(spatial_distance(a, b, 'iou'), 1 - 1 / 7)
        self.assertAlmostEqual(spatial_distance(a, b, SpatialMode.GIOU), 1 + 5 / 63)
        self.assertAlmostEqual(spatial_distance(a, b, 'dgiou'), 68 / 63)


class DegenerateBoxTests(SimpleTestCase):

    def test_zero_area_boxes_are_flagged(self):
        point = BBox(3, 3, 0, 0)
        self.assertEqual(iou(point, point), 0.0)
        self.assertEqual(giou_flagged(point, point), (0.0, True))
        self.assertTrue(modulated_giou_flagged(point, point).degenerate)

    def test_zero_width_but_positive_hull(self):
        line = BBox(0, 0, 0, 4)
        other = BBox(2, 0, 0, 4)
        similarity = giou_flagged(line, other)
        self.assertFalse(similarity.degenerate)
        self.assertAlmostEqual(similarity.value, -1.0)

    def test_width_ratio_of_zero_width_boxes(self):
        ratio = modulation_ratio(BBox(0, 0, 0, 4), BBox(1, 0, 0, 2), LengthMode.WIDTH)
        self.assertEqual(ratio, (1.0, True))


class RasterOracleTests(SimpleTestCase):
    """
    Grid-aligned boxes, compared with areas counted cell by cell.
    """

    def test_against_raster_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            a_cells = (*rng.integers(0, 100, size=2), *rng.integers(1, 60, size=2))
            b_cells = (*rng.integers(0, 100, size=2), *rng.integers(1, 60, size=2))
            a, b = _box(a_cells), _box(b_cells)
            expected_iou, expected_giou = _raster_overlaps(a_cells, b_cells)
            with self.subTest(a=a_cells, b=b_cells):
                self.assertAlmostEqual(iou(a, b), expected_iou, delta=1e-3)
                self.assertAlmostEqual(giou(a, b), expected_giou, delta=1e-3)
                for mode in (LengthMode.DIAG, LengthMode.WIDTH, LengthMode.HEIGHT):
                    r = modulation_ratio(a, b, mode).value
                    self.assertAlmostEqual(modulated_giou(a, b, mode), 1 - r * expected_giou, delta=1e-3)


class GeometryPropertyTests(SimpleTestCase):

    def setUp(self):
        rng = np.random.default_rng(11)
        self.pairs = [
            (BBox(*rng.uniform(-50, 50, 2), *rng.uniform(0.1, 40, 2)),
             BBox(*rng.uniform(-50, 50, 2), *rng.uniform(0.1, 40, 2)))
            for _ in range(500)
        ]

    def test_symmetry(self):
        for a, b in self.pairs:
            self.assertEqual(iou(a, b), iou(b, a))
            self.assertAlmostEqual(giou(a, b), giou(b, a), places=12)
            for mode in LengthMode:
                self.assertAlmostEqual(modulated_giou(a, b, mode), modulated_giou(b, a, mode), places=12)

    def test_ranges(self):
        for a, b in self.pairs:
            self.assertTrue(0.0 <= iou(a, b) <= 1.0)
            self.assertTrue(-1.0 <= giou(a, b) <= iou(a, b) + 1e-12)
            for mode in LengthMode:
                self.assertTrue(0.0 <= modulated_giou(a, b, mode) <= 2.0)
            for off in (0.0, 0.1, 0.525, 0.9):
                value = spatial_modulation(spatial_distance(a, b), off)
                self.assertTrue(min(off, 1.0) <= value <= 1.0)

    def test_identity(self):
        for a, _ in self.pairs:
            self.assertAlmostEqual(modulated_giou(a, a), 0.0, places=12)

    def test_giou_decreases_as_boxes_separate(self):
        a = BBox(0.0, 0.0, 10.0, 20.0)
        for dx, dy in ((1.0, 0.0), (0.0, 1.0), (0.7, 0.7)):
            values = [giou(a, BBox(dx * k, dy * k, 10.0, 20.0)) for k in range(0, 60, 3)]
            with self.subTest(direction=(dx, dy)):
                self.assertTrue(all(later < earlier for earlier, later in zip(values, values[1:])))

    def test_equal_sizes_make_the_ratio_neutral(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            w, h = rng.uniform(1, 30, 2)
            a = BBox(*rng.uniform(-20, 20, 2), w, h)
            b = BBox(*rng.uniform(-20, 20, 2), w, h)
            expected = 1.0 - giou(a, b)
            for mode in (SpatialMode.GIOU, SpatialMode.WGIOU, SpatialMode.HGIOU, SpatialMode.DGIOU):
                self.assertAlmostEqual(spatial_distance(a, b, mode), expected, places=12)

    def test_shrinking_nested_box_raises_the_distance(self):
        a = BBox(0.0, 0.0, 40.0, 40.0)
        inner = [BBox(20.0 - s / 2, 20.0 - s / 2, s, s) for s in (36.0, 28.0, 20.0, 12.0, 4.0)]
        ratios = [modulation_ratio(a, b, LengthMode.DIAG).value for b in inner]
        distances = [modulated_giou(a, b) for b in inner]
        self.assertTrue(all(later < earlier for earlier, later in zip(ratios, ratios[1:])))
        self.assertTrue(all(later > earlier for earlier, later in zip(distances, distances[1:])))


class SpatialDistanceArrayTests(SimpleTestCase):

    def test_matches_scalar_distance(self):
        rng = np.random.default_rng(23)
        boxes_a = np.column_stack([rng.uniform(-30, 30, (300, 2)), rng.uniform(0, 25, (300, 2))])
        boxes_b = np.column_stack([rng.uniform(-30, 30, (300, 2)), rng.uniform(0, 25, (300, 2))])
        # zero-size rows hit the degenerate branches
        boxes_a[:10, 2:] = 0.0
        boxes_b[5:15, 2] = 0.0
        for mode in SpatialMode:
            values = spatial_distance_array(boxes_a, boxes_b, mode)
            expected = [spatial_distance(BBox(*a), BBox(*b), mode) for a, b in zip(boxes_a, boxes_b)]
            with self.subTest(mode=mode):
                np.testing.assert_allclose(values, expected, atol=1e-10)

    def test_broadcasts_one_box_against_many(self):
        a = (0.0, 0.0, 10.0, 10.0)
        many = np.array([[0.0, 0.0, 10.0, 10.0], [5.0, 0.0, 10.0, 10.0], [30.0, 0.0, 10.0, 10.0]])
        values = spatial_distance_array(a, many, SpatialMode.IOU)
        np.testing.assert_allclose(values, [0.0, 1.0 - 50.0 / 150.0, 1.0])
