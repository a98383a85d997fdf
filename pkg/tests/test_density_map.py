import os
import sys
import unittest
from dataclasses import FrozenInstanceError

import numpy as np

# Ensure src is in path
sys.path.append(os.path.join(os.path.dirname(__file__), "../src"))

from density_map import (
    DensityMap,
    Fixation,
    FixationSet,
    MapViolation,
    normalize_to_distribution,
    validate_map,
)
from errors import EmptyMap, NegativeValue, NonFinite, NotNormalized, OutOfBounds, ZeroMass


class TestDensityMap(unittest.TestCase):
    def test_dimensions(self):
        m = DensityMap.from_rows([[0, 1, 2], [3, 4, 5]])
        self.assertEqual(m.width, 3)
        self.assertEqual(m.height, 2)
        self.assertEqual(m.shape, (2, 3))
        self.assertEqual(m.total, 15.0)

    def test_values_are_read_only(self):
        m = DensityMap.from_rows([[1, 2], [3, 4]])
        with self.assertRaises(ValueError):
            m.values[0, 0] = 10
        with self.assertRaises(FrozenInstanceError):
            m.normalized = True

    def test_copies_input(self):
        source = np.ones((2, 2))
        m = DensityMap(source)
        source[0, 0] = 5
        self.assertEqual(m.values[0, 0], 1.0)

    def test_rejects_non_grid(self):
        with self.assertRaises(ValueError):
            DensityMap(np.ones(4))

    def test_argmax_is_x_y(self):
        m = DensityMap.from_rows([[0, 0, 0], [0, 0, 7]])
        self.assertEqual(m.argmax(), (2, 1))

    def test_zero_mass(self):
        self.assertTrue(DensityMap.zeros(3, 2).is_zero_mass)
        self.assertFalse(DensityMap.from_rows([[0, 1]]).is_zero_mass)


class TestValidateMap(unittest.TestCase):
    def test_valid(self):
        result = validate_map(DensityMap.from_rows([[0, 1], [2, 3]]))
        self.assertTrue(result.valid)
        result.raise_if_invalid()

    def test_negative(self):
        result = validate_map(DensityMap.from_rows([[-1]]))
        self.assertFalse(result.valid)
        self.assertEqual(result.violation, MapViolation.NEGATIVE_VALUE)
        with self.assertRaises(NegativeValue):
            result.raise_if_invalid()

    def test_nan(self):
        result = validate_map(DensityMap.from_rows([[float("nan")]]))
        self.assertEqual(result.violation, MapViolation.NON_FINITE)
        with self.assertRaises(NonFinite):
            result.raise_if_invalid()

    def test_empty(self):
        result = validate_map(DensityMap(np.zeros((0, 3))))
        self.assertEqual(result.violation, MapViolation.EMPTY_MAP)
        with self.assertRaises(EmptyMap):
            result.raise_if_invalid()

    def test_first_violation_wins(self):
        # NaN is checked before the sign
        result = validate_map(DensityMap.from_rows([[-1, float("inf")]]))
        self.assertEqual(result.violation, MapViolation.NON_FINITE)

    def test_normalized_flag_is_checked(self):
        result = validate_map(DensityMap.from_rows([[0.5, 0.6]], normalized=True))
        self.assertEqual(result.violation, MapViolation.NOT_NORMALIZED)
        with self.assertRaises(NotNormalized):
            result.raise_if_invalid()
        self.assertTrue(validate_map(DensityMap.from_rows([[0.25, 0.75]], normalized=True)).valid)


class TestNormalize(unittest.TestCase):
    def test_uniform(self):
        out = normalize_to_distribution(DensityMap.from_rows([[1, 1], [1, 1]]))
        np.testing.assert_allclose(out.values, [[0.25, 0.25], [0.25, 0.25]])
        self.assertTrue(out.normalized)

    def test_single_support(self):
        out = normalize_to_distribution(DensityMap.from_rows([[2, 0], [0, 0]]))
        np.testing.assert_allclose(out.values, [[1, 0], [0, 0]])

    def test_proportional(self):
        out = normalize_to_distribution(DensityMap.from_rows([[1, 3], [0, 0]]))
        np.testing.assert_allclose(out.values, [[0.25, 0.75], [0, 0]])

    def test_zero_mass(self):
        with self.assertRaises(ZeroMass):
            normalize_to_distribution(DensityMap.zeros(2, 2))

    def test_idempotent_and_keeps_argmax(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            m = DensityMap(rng.random((6, 9)))
            once = normalize_to_distribution(m)
            twice = normalize_to_distribution(once)
            np.testing.assert_allclose(once.values, twice.values, rtol=0, atol=1e-12)
            self.assertAlmostEqual(once.total, 1.0, delta=1e-9)
            self.assertEqual(once.argmax(), m.argmax())
            self.assertTrue(validate_map(once).valid)


class TestFixationSet(unittest.TestCase):
    def test_points_and_views(self):
        fix = FixationSet((Fixation(0, 1, "a"), Fixation(2, 0, "b")), 3, 2, "img")
        self.assertEqual(len(fix), 2)
        np.testing.assert_array_equal(fix.xs, [0, 2])
        np.testing.assert_array_equal(fix.ys, [1, 0])
        self.assertEqual(fix.observers, {"a", "b"})

    def test_out_of_bounds(self):
        with self.assertRaises(OutOfBounds):
            FixationSet((Fixation(3, 0),), 3, 2)
        with self.assertRaises(OutOfBounds):
            FixationSet((Fixation(0, -1),), 3, 2)

    def test_round_half_up(self):
        fix = FixationSet.from_coordinates([0.5, 1.49, 2.5], [0.4999, 1.5, 0.0], 4, 3)
        self.assertEqual([(p.x, p.y) for p in fix], [(1, 0), (1, 2), (3, 0)])

    def test_non_finite_coordinates(self):
        with self.assertRaises(NonFinite):
            FixationSet.from_coordinates([float("nan")], [0], 3, 3)
        with self.assertRaises(NonFinite):
            FixationSet.from_coordinates([0], [float("inf")], 3, 3)

    def test_rounding_can_leave_the_image(self):
        with self.assertRaises(OutOfBounds):
            FixationSet.from_coordinates([2.5], [0], 3, 3)

    def test_empty(self):
        fix = FixationSet((), 4, 4)
        self.assertTrue(fix.is_empty)
        self.assertEqual(fix.xs.shape, (0,))


if __name__ == "__main__":
    unittest.main()
