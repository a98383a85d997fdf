import os
import sys
import unittest

import numpy as np

# Ensure src is in path
sys.path.append(os.path.join(os.path.dirname(__file__), "../src"))

from errors import (
    ChannelNotDivisible,
    InvalidSpec,
    KernelShapeMismatch,
    NonFinite,
    ShapeMismatch,
    WeightShapeMismatch,
)
from resample import (
    FeatureGrid,
    ReadoutSpec,
    ReadoutWeights,
    UpsampleKind,
    bilinear_resize,
    concat_multiscale,
    conv2d,
    downsample_half,
    leaky_relu,
    readout,
    subpixel_shuffle,
    subpixel_unshuffle,
    transposed_conv2d,
)


def zero_stuffing_oracle(x: np.ndarray, kernel: np.ndarray, stride: int, padding: int):
    """Inserts stride - 1 zeros between inputs, then runs a direct convolution."""
    c_in, h, w = x.shape
    c_out, kh, kw = kernel.shape[1:]
    stuffed = np.zeros((c_in, (h - 1) * stride + 1, (w - 1) * stride + 1))
    stuffed[:, ::stride, ::stride] = x
    pad_y, pad_x = kh - 1 - padding, kw - 1 - padding
    padded = np.pad(stuffed, ((0, 0), (pad_y, pad_y), (pad_x, pad_x)))
    out_h = padded.shape[1] - kh + 1
    out_w = padded.shape[2] - kw + 1
    out = np.zeros((c_out, out_h, out_w))
    for o in range(c_out):
        for y in range(out_h):
            for x_ in range(out_w):
                total = 0.0
                for c in range(c_in):
                    window = padded[c, y : y + kh, x_ : x_ + kw]
                    total += (window * kernel[c, o, ::-1, ::-1]).sum()
                out[o, y, x_] = total
    return out


class TestFeatureGrid(unittest.TestCase):
    def test_two_dimensional_input_is_one_channel(self):
        g = FeatureGrid(np.ones((3, 4)))
        self.assertEqual((g.channels, g.height, g.width), (1, 3, 4))

    def test_rejects_bad_values(self):
        with self.assertRaises(NonFinite):
            FeatureGrid(np.array([[[np.nan]]]))
        with self.assertRaises(ShapeMismatch):
            FeatureGrid(np.ones(5))


class TestBilinear(unittest.TestCase):
    def test_constant_stays_constant(self):
        g = FeatureGrid(np.full((2, 5, 7), 3.5))
        for size in ((10, 14), (3, 2), (5, 7), (1, 1)):
            out = bilinear_resize(g, *size)
            np.testing.assert_allclose(out.values, 3.5, rtol=0, atol=1e-12)

    def test_single_pixel_upsamples(self):
        out = bilinear_resize(FeatureGrid(np.array([[[2.0]]])), 2, 2)
        np.testing.assert_array_equal(out.values, [[[2.0, 2.0], [2.0, 2.0]]])

    def test_two_by_two_to_one(self):
        out = bilinear_resize(FeatureGrid(np.array([[[1.0, 2.0], [3.0, 6.0]]])), 1, 1)
        self.assertAlmostEqual(out.values[0, 0, 0], 3.0, delta=1e-12)

    def test_double_then_half_restores_size(self):
        rng = np.random.default_rng(3)
        for h, w in ((1, 1), (3, 5), (8, 6)):
            g = FeatureGrid(rng.normal(size=(2, h, w)))
            back = downsample_half(bilinear_resize(g, 2 * h, 2 * w))
            self.assertEqual(back.values.shape, g.values.shape)
        flat = FeatureGrid(np.full((1, 4, 6), -1.25))
        back = downsample_half(bilinear_resize(flat, 8, 12))
        np.testing.assert_allclose(back.values, flat.values, rtol=0, atol=1e-12)

    def test_downsample_half(self):
        out = downsample_half(FeatureGrid(np.ones((1, 9, 8))))
        self.assertEqual((out.height, out.width), (4, 4))


class TestTransposedConv(unittest.TestCase):
    def test_full_stamp(self):
        kernel = np.arange(16, dtype=float).reshape(1, 1, 4, 4)
        out = transposed_conv2d(FeatureGrid(np.array([[[2.0]]])), kernel, padding=0)
        np.testing.assert_array_equal(out.values[0], 2.0 * kernel[0, 0])

    def test_zero_input(self):
        kernel = np.random.default_rng(0).normal(size=(2, 3, 4, 4))
        out = transposed_conv2d(FeatureGrid(np.zeros((2, 5, 5))), kernel)
        self.assertEqual(out.values.shape, (3, 10, 10))
        self.assertFalse(out.values.any())

    def test_matches_zero_stuffing_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            c_in, c_out = rng.integers(1, 4), rng.integers(1, 3)
            h, w = rng.integers(1, 6, size=2)
            k = int(rng.integers(2, 5))
            stride = int(rng.integers(1, 4))
            padding = int(rng.integers(0, k))
            x = rng.normal(size=(c_in, h, w))
            kernel = rng.normal(size=(c_in, c_out, k, k))
            expected = zero_stuffing_oracle(x, kernel, stride, padding)
            if min(expected.shape[1:]) < 1:
                continue
            out = transposed_conv2d(FeatureGrid(x), kernel, stride=stride, padding=padding)
            self.assertEqual(out.values.shape, expected.shape)
            np.testing.assert_allclose(out.values, expected, rtol=0, atol=1e-9)

    def test_default_layer_doubles_size(self):
        rng = np.random.default_rng(5)
        x, kernel = rng.normal(size=(3, 5, 7)), rng.normal(size=(3, 2, 4, 4))
        out = transposed_conv2d(FeatureGrid(x), kernel)
        self.assertEqual(out.values.shape, (2, 10, 14))

    def test_linear(self):
        rng = np.random.default_rng(9)
        kernel = rng.normal(size=(2, 3, 4, 4))
        for _ in range(10):
            x, y = rng.normal(size=(2, 2, 4, 3))
            a, b = rng.normal(size=2)
            combined = transposed_conv2d(FeatureGrid(a * x + b * y), kernel).values
            separate = a * transposed_conv2d(FeatureGrid(x), kernel).values
            separate += b * transposed_conv2d(FeatureGrid(y), kernel).values
            np.testing.assert_allclose(combined, separate, rtol=0, atol=1e-9)

    def test_bias(self):
        kernel = np.zeros((1, 2, 4, 4))
        out = transposed_conv2d(FeatureGrid(np.ones((1, 2, 2))), kernel, bias=[1.0, -1.0])
        np.testing.assert_array_equal(out.values[0], np.ones((4, 4)))
        np.testing.assert_array_equal(out.values[1], -np.ones((4, 4)))

    def test_kernel_mismatch(self):
        with self.assertRaises(KernelShapeMismatch):
            transposed_conv2d(FeatureGrid(np.ones((2, 3, 3))), np.ones((3, 1, 4, 4)))


class TestConv2d(unittest.TestCase):
    def test_identity_kernel(self):
        x = np.random.default_rng(2).normal(size=(2, 4, 5))
        weight = np.zeros((2, 2, 3, 3))
        weight[0, 0, 1, 1] = weight[1, 1, 1, 1] = 1.0
        np.testing.assert_allclose(conv2d(FeatureGrid(x), weight).values, x, atol=1e-15)

    def test_box_filter(self):
        out = conv2d(FeatureGrid(np.ones((1, 3, 3))), np.ones((1, 1, 3, 3)))
        np.testing.assert_array_equal(out.values[0], [[4, 6, 4], [6, 9, 6], [4, 6, 4]])

    def test_weight_mismatch(self):
        with self.assertRaises(WeightShapeMismatch):
            conv2d(FeatureGrid(np.ones((2, 3, 3))), np.ones((1, 3, 3, 3)))


class TestSubpixelShuffle(unittest.TestCase):
    def test_origin(self):
        out = subpixel_shuffle(FeatureGrid(np.array([1.0, 2.0, 3.0, 4.0]).reshape(4, 1, 1)))
        np.testing.assert_array_equal(out.values, [[[1.0, 2.0], [3.0, 4.0]]])

    def test_index_formula(self):
        x = np.random.default_rng(3).normal(size=(8, 3, 5))
        out = subpixel_shuffle(FeatureGrid(x)).values
        self.assertEqual(out.shape, (2, 6, 10))
        for c in range(2):
            for y in range(3):
                for x_ in range(5):
                    for dy in range(2):
                        for dx in range(2):
                            self.assertEqual(
                                out[c, 2 * y + dy, 2 * x_ + dx], x[4 * c + 2 * dy + dx, y, x_]
                            )

    def test_is_a_permutation(self):
        x = np.random.default_rng(4).normal(size=(12, 4, 4))
        out = subpixel_shuffle(FeatureGrid(x)).values
        np.testing.assert_array_equal(np.sort(out.ravel()), np.sort(x.ravel()))

    def test_inverse(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            x = FeatureGrid(rng.normal(size=(8, 6, 7)))
            np.testing.assert_array_equal(subpixel_unshuffle(subpixel_shuffle(x)).values, x.values)

    def test_channels_not_divisible(self):
        with self.assertRaises(ChannelNotDivisible):
            subpixel_shuffle(FeatureGrid(np.ones((6, 2, 2))))


class TestConcatMultiscale(unittest.TestCase):
    def test_order_preserved(self):
        full = FeatureGrid(np.ones((1, 2, 2)))
        half = FeatureGrid(np.full((1, 2, 2), 2.0))
        out = concat_multiscale(full, half)
        np.testing.assert_array_equal(out.values[:, 0, 0], [1.0, 2.0])

    def test_channel_count(self):
        full = FeatureGrid(np.zeros((2688, 2, 2)))
        half = FeatureGrid(np.zeros((2688, 1, 1)))
        self.assertEqual(concat_multiscale(full, half).channels, 5376)

    def test_constant_half_is_resized(self):
        full = FeatureGrid(np.zeros((1, 6, 8)))
        half = FeatureGrid(np.full((3, 3, 4), 0.25))
        out = concat_multiscale(full, half)
        self.assertEqual(out.values.shape, (4, 6, 8))
        np.testing.assert_allclose(out.values[1:], 0.25, rtol=0, atol=1e-12)


class TestReadout(unittest.TestCase):
    def test_identity_pass(self):
        x = np.random.default_rng(6).random((5, 4))
        out = readout(FeatureGrid(x), ReadoutSpec(), ReadoutWeights(np.array([1.0])))
        np.testing.assert_array_equal(out.values, x)

    def test_two_channel_projection(self):
        rng = np.random.default_rng(7)
        a, b = rng.normal(size=(2, 3, 3))
        w1, w2 = 0.7, -1.3
        out = readout(
            FeatureGrid(np.stack([a, b])),
            ReadoutSpec(leaky_slope=0.1),
            ReadoutWeights(np.array([w1, w2]), bias=0.2),
        )
        z = w1 * a + w2 * b + 0.2
        np.testing.assert_allclose(out.values, np.where(z >= 0, z, 0.1 * z), rtol=0, atol=1e-12)

    def test_output_size_contract(self):
        g = FeatureGrid(np.random.default_rng(8).random((64, 3, 5)))
        for kind in (UpsampleKind.BI, UpsampleKind.DC, UpsampleKind.SPC):
            for n in range(1, 4):
                spec = ReadoutSpec(kind, n)
                weights = ReadoutWeights.initialize(spec, g.channels, seed=n)
                out = readout(g, spec, weights)
                self.assertEqual(out.shape, (3 * 2**n, 5 * 2**n), f"{kind.value} x{n}")
                self.assertEqual(spec.scale, 2**n)

    def test_leaky_relu(self):
        out = leaky_relu(FeatureGrid(np.array([[[-2.0, 3.0]]])), 0.5)
        np.testing.assert_array_equal(out.values, [[[-1.0, 3.0]]])

    def test_invalid_specs(self):
        with self.assertRaises(InvalidSpec):
            ReadoutSpec(UpsampleKind.BI, 4)
        with self.assertRaises(InvalidSpec):
            ReadoutSpec(UpsampleKind.DC, 0)
        with self.assertRaises(InvalidSpec):
            ReadoutSpec(UpsampleKind.NONE, 1)

    def test_weight_mismatch(self):
        g = FeatureGrid(np.ones((4, 2, 2)))
        with self.assertRaises(WeightShapeMismatch):
            readout(g, ReadoutSpec(), ReadoutWeights(np.ones(3)))
        with self.assertRaises(WeightShapeMismatch):
            readout(g, ReadoutSpec(UpsampleKind.DC, 1), ReadoutWeights(np.ones(4)))


if __name__ == "__main__":
    unittest.main()
