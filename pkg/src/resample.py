# Salbench
# Copyright 2026 - The Salbench Authors

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from density_map import DensityMap
from errors import (
    ChannelNotDivisible,
    InvalidSpec,
    KernelShapeMismatch,
    NonFinite,
    ShapeMismatch,
    WeightShapeMismatch,
)

logger = logging.getLogger(__name__)

DEFAULT_LEAKY_SLOPE = 0.01
DEFAULT_DC_WIDTHS = (128, 64, 32)


@dataclass(frozen=True, eq=False)
class FeatureGrid:
    """Channel-major feature maps, shape (channels, height, width)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        if arr.ndim != 3 or arr.shape[0] < 1:
            raise ShapeMismatch(f"FeatureGrid needs (channels, height, width), got {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFinite("FeatureGrid values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    def channel_slice(self, start: int, stop: int) -> "FeatureGrid":
        return FeatureGrid(self.values[start:stop])

    def __repr__(self):
        return f"FeatureGrid({self.channels}x{self.height}x{self.width})"


def concat_channels(*grids: FeatureGrid) -> FeatureGrid:
    sizes = {(g.height, g.width) for g in grids}
    if len(sizes) != 1:
        raise ShapeMismatch(f"Cannot concatenate grids of spatial sizes {sorted(sizes)}")
    return FeatureGrid(np.concatenate([g.values for g in grids], axis=0))


def _interpolation_matrix(size_in: int, size_out: int) -> np.ndarray:
    # half-pixel centers, clamped at the borders
    dst = np.arange(size_out, dtype=np.float64)
    src = np.clip((dst + 0.5) * size_in / size_out - 0.5, 0.0, size_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, size_in - 1)
    frac = src - lo
    matrix = np.zeros((size_out, size_in), dtype=np.float64)
    rows = np.arange(size_out)
    np.add.at(matrix, (rows, lo), 1.0 - frac)
    np.add.at(matrix, (rows, hi), frac)
    return matrix


def bilinear_resize(g: FeatureGrid, out_h: int, out_w: int) -> FeatureGrid:
    if out_h < 1 or out_w < 1:
        raise ValueError(f"Invalid output size {out_w}x{out_h}")
    my = _interpolation_matrix(g.height, out_h)
    mx = _interpolation_matrix(g.width, out_w)
    return FeatureGrid(np.einsum("oh,chw,pw->cop", my, g.values, mx))


def downsample_half(g: FeatureGrid) -> FeatureGrid:
    """Input of the x0.5 path."""
    return bilinear_resize(g, max(1, g.height // 2), max(1, g.width // 2))


def transposed_conv2d(
    g: FeatureGrid,
    kernel: np.ndarray,
    bias: np.ndarray | None = None,
    stride: int = 2,
    padding: int = 1,
) -> FeatureGrid:
    """Transposed convolution, kernel shaped (in_channels, out_channels, kh, kw).

    With the default 4x4 kernel, stride 2 and padding 1 every layer doubles
    the spatial size exactly.
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 4 or kernel.shape[0] != g.channels:
        raise KernelShapeMismatch(
            f"Kernel {kernel.shape} does not fit a {g.channels}-channel input"
        )
    c_out, kh, kw = kernel.shape[1:]
    h, w = g.height, g.width
    full = np.zeros((c_out, (h - 1) * stride + kh, (w - 1) * stride + kw), dtype=np.float64)
    for ky in range(kh):
        for kx in range(kw):
            stamp = np.einsum("chw,co->ohw", g.values, kernel[:, :, ky, kx])
            full[:, ky : ky + stride * h : stride, kx : kx + stride * w : stride] += stamp

    out = full[:, padding : full.shape[1] - padding, padding : full.shape[2] - padding]
    if bias is not None:
        out = out + np.asarray(bias, dtype=np.float64).reshape(c_out, 1, 1)
    return FeatureGrid(out)


def conv2d(
    g: FeatureGrid, weight: np.ndarray, bias: np.ndarray | None = None, padding: int | None = None
) -> FeatureGrid:
    """Stride-1 convolution (cross-correlation), weight shaped (out, in, kh, kw).

    Zero padding defaults to kh // 2, which keeps the size for odd kernels.
    """
    weight = np.asarray(weight, dtype=np.float64)
    if weight.ndim != 4 or weight.shape[1] != g.channels:
        raise WeightShapeMismatch(
            f"Weight {weight.shape} does not fit a {g.channels}-channel input"
        )
    kh, kw = weight.shape[2:]
    if padding is None:
        padding = kh // 2
    padded = np.pad(g.values, ((0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(padded, (kh, kw), axis=(1, 2))
    out = np.einsum("chwij,ocij->ohw", windows, weight)
    if bias is not None:
        out = out + np.asarray(bias, dtype=np.float64).reshape(-1, 1, 1)
    return FeatureGrid(out)


def relu(g: FeatureGrid) -> FeatureGrid:
    return FeatureGrid(np.maximum(g.values, 0.0))


def leaky_relu(g: FeatureGrid, slope: float = DEFAULT_LEAKY_SLOPE) -> FeatureGrid:
    return FeatureGrid(np.where(g.values >= 0, g.values, slope * g.values))


def subpixel_shuffle(g: FeatureGrid, factor: int = 2) -> FeatureGrid:
    """out(c, f*y + dy, f*x + dx) = in(f*f*c + f*dy + dx, y, x)."""
    group = factor * factor
    if g.channels % group:
        raise ChannelNotDivisible(f"{g.channels} channels are not divisible by {group}")
    c, h, w = g.channels // group, g.height, g.width
    out = g.values.reshape(c, factor, factor, h, w).transpose(0, 3, 1, 4, 2)
    return FeatureGrid(out.reshape(c, h * factor, w * factor))


def subpixel_unshuffle(g: FeatureGrid, factor: int = 2) -> FeatureGrid:
    if g.height % factor or g.width % factor:
        raise ShapeMismatch(f"{g.width}x{g.height} grid is not divisible by {factor}")
    c, h, w = g.channels, g.height // factor, g.width // factor
    out = g.values.reshape(c, h, factor, w, factor).transpose(0, 2, 4, 1, 3)
    return FeatureGrid(out.reshape(c * factor * factor, h, w))


def concat_multiscale(full: FeatureGrid, half: FeatureGrid) -> FeatureGrid:
    """Resizes the x0.5 path features to the x1.0 size and stacks them after it."""
    if (half.height, half.width) != (full.height, full.width):
        half = bilinear_resize(half, full.height, full.width)
    return concat_channels(full, half)


class UpsampleKind(str, Enum):
    BI = "BI"
    DC = "DC"
    SPC = "SPC"
    NONE = "none"


@dataclass(frozen=True)
class ReadoutSpec:
    kind: UpsampleKind = UpsampleKind.NONE
    n_layers: int = 0
    leaky_slope: float = DEFAULT_LEAKY_SLOPE

    def __post_init__(self):
        object.__setattr__(self, "kind", UpsampleKind(self.kind))
        if not 0 <= self.n_layers <= 3:
            raise InvalidSpec(f"Readout supports 0 to 3 upsampling layers, got {self.n_layers}")
        if (self.n_layers == 0) != (self.kind == UpsampleKind.NONE):
            raise InvalidSpec(f"{self.kind.value} readout cannot have {self.n_layers} layers")

    @property
    def scale(self) -> int:
        return 2**self.n_layers


@dataclass(frozen=True, eq=False)
class ReadoutWeights:
    """Fixed readout parameters.

    `layers` holds one (weight, bias) pair per DC or SPC layer: transposed
    conv kernels (in, out, 4, 4) for DC, 3x3 conv weights (c, c, 3, 3) for SPC.
    BI layers have no parameters. `projection` is the final 1x1 convolution.
    """

    projection: np.ndarray
    bias: float = 0.0
    layers: tuple[tuple[np.ndarray, np.ndarray], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "projection", np.asarray(self.projection, dtype=np.float64))
        object.__setattr__(self, "layers", tuple(self.layers))

    @classmethod
    def initialize(
        cls,
        spec: ReadoutSpec,
        in_channels: int,
        seed: int = 0,
        dc_widths: tuple[int, ...] = DEFAULT_DC_WIDTHS,
    ) -> "ReadoutWeights":
        """Deterministic weights with the right shapes for `spec`."""
        rng = np.random.default_rng(seed)
        layers = []
        channels = in_channels
        if spec.kind == UpsampleKind.DC:
            if spec.n_layers > len(dc_widths):
                raise InvalidSpec(f"{spec.n_layers} DC layers but only {len(dc_widths)} widths")
            for width in dc_widths[: spec.n_layers]:
                scale = 1.0 / np.sqrt(channels * 16)
                layers.append((rng.normal(0.0, scale, (channels, width, 4, 4)), np.zeros(width)))
                channels = width
        elif spec.kind == UpsampleKind.SPC:
            for _ in range(spec.n_layers):
                if channels % 4:
                    raise ChannelNotDivisible(f"{channels} channels are not divisible by 4")
                channels //= 4
                scale = 1.0 / np.sqrt(channels * 9)
                kernel = rng.normal(0.0, scale, (channels, channels, 3, 3))
                layers.append((kernel, np.zeros(channels)))
        projection = rng.normal(0.0, 1.0 / np.sqrt(channels), channels)
        return cls(projection, 0.0, tuple(layers))


def _project(g: FeatureGrid, weights: ReadoutWeights) -> FeatureGrid:
    if weights.projection.shape != (g.channels,):
        raise WeightShapeMismatch(
            f"Projection has {weights.projection.shape} weights for {g.channels} channels"
        )
    out = np.tensordot(weights.projection, g.values, axes=(0, 0)) + weights.bias
    return FeatureGrid(out[np.newaxis])


def readout(g: FeatureGrid, spec: ReadoutSpec, weights: ReadoutWeights) -> DensityMap:
    """Turns backbone features into a single-channel map 2^N times larger.

    BI projects to one channel first and then upsamples. DC and SPC upsample
    the features and project last. The output goes through Leaky ReLU, so
    it may hold small negative values that validate_map reports.
    """
    expected_layers = 0 if spec.kind in (UpsampleKind.BI, UpsampleKind.NONE) else spec.n_layers
    if len(weights.layers) != expected_layers:
        raise WeightShapeMismatch(
            f"{spec.kind.value} readout with {spec.n_layers} layers"
            f" got {len(weights.layers)} weight sets"
        )

    if spec.kind == UpsampleKind.BI:
        g = _project(g, weights)
        for _ in range(spec.n_layers):
            g = bilinear_resize(g, g.height * 2, g.width * 2)
    else:
        for weight, bias in weights.layers:
            if spec.kind == UpsampleKind.DC:
                g = relu(transposed_conv2d(g, weight, bias))
            else:
                g = subpixel_shuffle(g)
                if np.shape(weight)[:2] != (g.channels, g.channels):
                    raise WeightShapeMismatch(
                        f"SPC conv weight {np.shape(weight)} for {g.channels} channels"
                    )
                g = relu(conv2d(g, weight, bias))
        g = _project(g, weights)

    out = leaky_relu(g, spec.leaky_slope)
    return DensityMap(out.values[0])
