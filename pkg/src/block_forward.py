# Salbench
# Copyright 2026 - The Salbench Authors

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from errors import ShapeMismatch, SplitMismatch, WeightShapeMismatch
from resample import FeatureGrid, concat_channels, conv2d, relu

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BatchNormAffine:
    """Inference-time batch normalization folded into y = scale * x + shift."""

    scale: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        scale = np.asarray(self.scale, dtype=np.float64).ravel()
        shift = np.asarray(self.shift, dtype=np.float64).ravel()
        if scale.shape != shift.shape:
            raise WeightShapeMismatch(f"BN scale {scale.shape} and shift {shift.shape} differ")
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "shift", shift)

    @classmethod
    def identity(cls, channels: int) -> "BatchNormAffine":
        return cls(np.ones(channels), np.zeros(channels))

    @classmethod
    def from_statistics(
        cls,
        gamma: np.ndarray,
        beta: np.ndarray,
        mean: np.ndarray,
        var: np.ndarray,
        eps: float = 1e-5,
    ) -> "BatchNormAffine":
        scale = np.asarray(gamma, dtype=np.float64) / np.sqrt(np.asarray(var) + eps)
        return cls(scale, np.asarray(beta) - scale * np.asarray(mean))

    def __call__(self, g: FeatureGrid) -> FeatureGrid:
        if self.scale.shape[0] != g.channels:
            raise WeightShapeMismatch(f"BN for {self.scale.shape[0]} channels got {g.channels}")
        return FeatureGrid(g.values * self.scale[:, None, None] + self.shift[:, None, None])


class ResidualVariant(str, Enum):
    # 1x1, 3x3, 1x1 with BN after every conv
    BOTTLENECK = "bottleneck"
    # ResNet-18: pre-activated pair of 3x3 convs
    BASIC = "basic"


@dataclass(frozen=True, eq=False)
class ResidualWeights:
    variant: ResidualVariant
    convs: tuple[np.ndarray, ...]
    norms: tuple[BatchNormAffine, ...]

    def __post_init__(self):
        object.__setattr__(self, "variant", ResidualVariant(self.variant))
        convs = tuple(np.asarray(c, dtype=np.float64) for c in self.convs)
        object.__setattr__(self, "convs", convs)
        object.__setattr__(self, "norms", tuple(self.norms))
        expected = 3 if self.variant == ResidualVariant.BOTTLENECK else 2
        if len(self.convs) != expected or len(self.norms) != expected:
            raise WeightShapeMismatch(
                f"{self.variant.value} residual needs {expected} convs and norms,"
                f" got {len(self.convs)} and {len(self.norms)}"
            )

    @classmethod
    def zeros(
        cls, variant: ResidualVariant, channels: int, bottleneck: int | None = None
    ) -> "ResidualWeights":
        """Weights for which F is identically zero."""
        variant = ResidualVariant(variant)
        if variant == ResidualVariant.BASIC:
            convs = (np.zeros((channels, channels, 3, 3)),) * 2
            norms = (BatchNormAffine.identity(channels),) * 2
        else:
            mid = bottleneck or channels
            convs = (
                np.zeros((mid, channels, 1, 1)),
                np.zeros((mid, mid, 3, 3)),
                np.zeros((channels, mid, 1, 1)),
            )
            norms = (
                BatchNormAffine.identity(mid),
                BatchNormAffine.identity(mid),
                BatchNormAffine.identity(channels),
            )
        return cls(variant, convs, norms)


def residual_mapping(x: FeatureGrid, weights: ResidualWeights) -> FeatureGrid:
    c1, c2 = weights.convs[0], weights.convs[1]
    bn1, bn2 = weights.norms[0], weights.norms[1]
    if weights.variant == ResidualVariant.BASIC:
        # BN(C3(relu(BN(C3(relu(x))))))
        return bn2(conv2d(relu(bn1(conv2d(relu(x), c1))), c2))
    # BN(C1(relu(BN(C3(relu(BN(C1(x))))))))
    c3, bn3 = weights.convs[2], weights.norms[2]
    return bn3(conv2d(relu(bn2(conv2d(relu(bn1(conv2d(x, c1))), c2))), c3))


def residual_forward(x: FeatureGrid, weights: ResidualWeights) -> FeatureGrid:
    """x + F(x)."""
    f = residual_mapping(x, weights)
    if f.values.shape != x.values.shape:
        raise ShapeMismatch(f"Residual mapping gives {f} for input {x}")
    return FeatureGrid(x.values + f.values)


@dataclass(frozen=True, eq=False)
class DenseLayerWeights:
    """BN-ReLU-1x1 conv to 4K channels, then BN-ReLU-3x3 conv to K channels."""

    norm_in: BatchNormAffine
    conv_1x1: np.ndarray
    norm_mid: BatchNormAffine
    conv_3x3: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "conv_1x1", np.asarray(self.conv_1x1, dtype=np.float64))
        object.__setattr__(self, "conv_3x3", np.asarray(self.conv_3x3, dtype=np.float64))
        if self.conv_1x1.shape[2:] != (1, 1) or self.conv_3x3.shape[2:] != (3, 3):
            raise WeightShapeMismatch(
                f"Dense layer needs 1x1 and 3x3 kernels, got {self.conv_1x1.shape}"
                f" and {self.conv_3x3.shape}"
            )

    @property
    def growth(self) -> int:
        return self.conv_3x3.shape[0]

    @classmethod
    def initialize(
        cls, in_channels: int, growth: int, rng: np.random.Generator, scale: float = 0.1
    ) -> "DenseLayerWeights":
        bottleneck = 4 * growth
        return cls(
            BatchNormAffine(rng.uniform(0.5, 1.5, in_channels), rng.normal(0, scale, in_channels)),
            rng.normal(0.0, scale, (bottleneck, in_channels, 1, 1)),
            BatchNormAffine(rng.uniform(0.5, 1.5, bottleneck), rng.normal(0, scale, bottleneck)),
            rng.normal(0.0, scale, (growth, bottleneck, 3, 3)),
        )


def dense_forward(inputs: Sequence[FeatureGrid], weights: DenseLayerWeights) -> FeatureGrid:
    """One dense layer: concatenates x_0..x_{l-1} and returns the K new channels."""
    x = concat_channels(*inputs)
    bottleneck = conv2d(relu(weights.norm_in(x)), weights.conv_1x1)
    return conv2d(relu(weights.norm_mid(bottleneck)), weights.conv_3x3)


def dense_block_forward(x: FeatureGrid, layers: Sequence[DenseLayerWeights]) -> FeatureGrid:
    """Runs a dense block; the output has H + L*K channels."""
    features = [x]
    for i, weights in enumerate(layers):
        features.append(dense_forward(features, weights))
        logger.debug(f"Dense layer {i + 1}: width {sum(f.channels for f in features)}")
    return concat_channels(*features)


def dual_path_forward(
    res_part: FeatureGrid, dense_part: FeatureGrid, conv_out: FeatureGrid, growth: int
) -> tuple[FeatureGrid, FeatureGrid]:
    """Splits a layer output into a residual update and K new dense channels."""
    r = res_part.channels
    if conv_out.channels != r + growth:
        raise SplitMismatch(
            f"Layer output has {conv_out.channels} channels, expected R + K = {r} + {growth}"
        )
    if conv_out.values.shape[1:] != res_part.values.shape[1:]:
        raise ShapeMismatch(f"Layer output {conv_out} does not match residual path {res_part}")
    res = FeatureGrid(res_part.values + conv_out.values[:r])
    dense = concat_channels(dense_part, conv_out.channel_slice(r, r + growth))
    return res, dense
