# Salbench
# Copyright 2026 - The Salbench Authors

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from density_map import DensityMap, FixationSet, normalize_to_distribution
from errors import EmptyFixations, NonPositiveSigma, OutOfBounds

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlurSpec:
    # One degree of visual angle, truncated at 4 sigma
    sigma_degrees: float = 1.0
    truncation_radius: float = 4.0

    def __post_init__(self):
        if not self.sigma_degrees > 0:
            raise NonPositiveSigma(f"sigma_degrees must be > 0, got {self.sigma_degrees}")
        if not self.truncation_radius >= 3:
            raise ValueError(f"truncation_radius must be >= 3, got {self.truncation_radius}")

    def sigma_pixels(self, pixels_per_degree: float) -> float:
        return pixels_per_degree * self.sigma_degrees


def accumulate_fixations(fix: FixationSet, width: int, height: int) -> DensityMap:
    """Counts fixations per pixel. Every observer's fixations weigh the same."""
    if (fix.image_width, fix.image_height) != (width, height):
        # Points were checked against the set's own size, not this one.
        bad = (fix.xs >= width) | (fix.ys >= height)
        if bad.any():
            i = int(np.argmax(bad))
            raise OutOfBounds(f"Fixation ({fix.xs[i]}, {fix.ys[i]}) outside {width}x{height}")

    counts = np.zeros((height, width), dtype=np.float64)
    np.add.at(counts, (fix.ys, fix.xs), 1.0)
    if fix.is_empty:
        logger.warning(f"No fixations for image {fix.image_id!r}, ground truth has zero mass")
    return DensityMap(counts)


def gaussian_kernel(sigma_px: float, truncation_radius: float) -> np.ndarray:
    radius = int(np.ceil(truncation_radius * sigma_px))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma_px) ** 2)
    return kernel / kernel.sum()


def gaussian_blur(density: DensityMap, sigma_px: float, spec: BlurSpec | None = None) -> DensityMap:
    """Separable Gaussian blur that keeps the total mass.

    Kernel taps falling outside the image are folded back by half-sample
    reflection. For a symmetric kernel this gives a symmetric operator whose
    rows and columns both sum to 1, so mass and constant maps are preserved.
    """
    if not sigma_px > 0:
        raise NonPositiveSigma(f"sigma must be > 0 pixels, got {sigma_px}")
    spec = spec or BlurSpec()

    kernel = gaussian_kernel(sigma_px, spec.truncation_radius)
    out = ndimage.correlate1d(density.values, kernel, axis=0, mode="reflect")
    out = ndimage.correlate1d(out, kernel, axis=1, mode="reflect")
    return DensityMap(out)


def make_ground_truth(
    fix: FixationSet, pixels_per_degree: float, spec: BlurSpec | None = None
) -> DensityMap:
    """Pools all fixations, blurs them by one visual degree and normalizes."""
    if fix.is_empty:
        raise EmptyFixations(f"Cannot build ground truth for {fix.image_id!r}: no fixations")
    if not pixels_per_degree > 0:
        raise ValueError(f"pixels_per_degree must be > 0, got {pixels_per_degree}")
    spec = spec or BlurSpec()

    sigma_px = spec.sigma_pixels(pixels_per_degree)
    counts = accumulate_fixations(fix, fix.image_width, fix.image_height)
    blurred = gaussian_blur(counts, sigma_px, spec)
    logger.debug(
        f"Ground truth {fix.image_id!r}: {len(fix)} fixations,"
        f" {len(fix.observers)} observers, sigma {sigma_px:.2f}px"
    )
    return normalize_to_distribution(blurred)

