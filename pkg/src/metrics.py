# Salbench
# Copyright 2026 - The Salbench Authors

import logging
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import Enum, IntFlag, auto

import numpy as np

from density_map import DensityMap, FixationSet, normalize_to_distribution, validate_map
from errors import EmptyFixations, EmptyNegativePool, ShapeMismatch
from seeded_rng import SeededRng

logger = logging.getLogger(__name__)

# Same epsilon the MIT benchmark code uses for KL
KL_EPSILON = 2.2204e-16
DEGENERATE_STD = 1e-12


class MetricFlag(IntFlag):
    NONE = 0
    DEGENERATE_MAP = auto()
    ALL_PIXELS_FIXATED = auto()

    def describe(self) -> str:
        return "|".join(f.name.lower() for f in MetricFlag if f and f in self)


@dataclass(frozen=True)
class MetricScore:
    value: float
    flags: MetricFlag = MetricFlag.NONE

    @property
    def flagged(self) -> bool:
        return self.flags != MetricFlag.NONE


class Polarity(Enum):
    HIGHER_IS_BETTER = "↑"
    LOWER_IS_BETTER = "↓"


class MetricKind(Enum):
    LOCATION = "location"
    DISTRIBUTION = "distribution"


@dataclass(frozen=True)
class MetricInfo:
    name: str
    label: str
    polarity: Polarity
    kind: MetricKind


# Column order of the published comparison tables.
METRICS: dict[str, MetricInfo] = {
    info.name: info
    for info in (
        MetricInfo("auc_judd", "AUC-Judd", Polarity.HIGHER_IS_BETTER, MetricKind.LOCATION),
        MetricInfo("sim", "SIM", Polarity.HIGHER_IS_BETTER, MetricKind.DISTRIBUTION),
        MetricInfo("emd", "EMD", Polarity.LOWER_IS_BETTER, MetricKind.DISTRIBUTION),
        MetricInfo("auc_borji", "AUC-Borji", Polarity.HIGHER_IS_BETTER, MetricKind.LOCATION),
        MetricInfo("sauc", "sAUC", Polarity.HIGHER_IS_BETTER, MetricKind.LOCATION),
        MetricInfo("cc", "CC", Polarity.HIGHER_IS_BETTER, MetricKind.DISTRIBUTION),
        MetricInfo("nss", "NSS", Polarity.HIGHER_IS_BETTER, MetricKind.LOCATION),
        MetricInfo("kl", "KL", Polarity.LOWER_IS_BETTER, MetricKind.DISTRIBUTION),
    )
}


def metrics_of_kind(kind: MetricKind) -> tuple[str, ...]:
    return tuple(name for name, info in METRICS.items() if info.kind == kind)


@dataclass(frozen=True)
class RocCurve:
    """(fpr, tpr) points sorted by fpr, starting at (0, 0) and ending at (1, 1)."""

    points: tuple[tuple[float, float], ...]

    @property
    def fpr(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def tpr(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    def area(self) -> float:
        return float(np.trapezoid(self.tpr, self.fpr))


@dataclass(frozen=True)
class AucConfig:
    n_splits: int = 100
    rng: SeededRng = field(default_factory=SeededRng)

    def __post_init__(self):
        if self.n_splits < 1:
            raise ValueError(f"n_splits must be >= 1, got {self.n_splits}")


def _check_fixations(sal: DensityMap, fix: FixationSet) -> None:
    validate_map(sal).raise_if_invalid()
    if sal.shape != (fix.image_height, fix.image_width):
        raise ShapeMismatch(
            f"Map is {sal.width}x{sal.height} but fixations are for"
            f" {fix.image_width}x{fix.image_height}"
        )
    if fix.is_empty:
        raise EmptyFixations(f"No fixations for image {fix.image_id!r}")


def _check_pair(a: DensityMap, b: DensityMap) -> None:
    validate_map(a).raise_if_invalid()
    validate_map(b).raise_if_invalid()
    if a.shape != b.shape:
        raise ShapeMismatch(f"Map shapes differ: {a.width}x{a.height} vs {b.width}x{b.height}")


def _is_constant(values: np.ndarray) -> bool:
    return bool(np.ptp(values) == 0)


def _count_at_or_above(sorted_values: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    return len(sorted_values) - np.searchsorted(sorted_values, thresholds, side="left")


def _roc(positives: np.ndarray, negatives: np.ndarray, thresholds: np.ndarray) -> RocCurve:
    # thresholds are visited from high to low, so both rates only grow
    thresholds = np.sort(thresholds)[::-1]
    tpr = _count_at_or_above(np.sort(positives), thresholds) / len(positives)
    fpr = _count_at_or_above(np.sort(negatives), thresholds) / len(negatives)
    points = [(0.0, 0.0)]
    points.extend(zip(fpr.tolist(), tpr.tolist()))
    points.append((1.0, 1.0))
    return RocCurve(tuple(points))


def roc_curve_judd(sal: DensityMap, fix: FixationSet) -> RocCurve:
    """ROC of fixated against non-fixated pixels, thresholded at every fixated value."""
    _check_fixations(sal, fix)
    values = sal.values
    positives = values[fix.ys, fix.xs]
    fixated = np.zeros(values.shape, dtype=bool)
    fixated[fix.ys, fix.xs] = True
    negatives = values[~fixated]
    if negatives.size == 0:
        return RocCurve(((0.0, 0.0), (1.0, 1.0)))
    return _roc(positives, negatives, np.unique(positives))


def auc_judd(sal: DensityMap, fix: FixationSet) -> MetricScore:
    curve = roc_curve_judd(sal, fix)
    flags = MetricFlag.NONE
    if _is_constant(sal.values):
        flags |= MetricFlag.DEGENERATE_MAP
    if len(np.unique(fix.ys * sal.width + fix.xs)) == sal.values.size:
        logger.warning(f"Every pixel of {fix.image_id!r} is fixated, AUC-Judd is undefined")
        return MetricScore(0.5, flags | MetricFlag.ALL_PIXELS_FIXATED)
    return MetricScore(curve.area(), flags)


def _split_mean(positives: np.ndarray, negative_sets: Iterable[np.ndarray]) -> float:
    areas = [
        _roc(positives, negatives, np.unique(np.concatenate([positives, negatives]))).area()
        for negatives in negative_sets
    ]
    return float(np.mean(areas))


def auc_borji(sal: DensityMap, fix: FixationSet, cfg: AucConfig | None = None) -> MetricScore:
    """AUC against negatives sampled uniformly (with replacement) over the whole image."""
    cfg = cfg or AucConfig()
    _check_fixations(sal, fix)
    flat = sal.values.ravel()
    positives = sal.values[fix.ys, fix.xs]

    rng = cfg.rng.stream(fix.image_id, "auc_borji")
    negative_sets = (
        flat[rng.integers(0, flat.size, size=len(fix))] for _ in range(cfg.n_splits)
    )
    value = _split_mean(positives, negative_sets)
    flags = MetricFlag.DEGENERATE_MAP if _is_constant(flat) else MetricFlag.NONE
    return MetricScore(value, flags)


def pool_fixations(sets: Iterable[FixationSet], exclude_image_id: str) -> FixationSet:
    """Pools the fixations of every image except `exclude_image_id`."""
    others = [s for s in sets if s.image_id != exclude_image_id]
    points = tuple(p for s in others for p in s.points)
    if not points:
        raise EmptyNegativePool(
            f"No fixations from other images to shuffle for {exclude_image_id!r}"
        )
    width = max(s.image_width for s in others)
    height = max(s.image_height for s in others)
    return FixationSet(points, width, height, image_id=f"pool-{exclude_image_id}")


def sauc(
    sal: DensityMap, fix: FixationSet, other_fixations: FixationSet, cfg: AucConfig | None = None
) -> MetricScore:
    """Shuffled AUC: negatives are fixations taken from other images."""
    cfg = cfg or AucConfig()
    _check_fixations(sal, fix)
    if other_fixations.is_empty:
        raise EmptyNegativePool(f"Empty negative pool for {fix.image_id!r}")

    values = sal.values
    positives = values[fix.ys, fix.xs]
    pool_xs = np.clip(other_fixations.xs, 0, sal.width - 1)
    pool_ys = np.clip(other_fixations.ys, 0, sal.height - 1)

    rng = cfg.rng.stream(fix.image_id, "sauc")

    def negative_sets():
        for _ in range(cfg.n_splits):
            idx = rng.integers(0, len(pool_xs), size=len(fix))
            yield values[pool_ys[idx], pool_xs[idx]]

    value = _split_mean(positives, negative_sets())
    flags = MetricFlag.DEGENERATE_MAP if _is_constant(values) else MetricFlag.NONE
    return MetricScore(value, flags)


def nss(sal: DensityMap, fix: FixationSet) -> MetricScore:
    """Mean of the standardized map at fixated pixels."""
    _check_fixations(sal, fix)
    values = sal.values
    std = values.std()
    if std < DEGENERATE_STD:
        return MetricScore(0.0, MetricFlag.DEGENERATE_MAP)
    z = (values - values.mean()) / std
    return MetricScore(float(z[fix.ys, fix.xs].mean()))


def cc(sal: DensityMap, gt: DensityMap) -> MetricScore:
    _check_pair(sal, gt)
    if _is_constant(sal.values) or _is_constant(gt.values):
        return MetricScore(0.0, MetricFlag.DEGENERATE_MAP)
    a = sal.values - sal.values.mean()
    b = gt.values - gt.values.mean()
    r = (a * b).sum() / np.sqrt((a * a).sum() * (b * b).sum())
    return MetricScore(float(np.clip(r, -1.0, 1.0)))


def sim(sal: DensityMap, gt: DensityMap) -> MetricScore:
    _check_pair(sal, gt)
    p = normalize_to_distribution(sal).values
    q = normalize_to_distribution(gt).values
    return MetricScore(float(np.minimum(p, q).sum()))


def kl(gt: DensityMap, sal: DensityMap) -> MetricScore:
    """KL(ground truth || prediction), epsilon-regularized so it stays finite."""
    _check_pair(gt, sal)
    q = normalize_to_distribution(gt).values
    p = normalize_to_distribution(sal).values
    return MetricScore(float((q * np.log(q / (p + KL_EPSILON) + KL_EPSILON)).sum()))
