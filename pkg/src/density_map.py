# Salbench
# Copyright 2026 - The Salbench Authors

import logging
import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from enum import IntEnum, auto
from functools import cached_property

import numpy as np

from errors import EmptyMap, NegativeValue, NonFinite, NotNormalized, OutOfBounds, ZeroMass

logger = logging.getLogger(__name__)

NORMALIZED_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class DensityMap:
    """A non-negative 2-D grid of saliency or fixation-density values.

    Predicted maps and ground-truth maps share this type. Values are stored
    row-major as a read-only float64 array of shape (height, width), with
    x = column and y = row, origin top-left.

    Construction only checks the dimensionality. The value invariants
    (finite, non-negative, non-empty) are reported by `validate_map`, so that
    a bad map read from disk can still be described instead of crashing.
    """

    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"DensityMap needs a 2-D grid, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]], normalized: bool = False) -> "DensityMap":
        return cls(np.asarray(rows, dtype=np.float64), normalized=normalized)

    @classmethod
    def zeros(cls, width: int, height: int) -> "DensityMap":
        return cls(np.zeros((height, width), dtype=np.float64))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        """(height, width), numpy order."""
        return self.values.shape

    @property
    def total(self) -> float:
        return float(self.values.sum())

    @property
    def is_zero_mass(self) -> bool:
        return not self.total > 0.0

    def argmax(self) -> tuple[int, int]:
        """Returns the (x, y) of the first maximum in row-major order."""
        y, x = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return int(x), int(y)

    def __repr__(self):
        return f"DensityMap({self.width}x{self.height}, normalized={self.normalized})"


class MapViolation(IntEnum):
    EMPTY_MAP = auto()
    NON_FINITE = auto()
    NEGATIVE_VALUE = auto()
    NOT_NORMALIZED = auto()


_VIOLATION_ERRORS = {
    MapViolation.EMPTY_MAP: EmptyMap,
    MapViolation.NON_FINITE: NonFinite,
    MapViolation.NEGATIVE_VALUE: NegativeValue,
    MapViolation.NOT_NORMALIZED: NotNormalized,
}


@dataclass(frozen=True)
class ValidationResult:
    valid: bool
    violation: MapViolation | None = None
    message: str = ""

    def raise_if_invalid(self) -> None:
        if not self.valid:
            raise _VIOLATION_ERRORS[self.violation](self.message)


def validate_map(density: DensityMap) -> ValidationResult:
    """Checks the DensityMap invariants and reports the first violation."""
    values = density.values
    if values.size == 0:
        return ValidationResult(False, MapViolation.EMPTY_MAP, f"empty map {values.shape}")

    finite = np.isfinite(values)
    if not finite.all():
        y, x = np.argwhere(~finite)[0]
        return ValidationResult(
            False, MapViolation.NON_FINITE, f"non-finite value {values[y, x]} at ({x}, {y})"
        )

    negative = values < 0
    if negative.any():
        y, x = np.argwhere(negative)[0]
        return ValidationResult(
            False, MapViolation.NEGATIVE_VALUE, f"negative value {values[y, x]} at ({x}, {y})"
        )

    if density.normalized:
        total = float(values.sum())
        if abs(total - 1.0) > NORMALIZED_TOLERANCE:
            return ValidationResult(
                False, MapViolation.NOT_NORMALIZED, f"map flagged normalized sums to {total}"
            )

    return ValidationResult(True)


def normalize_to_distribution(density: DensityMap) -> DensityMap:
    """Scales the map so that it sums to 1."""
    validate_map(density).raise_if_invalid()
    total = density.values.sum()
    if not total > 0.0:
        raise ZeroMass(f"cannot normalize a map with total mass {total}")
    return DensityMap(density.values / total, normalized=True)


@dataclass(frozen=True)
class Fixation:
    """A gaze point in zero-based pixel coordinates (x = column, y = row)."""

    x: int
    y: int
    observer: str = ""


def round_half_up(value: float) -> int:
    if not math.isfinite(value):
        raise NonFinite(f"Cannot round non-finite coordinate {value}")
    return int(math.floor(value + 0.5))


@dataclass(frozen=True, eq=False)
class FixationSet:
    """The fixations recorded on one image, pooled over all observers."""

    points: tuple[Fixation, ...]
    image_width: int
    image_height: int
    image_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if self.image_width < 1 or self.image_height < 1:
            raise ValueError(f"Invalid image size {self.image_width}x{self.image_height}")
        for p in self.points:
            if not (0 <= p.x < self.image_width and 0 <= p.y < self.image_height):
                raise OutOfBounds(
                    f"Fixation ({p.x}, {p.y}) outside {self.image_width}x{self.image_height}"
                    f" image {self.image_id!r}"
                )

    @classmethod
    def from_coordinates(
        cls,
        xs: Iterable[float],
        ys: Iterable[float],
        width: int,
        height: int,
        observers: Iterable[str] | None = None,
        image_id: str = "",
    ) -> "FixationSet":
        """Builds a set from possibly fractional coordinates, rounding half up."""
        xs = list(xs)
        ys = list(ys)
        if len(xs) != len(ys):
            raise ValueError(f"Got {len(xs)} x coordinates and {len(ys)} y coordinates")
        observers = [""] * len(xs) if observers is None else [str(o) for o in observers]
        points = [
            Fixation(round_half_up(x), round_half_up(y), o) for x, y, o in zip(xs, ys, observers)
        ]
        return cls(tuple(points), width, height, image_id)

    @cached_property
    def xs(self) -> np.ndarray:
        return np.fromiter((p.x for p in self.points), dtype=np.intp, count=len(self.points))

    @cached_property
    def ys(self) -> np.ndarray:
        return np.fromiter((p.y for p in self.points), dtype=np.intp, count=len(self.points))

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0

    @property
    def observers(self) -> set[str]:
        return {p.observer for p in self.points}

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[Fixation]:
        return iter(self.points)

    def __repr__(self):
        return (
            f"FixationSet({self.image_id!r}, {len(self.points)} points,"
            f" {self.image_width}x{self.image_height})"
        )
