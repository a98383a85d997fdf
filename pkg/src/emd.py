# Salbench
# Copyright 2026 - The Salbench Authors

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
import ot

from density_map import DensityMap, normalize_to_distribution, validate_map
from errors import NegativeValue, NumericalFailure, ShapeMismatch, UnbalancedProblem
from metrics import MetricScore

logger = logging.getLogger(__name__)

Cell = tuple[int, int]

BALANCE_TOLERANCE = 1e-9
PRUNE_MASS = 1e-12
FLOW_EPSILON = 1e-15
MAX_SIMPLEX_ITERATIONS = 10_000_000


@dataclass(frozen=True)
class EmdConfig:
    max_side: int = 32
    downsample: bool = True

    def __post_init__(self):
        if self.max_side < 2:
            raise ValueError(f"max_side must be >= 2, got {self.max_side}")


@dataclass(frozen=True)
class TransportProblem:
    """Balanced transport between grid cells, cells being (row, col).

    The ground cost is the Euclidean distance between cell centers.
    """

    supplies: tuple[tuple[Cell, float], ...]
    demands: tuple[tuple[Cell, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "supplies", tuple(self.supplies))
        object.__setattr__(self, "demands", tuple(self.demands))
        for cell, mass in self.supplies + self.demands:
            if mass < 0 or not math.isfinite(mass):
                raise NegativeValue(f"Invalid mass {mass} at cell {cell}")

    @classmethod
    def from_maps(cls, source: np.ndarray, target: np.ndarray) -> "TransportProblem":
        def cells(grid: np.ndarray) -> tuple[tuple[Cell, float], ...]:
            rows, cols = np.nonzero(grid >= PRUNE_MASS)
            return tuple(((int(r), int(c)), float(grid[r, c])) for r, c in zip(rows, cols))

        return cls(cells(source), cells(target))

    @property
    def total_supply(self) -> float:
        return math.fsum(m for _, m in self.supplies)

    @property
    def total_demand(self) -> float:
        return math.fsum(m for _, m in self.demands)

    def cost_matrix(self) -> np.ndarray:
        src = np.array([c for c, _ in self.supplies], dtype=np.float64).reshape(-1, 2)
        dst = np.array([c for c, _ in self.demands], dtype=np.float64).reshape(-1, 2)
        return ot.dist(src, dst, metric="euclidean")


@dataclass(frozen=True)
class TransportSolution:
    cost: float
    flows: tuple[tuple[Cell, Cell, float], ...]


def solve_transport(problem: TransportProblem) -> TransportSolution:
    """Exact minimum-cost transport with the network simplex solver."""
    supply, demand = problem.total_supply, problem.total_demand
    if abs(supply - demand) > BALANCE_TOLERANCE:
        raise UnbalancedProblem(f"Supplies sum to {supply} but demands sum to {demand}")
    if not problem.supplies or not problem.demands or supply == 0.0:
        return TransportSolution(0.0, ())

    a = np.array([m for _, m in problem.supplies], dtype=np.float64)
    b = np.array([m for _, m in problem.demands], dtype=np.float64)
    # the solver wants exactly equal marginals
    b *= a.sum() / b.sum()
    cost = problem.cost_matrix()

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        plan, log = ot.emd(a, b, cost, numItermax=MAX_SIMPLEX_ITERATIONS, log=True)
    solver_warnings = [w for w in caught if issubclass(w.category, UserWarning)]
    if log.get("warning") or solver_warnings:
        message = log.get("warning") or str(solver_warnings[0].message)
        raise NumericalFailure(f"Transport solver did not converge: {message}")

    flows = []
    for i, j in zip(*np.nonzero(plan > FLOW_EPSILON)):
        flows.append((problem.supplies[i][0], problem.demands[j][0], float(plan[i, j])))
    value = float((plan * cost).sum())
    logger.debug(f"Transport {len(a)}x{len(b)} cells, {len(flows)} flows, cost {value:.6g}")
    return TransportSolution(value, tuple(flows))


def emd_downsample_factor(width: int, height: int, cfg: EmdConfig) -> int:
    if not cfg.downsample:
        return 1
    return max(1, math.ceil(max(width, height) / cfg.max_side))


def block_sum(values: np.ndarray, factor: int) -> np.ndarray:
    """Sums factor x factor blocks, zero-padding the bottom and right edges."""
    if factor == 1:
        return values
    h, w = values.shape
    padded = np.pad(values, ((0, -h % factor), (0, -w % factor)))
    ph, pw = padded.shape
    return padded.reshape(ph // factor, factor, pw // factor, factor).sum(axis=(1, 3))


def emd_metric(sal: DensityMap, gt: DensityMap, cfg: EmdConfig | None = None) -> MetricScore:
    """Earth mover's distance in (downsampled) pixel units."""
    cfg = cfg or EmdConfig()
    validate_map(sal).raise_if_invalid()
    validate_map(gt).raise_if_invalid()
    if sal.shape != gt.shape:
        raise ShapeMismatch(
            f"Map shapes differ: {sal.width}x{sal.height} vs {gt.width}x{gt.height}"
        )

    factor = emd_downsample_factor(sal.width, sal.height, cfg)
    p = block_sum(normalize_to_distribution(sal).values, factor)
    q = block_sum(normalize_to_distribution(gt).values, factor)
    problem = TransportProblem.from_maps(p, q)
    logger.debug(f"EMD downsample factor {factor}, grid {p.shape[1]}x{p.shape[0]}")
    return MetricScore(solve_transport(problem).cost)
