# Salbench
# Copyright 2026 - The Salbench Authors

import csv
import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import toml
from scipy import special

from errors import (
    DegenerateInput,
    DuplicateRecord,
    EmptyReport,
    MismatchedImageSets,
    MissingField,
    ParseError,
)
from metrics import METRICS, Polarity

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ("model", "image", "metric", "score", "flags")


def metric_order(name: str) -> int:
    order = list(METRICS)
    return order.index(name) if name in order else len(order)


@dataclass(frozen=True)
class ScoreRecord:
    model: str
    image: str
    metric: str
    score: float
    flags: str = ""

    @property
    def key(self) -> tuple[str, str, str]:
        return self.model, self.image, self.metric

    @property
    def is_error(self) -> bool:
        return math.isnan(self.score)


@dataclass(frozen=True)
class EvalReport:
    """Per-(model, image, metric) scores plus the settings that produced them."""

    records: tuple[ScoreRecord, ...]
    config: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        records = tuple(sorted(self.records, key=lambda r: r.key))
        for a, b in zip(records, records[1:]):
            if a.key == b.key:
                raise DuplicateRecord(f"Duplicate score for {a.key}")
        object.__setattr__(self, "records", records)

    @classmethod
    def merge(cls, *reports: "EvalReport") -> "EvalReport":
        """Merges partial reports, typically from parallel workers."""
        configs = [r.config for r in reports if r.config]
        if any(c != configs[0] for c in configs[1:]):
            raise ValueError("Cannot merge reports produced with different settings")
        records = [rec for r in reports for rec in r.records]
        return cls(tuple(records), configs[0] if configs else {})

    @classmethod
    def from_csv(cls, filename: str) -> "EvalReport":
        records = []
        with open(filename, "r", encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None or tuple(header) != REPORT_COLUMNS:
                raise ParseError(f"expected header {','.join(REPORT_COLUMNS)}", filename, 1)
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(REPORT_COLUMNS):
                    raise ParseError(f"expected 5 columns, got {len(row)}", filename, lineno)
                model, image, metric, score, flags = row
                try:
                    value = float(score)
                except ValueError:
                    raise ParseError(f"invalid score {score!r}", filename, lineno) from None
                records.append(ScoreRecord(model, image, metric, value, flags))
        return cls(tuple(records))

    @property
    def models(self) -> list[str]:
        return sorted({r.model for r in self.records})

    @property
    def metrics(self) -> list[str]:
        return sorted({r.metric for r in self.records}, key=lambda m: (metric_order(m), m))

    @property
    def flagged(self) -> list[ScoreRecord]:
        return [r for r in self.records if r.flags]

    def images_for(self, model: str, metric: str) -> set[str]:
        return {r.image for r in self.records if r.model == model and r.metric == metric}


@dataclass(frozen=True)
class AggregateRow:
    model: str
    metric: str
    mean: float
    n_images: int
    n_flagged: int


def aggregate(report: EvalReport) -> list[AggregateRow]:
    """Unweighted mean over images per (model, metric).

    Degenerate images keep their sentinel score. Error rows have no score:
    they are left out of the mean and only counted as flagged.
    """
    if not report.records:
        raise EmptyReport("Cannot aggregate an empty report")

    groups: dict[tuple[str, str], list[ScoreRecord]] = defaultdict(list)
    for r in report.records:
        groups[(r.model, r.metric)].append(r)

    rows = []
    for (model, metric), records in groups.items():
        scores = [r.score for r in records if not r.is_error]
        mean = math.fsum(scores) / len(scores) if scores else math.nan
        n_flagged = sum(1 for r in records if r.flags)
        rows.append(AggregateRow(model, metric, mean, len(records), n_flagged))
    rows.sort(key=lambda row: (row.model, metric_order(row.metric), row.metric))
    return rows


@dataclass(frozen=True)
class PearsonResult:
    r: float
    p: float
    n: int


def pearson(xs: Sequence[float], ys: Sequence[float]) -> PearsonResult:
    """Pearson r with a two-sided t-test p-value on n - 2 degrees of freedom."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateInput(f"Series must be 1-D and equally long, got {x.shape} and {y.shape}")
    n = len(x)
    if n < 3:
        raise DegenerateInput(f"Need at least 3 points, got {n}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = (dx * dx).sum(), (dy * dy).sum()
    if sxx == 0 or syy == 0:
        raise DegenerateInput("Correlation of a constant series is undefined")

    r = float(np.clip((dx * dy).sum() / math.sqrt(sxx * syy), -1.0, 1.0))
    if abs(r) == 1.0:
        return PearsonResult(r, 0.0, n)
    df = n - 2
    t2 = r * r * df / (1.0 - r * r)
    p = float(special.betainc(df / 2.0, 0.5, df / (df + t2)))
    return PearsonResult(r, p, n)


@dataclass(frozen=True)
class BackboneInfo:
    """Classification backbone metadata, as published. Nothing here is recomputed."""

    name: str
    layers: int
    params_millions: float
    top1: float
    top5: float | None = None


def load_catalog(filename: str) -> dict[str, BackboneInfo]:
    try:
        with open(filename, "r", encoding="utf-8") as f:
            d = toml.load(f)
    except toml.TomlDecodeError as e:
        raise ParseError(e.msg, filename, e.lineno) from e

    catalog = {}
    for entry in d.get("backbones", []):
        try:
            info = BackboneInfo(
                entry["name"],
                int(entry["layers"]),
                float(entry["params_millions"]),
                float(entry["top1"]),
                float(entry["top5"]) if "top5" in entry else None,
            )
        except KeyError as e:
            raise MissingField(f"backbone entry misses {e}", filename) from e
        catalog[info.name.lower()] = info
    return catalog


@dataclass(frozen=True)
class CorrelationPoint:
    model: str
    x: float
    y: float


@dataclass(frozen=True)
class CorrelationStudy:
    """Saliency score of each model against its backbone's top-1 accuracy."""

    metric: str
    points: tuple[CorrelationPoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if len(self.points) < 3:
            raise DegenerateInput(f"A correlation study needs >= 3 models, got {len(self.points)}")
        for p in self.points:
            if not 0.0 <= p.x <= 100.0:
                raise ValueError(f"Top-1 accuracy of {p.model!r} must be a percentage, got {p.x}")

    @classmethod
    def from_csv(cls, filename: str, metric: str = "score") -> "CorrelationStudy":
        points = []
        with open(filename, "r", encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["model", "top1", "score"]:
                raise ParseError("expected header model,top1,score", filename, 1)
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    model, top1, score = row
                    points.append(CorrelationPoint(model.strip(), float(top1), float(score)))
                except ValueError as e:
                    raise ParseError(str(e), filename, lineno) from None
        return cls(metric, tuple(points))

    @classmethod
    def from_report(
        cls, report: EvalReport, metric: str, catalog: dict[str, BackboneInfo]
    ) -> "CorrelationStudy":
        points = []
        for row in aggregate(report):
            if row.metric != metric:
                continue
            info = catalog.get(row.model.lower())
            if info is None:
                logger.warning(f"Model {row.model!r} is not in the backbone catalog, skipped")
                continue
            points.append(CorrelationPoint(row.model, info.top1, row.mean))
        return cls(metric, tuple(points))

    @property
    def xs(self) -> list[float]:
        return [p.x for p in self.points]

    @property
    def ys(self) -> list[float]:
        return [p.y for p in self.points]

    def correlation(self) -> PearsonResult:
        return pearson(self.xs, self.ys)


@dataclass(frozen=True)
class ComparisonCell:
    value: float
    best: bool = False


@dataclass(frozen=True)
class ComparisonRow:
    model: str
    cells: dict[str, ComparisonCell]
    baseline: bool = False


@dataclass(frozen=True)
class ComparisonTable:
    metrics: tuple[str, ...]
    rows: tuple[ComparisonRow, ...]

    def best_models(self, metric: str) -> list[str]:
        return [row.model for row in self.rows if row.cells[metric].best]


def compare_models(
    reports: Iterable[EvalReport], baseline: str | None = None, metrics: Sequence[str] | None = None
) -> ComparisonTable:
    """Builds a model-by-metric table of means with the best model of each column marked."""
    report = EvalReport.merge(*reports)
    if not report.records:
        raise EmptyReport("Nothing to compare")
    metrics = tuple(metrics) if metrics else tuple(report.metrics)
    models = report.models
    missing = [metric for metric in metrics if metric not in report.metrics]
    if missing:
        raise EmptyReport(f"No scores for {', '.join(missing)}; reports hold {report.metrics}")

    for metric in metrics:
        image_sets = {m: frozenset(report.images_for(m, metric)) for m in models}
        if len(set(image_sets.values())) > 1:
            sizes = ", ".join(f"{m}: {len(s)}" for m, s in image_sets.items())
            raise MismatchedImageSets(
                f"Models were scored on different images for {metric}: {sizes}"
            )

    means = {(row.model, row.metric): row.mean for row in aggregate(report)}
    best: dict[str, float] = {}
    for metric in metrics:
        values = [means[(m, metric)] for m in models if not math.isnan(means[(m, metric)])]
        if not values:
            continue
        lower = metric in METRICS and METRICS[metric].polarity == Polarity.LOWER_IS_BETTER
        best[metric] = min(values) if lower else max(values)

    if baseline is not None and baseline not in models:
        raise ValueError(f"Baseline {baseline!r} is not among the models {models}")
    ordered = sorted(models, key=lambda m: (m != baseline, m))

    rows = []
    for model in ordered:
        cells = {}
        for metric in metrics:
            value = means[(model, metric)]
            cells[metric] = ComparisonCell(value, metric in best and value == best[metric])
        rows.append(ComparisonRow(model, cells, model == baseline))
    return ComparisonTable(metrics, tuple(rows))
