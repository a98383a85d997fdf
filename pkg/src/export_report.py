# Salbench
# Copyright 2026 - The Salbench Authors

import csv
import io
import logging
import math
from typing import TextIO

import numpy as np

from analysis import (
    REPORT_COLUMNS,
    AggregateRow,
    ComparisonTable,
    CorrelationStudy,
    EvalReport,
    PearsonResult,
    aggregate,
)
from arch_plan import ExpectationReport, LayerPlan
from metrics import METRICS

logger = logging.getLogger(__name__)


def _format_score(value: float, digits: int = 3) -> str:
    return "n/a" if math.isnan(value) else f"{value:.{digits}f}"


def _metric_header(metric: str) -> str:
    info = METRICS.get(metric)
    return f"{info.label} {info.polarity.value}" if info else metric


def _table(file: TextIO, header: list[str], rows: list[list[str]]) -> None:
    file.write("| " + " | ".join(header) + " |\n")
    file.write("|" + "|".join("---" for _ in header) + "|\n")
    for row in rows:
        file.write("| " + " | ".join(row) + " |\n")


class ExportReport:
    """
    Writes evaluation results next to each other: `<stem>.csv` with one row
    per score and `<stem>.md` with the settings and the aggregate table.
    """

    def __init__(self, stem: str):
        """
        Args:
            stem: Output path without extension.
        """
        self._stem = stem
        logger.info(f"Exporting report to {stem}.csv and {stem}.md")

    @property
    def csv_filename(self) -> str:
        return f"{self._stem}.csv"

    @property
    def markdown_filename(self) -> str:
        return f"{self._stem}.md"

    def write(self, report: EvalReport) -> None:
        write_report_csv(report, self.csv_filename)
        with open(self.markdown_filename, "w", encoding="utf-8") as f:
            f.write(report_markdown(report))


def write_report_csv(report: EvalReport, filename: str) -> None:
    # repr keeps every bit of the float, so equal runs give equal bytes
    with open(filename, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in report.records:
            writer.writerow((r.model, r.image, r.metric, repr(r.score), r.flags))


def _aggregate_rows(rows: list[AggregateRow]) -> list[list[str]]:
    return [
        [
            r.model,
            _metric_header(r.metric),
            _format_score(r.mean, 6),
            str(r.n_images),
            str(r.n_flagged),
        ]
        for r in rows
    ]


def report_markdown(report: EvalReport) -> str:
    out = io.StringIO()
    out.write("# Evaluation report\n\n## Settings\n\n")
    for key, value in sorted(report.config.items()):
        out.write(f"- `{key}`: {value}\n")
    out.write("\n## Aggregate scores\n\n")
    if report.records:
        header = ["Model", "Metric", "Mean", "Images", "Flagged"]
        _table(out, header, _aggregate_rows(aggregate(report)))
    else:
        out.write("No scores.\n")
    return out.getvalue()


def comparison_markdown(table: ComparisonTable) -> str:
    """Model-by-metric table; the best value of every column is bold."""
    out = io.StringIO()
    header = ["Model"] + [_metric_header(m) for m in table.metrics]
    rows = []
    for row in table.rows:
        name = f"{row.model} (baseline)" if row.baseline else row.model
        cells = []
        for metric in table.metrics:
            cell = row.cells[metric]
            text = _format_score(cell.value)
            cells.append(f"**{text}**" if cell.best else text)
        rows.append([name] + cells)
    _table(out, header, rows)
    return out.getvalue()


def plan_markdown(plan: LayerPlan) -> str:
    out = io.StringIO()
    out.write(f"## {plan.name}\n\n")
    rows = [[r.stage, str(r.out_channels), str(r.size_full), str(r.size_half)] for r in plan.rows]
    if plan.concatenation:
        c = plan.concatenation
        rows.append([c.stage, str(c.out_channels), str(c.size_full), "-"])
    if plan.readout:
        r = plan.readout
        rows.append([r.stage, str(r.out_channels), str(r.size_full), "-"])
    _table(out, ["Layer", "Channels", "Output size x1.0", "Output size x0.5"], rows)
    return out.getvalue()


def expectations_markdown(report: ExpectationReport) -> str:
    out = io.StringIO()
    rows = []
    for status, entries in (
        ("ok", report.matched),
        ("MISMATCH", report.mismatched),
        ("known", report.known),
    ):
        for e in entries:
            rows.append([e.field, str(e.expected), str(e.actual), status, e.note])
    _table(out, ["Field", "Published", "Computed", "Status", "Note"], rows)
    return out.getvalue()


def write_scatter_csv(study: CorrelationStudy, filename: str) -> None:
    with open(filename, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("model", "top1", study.metric))
        for p in study.points:
            writer.writerow((p.model, repr(p.x), repr(p.y)))


def plot_scatter(study: CorrelationStudy, result: PearsonResult, filename: str) -> None:
    """Scatter of metric score against top-1 accuracy, with a least-squares line."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.scatter(study.xs, study.ys, color="tab:blue")
    for p in study.points:
        ax.annotate(p.model, (p.x, p.y), fontsize=7, xytext=(3, 3), textcoords="offset points")
    slope, intercept = np.polyfit(study.xs, study.ys, 1)
    xs = np.linspace(min(study.xs), max(study.xs), 2)
    ax.plot(xs, slope * xs + intercept, color="tab:red", linewidth=1)
    ax.set_xlabel("Top-1 accuracy (%)")
    ax.set_ylabel(_metric_header(study.metric))
    ax.set_title(f"r = {result.r:.3f}, p = {result.p:.3g}, n = {result.n}")
    fig.tight_layout()
    fig.savefig(filename, dpi=150)
    plt.close(fig)
    logger.info(f"Wrote scatter plot {filename}")
