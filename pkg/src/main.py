#!/usr/bin/env python3
# Salbench
# Copyright 2026 - The Salbench Authors

import argparse
import logging
import os
import sys

from analysis import CorrelationStudy, EvalReport, compare_models, load_catalog
from arch_plan import check_expectations, load_expectations, load_network_spec, plan_network
from dataset_manifest import load_manifest
from errors import SalbenchError
from evaluator import load_fixations, run_eval
from export_report import (
    ExportReport,
    comparison_markdown,
    expectations_markdown,
    plan_markdown,
    plot_scatter,
    write_scatter_csv,
)
from ground_truth import make_ground_truth
from map_file import write_map
from settings import EvalSettings, parse_metrics

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def _load_settings(args: argparse.Namespace) -> EvalSettings:
    settings = EvalSettings.load_from_filename(args.config) if args.config else EvalSettings()
    return settings.with_overrides(
        seed=getattr(args, "seed", None),
        splits=getattr(args, "splits", None),
        emd_max_side=getattr(args, "emd_max_side", None),
        metrics=getattr(args, "metrics", None),
        jobs=getattr(args, "jobs", None),
        map_format=getattr(args, "format", None),
    )


def cmd_gtgen(args: argparse.Namespace) -> int:
    settings = _load_settings(args)
    manifest = load_manifest(args.manifest)
    os.makedirs(args.output_dir, exist_ok=True)
    extension = "csv" if settings.map_format == "csv" else "fbm"

    fixations = load_fixations(manifest)
    failed = 0
    for entry in manifest.entries:
        fix = fixations[entry.image_id]
        try:
            if isinstance(fix, Exception):
                raise fix
            gt = make_ground_truth(fix, entry.pixels_per_degree, settings.blur_spec)
        except (SalbenchError, OSError) as e:
            logger.warning(f"{entry.image_id}: no ground truth: {e}")
            failed += 1
            continue
        filename = os.path.join(args.output_dir, f"{entry.image_id}.{extension}")
        write_map(filename, gt, settings.map_format)

    logger.info(f"Wrote {len(manifest) - failed} ground-truth maps to {args.output_dir}")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    settings = _load_settings(args)
    manifest = load_manifest(args.manifest)
    models = args.models.split(",") if args.models else None
    report = run_eval(manifest, settings, models)
    ExportReport(args.output).write(report)
    if report.flagged:
        logger.warning(f"{len(report.flagged)} rows are flagged")
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    reports = [EvalReport.from_csv(f) for f in args.reports]
    metrics = parse_metrics(args.metrics) if args.metrics else None
    table = compare_models(reports, args.baseline, metrics)
    text = comparison_markdown(table)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info(f"Wrote comparison table {args.output}")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_correlate(args: argparse.Namespace) -> int:
    if args.report:
        if not args.metric or not args.catalog:
            logger.error("--report needs --metric and --catalog")
            return EXIT_FATAL
        study = CorrelationStudy.from_report(
            EvalReport.from_csv(args.report), args.metric, load_catalog(args.catalog)
        )
    elif args.pairs:
        study = CorrelationStudy.from_csv(args.pairs, args.metric or "score")
    else:
        logger.error("Give either a pairs CSV or --report")
        return EXIT_FATAL

    result = study.correlation()
    print(f"r = {result.r:.6f}")
    print(f"p = {result.p:.6g}")
    print(f"n = {result.n}")
    if args.scatter:
        write_scatter_csv(study, args.scatter)
    if args.plot:
        plot_scatter(study, result, args.plot)
    return EXIT_OK


def cmd_archplan(args: argparse.Namespace) -> int:
    spec = load_network_spec(args.spec)
    if args.readout_layers is not None:
        spec = spec.with_readout_layers(args.readout_layers)
    plan = plan_network(spec)
    print(plan_markdown(plan), end="")
    if not args.expect:
        return EXIT_OK

    report = check_expectations(plan, load_expectations(args.expect))
    print()
    print(expectations_markdown(report), end="")
    for entry in report.known:
        logger.warning(f"Known discrepancy in {entry.field}: {entry.note}")
    if not report.ok:
        logger.error(f"{len(report.mismatched)} values differ from {args.expect}")
        return EXIT_FATAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Salbench - saliency map benchmarking")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    parser.add_argument("--log-file", help="Write the log to this file instead of stderr")
    parser.add_argument("--config", help="TOML settings file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gtgen", help="Build ground-truth maps from fixations")
    p.add_argument("manifest", help="Dataset manifest (TOML)")
    p.add_argument("--output-dir", "-o", default="ground_truth", help="Output directory")
    p.add_argument("--format", choices=("binary", "csv"), help="Map file format")
    p.set_defaults(func=cmd_gtgen)

    p = sub.add_parser("eval", help="Score model maps against the ground truth")
    p.add_argument("manifest", help="Dataset manifest (TOML)")
    p.add_argument("--output", "-o", default="report", help="Output path without extension")
    p.add_argument("--models", help="Comma separated models (default: all in the manifest)")
    p.add_argument("--seed", type=int, help="Master seed (default 0)")
    p.add_argument("--splits", type=int, help="AUC-Borji / sAUC splits (default 100)")
    p.add_argument("--emd-max-side", type=int, help="EMD grid side limit (default 32)")
    p.add_argument("--metrics", help="Comma list of metrics or presets: all, location, ...")
    p.add_argument("--jobs", "-j", type=int, help="Worker processes (default: all cores)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="Compare models from report CSVs")
    p.add_argument("reports", nargs="+", help="Report CSV files")
    p.add_argument("--baseline", help="Model listed first and tagged")
    p.add_argument("--metrics", help="Metrics to show (default: all in the reports)")
    p.add_argument("--output", "-o", help="Markdown output (default: stdout)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("correlate", help="Correlate saliency scores with top-1 accuracy")
    p.add_argument("pairs", nargs="?", help="CSV with header model,top1,score")
    p.add_argument("--report", help="Report CSV to aggregate instead of a pairs file")
    p.add_argument("--metric", help="Metric to correlate when using --report")
    p.add_argument("--catalog", help="Backbone catalog (TOML)")
    p.add_argument("--scatter", help="Write the points to this CSV")
    p.add_argument("--plot", help="Write a scatter plot to this PNG")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("archplan", help="Print the layer plan of a network spec")
    p.add_argument("spec", help="Network spec (TOML)")
    p.add_argument("--expect", help="Expectation file with published values")
    p.add_argument("--readout-layers", type=int, help="Override the number of readout layers")
    p.set_defaults(func=cmd_archplan)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        filename=args.log_file,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    try:
        return args.func(args)
    except (SalbenchError, OSError, ValueError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
