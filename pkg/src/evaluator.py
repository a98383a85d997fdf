# Salbench
# Copyright 2026 - The Salbench Authors

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from analysis import EvalReport, ScoreRecord
from dataset_manifest import DatasetManifest, ManifestEntry
from density_map import DensityMap, FixationSet
from emd import emd_metric
from errors import EmptyNegativePool, SalbenchError
from ground_truth import make_ground_truth
from map_file import read_fixation_file, read_map
from metrics import MetricScore, auc_borji, auc_judd, cc, kl, nss, pool_fixations, sauc, sim
from settings import EvalSettings

logger = logging.getLogger(__name__)


def error_flag(e: Exception) -> str:
    return f"error:{type(e).__name__}"


def score_metric(
    name: str,
    sal: DensityMap,
    gt: DensityMap,
    fix: FixationSet,
    pool: FixationSet | None,
    settings: EvalSettings,
) -> MetricScore:
    match name:
        case "auc_judd":
            return auc_judd(sal, fix)
        case "auc_borji":
            return auc_borji(sal, fix, settings.auc_config)
        case "sauc":
            if pool is None:
                raise EmptyNegativePool(f"No other image fixations to shuffle for {fix.image_id!r}")
            return sauc(sal, fix, pool, settings.auc_config)
        case "nss":
            return nss(sal, fix)
        case "cc":
            return cc(sal, gt)
        case "sim":
            return sim(sal, gt)
        case "kl":
            return kl(gt, sal)
        case "emd":
            return emd_metric(sal, gt, settings.emd_config)
    raise ValueError(f"Unknown metric {name!r}")


@dataclass(frozen=True)
class ImageTask:
    """Everything one worker needs to score one image for every model."""

    entry: ManifestEntry
    models: tuple[str, ...]
    settings: EvalSettings
    fixations: FixationSet | None = None
    pool: FixationSet | None = None
    load_error: str = ""


@dataclass
class ImageResult:
    image_id: str
    records: list[ScoreRecord] = field(default_factory=list)
    elapsed: float = 0.0


def _error_rows(task: ImageTask, model: str, flag: str) -> list[ScoreRecord]:
    return [
        ScoreRecord(model, task.entry.image_id, m, math.nan, flag) for m in task.settings.metrics
    ]


def evaluate_image(task: ImageTask) -> ImageResult:
    """Scores every model map of one image. Never raises for library errors."""
    start = time.perf_counter()
    entry = task.entry
    result = ImageResult(entry.image_id)

    if task.fixations is None:
        for model in task.models:
            result.records.extend(_error_rows(task, model, task.load_error))
        return result

    try:
        if entry.ground_truth_path:
            gt = read_map(entry.ground_truth_path)
        else:
            gt = make_ground_truth(task.fixations, entry.pixels_per_degree, task.settings.blur_spec)
    except (SalbenchError, OSError) as e:
        logger.warning(f"{entry.image_id}: cannot build ground truth: {e}")
        for model in task.models:
            result.records.extend(_error_rows(task, model, error_flag(e)))
        return result

    for model in task.models:
        path = entry.map_paths.get(model)
        if path is None:
            result.records.extend(_error_rows(task, model, "error:MissingMap"))
            continue
        try:
            sal = read_map(path)
        except (SalbenchError, OSError) as e:
            logger.warning(f"{entry.image_id}/{model}: cannot read {path}: {e}")
            result.records.extend(_error_rows(task, model, error_flag(e)))
            continue

        for metric in task.settings.metrics:
            t0 = time.perf_counter()
            try:
                score = score_metric(metric, sal, gt, task.fixations, task.pool, task.settings)
            except SalbenchError as e:
                logger.warning(f"{entry.image_id}/{model}/{metric}: {type(e).__name__}: {e}")
                result.records.append(
                    ScoreRecord(model, entry.image_id, metric, math.nan, error_flag(e))
                )
                continue
            if score.flagged:
                logger.warning(f"{entry.image_id}/{model}/{metric}: {score.flags.describe()}")
            result.records.append(
                ScoreRecord(model, entry.image_id, metric, score.value, score.flags.describe())
            )
            logger.debug(
                f"{entry.image_id}/{model}/{metric} = {score.value:.6g}"
                f" in {time.perf_counter() - t0:.3f}s"
            )

    result.elapsed = time.perf_counter() - start
    return result


def load_fixations(manifest: DatasetManifest) -> dict[str, FixationSet | Exception]:
    loaded: dict[str, FixationSet | Exception] = {}
    for entry in manifest.entries:
        try:
            loaded[entry.image_id] = read_fixation_file(
                entry.fixation_path, entry.width, entry.height, entry.image_id
            )
        except (SalbenchError, OSError) as e:
            logger.warning(f"{entry.image_id}: cannot read fixations {entry.fixation_path}: {e}")
            loaded[entry.image_id] = e
    return loaded


def build_tasks(
    manifest: DatasetManifest, settings: EvalSettings, models: list[str] | None = None
) -> list[ImageTask]:
    models = tuple(models or manifest.models)
    fixations = load_fixations(manifest)
    valid = [f for f in fixations.values() if isinstance(f, FixationSet)]
    need_pool = "sauc" in settings.metrics

    tasks = []
    for entry in manifest.entries:
        fix = fixations[entry.image_id]
        if isinstance(fix, Exception):
            tasks.append(ImageTask(entry, models, settings, load_error=error_flag(fix)))
            continue
        pool = None
        if need_pool and any(f.image_id != entry.image_id and not f.is_empty for f in valid):
            pool = pool_fixations(valid, entry.image_id)
        tasks.append(ImageTask(entry, models, settings, fix, pool))
    return tasks


def run_eval(
    manifest: DatasetManifest, settings: EvalSettings, models: list[str] | None = None
) -> EvalReport:
    """Scores every (model, image, metric) of a manifest.

    Images run in parallel up to settings.jobs. Each image draws from its own
    random streams and results are sorted before assembly, so the report does
    not depend on the worker count or on completion order.
    """
    tasks = build_tasks(manifest, settings, models)
    logger.info(
        f"Evaluating {len(tasks)} images x {len(tasks[0].models) if tasks else 0} models"
        f" x {len(settings.metrics)} metrics with {settings.jobs} jobs"
    )

    if settings.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(settings.jobs, len(tasks))) as executor:
            results = list(executor.map(evaluate_image, tasks))
    else:
        results = [evaluate_image(t) for t in tasks]

    for r in results:
        logger.debug(f"{r.image_id}: {len(r.records)} scores in {r.elapsed:.2f}s")

    partial = [EvalReport(tuple(r.records), settings.echo()) for r in results]
    report = EvalReport.merge(*partial) if partial else EvalReport((), settings.echo())
    logger.info(f"Evaluated {len(report.records)} scores, {len(report.flagged)} flagged")
    return report
