# Salbench
# Copyright 2026 - The Salbench Authors

import dataclasses
import logging
import os
from dataclasses import dataclass, field
from typing import Any

import toml

from emd import EmdConfig
from errors import ParseError
from ground_truth import BlurSpec
from metrics import METRICS, AucConfig, MetricKind, metrics_of_kind
from seeded_rng import SeededRng

logger = logging.getLogger(__name__)

ALL_METRICS = tuple(METRICS)

METRIC_PRESETS = {
    "all": ALL_METRICS,
    **{kind.value: metrics_of_kind(kind) for kind in MetricKind},
    # cheap enough for large datasets
    "fast": ("sim", "cc", "nss", "kl"),
}

MAP_FORMATS = ("binary", "csv")


def parse_metrics(text: str | list[str] | tuple[str, ...]) -> tuple[str, ...]:
    """Expands a comma list of metric names and presets, in table order."""
    names = text.split(",") if isinstance(text, str) else list(text)
    selected = set()
    for name in (n.strip().lower() for n in names):
        if not name:
            continue
        if name in METRIC_PRESETS:
            selected.update(METRIC_PRESETS[name])
        elif name in METRICS:
            selected.add(name)
        else:
            choices = ", ".join([*METRIC_PRESETS, *METRICS])
            raise ValueError(f"Unknown metric {name!r}, choose from: {choices}")
    if not selected:
        raise ValueError("No metric selected")
    return tuple(m for m in ALL_METRICS if m in selected)


@dataclass
class EvalSettings:
    seed: int = 0
    splits: int = 100
    emd_max_side: int = 32
    emd_downsample: bool = True
    metrics: tuple[str, ...] = ALL_METRICS
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    sigma_degrees: float = 1.0
    truncation_radius: float = 4.0
    map_format: str = "binary"

    def __post_init__(self):
        self.metrics = parse_metrics(self.metrics)
        if self.splits < 1:
            raise ValueError(f"splits must be >= 1, got {self.splits}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")
        if self.map_format not in MAP_FORMATS:
            raise ValueError(f"map_format must be one of {MAP_FORMATS}, got {self.map_format!r}")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EvalSettings":
        """Merges `d` over the defaults. Unknown keys are logged and ignored."""
        known = {f.name for f in dataclasses.fields(cls)}
        for key in sorted(set(d) - known):
            logger.warning(f"Ignoring unknown setting {key!r}")
        return cls(**{k: v for k, v in d.items() if k in known})

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["metrics"] = list(self.metrics)
        return d

    @classmethod
    def load_from_filename(cls, filename: str) -> "EvalSettings":
        try:
            with open(filename, "r", encoding="utf-8") as f:
                d = toml.load(f)
        except toml.TomlDecodeError as e:
            raise ParseError(e.msg, filename, e.lineno) from e
        logger.info(f"Loaded settings from {filename}")
        return cls.from_dict(d.get("eval", d))

    def with_overrides(self, **overrides: Any) -> "EvalSettings":
        """Returns a copy where every override that is not None wins."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **changes)

    @property
    def auc_config(self) -> AucConfig:
        return AucConfig(self.splits, SeededRng(self.seed))

    @property
    def emd_config(self) -> EmdConfig:
        return EmdConfig(self.emd_max_side, self.emd_downsample)

    @property
    def blur_spec(self) -> BlurSpec:
        return BlurSpec(self.sigma_degrees, self.truncation_radius)

    def echo(self) -> dict[str, Any]:
        """Settings that decide the scores, as recorded in every report.

        Worker count is left out: it never changes a score.
        """
        d = self.to_dict()
        del d["jobs"]
        d["aggregation"] = "mean over images"
        d["emd_unit"] = "downsampled pixels"
        return d
