# Salbench
# Copyright 2026 - The Salbench Authors

import logging
import os.path
import re
from dataclasses import dataclass, field

import toml

from errors import DuplicateImageId, MissingField, ParseError

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ("image_id", "width", "height", "pixels_per_degree", "fixations")


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    width: int
    height: int
    pixels_per_degree: float
    fixation_path: str
    map_paths: dict[str, str] = field(default_factory=dict)
    ground_truth_path: str | None = None


@dataclass(frozen=True)
class DatasetManifest:
    """The images of one dataset, with their fixation files and model maps.

    Pixels per degree has no default; the ground-truth blur is defined in degrees.
    """

    entries: tuple[ManifestEntry, ...]
    path: str = ""

    @property
    def image_ids(self) -> list[str]:
        return [e.image_id for e in self.entries]

    @property
    def models(self) -> list[str]:
        return sorted({m for e in self.entries for m in e.map_paths})

    def entry(self, image_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.image_id == image_id:
                return e
        raise KeyError(image_id)

    def __len__(self) -> int:
        return len(self.entries)


def _images_lines(text: str) -> list[int]:
    headers = re.finditer(r"^[ \t]*\[\[images\]\]", text, re.M)
    return [text.count("\n", 0, m.start()) + 1 for m in headers]


def load_manifest(filename: str) -> DatasetManifest:
    """Reads a TOML manifest with one [[images]] table per image.

    Relative paths are resolved against the manifest's directory.
    """
    with open(filename, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        d = toml.loads(text)
    except toml.TomlDecodeError as e:
        raise ParseError(e.msg, filename, e.lineno) from e

    base = os.path.dirname(os.path.abspath(filename))

    def resolve(p: str) -> str:
        return p if os.path.isabs(p) else os.path.normpath(os.path.join(base, p))

    images = d.get("images")
    if not isinstance(images, list):
        raise MissingField("no [[images]] tables", filename)
    table_lines = _images_lines(text)

    entries = []
    seen = set()
    for i, item in enumerate(images):
        line = table_lines[i] if i < len(table_lines) else None
        for key in REQUIRED_FIELDS:
            if key not in item:
                raise MissingField(f"image entry misses {key!r}", filename, line)
        image_id = str(item["image_id"])
        if image_id in seen:
            raise DuplicateImageId(f"image_id {image_id!r} appears twice", filename, line)
        seen.add(image_id)

        try:
            width, height = int(item["width"]), int(item["height"])
            ppd = float(item["pixels_per_degree"])
        except (TypeError, ValueError) as e:
            raise ParseError(f"{image_id}: {e}", filename, line) from None
        if width < 1 or height < 1:
            raise ParseError(f"{image_id}: invalid size {width}x{height}", filename, line)
        if not ppd > 0:
            raise ParseError(f"{image_id}: pixels_per_degree must be > 0", filename, line)

        maps = item.get("maps", {})
        if not isinstance(maps, dict):
            raise ParseError(f"{image_id}: maps must be a table of model = path", filename, line)
        gt = item.get("ground_truth")
        entries.append(
            ManifestEntry(
                image_id=image_id,
                width=width,
                height=height,
                pixels_per_degree=ppd,
                fixation_path=resolve(str(item["fixations"])),
                map_paths={str(m): resolve(str(p)) for m, p in maps.items()},
                ground_truth_path=resolve(str(gt)) if gt is not None else None,
            )
        )

    logger.info(f"Loaded manifest {filename}: {len(entries)} images")
    return DatasetManifest(tuple(entries), filename)
