# Salbench
# Copyright 2026 - The Salbench Authors

import csv
import logging
import math
import os.path
import struct

import numpy as np

from density_map import DensityMap, FixationSet
from errors import NonFinite, ParseError

logger = logging.getLogger(__name__)

MAGIC = b"FBM1"
HEADER = struct.Struct("<4sII")
FIXATION_HEADER = ("x", "y", "observer")


def map_format_for(filename: str) -> str:
    return "csv" if os.path.splitext(filename)[1].lower() == ".csv" else "binary"


def write_binary_map(filename: str, density: DensityMap) -> None:
    """Writes magic, u32 width, u32 height, then float64 values row-major, all little-endian."""
    with open(filename, "wb") as f:
        f.write(HEADER.pack(MAGIC, density.width, density.height))
        f.write(density.values.astype("<f8").tobytes(order="C"))


def read_binary_map(filename: str) -> DensityMap:
    with open(filename, "rb") as f:
        data = f.read()
    if len(data) < HEADER.size:
        raise ParseError(f"truncated header ({len(data)} bytes)", filename)
    magic, width, height = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}, expected {MAGIC!r}", filename)
    payload = len(data) - HEADER.size
    if width < 1 or height < 1 or payload != width * height * 8:
        raise ParseError(
            f"header says {width}x{height} but payload holds {payload} bytes", filename
        )
    values = np.frombuffer(data, dtype="<f8", offset=HEADER.size).reshape(height, width)
    if not np.isfinite(values).all():
        raise NonFinite(f"{filename}: map holds non-finite values")
    return DensityMap(values.astype(np.float64))


def write_csv_map(filename: str, density: DensityMap) -> None:
    np.savetxt(filename, density.values, fmt="%.17g", delimiter=",")


def read_csv_map(filename: str) -> DensityMap:
    try:
        values = np.loadtxt(filename, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as e:
        raise ParseError(str(e), filename) from e
    if not np.isfinite(values).all():
        raise NonFinite(f"{filename}: map holds non-finite values")
    return DensityMap(values)


def read_map(filename: str) -> DensityMap:
    if map_format_for(filename) == "csv":
        return read_csv_map(filename)
    return read_binary_map(filename)


def write_map(filename: str, density: DensityMap, map_format: str | None = None) -> None:
    map_format = map_format or map_format_for(filename)
    if map_format == "csv":
        write_csv_map(filename, density)
    elif map_format == "binary":
        write_binary_map(filename, density)
    else:
        raise ValueError(f"Unknown map format {map_format!r}")
    logger.debug(f"Wrote {density} to {filename}")


def read_fixation_file(filename: str, width: int, height: int, image_id: str = "") -> FixationSet:
    """Reads `x,y,observer` rows. Fractional coordinates are rounded half up."""
    try:
        xs, ys, observers = _read_fixation_rows(filename)
    except UnicodeDecodeError as e:
        raise ParseError(f"not UTF-8 text: {e.reason}", filename) from None
    return FixationSet.from_coordinates(xs, ys, width, height, observers, image_id)


def _read_fixation_rows(filename: str) -> tuple[list[float], list[float], list[str]]:
    xs, ys, observers = [], [], []
    with open(filename, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != FIXATION_HEADER:
            raise ParseError("expected header x,y,observer", filename, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 columns, got {len(row)}", filename, lineno)
            try:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
            except ValueError:
                raise ParseError(f"invalid coordinate in {row}", filename, lineno) from None
            if not (math.isfinite(xs[-1]) and math.isfinite(ys[-1])):
                raise ParseError(f"non-finite coordinate in {row}", filename, lineno)
            observers.append(row[2].strip())
    return xs, ys, observers


def write_fixation_file(filename: str, fix: FixationSet) -> None:
    with open(filename, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(FIXATION_HEADER)
        for p in fix:
            writer.writerow((p.x, p.y, p.observer))
