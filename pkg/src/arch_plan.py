# Salbench
# Copyright 2026 - The Salbench Authors

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any

import toml

from errors import InvalidSpec, ParseError

logger = logging.getLogger(__name__)


class BlockKind(str, Enum):
    CONV = "conv"
    POOL = "pool"
    STANDARD = "standard"
    RESIDUAL = "residual"
    DENSE = "dense"
    DUAL_PATH = "dual_path"


def dense_block_channels(h_in: int, layers: int, growth: int) -> int:
    """Every dense layer appends `growth` channels to the running concatenation."""
    return h_in + growth * layers


def dual_path_block_channels(residual_width: int, layers: int, growth: int) -> int:
    """The dense path starts at 2K and grows by K per layer; the residual path stays R."""
    return residual_width + (layers + 2) * growth


@dataclass(frozen=True)
class BlockSpec:
    name: str
    kind: BlockKind
    layers: int = 1
    growth: int = 0
    residual_width: int = 0
    out_channels: int | None = None
    compression: float | None = None
    stride: int = 1
    dilation: int = 1

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", BlockKind(self.kind))
        except ValueError:
            raise InvalidSpec(f"Stage {self.name!r}: unknown kind {self.kind!r}") from None
        if self.stride not in (1, 2):
            raise InvalidSpec(f"Stage {self.name!r}: stride must be 1 or 2, got {self.stride}")
        if self.dilation < 1:
            raise InvalidSpec(f"Stage {self.name!r}: dilation must be >= 1, got {self.dilation}")
        if self.layers < 1:
            raise InvalidSpec(f"Stage {self.name!r}: needs at least one layer")
        if self.kind in (BlockKind.DENSE, BlockKind.DUAL_PATH) and self.growth < 1:
            raise InvalidSpec(f"Stage {self.name!r}: growth rate must be >= 1")
        if self.kind == BlockKind.DUAL_PATH and self.residual_width < 1:
            raise InvalidSpec(f"Stage {self.name!r}: residual width must be >= 1")
        one_width = (self.out_channels is None) != (self.compression is None)
        if self.kind == BlockKind.CONV and not one_width:
            raise InvalidSpec(
                f"Stage {self.name!r}: conv needs exactly one of out_channels or compression"
            )

    def output_channels(self, in_channels: int) -> int:
        match self.kind:
            case BlockKind.CONV:
                if self.out_channels is not None:
                    return self.out_channels
                return int(in_channels * self.compression)
            case BlockKind.POOL:
                return in_channels
            case BlockKind.STANDARD | BlockKind.RESIDUAL:
                return in_channels if self.out_channels is None else self.out_channels
            case BlockKind.DENSE:
                return dense_block_channels(in_channels, self.layers, self.growth)
            case BlockKind.DUAL_PATH:
                return dual_path_block_channels(self.residual_width, self.layers, self.growth)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "BlockSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidSpec(f"Stage {d.get('name')!r}: unknown keys {sorted(unknown)}")
        if "name" not in d or "kind" not in d:
            raise InvalidSpec(f"Stage needs a name and a kind: {d}")
        return cls(**d)


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    input_channels: int
    stages: tuple[BlockSpec, ...]
    readout_layers: int = 0
    multipath: bool = True

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise InvalidSpec(f"Network {self.name!r} has no stages")
        if self.input_channels < 1:
            raise InvalidSpec(f"Network {self.name!r}: input_channels must be >= 1")
        if not 0 <= self.readout_layers <= 3:
            raise InvalidSpec(f"Network {self.name!r}: readout_layers must be in 0..3")

    def with_readout_layers(self, n: int) -> "NetworkSpec":
        return NetworkSpec(self.name, self.input_channels, self.stages, n, self.multipath)


def load_network_spec(filename: str) -> NetworkSpec:
    try:
        with open(filename, "r", encoding="utf-8") as f:
            d = toml.load(f)
    except toml.TomlDecodeError as e:
        raise ParseError(e.msg, filename, e.lineno) from e

    try:
        stages = tuple(BlockSpec.from_dict(s) for s in d.get("stages", []))
        return NetworkSpec(
            name=d["name"],
            input_channels=d.get("input_channels", 3),
            stages=stages,
            readout_layers=d.get("readout_layers", 0),
            multipath=d.get("multipath", True),
        )
    except KeyError as e:
        raise ParseError(f"missing key {e}", filename) from e
    except TypeError as e:
        raise ParseError(str(e), filename) from e


@dataclass(frozen=True)
class LayerRow:
    stage: str
    out_channels: int
    size_full: Fraction
    size_half: Fraction


@dataclass(frozen=True)
class LayerPlan:
    name: str
    rows: tuple[LayerRow, ...]
    concatenation: LayerRow | None = None
    readout: LayerRow | None = None

    @property
    def channels(self) -> tuple[int, ...]:
        return tuple(r.out_channels for r in self.rows)

    @property
    def final_size(self) -> Fraction:
        return self.rows[-1].size_full


def plan_network(spec: NetworkSpec) -> LayerPlan:
    """Per-stage widths and output sizes, as fractions of the input image side."""
    rows = []
    channels = spec.input_channels
    size = Fraction(1)
    for stage in spec.stages:
        channels = stage.output_channels(channels)
        if channels < 1:
            raise InvalidSpec(f"Stage {stage.name!r} produces {channels} channels")
        size /= stage.stride
        rows.append(LayerRow(stage.name, channels, size, size / 2))

    concatenation = None
    if spec.multipath:
        concatenation = LayerRow("Concatenation", 2 * channels, size, size)
    readout_size = size * 2**spec.readout_layers
    readout = LayerRow("Readout", 1, readout_size, readout_size)
    logger.debug(f"Planned {spec.name}: {len(rows)} stages, final size {size}")
    return LayerPlan(spec.name, tuple(rows), concatenation, readout)


@dataclass(frozen=True)
class ExpectationEntry:
    field: str
    expected: Any
    actual: Any
    note: str = ""


@dataclass
class ExpectationReport:
    matched: list[ExpectationEntry] = field(default_factory=list)
    mismatched: list[ExpectationEntry] = field(default_factory=list)
    known: list[ExpectationEntry] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatched


def load_expectations(filename: str) -> dict[str, Any]:
    try:
        with open(filename, "r", encoding="utf-8") as f:
            return toml.load(f)
    except toml.TomlDecodeError as e:
        raise ParseError(e.msg, filename, e.lineno) from e


def check_expectations(plan: LayerPlan, expect: dict[str, Any]) -> ExpectationReport:
    """Compares a plan against published values.

    Entries listed under `known_discrepancies` are reported apart and never
    count as failures.
    """
    actual: dict[str, Any] = {}
    if "network" in expect:
        actual["network"] = plan.name
    if "channels" in expect:
        actual["channels"] = list(plan.channels)
    if "sizes" in expect:
        actual["sizes"] = [str(r.size_full) for r in plan.rows]
    if "half_sizes" in expect:
        actual["half_sizes"] = [str(r.size_half) for r in plan.rows]
    if "final_size" in expect:
        actual["final_size"] = str(plan.final_size)
    if "half_size" in expect:
        actual["half_size"] = str(plan.rows[-1].size_half)
    if "concatenation" in expect:
        actual["concatenation"] = plan.concatenation.out_channels if plan.concatenation else None
    for row_name, value in expect.get("stages", {}).items():
        row = next((r for r in plan.rows if r.stage == row_name), None)
        actual[f"stages.{row_name}"] = row.out_channels if row else None

    expected = {k: v for k, v in expect.items() if k in actual}
    expected.update({f"stages.{k}": v for k, v in expect.get("stages", {}).items()})
    known = {d["field"]: d for d in expect.get("known_discrepancies", [])}

    report = ExpectationReport()
    for key, value in expected.items():
        entry = ExpectationEntry(key, value, actual[key], known.get(key, {}).get("note", ""))
        if value == actual[key]:
            report.matched.append(entry)
        elif key in known:
            report.known.append(entry)
        else:
            report.mismatched.append(entry)
    return report
