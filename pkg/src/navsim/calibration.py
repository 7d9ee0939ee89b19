"""Metric scale calibration for maps with arbitrary internal units.

A map carries a reference: the physical length in centimetres that one
0.1-unit step of map distance corresponds to. Everything metric flows
through that single ratio.

Reported centimetre figures are truncated to one decimal place, toward
zero. Truncation sits on top of binary floats, so a guard of 1e-9 on the
tenths scale keeps values that are exactly on a boundary in decimal from
falling to the lower bucket (e.g. a computed 193.49999999999997 reports
as 193.5, while a genuine 193.49 still reports as 193.4).
"""

import csv
import io
import math
from dataclasses import dataclass

from .errors import MissingCalibration, NegativeDistance, NoCheckpoints
from .model import CheckPoint, Point3, WorldMap

REFERENCE_STEP = 0.1
TRUNCATION_GUARD = 1e-9

CSV_HEADER = ["label", "map_distance", "approx_cm", "actual_cm", "error_cm"]


def truncate_tenth(x: float) -> float:
    """Truncate toward zero at one decimal place, with an fp guard."""
    if not math.isfinite(x):
        raise ValueError(f"cannot truncate non-finite value {x}")
    scaled = x * 10.0
    if scaled >= 0.0:
        scaled = math.floor(scaled + TRUNCATION_GUARD)
    else:
        scaled = math.ceil(scaled - TRUNCATION_GUARD)
    return scaled / 10.0


@dataclass(frozen=True)
class ScaleCalibration:
    """Conversion between map units and centimetres.

    reference_cm is the physical length of one REFERENCE_STEP of map
    distance.
    """

    reference_cm: float

    def __post_init__(self):
        if not math.isfinite(self.reference_cm) or self.reference_cm <= 0:
            raise ValueError(f"reference_cm must be finite and > 0, got {self.reference_cm}")

    def map_to_cm(self, d: float) -> float:
        """Convert a map distance to centimetres (exact, no truncation)."""
        if d < 0:
            raise NegativeDistance(f"map distance {d} is negative")
        return d * self.reference_cm / REFERENCE_STEP

    def cm_to_map(self, cm: float) -> float:
        """Convert centimetres to map distance (exact, no truncation)."""
        if cm < 0:
            raise NegativeDistance(f"distance {cm} cm is negative")
        return cm * REFERENCE_STEP / self.reference_cm

    def report_cm(self, d: float) -> float:
        """Convert a map distance to cm and truncate to one decimal."""
        return truncate_tenth(self.map_to_cm(d))


def calibration_for(world: WorldMap) -> ScaleCalibration:
    """Calibration from a map's stored reference; raises if it has none."""
    if world.scale_reference_cm is None:
        raise MissingCalibration(f"map {world.name!r} has no scale_reference_cm")
    return ScaleCalibration(world.scale_reference_cm)


def planar_distance(a: Point3, b: Point3) -> float:
    """Distance in the horizontal plane; the vertical axis is ignored."""
    return math.hypot(b.x - a.x, b.z - a.z)


@dataclass(frozen=True)
class CheckpointRow:
    """One evaluated checkpoint: measured map span against ground truth."""

    label: str
    map_distance: float
    approx_cm: float
    actual_cm: float
    error_cm: float


def evaluate_checkpoint(cp: CheckPoint, calibration: ScaleCalibration) -> CheckpointRow:
    d = planar_distance(cp.endpoint_a, cp.endpoint_b)
    approx = calibration.report_cm(d)
    error = truncate_tenth(abs(approx - cp.actual_cm))
    return CheckpointRow(
        label=cp.label,
        map_distance=d,
        approx_cm=approx,
        actual_cm=cp.actual_cm,
        error_cm=error,
    )


def checkpoint_table(world: WorldMap) -> list[CheckpointRow]:
    """Evaluate every checkpoint in document order."""
    if not world.checkpoints:
        raise NoCheckpoints(f"map {world.name!r} has no checkpoints")
    calibration = calibration_for(world)
    return [evaluate_checkpoint(cp, calibration) for cp in world.checkpoints]


def mean_absolute_error(rows: list[CheckpointRow]) -> float:
    """Mean of the per-row errors. Rows carry already-truncated errors;
    the mean itself is not a reported single figure and keeps full
    precision."""
    if not rows:
        raise NoCheckpoints("no checkpoint rows to average")
    return sum(r.error_cm for r in rows) / len(rows)


def table_to_csv(rows: list[CheckpointRow]) -> str:
    """Render rows as CSV with a fixed header, one line per checkpoint."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([
            r.label,
            f"{r.map_distance:.9g}",
            f"{r.approx_cm:.1f}",
            f"{r.actual_cm:.9g}",
            f"{r.error_cm:.1f}",
        ])
    return buf.getvalue()
