"""Synthetic maps for four reference path shapes, ground-truth turn
labeling, next-step accuracy, and the bundled checkpoint tables.

Shapes are flat polylines walked at fixed keyframe spacing; corners
bend left (counterclockwise in plan view). Ground-truth labels come
from an angular half-plane test on the ideal polyline, which the noisy
predictor is then scored against. With zero noise the predictor and the
oracle see identical geometry, so accuracy is exactly 100%.
"""

import math
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np

from .calibration import (
    REFERENCE_STEP,
    CheckpointRow,
    checkpoint_table,
    mean_absolute_error,
)
from .errors import (
    DegenerateGeometry,
    EmptyLabels,
    InvalidShapeParams,
    NoCheckpoints,
)
from .guidance import Direction, GuidanceConfig, next_step
from .mapio import load_map, quantize9
from .model import CheckPoint, KeyFrame, MapPoint, Point3, Pose, WorldMap

FRAME_RATE = 30.0
CORRIDOR_HALF_WIDTH = 0.5

# Straight-band for scoring runs. The runtime default (1e-6) is a
# floating-point colinearity guard; scoring needs a genuine turn-decision
# band, shared by labeler and predictor, wide enough that jitter smaller
# than the keyframe spacing does not read as a turn. 0.2 sits just below
# the weakest ideal corner signal at lookahead 5 (sine 1/sqrt(17) ~ 0.2425),
# so every corner keyframe still labels as a turn.
EVAL_COLINEAR_EPSILON = 0.2


@dataclass(frozen=True)
class PathShape:
    """A flat polyline: segment lengths in map units, corners turn left."""

    name: str
    segment_lengths: tuple[float, ...]
    reference_cm: float
    n_map_points: int
    spacing: float = 0.1

    def __post_init__(self):
        if self.spacing <= 0:
            raise InvalidShapeParams(f"spacing {self.spacing} must be > 0")
        if not self.segment_lengths or any(s <= 0 for s in self.segment_lengths):
            raise InvalidShapeParams("segment lengths must be non-empty and > 0")
        if self.reference_cm <= 0:
            raise InvalidShapeParams(f"reference_cm {self.reference_cm} must be > 0")
        if self.n_map_points < 0:
            raise InvalidShapeParams("n_map_points must be >= 0")

    @property
    def total_length(self) -> float:
        return sum(self.segment_lengths)

    def vertices(self) -> list[tuple[float, float]]:
        """Planar (x, z) corner positions, starting at the origin heading
        +Z, turning 90 degrees left after each segment."""
        out = [(0.0, 0.0)]
        dx, dz = 0.0, 1.0
        for length in self.segment_lengths:
            x, z = out[-1]
            out.append((x + dx * length, z + dz * length))
            dx, dz = -dz, dx
        return out


SHAPES: dict[str, PathShape] = {
    "straight": PathShape("straight", (4.9,), reference_cm=68.9, n_map_points=4770),
    "l": PathShape("l-shaped", (3.0, 3.0), reference_cm=74.6, n_map_points=5498),
    "u": PathShape("u-shaped", (3.6, 3.5, 3.6), reference_cm=66.6, n_map_points=10498),
    "square": PathShape("square", (2.8, 2.8, 2.8, 2.8), reference_cm=64.5, n_map_points=9743),
}


def _walk(vertices: list[tuple[float, float]], s: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """Position and unit direction at arc length s along the polyline."""
    remaining = s
    for (ax, az), (bx, bz) in zip(vertices, vertices[1:]):
        seg = math.hypot(bx - ax, bz - az)
        if remaining <= seg or (ax, az) == vertices[-2]:
            t = remaining / seg
            return (ax + t * (bx - ax), az + t * (bz - az)), ((bx - ax) / seg, (bz - az) / seg)
        remaining -= seg
    last_a, last_b = vertices[-2], vertices[-1]
    seg = math.hypot(last_b[0] - last_a[0], last_b[1] - last_a[1])
    return last_b, ((last_b[0] - last_a[0]) / seg, (last_b[1] - last_a[1]) / seg)


def keyframe_count(shape: PathShape) -> int:
    return round(shape.total_length / shape.spacing) + 1


def _heading_quaternion(dx: float, dz: float) -> tuple[float, float, float, float]:
    h = math.atan2(dx, dz)
    return (
        quantize9(math.cos(h / 2.0)),
        0.0,
        quantize9(math.sin(h / 2.0)),
        0.0,
    )


def generate_synthetic_map(
    shape: PathShape, noise_sigma: float = 0.0, seed: int = 0
) -> WorldMap:
    """Deterministic map for a shape: keyframes at fixed spacing along the
    polyline with lateral gaussian noise, map points scattered in a
    corridor around it, checkpoints at the segment endpoints."""
    if noise_sigma < 0:
        raise InvalidShapeParams(f"noise_sigma {noise_sigma} must be >= 0")

    rng = np.random.default_rng(seed)
    verts = shape.vertices()
    total = shape.total_length
    n = keyframe_count(shape)

    offsets = rng.normal(0.0, noise_sigma, size=n) if noise_sigma > 0 else np.zeros(n)
    keyframes = []
    for i in range(n):
        s = total * i / (n - 1)
        (x, z), (dx, dz) = _walk(verts, s)
        # lateral = left normal of the travel direction
        nx, nz = -dz, dx
        off = float(offsets[i])
        keyframes.append(
            KeyFrame(
                id=i,
                timestamp=quantize9(i / FRAME_RATE),
                pose=Pose(
                    position=Point3(
                        quantize9(x + off * nx), 0.0, quantize9(z + off * nz)
                    ),
                    orientation_wxyz=_heading_quaternion(dx, dz),
                ),
            )
        )

    arc = rng.uniform(0.0, total, size=shape.n_map_points)
    lateral = rng.uniform(-CORRIDOR_HALF_WIDTH, CORRIDOR_HALF_WIDTH, size=shape.n_map_points)
    map_points = []
    if shape.n_map_points:
        vx = np.array([v[0] for v in verts])
        vz = np.array([v[1] for v in verts])
        seg_len = np.hypot(np.diff(vx), np.diff(vz))
        cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        seg = np.clip(np.searchsorted(cum, arc, side="right") - 1, 0, len(seg_len) - 1)
        t = (arc - cum[seg]) / seg_len[seg]
        px = vx[seg] + t * (vx[seg + 1] - vx[seg])
        pz = vz[seg] + t * (vz[seg + 1] - vz[seg])
        dx = (vx[seg + 1] - vx[seg]) / seg_len[seg]
        dz = (vz[seg + 1] - vz[seg]) / seg_len[seg]
        px = px + lateral * -dz
        pz = pz + lateral * dx
        map_points = [
            MapPoint(id=j, position=Point3(quantize9(float(px[j])), 0.0, quantize9(float(pz[j]))))
            for j in range(shape.n_map_points)
        ]

    checkpoints = []
    for k, ((ax, az), (bx, bz)) in enumerate(zip(verts, verts[1:])):
        length = math.hypot(bx - ax, bz - az)
        checkpoints.append(
            CheckPoint(
                label=f"segment-{k + 1}",
                endpoint_a=Point3(quantize9(ax), 0.0, quantize9(az)),
                endpoint_b=Point3(quantize9(bx), 0.0, quantize9(bz)),
                actual_cm=quantize9(length * shape.reference_cm / REFERENCE_STEP),
            )
        )

    return WorldMap(
        name=f"{shape.name}-sim-seed{seed}",
        keyframes=keyframes,
        map_points=map_points,
        checkpoints=checkpoints,
        scale_reference_cm=shape.reference_cm,
    )


# ---------------------------------------------------------------------------
# ground truth and accuracy

@dataclass(frozen=True)
class DirectionLabel:
    keyframe_id: int
    label: Direction


@dataclass(frozen=True)
class AccuracyReport:
    map_name: str
    total: int
    true_positives: int

    @property
    def accuracy_percent(self) -> float:
        return 100.0 * self.true_positives / self.total if self.total else 0.0


def half_plane_direction(
    camera: Point3, anchor: Point3, lookahead: Point3, epsilon: float
) -> Direction:
    """Angular statement of the turn test: which side of the ray
    camera->anchor does the lookahead fall on.

    Bearings are measured clockwise from +Z; a negative wrapped bearing
    change is a left turn. The straight band |sin(delta)| <= epsilon
    matches the normalized-cross-product band exactly.
    """
    ta = math.atan2(anchor.x - camera.x, anchor.z - camera.z)
    tb = math.atan2(lookahead.x - camera.x, lookahead.z - camera.z)
    delta = math.atan2(math.sin(tb - ta), math.cos(tb - ta))
    if abs(math.sin(delta)) <= epsilon:
        return Direction.STRAIGHT
    return Direction.LEFT if delta < 0 else Direction.RIGHT


def _ideal_positions(world: WorldMap) -> list[Point3]:
    """Keyframe positions on the noise-free polyline recorded by the
    map's checkpoints."""
    if not world.checkpoints:
        raise NoCheckpoints(
            f"map {world.name!r} has no checkpoints to reconstruct ideal geometry from"
        )
    verts = [(world.checkpoints[0].endpoint_a.x, world.checkpoints[0].endpoint_a.z)]
    verts += [(cp.endpoint_b.x, cp.endpoint_b.z) for cp in world.checkpoints]
    total = sum(
        math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(verts, verts[1:])
    )
    n = len(world.keyframes)
    out = []
    for i in range(n):
        (x, z), _ = _walk(verts, total * i / (n - 1))
        out.append(Point3(x, 0.0, z))
    return out


def label_ground_truth(
    world: WorldMap, lookahead: int = 5, epsilon: float = EVAL_COLINEAR_EPSILON
) -> list[DirectionLabel]:
    """True turn label for every keyframe i with i + lookahead in range.

    Labels are computed on the ideal polyline with the same index triple
    the predictor uses: the keyframe itself, its successor as the
    direction anchor, and the keyframe `lookahead` ahead.
    """
    if lookahead < 1:
        raise InvalidShapeParams(f"lookahead {lookahead} must be >= 1")
    ideal = _ideal_positions(world)
    labels = []
    for i in range(len(ideal) - lookahead):
        labels.append(
            DirectionLabel(
                keyframe_id=world.keyframes[i].id,
                label=half_plane_direction(
                    ideal[i], ideal[i + 1], ideal[i + lookahead], epsilon
                ),
            )
        )
    return labels


def next_step_accuracy(
    world: WorldMap, labels: list[DirectionLabel], cfg: GuidanceConfig
) -> AccuracyReport:
    """True-positive ratio of the predictor on the map's actual (noisy)
    keyframe centers against the given ground-truth labels.

    The camera sits on keyframe i; the direction anchor is keyframe
    i + 1 (the nearest distinct path point when standing on the path)
    and the lookahead is keyframe i + cfg.lookahead, clamped to the last
    index.
    """
    if not labels:
        raise EmptyLabels("no ground-truth labels to score against")
    index_by_id = {kf.id: i for i, kf in enumerate(world.keyframes)}
    centers = [kf.center for kf in world.keyframes]
    last = len(centers) - 1
    tp = 0
    for entry in labels:
        i = index_by_id[entry.keyframe_id]
        camera = centers[i]
        anchor = centers[min(i + 1, last)]
        look = centers[min(i + cfg.lookahead, last)]
        try:
            predicted = next_step(camera, anchor, look, cfg)
        except DegenerateGeometry:
            predicted = Direction.STRAIGHT
        if predicted == entry.label:
            tp += 1
    return AccuracyReport(map_name=world.name, total=len(labels), true_positives=tp)


def accuracy_over_seeds(
    shape: PathShape,
    noise_sigma: float,
    seeds: list[int],
    cfg: GuidanceConfig,
) -> list[AccuracyReport]:
    reports = []
    for seed in seeds:
        world = generate_synthetic_map(shape, noise_sigma, seed)
        labels = label_ground_truth(world, cfg.lookahead, cfg.colinear_epsilon)
        reports.append(next_step_accuracy(world, labels, cfg))
    return reports


def overall_accuracy(reports: list[AccuracyReport]) -> tuple[float, float]:
    """(unweighted mean over reports, mean weighted by keyframe count)."""
    if not reports:
        raise EmptyLabels("no accuracy reports to aggregate")
    unweighted = sum(r.accuracy_percent for r in reports) / len(reports)
    total = sum(r.total for r in reports)
    weighted = 100.0 * sum(r.true_positives for r in reports) / total if total else 0.0
    return unweighted, weighted


# ---------------------------------------------------------------------------
# bundled reference tables

@dataclass(frozen=True)
class TableReport:
    map_name: str
    reference_cm: float
    rows: list[CheckpointRow]
    mae_cm: float


FIXTURE_ORDER = ("straight", "l", "u", "square")


def load_fixture(key: str) -> WorldMap:
    data = resources.files("navsim").joinpath(f"fixtures/{key}.json").read_bytes()
    return load_map(data)


def reproduce_checkpoint_tables(
    worlds: Optional[list[WorldMap]] = None,
) -> tuple[list[TableReport], float]:
    """Evaluate the bundled reference maps (or the given ones) and return
    the per-map tables plus the aggregate mean absolute error."""
    if worlds is None:
        worlds = [load_fixture(key) for key in FIXTURE_ORDER]
    tables = []
    all_rows: list[CheckpointRow] = []
    for world in worlds:
        rows = checkpoint_table(world)
        all_rows.extend(rows)
        tables.append(
            TableReport(
                map_name=world.name,
                reference_cm=world.scale_reference_cm,
                rows=rows,
                mae_cm=mean_absolute_error(rows),
            )
        )
    return tables, mean_absolute_error(all_rows)
