"""Geometric core: planar queries against the keyframe path, next-step
direction from a 2D cross product, pinhole projection, and obstacle
anchoring.

All path geometry lives in the horizontal X-Z plane; the vertical axis
never participates. Directions follow the plan-view convention by
default: X right, Z forward, so a positive normalized cross product
means the lookahead lies to the left of the camera-to-anchor ray. The
mirrored convention swaps left and right for consumers whose image
axes point the other way.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import (
    DegenerateGeometry,
    EmptyMap,
    MissingCalibration,
    NegativeDistance,
    NoVisiblePoints,
    TooFewKeyframes,
)
from .calibration import ScaleCalibration
from .model import Detection, FrameInput, Point3, Pose, WorldMap

DEGENERATE_EPSILON = 1e-12


class Direction(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    STRAIGHT = "straight"


class Orientation(str, Enum):
    """Sign convention mapping the cross product to a turn direction.

    PLAN_VIEW: positive cross -> Left (X right, Z forward, viewed from
    above). MIRRORED swaps the two, for consumers whose lateral axis
    points the other way.
    """

    PLAN_VIEW = "plan_view"
    MIRRORED = "mirrored"


@dataclass(frozen=True)
class GuidanceConfig:
    deviation_threshold_cm: float = 60.0
    obstacle_threshold_cm: float = 60.0
    lookahead: int = 5
    colinear_epsilon: float = 1e-6
    orientation: Orientation = Orientation.PLAN_VIEW

    def __post_init__(self):
        if self.deviation_threshold_cm <= 0 or self.obstacle_threshold_cm <= 0:
            raise ValueError("thresholds must be > 0")
        if self.lookahead < 1:
            raise ValueError("lookahead must be >= 1")
        if not 0.0 < self.colinear_epsilon < 1.0:
            raise ValueError("colinear_epsilon must be within (0, 1)")


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be > 0")


def planar(p: Point3) -> tuple[float, float]:
    """Drop the vertical axis: (x, y, z) -> (x, z)."""
    return (p.x, p.z)


def cross2d(a: tuple[float, float], b: tuple[float, float]) -> float:
    return a[0] * b[1] - a[1] * b[0]


def next_step(
    camera: Point3,
    nearest_kf: Point3,
    lookahead_kf: Point3,
    cfg: GuidanceConfig,
) -> Direction:
    """Classify the upcoming turn from three points, camera at the origin.

    The cross product of the camera-to-nearest and camera-to-lookahead
    planar vectors is normalized by both lengths, so the colinearity
    epsilon acts on the sine of the angle between them and is
    independent of map scale.
    """
    a = (nearest_kf.x - camera.x, nearest_kf.z - camera.z)
    b = (lookahead_kf.x - camera.x, lookahead_kf.z - camera.z)
    na = math.hypot(*a)
    nb = math.hypot(*b)
    if na < DEGENERATE_EPSILON or nb < DEGENERATE_EPSILON:
        raise DegenerateGeometry(
            f"camera coincides with a path keyframe (norms {na:.3g}, {nb:.3g})"
        )
    c = cross2d(a, b) / (na * nb)
    if abs(c) <= cfg.colinear_epsilon:
        return Direction.STRAIGHT
    if cfg.orientation is Orientation.MIRRORED:
        c = -c
    return Direction.LEFT if c > 0 else Direction.RIGHT


def nearest_keyframe(world: WorldMap, position: Point3) -> tuple[int, float]:
    """Index of the planar-nearest keyframe and its distance; ties go to
    the lowest keyframe id."""
    if not world.keyframes:
        raise EmptyMap("map has no keyframes")
    best_index = -1
    best_key: Optional[tuple[float, int]] = None
    for i, kf in enumerate(world.keyframes):
        d = math.hypot(kf.center.x - position.x, kf.center.z - position.z)
        key = (d, kf.id)
        if best_key is None or key < best_key:
            best_key = key
            best_index = i
    return best_index, best_key[0]


def _segment_distance_planar(
    px: float, pz: float, ax: float, az: float, bx: float, bz: float
) -> float:
    abx = bx - ax
    abz = bz - az
    apx = px - ax
    apz = pz - az
    denom = abx * abx + abz * abz
    if denom <= 0.0:
        return math.hypot(apx, apz)
    t = (apx * abx + apz * abz) / denom
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return math.hypot(apx - t * abx, apz - t * abz)


def path_deviation(world: WorldMap, position: Point3) -> float:
    """Minimum planar distance from position to the keyframe polyline.

    Point-to-segment, not point-to-vertex, so deviation stays honest
    between widely spaced keyframes.
    """
    if len(world.keyframes) < 2:
        raise TooFewKeyframes(f"need >= 2 keyframes, got {len(world.keyframes)}")
    px, pz = position.x, position.z
    centers = world.keyframes
    best = math.inf
    prev = centers[0].center
    for kf in centers[1:]:
        cur = kf.center
        d = _segment_distance_planar(px, pz, prev.x, prev.z, cur.x, cur.z)
        if d < best:
            best = d
        prev = cur
    return best


# ---------------------------------------------------------------------------
# pinhole projection

def rotation_matrix(orientation_wxyz: tuple[float, float, float, float]) -> np.ndarray:
    """World-from-camera rotation matrix of a unit quaternion."""
    w, x, y, z = orientation_wxyz
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def project(intr: CameraIntrinsics, pose: Pose, p: Point3) -> Optional[tuple[float, float]]:
    """Project a world point to a pixel; None when it sits at or behind
    the camera plane."""
    r = rotation_matrix(pose.orientation_wxyz)
    t = pose.position
    d = np.array([p.x - t.x, p.y - t.y, p.z - t.z])
    cam = r.T @ d
    depth = cam[2]
    if depth <= 0.0:
        return None
    return (
        intr.fx * (cam[0] / depth) + intr.cx,
        intr.fy * (cam[1] / depth) + intr.cy,
    )


def project_points(
    intr: CameraIntrinsics, pose: Pose, positions: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection of an (N, 3) array of world points.

    Returns (pixels (N, 2), depths (N,)); rows with depth <= 0 carry
    meaningless pixel values and must be masked by the caller.
    """
    r = rotation_matrix(pose.orientation_wxyz)
    t = np.array([pose.position.x, pose.position.y, pose.position.z])
    cam = (positions - t) @ r
    depth = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = intr.fx * (cam[:, 0] / depth) + intr.cx
        v = intr.fy * (cam[:, 1] / depth) + intr.cy
    return np.stack([u, v], axis=1), depth


def unproject(
    intr: CameraIntrinsics, pose: Pose, pixel: tuple[float, float], depth: float
) -> Point3:
    """Inverse of project at a known camera-frame depth."""
    xc = (pixel[0] - intr.cx) * depth / intr.fx
    yc = (pixel[1] - intr.cy) * depth / intr.fy
    cam = np.array([xc, yc, depth])
    r = rotation_matrix(pose.orientation_wxyz)
    world = r @ cam
    t = pose.position
    return Point3(world[0] + t.x, world[1] + t.y, world[2] + t.z)


# ---------------------------------------------------------------------------
# obstacles

def anchor_obstacle(
    frame: FrameInput,
    world: WorldMap,
    det: Detection,
    intr: Optional[CameraIntrinsics] = None,
) -> int:
    """Map point id whose image-space position is closest to the
    detection's box center.

    Explicit observation pixels win when the frame carries any;
    otherwise map points are projected through the frame pose, which
    needs intrinsics. Ties break toward the lowest point id. The caller
    owns the label change on the winning point.
    """
    cu, cv = det.bbox_center
    best: Optional[tuple[float, int]] = None

    if frame.observations:
        for obs in frame.observations:
            du = obs.pixel[0] - cu
            dv = obs.pixel[1] - cv
            key = (du * du + dv * dv, obs.point_id)
            if best is None or key < best:
                best = key
    elif intr is not None and world.map_points:
        positions = np.array([[p.position.x, p.position.y, p.position.z] for p in world.map_points])
        pixels, depth = project_points(intr, frame.pose, positions)
        for i, mp in enumerate(world.map_points):
            if depth[i] <= 0.0:
                continue
            du = pixels[i, 0] - cu
            dv = pixels[i, 1] - cv
            key = (du * du + dv * dv, mp.id)
            if best is None or key < best:
                best = key

    if best is None:
        raise NoVisiblePoints(
            f"no usable image-space points to anchor detection {det.class_name!r}"
        )
    return best[1]


def obstacle_distance(camera: Point3, obstacle: Point3) -> float:
    """Planar distance between the camera and an anchored point."""
    return math.hypot(obstacle.x - camera.x, obstacle.z - camera.z)


def proximity_alert(
    distance_map_units: float,
    calib: Optional[ScaleCalibration],
    cfg: GuidanceConfig,
) -> bool:
    """True iff the distance is strictly below the configured threshold."""
    if distance_map_units < 0:
        raise NegativeDistance(f"distance {distance_map_units} is negative")
    if calib is None:
        raise MissingCalibration("proximity test needs a scale calibration")
    return distance_map_units < calib.cm_to_map(cfg.obstacle_threshold_cm)
