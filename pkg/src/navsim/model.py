"""Core data model: maps, keyframes, map points, and per-frame inputs.

Coordinates are in map units, the arbitrary scale fixed when a monocular
SLAM map is initialized. Y is the vertical axis and is ignored by all
planar computations; X/Z span the ground plane.

Instances are treated as immutable once built. The one sanctioned
exception is a map point's ``label``, which the session flips to
``"object"`` on its own private map copy when an obstacle is anchored.
"""

from dataclasses import dataclass, field
from typing import Optional

LABEL_GENERIC = "generic"
LABEL_OBJECT = "object"

MAP_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class Pose:
    """World-from-camera pose: position plus unit quaternion (w, x, y, z)."""

    position: Point3
    orientation_wxyz: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class KeyFrame:
    id: int
    timestamp: float
    pose: Pose

    @property
    def center(self) -> Point3:
        return self.pose.position


@dataclass
class MapPoint:
    id: int
    position: Point3
    label: str = LABEL_GENERIC


@dataclass(frozen=True)
class CheckPoint:
    """A pair of physical points with a tape-measured ground-truth length."""

    label: str
    endpoint_a: Point3
    endpoint_b: Point3
    actual_cm: float


@dataclass(frozen=True)
class OrbParams:
    n_features: int = 2000
    scale_factor: float = 1.2
    n_levels: int = 8
    fast_threshold: int = 10


@dataclass
class WorldMap:
    name: str
    keyframes: list[KeyFrame]
    map_points: list[MapPoint] = field(default_factory=list)
    checkpoints: list[CheckPoint] = field(default_factory=list)
    scale_reference_cm: Optional[float] = None
    orb_params: OrbParams = field(default_factory=OrbParams)
    format_version: int = MAP_FORMAT_VERSION

    def keyframe_centers(self) -> list[Point3]:
        return [kf.center for kf in self.keyframes]

    def point_by_id(self, point_id: int) -> Optional[MapPoint]:
        for p in self.map_points:
            if p.id == point_id:
                return p
        return None


@dataclass(frozen=True)
class Detection:
    """One detector bounding box in image space."""

    class_name: str
    bbox_center: tuple[float, float]
    bbox_size: tuple[float, float]
    confidence: float


@dataclass(frozen=True)
class Observation:
    """A map point seen by the camera at a pixel position."""

    point_id: int
    pixel: tuple[float, float]


@dataclass
class FrameInput:
    """One camera frame: pose, tracked map points, and detections."""

    frame: int
    timestamp: float
    pose: Pose
    observations: list[Observation] = field(default_factory=list)
    detections: list[Detection] = field(default_factory=list)
    tracked: bool = True
