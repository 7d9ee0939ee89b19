"""Per-frame orchestration: localization status, deviation and obstacle
alerts with hysteresis, the obstacle registry, and user-facing cues.

A session owns a private copy of the map (obstacle anchoring relabels
points) and consumes frames with strictly increasing indices. All alert
state lives here; the geometric functions it calls are pure.

Alerts latch: a deviation alert raised above the threshold releases
only below 90% of it, and an obstacle alert raised below the threshold
releases only above 110% of it, so a camera hovering at the boundary
never flaps at frame rate.
"""

import copy
import json
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .calibration import ScaleCalibration, calibration_for, truncate_tenth
from .errors import (
    DegenerateGeometry,
    InvalidMap,
    NoVisiblePoints,
    OutOfOrderFrame,
)
from .guidance import (
    CameraIntrinsics,
    Direction,
    GuidanceConfig,
    anchor_obstacle,
    nearest_keyframe,
    next_step,
    obstacle_distance,
    path_deviation,
)
from .mapio import validate_map
from .model import LABEL_OBJECT, FrameInput, WorldMap

RELEASE_FACTOR_DEVIATION = 0.9
RELEASE_FACTOR_OBSTACLE = 1.1

MSG_LOST = "localization lost"
MSG_RETURN = "return to the path"
MSG_GO = {
    Direction.LEFT: "go left",
    Direction.RIGHT: "go right",
    Direction.STRAIGHT: "go straight",
}


def _msg_obstacle(class_name: str, distance_cm: float) -> str:
    return f"obstacle ahead: {class_name} at {distance_cm:.1f} cm"


def _msg_anchor_failed(class_name: str) -> str:
    return f"could not anchor detection: {class_name}"


MSG_DIRECTION_UNDEFINED = "direction undefined at current position"


class SessionMode(str, Enum):
    OFFLINE = "offline"
    ONLINE = "online"


@dataclass
class ObstacleRecord:
    point_id: int
    class_name: str
    first_seen_frame: int
    last_distance_cm: float = 0.0
    alert_active: bool = False


@dataclass(frozen=True)
class ObstacleStatus:
    point_id: int
    class_name: str
    distance_cm: float
    alert: bool


@dataclass(frozen=True)
class GuidanceOutput:
    """Immutable per-frame result; offline frames carry status only."""

    frame: int
    localized: bool
    direction: Optional[Direction] = None
    deviation_cm: Optional[float] = None
    deviation_alert: bool = False
    obstacles: tuple[ObstacleStatus, ...] = ()
    messages: tuple[str, ...] = ()

    def to_doc(self) -> dict:
        if self.direction is None:
            return {"frame": self.frame, "localized": self.localized}
        return {
            "frame": self.frame,
            "localized": self.localized,
            "direction": self.direction.value,
            "deviation_cm": self.deviation_cm,
            "deviation_alert": self.deviation_alert,
            "obstacles": [
                {
                    "point_id": o.point_id,
                    "class_name": o.class_name,
                    "distance_cm": o.distance_cm,
                    "alert": o.alert,
                }
                for o in self.obstacles
            ],
            "messages": list(self.messages),
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_doc(), separators=(",", ":"), allow_nan=False)


class Session:
    """Single guidance stream over one map; process_frame calls must be
    serialized by the caller."""

    def __init__(
        self,
        world: WorldMap,
        cfg: GuidanceConfig,
        mode: SessionMode,
        intrinsics: Optional[CameraIntrinsics] = None,
    ):
        violations = validate_map(world)
        if violations:
            raise InvalidMap(str(violations[0]), violations)
        self.world = copy.deepcopy(world)
        self.cfg = cfg
        self.mode = mode
        self.intrinsics = intrinsics
        self.calibration: Optional[ScaleCalibration] = None
        if mode is SessionMode.ONLINE:
            self.calibration = calibration_for(world)
        self._points_by_id = {p.id: p for p in self.world.map_points}
        self._registry: dict[int, ObstacleRecord] = {}
        self._last_frame: Optional[int] = None
        self._deviation_alert = False
        self._last_deviation_cm = 0.0

    @property
    def obstacle_ids(self) -> list[int]:
        return list(self._registry.keys())

    # -- helpers -----------------------------------------------------------

    def _anchor_detections(self, frame: FrameInput) -> list[str]:
        warnings = []
        for det in frame.detections:
            try:
                pid = anchor_obstacle(frame, self.world, det, self.intrinsics)
            except NoVisiblePoints:
                warnings.append(_msg_anchor_failed(det.class_name))
                continue
            record = self._registry.get(pid)
            if record is None:
                point = self._points_by_id.get(pid)
                if point is None:
                    # observation referenced a point the map does not carry;
                    # a bound replay can't get here, a live client can
                    warnings.append(_msg_anchor_failed(det.class_name))
                    continue
                if point.label != LABEL_OBJECT:
                    point.label = LABEL_OBJECT
                self._registry[pid] = ObstacleRecord(
                    point_id=pid,
                    class_name=det.class_name,
                    first_seen_frame=frame.frame,
                )
            else:
                record.class_name = det.class_name
        return warnings

    def _update_obstacles(self, frame: FrameInput) -> None:
        camera = frame.pose.position
        threshold = self.cfg.obstacle_threshold_cm
        for record in self._registry.values():
            point = self._points_by_id[record.point_id]
            raw_cm = self.calibration.map_to_cm(obstacle_distance(camera, point.position))
            if record.alert_active:
                if raw_cm > threshold * RELEASE_FACTOR_OBSTACLE:
                    record.alert_active = False
            else:
                if raw_cm < threshold:
                    record.alert_active = True
            record.last_distance_cm = truncate_tenth(raw_cm)

    def _update_deviation(self, frame: FrameInput) -> None:
        raw_cm = self.calibration.map_to_cm(
            path_deviation(self.world, frame.pose.position)
        )
        threshold = self.cfg.deviation_threshold_cm
        if self._deviation_alert:
            if raw_cm < threshold * RELEASE_FACTOR_DEVIATION:
                self._deviation_alert = False
        else:
            if raw_cm > threshold:
                self._deviation_alert = True
        self._last_deviation_cm = truncate_tenth(raw_cm)

    def _direction(self, frame: FrameInput) -> tuple[Direction, list[str]]:
        camera = frame.pose.position
        i, _ = nearest_keyframe(self.world, camera)
        last = len(self.world.keyframes) - 1
        anchor = self.world.keyframes[i].center
        lookahead = self.world.keyframes[min(i + self.cfg.lookahead, last)].center
        try:
            return next_step(camera, anchor, lookahead, self.cfg), []
        except DegenerateGeometry:
            return Direction.STRAIGHT, [MSG_DIRECTION_UNDEFINED]

    def _statuses(self) -> tuple[ObstacleStatus, ...]:
        return tuple(
            ObstacleStatus(
                point_id=r.point_id,
                class_name=r.class_name,
                distance_cm=r.last_distance_cm,
                alert=r.alert_active,
            )
            for r in self._registry.values()
        )

    def _messages(
        self, localized: bool, direction: Direction, warnings: list[str]
    ) -> tuple[str, ...]:
        out: list[str] = []
        if not localized:
            out.append(MSG_LOST)
        if self._deviation_alert:
            out.append(MSG_RETURN)
        alerting = sorted(
            (r for r in self._registry.values() if r.alert_active),
            key=lambda r: (r.last_distance_cm, r.point_id),
        )
        out.extend(_msg_obstacle(r.class_name, r.last_distance_cm) for r in alerting)
        out.append(MSG_GO[direction])
        out.extend(warnings)
        return tuple(out)

    # -- main entry --------------------------------------------------------

    def process_frame(self, frame: FrameInput) -> GuidanceOutput:
        if self._last_frame is not None and frame.frame <= self._last_frame:
            raise OutOfOrderFrame(
                f"frame {frame.frame} does not advance past {self._last_frame}",
                frame.frame,
            )
        self._last_frame = frame.frame

        if self.mode is SessionMode.OFFLINE:
            return GuidanceOutput(frame=frame.frame, localized=frame.tracked)

        if not frame.tracked:
            direction = Direction.STRAIGHT
            return GuidanceOutput(
                frame=frame.frame,
                localized=False,
                direction=direction,
                deviation_cm=self._last_deviation_cm,
                deviation_alert=self._deviation_alert,
                obstacles=self._statuses(),
                messages=self._messages(False, direction, []),
            )

        warnings = self._anchor_detections(frame)
        self._update_obstacles(frame)
        self._update_deviation(frame)
        direction, dir_warnings = self._direction(frame)
        warnings.extend(dir_warnings)

        return GuidanceOutput(
            frame=frame.frame,
            localized=True,
            direction=direction,
            deviation_cm=self._last_deviation_cm,
            deviation_alert=self._deviation_alert,
            obstacles=self._statuses(),
            messages=self._messages(True, direction, warnings),
        )


def start_session(
    world: WorldMap,
    cfg: GuidanceConfig,
    mode: SessionMode,
    intrinsics: Optional[CameraIntrinsics] = None,
) -> Session:
    return Session(world, cfg, mode, intrinsics)
