"""Live walkthrough service: one WebSocket text message per document.

Each connection gets an independent session over a shared immutable
map. The client steers a virtual camera with absolute "pose" or
incremental "step" messages and receives a "guidance" document for
every motion; "inject_detection" attaches a detection at the current
position; "reset" restores the start pose and a clean session.

The server owns the camera: frame indices auto-increment, and
observations are synthesized by projecting map points through a fixed
forward-facing camera model, so clients never supply pixels except as
detection box centers. Malformed input is answered with an "error"
document and never kills the connection.
"""

import functools
import json
import math
from typing import Optional

import numpy as np
from websockets.sync.server import Server, serve as _ws_serve

from .errors import BindFailure, InvalidMap, MissingCalibration
from .guidance import CameraIntrinsics, GuidanceConfig, project_points
from .mapio import quantize9, validate_map
from .model import Detection, FrameInput, Observation, Point3, Pose, WorldMap
from .session import Session, SessionMode, start_session

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8474

# fixed synthetic camera; the browser client mirrors these constants
SYNTHETIC_INTRINSICS = CameraIntrinsics(fx=500.0, fy=500.0, cx=320.0, cy=240.0)
IMAGE_WIDTH = 640
IMAGE_HEIGHT = 480
MAX_OBSERVATIONS = 200


def _heading_quaternion(heading: float) -> tuple[float, float, float, float]:
    return (math.cos(heading / 2.0), 0.0, math.sin(heading / 2.0), 0.0)


class ClientState:
    """Camera pose plus session for one connection; single-threaded use."""

    def __init__(self, world: WorldMap, cfg: GuidanceConfig):
        self._pristine = world
        self.cfg = cfg
        if world.map_points:
            self._positions = np.array(
                [[p.position.x, p.position.y, p.position.z] for p in world.map_points]
            )
            self._ids = np.array([p.id for p in world.map_points])
        else:
            self._positions = np.zeros((0, 3))
            self._ids = np.zeros(0, dtype=int)
        self.session: Optional[Session] = None
        self.reset()

    def reset(self) -> None:
        self.session = start_session(
            self._pristine, self.cfg, SessionMode.ONLINE, SYNTHETIC_INTRINSICS
        )
        self._frame = 0
        start = self._pristine.keyframes[0].center
        nxt = self._pristine.keyframes[1].center
        self.x, self.y, self.z = start.x, start.y, start.z
        self.heading = math.atan2(nxt.x - start.x, nxt.z - start.z)

    def step(self, forward: float, turn_deg: float) -> None:
        """Integrate heading first, then advance along it."""
        self.heading += math.radians(turn_deg)
        self.x += forward * math.sin(self.heading)
        self.z += forward * math.cos(self.heading)

    def place(self, x: float, y: float, z: float) -> None:
        self.x, self.y, self.z = x, y, z

    def current_pose(self) -> Pose:
        return Pose(
            position=Point3(self.x, self.y, self.z),
            orientation_wxyz=_heading_quaternion(self.heading),
        )

    def synthesize_observations(self, pose: Pose) -> list[Observation]:
        """Project map points; keep the in-image ones nearest by depth."""
        if len(self._positions) == 0:
            return []
        pixels, depth = project_points(SYNTHETIC_INTRINSICS, pose, self._positions)
        visible = (
            (depth > 0.0)
            & (pixels[:, 0] >= 0.0)
            & (pixels[:, 0] < IMAGE_WIDTH)
            & (pixels[:, 1] >= 0.0)
            & (pixels[:, 1] < IMAGE_HEIGHT)
        )
        idx = np.nonzero(visible)[0]
        if len(idx) > MAX_OBSERVATIONS:
            order = np.lexsort((self._ids[idx], depth[idx]))
            idx = idx[order[:MAX_OBSERVATIONS]]
        return [
            Observation(
                point_id=int(self._ids[i]),
                pixel=(float(pixels[i, 0]), float(pixels[i, 1])),
            )
            for i in idx
        ]

    def next_frame(self, detections: list[Detection]) -> FrameInput:
        pose = self.current_pose()
        frame = FrameInput(
            frame=self._frame,
            timestamp=self._frame / 30.0,
            pose=pose,
            observations=self.synthesize_observations(pose),
            detections=detections,
            tracked=True,
        )
        self._frame += 1
        return frame


# ---------------------------------------------------------------------------
# wire documents

def _error(code: str, detail: str) -> str:
    return json.dumps({"type": "error", "code": code, "detail": detail})


def hello_doc(world: WorldMap, cfg: GuidanceConfig) -> dict:
    return {
        "type": "hello",
        "map_name": world.name,
        "keyframes": len(world.keyframes),
        "map_points": len(world.map_points),
        "scale_reference_cm": world.scale_reference_cm,
        "thresholds": {
            "deviation_cm": cfg.deviation_threshold_cm,
            "obstacle_cm": cfg.obstacle_threshold_cm,
        },
    }


def map_doc(state: ClientState) -> dict:
    world = state.session.world
    return {
        "type": "map",
        "keyframe_centers": [
            [quantize9(kf.center.x), quantize9(kf.center.z)] for kf in world.keyframes
        ],
        "map_points": [
            [p.id, quantize9(p.position.x), quantize9(p.position.z)]
            for p in world.map_points
        ],
        "obstacle_ids": state.session.obstacle_ids,
    }


def _guidance_json(state: ClientState, detections: list[Detection]) -> str:
    output = state.session.process_frame(state.next_frame(detections))
    doc = output.to_doc()
    doc = {"type": "guidance", **doc}
    return json.dumps(doc, separators=(",", ":"), allow_nan=False)


def _finite_number(doc: dict, key: str) -> float:
    value = doc.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"field {key!r} must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"field {key!r} must be finite")
    return value


def _parse_detection_doc(doc: dict) -> Detection:
    class_name = doc.get("class_name")
    if not isinstance(class_name, str) or not class_name:
        raise ValueError("field 'class_name' must be a non-empty string")
    center = doc.get("bbox_center")
    size = doc.get("bbox_size")
    for name, pair in (("bbox_center", center), ("bbox_size", size)):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in pair)
            or any(not math.isfinite(float(v)) for v in pair)
        ):
            raise ValueError(f"field {name!r} must be a pair of finite numbers")
    if size[0] <= 0 or size[1] <= 0:
        raise ValueError("bbox_size components must be > 0")
    confidence = _finite_number(doc, "confidence")
    if not 0.0 <= confidence <= 1.0:
        raise ValueError("confidence must be within [0, 1]")
    return Detection(
        class_name=class_name,
        bbox_center=(float(center[0]), float(center[1])),
        bbox_size=(float(size[0]), float(size[1])),
        confidence=confidence,
    )


def handle_message(state: ClientState, text) -> list[str]:
    """Answer one client message; always returns at least one document."""
    try:
        if isinstance(text, bytes):
            text = text.decode("utf-8")
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise ValueError("message must be a JSON object")
        kind = doc.get("type")
        if kind == "pose":
            x = _finite_number(doc, "x")
            y = _finite_number(doc, "y")
            z = _finite_number(doc, "z")
            state.place(x, y, z)
            return [_guidance_json(state, [])]
        if kind == "step":
            forward = _finite_number(doc, "forward")
            turn_deg = _finite_number(doc, "turn_deg")
            state.step(forward, turn_deg)
            return [_guidance_json(state, [])]
        if kind == "inject_detection":
            det = _parse_detection_doc(doc)
            return [_guidance_json(state, [det])]
        if kind == "reset":
            state.reset()
            return [json.dumps(map_doc(state), separators=(",", ":"))]
        raise ValueError(f"unknown message type {kind!r}")
    except Exception as exc:  # any bad input answers, never crashes
        return [_error("bad_message", str(exc))]


def _connection_handler(ws, world: WorldMap, cfg: GuidanceConfig) -> None:
    state = ClientState(world, cfg)
    ws.send(json.dumps(hello_doc(world, cfg), separators=(",", ":")))
    ws.send(json.dumps(map_doc(state), separators=(",", ":")))
    for text in ws:
        for response in handle_message(state, text):
            ws.send(response)


def serve(
    world: WorldMap,
    cfg: Optional[GuidanceConfig] = None,
    host: str = DEFAULT_HOST,
    port: int = DEFAULT_PORT,
) -> Server:
    """Bind and return the server; call serve_forever() on the result.

    The map must be valid and calibrated. Each connection runs in its
    own thread with an isolated session.
    """
    cfg = cfg or GuidanceConfig()
    violations = validate_map(world)
    if violations:
        raise InvalidMap(str(violations[0]), violations)
    if world.scale_reference_cm is None:
        raise MissingCalibration(f"map {world.name!r} has no scale_reference_cm")
    handler = functools.partial(_connection_handler, world=world, cfg=cfg)
    try:
        return _ws_serve(handler, host, port)
    except OSError as exc:
        raise BindFailure(f"cannot bind {host}:{port}: {exc}") from None
