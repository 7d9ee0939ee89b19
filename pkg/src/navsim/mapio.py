"""Loading, validation, and canonical persistence of maps and replays.

Maps are single JSON documents; replays are newline-delimited JSON, one
frame per line. Saving is canonical: keys sorted, floats quantized to 9
significant digits, so semantically equal inputs produce byte-identical
output and golden tests can compare bytes.

Unknown fields are ignored on load for forward compatibility; they are
dropped from the canonical form on save.
"""

import json
import math
from dataclasses import dataclass
from typing import Any, Iterable, Optional, Union

from .errors import (
    BindingError,
    InvariantViolation,
    MalformedDocument,
    NonMonotonicFrames,
    SchemaViolation,
)
from .model import (
    MAP_FORMAT_VERSION,
    LABEL_GENERIC,
    LABEL_OBJECT,
    CheckPoint,
    Detection,
    FrameInput,
    KeyFrame,
    MapPoint,
    Observation,
    OrbParams,
    Point3,
    Pose,
    WorldMap,
)

QUATERNION_NORM_TOLERANCE = 1e-6

_VALID_LABELS = (LABEL_GENERIC, LABEL_OBJECT)


def quantize9(x: float) -> float:
    """Round to 9 significant digits, the canonical file precision.

    9 < 15 significant digits, so decimal -> double -> decimal round-trips
    exactly and quantization is idempotent.
    """
    return float(f"{x:.9g}")


@dataclass(frozen=True)
class Violation:
    """One validation finding: machine-readable code plus a human message."""

    code: str
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} at {self.path}: {self.message}"


# ---------------------------------------------------------------------------
# schema helpers

def _require(doc: dict, key: str, path: str) -> Any:
    if key not in doc:
        raise SchemaViolation(f"missing field '{key}'", path)
    return doc[key]


def _as_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation("expected a number", path)
    return float(value)


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaViolation("expected an integer", path)
    return value


def _as_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaViolation("expected a string", path)
    return value


def _as_list(value: Any, path: str, length: Optional[int] = None) -> list:
    if not isinstance(value, list):
        raise SchemaViolation("expected a list", path)
    if length is not None and len(value) != length:
        raise SchemaViolation(f"expected {length} elements, got {len(value)}", path)
    return value


def _as_dict(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaViolation("expected an object", path)
    return value


def _point3(value: Any, path: str) -> Point3:
    xs = _as_list(value, path, 3)
    return Point3(*(_as_number(v, f"{path}[{i}]") for i, v in enumerate(xs)))


def _quaternion(value: Any, path: str) -> tuple[float, float, float, float]:
    xs = _as_list(value, path, 4)
    w, x, y, z = (_as_number(v, f"{path}[{i}]") for i, v in enumerate(xs))
    return (w, x, y, z)


# ---------------------------------------------------------------------------
# map load / save

def _parse_keyframe(doc: Any, path: str) -> KeyFrame:
    d = _as_dict(doc, path)
    return KeyFrame(
        id=_as_int(_require(d, "id", path), f"{path}.id"),
        timestamp=_as_number(_require(d, "timestamp", path), f"{path}.timestamp"),
        pose=Pose(
            position=_point3(_require(d, "position", path), f"{path}.position"),
            orientation_wxyz=_quaternion(
                _require(d, "orientation_wxyz", path), f"{path}.orientation_wxyz"
            ),
        ),
    )


def _parse_map_point(doc: Any, path: str) -> MapPoint:
    d = _as_dict(doc, path)
    label = _as_str(d.get("label", LABEL_GENERIC), f"{path}.label")
    return MapPoint(
        id=_as_int(_require(d, "id", path), f"{path}.id"),
        position=_point3(_require(d, "position", path), f"{path}.position"),
        label=label,
    )


def _parse_checkpoint(doc: Any, path: str) -> CheckPoint:
    d = _as_dict(doc, path)
    return CheckPoint(
        label=_as_str(_require(d, "label", path), f"{path}.label"),
        endpoint_a=_point3(_require(d, "endpoint_a", path), f"{path}.endpoint_a"),
        endpoint_b=_point3(_require(d, "endpoint_b", path), f"{path}.endpoint_b"),
        actual_cm=_as_number(_require(d, "actual_cm", path), f"{path}.actual_cm"),
    )


def _parse_orb_params(doc: Any, path: str) -> OrbParams:
    d = _as_dict(doc, path)
    defaults = OrbParams()
    return OrbParams(
        n_features=_as_int(d.get("n_features", defaults.n_features), f"{path}.n_features"),
        scale_factor=_as_number(d.get("scale_factor", defaults.scale_factor), f"{path}.scale_factor"),
        n_levels=_as_int(d.get("n_levels", defaults.n_levels), f"{path}.n_levels"),
        fast_threshold=_as_int(d.get("fast_threshold", defaults.fast_threshold), f"{path}.fast_threshold"),
    )


def _decode_json(data: Union[bytes, str], what: str) -> Any:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument(f"{what} is not valid UTF-8: {exc}") from None
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"{what} is not valid JSON: {exc}") from None


def load_map(data: Union[bytes, str]) -> WorldMap:
    """Parse and validate a map document.

    Raises MalformedDocument, SchemaViolation, or InvariantViolation; the
    message names the offending path.
    """
    doc = _decode_json(data, "map document")
    d = _as_dict(doc, "$")

    version = _as_int(_require(d, "format_version", "$"), "$.format_version")
    if version != MAP_FORMAT_VERSION:
        raise SchemaViolation(
            f"unsupported format_version {version}, expected {MAP_FORMAT_VERSION}",
            "$.format_version",
        )

    scale = d.get("scale_reference_cm")
    if scale is not None:
        scale = _as_number(scale, "$.scale_reference_cm")

    keyframes = [
        _parse_keyframe(item, f"keyframes[{i}]")
        for i, item in enumerate(_as_list(_require(d, "keyframes", "$"), "$.keyframes"))
    ]
    map_points = [
        _parse_map_point(item, f"map_points[{i}]")
        for i, item in enumerate(_as_list(d.get("map_points", []), "$.map_points"))
    ]
    checkpoints = [
        _parse_checkpoint(item, f"checkpoints[{i}]")
        for i, item in enumerate(_as_list(d.get("checkpoints", []), "$.checkpoints"))
    ]

    world = WorldMap(
        name=_as_str(_require(d, "name", "$"), "$.name"),
        format_version=version,
        scale_reference_cm=scale,
        orb_params=_parse_orb_params(d.get("orb_params", {}), "$.orb_params"),
        keyframes=keyframes,
        map_points=map_points,
        checkpoints=checkpoints,
    )

    violations = validate_map(world)
    if violations:
        first = violations[0]
        raise InvariantViolation(first.message, first.path, violations)
    return world


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


def validate_map(world: WorldMap) -> list[Violation]:
    """Check every map invariant; an empty result means the map is valid."""
    out: list[Violation] = []

    if len(world.keyframes) < 2:
        out.append(Violation("too_few_keyframes", "keyframes",
                             f"need at least 2 keyframes, got {len(world.keyframes)}"))

    seen_kf: set[int] = set()
    last_ts = None
    for i, kf in enumerate(world.keyframes):
        path = f"keyframes[{i}]"
        if kf.id < 0:
            out.append(Violation("negative_id", f"{path}.id", f"keyframe id {kf.id} is negative"))
        if kf.id in seen_kf:
            out.append(Violation("duplicate_keyframe_id", f"{path}.id", f"keyframe id {kf.id} repeats"))
        seen_kf.add(kf.id)
        if last_ts is not None and kf.timestamp <= last_ts:
            out.append(Violation("non_monotonic_timestamps", f"{path}.timestamp",
                                 f"timestamp {kf.timestamp} does not increase"))
        last_ts = kf.timestamp
        p = kf.center
        if not _finite(p.x, p.y, p.z, kf.timestamp):
            out.append(Violation("non_finite_coordinate", f"{path}.position", "non-finite value"))
        q = kf.pose.orientation_wxyz
        if not _finite(*q):
            out.append(Violation("non_finite_coordinate", f"{path}.orientation_wxyz", "non-finite value"))
        else:
            norm = math.sqrt(sum(c * c for c in q))
            if abs(norm - 1.0) > QUATERNION_NORM_TOLERANCE:
                out.append(Violation("invalid_quaternion", f"{path}.orientation_wxyz",
                                     f"quaternion norm {norm:.9g} is not 1"))

    seen_mp: set[int] = set()
    for i, mp in enumerate(world.map_points):
        path = f"map_points[{i}]"
        if mp.id < 0:
            out.append(Violation("negative_id", f"{path}.id", f"map point id {mp.id} is negative"))
        if mp.id in seen_mp:
            out.append(Violation("duplicate_map_point_id", f"{path}.id", f"map point id {mp.id} repeats"))
        seen_mp.add(mp.id)
        if not _finite(mp.position.x, mp.position.y, mp.position.z):
            out.append(Violation("non_finite_coordinate", f"{path}.position", "non-finite value"))
        if mp.label not in _VALID_LABELS:
            out.append(Violation("invalid_label", f"{path}.label",
                                 f"label {mp.label!r} is not one of {_VALID_LABELS}"))

    for i, cp in enumerate(world.checkpoints):
        path = f"checkpoints[{i}]"
        for name, pt in (("endpoint_a", cp.endpoint_a), ("endpoint_b", cp.endpoint_b)):
            if not _finite(pt.x, pt.y, pt.z):
                out.append(Violation("non_finite_coordinate", f"{path}.{name}", "non-finite value"))
        if not math.isfinite(cp.actual_cm) or cp.actual_cm <= 0:
            out.append(Violation("non_positive_actual_cm", f"{path}.actual_cm",
                                 f"actual_cm {cp.actual_cm} must be > 0"))

    if world.scale_reference_cm is not None:
        if not math.isfinite(world.scale_reference_cm) or world.scale_reference_cm <= 0:
            out.append(Violation("non_positive_scale", "scale_reference_cm",
                                 f"scale_reference_cm {world.scale_reference_cm} must be > 0"))

    return out


def _canon(value: Any) -> Any:
    if isinstance(value, float):
        return quantize9(value)
    if isinstance(value, dict):
        return {k: _canon(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canon(v) for v in value]
    return value


def map_to_doc(world: WorldMap) -> dict:
    doc: dict[str, Any] = {
        "format_version": world.format_version,
        "name": world.name,
        "orb_params": {
            "n_features": world.orb_params.n_features,
            "scale_factor": world.orb_params.scale_factor,
            "n_levels": world.orb_params.n_levels,
            "fast_threshold": world.orb_params.fast_threshold,
        },
        "keyframes": [
            {
                "id": kf.id,
                "timestamp": kf.timestamp,
                "position": [kf.center.x, kf.center.y, kf.center.z],
                "orientation_wxyz": list(kf.pose.orientation_wxyz),
            }
            for kf in world.keyframes
        ],
        "map_points": [
            {
                "id": mp.id,
                "position": [mp.position.x, mp.position.y, mp.position.z],
                "label": mp.label,
            }
            for mp in world.map_points
        ],
        "checkpoints": [
            {
                "label": cp.label,
                "endpoint_a": [cp.endpoint_a.x, cp.endpoint_a.y, cp.endpoint_a.z],
                "endpoint_b": [cp.endpoint_b.x, cp.endpoint_b.y, cp.endpoint_b.z],
                "actual_cm": cp.actual_cm,
            }
            for cp in world.checkpoints
        ],
    }
    if world.scale_reference_cm is not None:
        doc["scale_reference_cm"] = world.scale_reference_cm
    return doc


def save_map(world: WorldMap) -> bytes:
    """Serialize to the canonical form: sorted keys, 9-significant-digit floats."""
    doc = _canon(map_to_doc(world))
    text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False)
    return (text + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# replay load / save

def _parse_detection(doc: Any, path: str) -> Detection:
    d = _as_dict(doc, path)
    center = _as_list(_require(d, "bbox_center", path), f"{path}.bbox_center", 2)
    size = _as_list(_require(d, "bbox_size", path), f"{path}.bbox_size", 2)
    det = Detection(
        class_name=_as_str(_require(d, "class_name", path), f"{path}.class_name"),
        bbox_center=tuple(_as_number(v, f"{path}.bbox_center[{i}]") for i, v in enumerate(center)),
        bbox_size=tuple(_as_number(v, f"{path}.bbox_size[{i}]") for i, v in enumerate(size)),
        confidence=_as_number(_require(d, "confidence", path), f"{path}.confidence"),
    )
    if det.bbox_size[0] <= 0 or det.bbox_size[1] <= 0:
        raise SchemaViolation("bbox_size components must be > 0", f"{path}.bbox_size")
    if not 0.0 <= det.confidence <= 1.0:
        raise SchemaViolation("confidence must be within [0, 1]", f"{path}.confidence")
    return det


def _parse_observation(doc: Any, path: str) -> Observation:
    d = _as_dict(doc, path)
    pixel = _as_list(_require(d, "pixel", path), f"{path}.pixel", 2)
    return Observation(
        point_id=_as_int(_require(d, "point_id", path), f"{path}.point_id"),
        pixel=tuple(_as_number(v, f"{path}.pixel[{i}]") for i, v in enumerate(pixel)),
    )


def _parse_frame(doc: Any, path: str) -> FrameInput:
    d = _as_dict(doc, path)
    pose_doc = _as_dict(_require(d, "pose", path), f"{path}.pose")
    tracked = d.get("tracked", True)
    if not isinstance(tracked, bool):
        raise SchemaViolation("expected a boolean", f"{path}.tracked")
    return FrameInput(
        frame=_as_int(_require(d, "frame", path), f"{path}.frame"),
        timestamp=_as_number(_require(d, "timestamp", path), f"{path}.timestamp"),
        pose=Pose(
            position=_point3(_require(pose_doc, "position", f"{path}.pose"), f"{path}.pose.position"),
            orientation_wxyz=_quaternion(
                _require(pose_doc, "orientation_wxyz", f"{path}.pose"),
                f"{path}.pose.orientation_wxyz",
            ),
        ),
        observations=[
            _parse_observation(o, f"{path}.observations[{i}]")
            for i, o in enumerate(_as_list(d.get("observations", []), f"{path}.observations"))
        ],
        detections=[
            _parse_detection(o, f"{path}.detections[{i}]")
            for i, o in enumerate(_as_list(d.get("detections", []), f"{path}.detections"))
        ],
        tracked=tracked,
    )


def load_replay(data: Union[bytes, str]) -> list[FrameInput]:
    """Parse a newline-delimited replay; '#' lines and blank lines are skipped.

    Frame indices must strictly increase; a regression raises
    NonMonotonicFrames with the offending line number.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument(f"replay is not valid UTF-8: {exc}") from None

    frames: list[FrameInput] = []
    last_index: Optional[int] = None
    for lineno, line in enumerate(data.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"replay line {lineno} is not valid JSON: {exc}") from None
        frame = _parse_frame(doc, f"line {lineno}")
        if last_index is not None and frame.frame <= last_index:
            raise NonMonotonicFrames(
                f"frame index {frame.frame} does not increase past {last_index}", lineno
            )
        last_index = frame.frame
        frames.append(frame)
    return frames


def frame_to_doc(frame: FrameInput) -> dict:
    return {
        "frame": frame.frame,
        "timestamp": frame.timestamp,
        "pose": {
            "position": [frame.pose.position.x, frame.pose.position.y, frame.pose.position.z],
            "orientation_wxyz": list(frame.pose.orientation_wxyz),
        },
        "tracked": frame.tracked,
        "observations": [
            {"point_id": o.point_id, "pixel": list(o.pixel)} for o in frame.observations
        ],
        "detections": [
            {
                "class_name": det.class_name,
                "bbox_center": list(det.bbox_center),
                "bbox_size": list(det.bbox_size),
                "confidence": det.confidence,
            }
            for det in frame.detections
        ],
    }


def save_replay(frames: Iterable[FrameInput]) -> bytes:
    lines = [
        json.dumps(_canon(frame_to_doc(f)), sort_keys=True, separators=(",", ":"), allow_nan=False)
        for f in frames
    ]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def bind_replay(frames: Iterable[FrameInput], world: WorldMap) -> None:
    """Check that every observation references a point that exists in the map."""
    known = {p.id for p in world.map_points}
    for frame in frames:
        for obs in frame.observations:
            if obs.point_id not in known:
                raise BindingError(obs.point_id, frame.frame)
