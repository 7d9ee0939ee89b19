"""Guidance engine and walkthrough simulator for path following on
monocular SLAM maps."""

from .calibration import (
    REFERENCE_STEP,
    CheckpointRow,
    ScaleCalibration,
    calibration_for,
    checkpoint_table,
    mean_absolute_error,
    truncate_tenth,
)
from .errors import NavsimError
from .evaluation import (
    SHAPES,
    AccuracyReport,
    DirectionLabel,
    PathShape,
    generate_synthetic_map,
    label_ground_truth,
    next_step_accuracy,
    reproduce_checkpoint_tables,
)
from .guidance import (
    CameraIntrinsics,
    Direction,
    GuidanceConfig,
    Orientation,
    anchor_obstacle,
    nearest_keyframe,
    next_step,
    obstacle_distance,
    path_deviation,
    project,
    proximity_alert,
    unproject,
)
from .mapio import (
    Violation,
    bind_replay,
    load_map,
    load_replay,
    save_map,
    save_replay,
    validate_map,
)
from .model import (
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
from .session import (
    GuidanceOutput,
    ObstacleRecord,
    Session,
    SessionMode,
    start_session,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyReport",
    "CameraIntrinsics",
    "CheckPoint",
    "CheckpointRow",
    "Detection",
    "Direction",
    "DirectionLabel",
    "FrameInput",
    "GuidanceConfig",
    "GuidanceOutput",
    "KeyFrame",
    "MapPoint",
    "NavsimError",
    "Observation",
    "ObstacleRecord",
    "OrbParams",
    "Orientation",
    "PathShape",
    "Point3",
    "Pose",
    "REFERENCE_STEP",
    "SHAPES",
    "ScaleCalibration",
    "Session",
    "SessionMode",
    "Violation",
    "WorldMap",
    "anchor_obstacle",
    "bind_replay",
    "calibration_for",
    "checkpoint_table",
    "generate_synthetic_map",
    "label_ground_truth",
    "load_map",
    "load_replay",
    "mean_absolute_error",
    "nearest_keyframe",
    "next_step",
    "next_step_accuracy",
    "obstacle_distance",
    "path_deviation",
    "project",
    "proximity_alert",
    "reproduce_checkpoint_tables",
    "save_map",
    "save_replay",
    "start_session",
    "truncate_tenth",
    "unproject",
    "validate_map",
    "__version__",
]
