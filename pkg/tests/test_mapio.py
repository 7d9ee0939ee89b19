import json
import math
import random

import pytest
from hypothesis import given, strategies as st

from navsim.errors import (
    BindingError,
    InvariantViolation,
    MalformedDocument,
    NonMonotonicFrames,
    SchemaViolation,
)
from navsim.evaluation import SHAPES, generate_synthetic_map
from navsim.mapio import (
    bind_replay,
    load_map,
    load_replay,
    quantize9,
    save_map,
    save_replay,
    validate_map,
)
from navsim.model import (
    CheckPoint,
    FrameInput,
    KeyFrame,
    MapPoint,
    Observation,
    Point3,
    Pose,
    WorldMap,
)


def minimal_doc(**overrides):
    doc = {
        "format_version": 1,
        "name": "m",
        "keyframes": [
            {"id": 0, "timestamp": 0.0, "position": [0, 0, 0],
             "orientation_wxyz": [1, 0, 0, 0]},
            {"id": 1, "timestamp": 1.0, "position": [0, 0, 1],
             "orientation_wxyz": [1, 0, 0, 0]},
        ],
        "map_points": [],
        "checkpoints": [],
    }
    doc.update(overrides)
    return doc


def load_doc(doc):
    return load_map(json.dumps(doc))


class TestQuantize:
    def test_nine_digits(self):
        assert quantize9(0.12345678949) == 0.123456789

    @given(st.floats(allow_nan=False, allow_infinity=False, width=64))
    def test_idempotent(self, x):
        q = quantize9(x)
        assert quantize9(q) == q

    @given(st.floats(min_value=-1e9, max_value=1e9))
    def test_close_to_input(self, x):
        assert math.isclose(quantize9(x), x, rel_tol=1e-8, abs_tol=1e-300)


class TestLoadMap:
    def test_minimal_round(self):
        world = load_doc(minimal_doc())
        assert world.name == "m"
        assert len(world.keyframes) == 2
        assert world.scale_reference_cm is None

    def test_not_json(self):
        with pytest.raises(MalformedDocument):
            load_map(b"{nope")

    def test_invalid_utf8(self):
        with pytest.raises(MalformedDocument):
            load_map(b"\xff\xfe{}")

    def test_not_an_object(self):
        with pytest.raises(SchemaViolation):
            load_map(b"[1, 2]")

    def test_missing_name(self):
        doc = minimal_doc()
        del doc["name"]
        with pytest.raises(SchemaViolation, match="name"):
            load_doc(doc)

    def test_unsupported_version(self):
        with pytest.raises(SchemaViolation, match="format_version"):
            load_doc(minimal_doc(format_version=2))

    def test_boolean_is_not_a_number(self):
        doc = minimal_doc()
        doc["keyframes"][0]["timestamp"] = True
        with pytest.raises(SchemaViolation, match="timestamp"):
            load_doc(doc)

    def test_position_wrong_length(self):
        doc = minimal_doc()
        doc["keyframes"][0]["position"] = [0, 0]
        with pytest.raises(SchemaViolation, match=r"keyframes\[0\].position"):
            load_doc(doc)

    def test_unknown_fields_ignored(self):
        doc = minimal_doc(extra="stuff")
        doc["keyframes"][0]["junk"] = 42
        world = load_doc(doc)
        assert world.name == "m"

    def test_orb_params_defaults(self):
        world = load_doc(minimal_doc())
        assert world.orb_params.n_features == 2000
        assert world.orb_params.scale_factor == 1.2
        assert world.orb_params.n_levels == 8
        assert world.orb_params.fast_threshold == 10

    def test_orb_params_partial_override(self):
        world = load_doc(minimal_doc(orb_params={"n_features": 1500}))
        assert world.orb_params.n_features == 1500
        assert world.orb_params.n_levels == 8

    def test_invariant_violation_carries_all_findings(self):
        doc = minimal_doc()
        doc["keyframes"][1]["timestamp"] = 0.0
        doc["keyframes"][1]["id"] = 0
        with pytest.raises(InvariantViolation) as err:
            load_doc(doc)
        codes = {v.code for v in err.value.violations}
        assert "duplicate_keyframe_id" in codes
        assert "non_monotonic_timestamps" in codes


class TestValidate:
    def build(self, **overrides):
        kwargs = dict(
            name="m",
            keyframes=[
                KeyFrame(0, 0.0, Pose(Point3(0, 0, 0))),
                KeyFrame(1, 1.0, Pose(Point3(0, 0, 1))),
            ],
        )
        kwargs.update(overrides)
        return WorldMap(**kwargs)

    def test_valid(self):
        assert validate_map(self.build()) == []

    def test_too_few_keyframes(self):
        world = self.build(keyframes=[KeyFrame(0, 0.0, Pose(Point3(0, 0, 0)))])
        assert any(v.code == "too_few_keyframes" for v in validate_map(world))

    def test_bad_quaternion(self):
        world = self.build(keyframes=[
            KeyFrame(0, 0.0, Pose(Point3(0, 0, 0), (1.0, 1.0, 0.0, 0.0))),
            KeyFrame(1, 1.0, Pose(Point3(0, 0, 1))),
        ])
        assert any(v.code == "invalid_quaternion" for v in validate_map(world))

    def test_non_finite(self):
        world = self.build(map_points=[MapPoint(0, Point3(math.nan, 0, 0))])
        violations = validate_map(world)
        assert any(v.code == "non_finite_coordinate" for v in violations)
        assert any("map_points[0]" in v.path for v in violations)

    def test_bad_label(self):
        world = self.build(map_points=[MapPoint(0, Point3(0, 0, 0), label="tree")])
        assert any(v.code == "invalid_label" for v in validate_map(world))

    def test_duplicate_point_id(self):
        world = self.build(map_points=[
            MapPoint(5, Point3(0, 0, 0)), MapPoint(5, Point3(1, 0, 0)),
        ])
        assert any(v.code == "duplicate_map_point_id" for v in validate_map(world))

    def test_negative_ids(self):
        world = self.build(map_points=[MapPoint(-3, Point3(0, 0, 0))])
        assert any(v.code == "negative_id" for v in validate_map(world))

    def test_non_positive_scale(self):
        world = self.build(scale_reference_cm=0.0)
        assert any(v.code == "non_positive_scale" for v in validate_map(world))

    def test_non_positive_actual(self):
        world = self.build(checkpoints=[
            CheckPoint("A", Point3(0, 0, 0), Point3(1, 0, 0), actual_cm=0.0)
        ])
        assert any(v.code == "non_positive_actual_cm" for v in validate_map(world))


class TestRoundTrip:
    @pytest.mark.parametrize("key", list(SHAPES))
    def test_synthetic_round_trip(self, key):
        world = generate_synthetic_map(SHAPES[key], 0.003, seed=7)
        blob = save_map(world)
        again = load_map(blob)
        assert save_map(again) == blob
        assert again == world

    def test_scale_omitted_when_absent(self):
        world = load_doc(minimal_doc())
        assert b"scale_reference_cm" not in save_map(world)

    def test_canonical_is_sorted_and_newline_terminated(self):
        blob = save_map(load_doc(minimal_doc()))
        assert blob.endswith(b"\n")
        doc = json.loads(blob)
        assert list(doc.keys()) == sorted(doc.keys())


def frame_line(frame=0, **overrides):
    doc = {
        "frame": frame,
        "timestamp": frame / 30.0,
        "pose": {"position": [0, 0, 0], "orientation_wxyz": [1, 0, 0, 0]},
        "tracked": True,
        "observations": [],
        "detections": [],
    }
    doc.update(overrides)
    return json.dumps(doc)


class TestReplay:
    def test_skips_comments_and_blanks(self):
        text = "# header\n\n" + frame_line(0) + "\n" + frame_line(1) + "\n"
        frames = load_replay(text)
        assert [f.frame for f in frames] == [0, 1]

    def test_non_monotonic(self):
        text = frame_line(3) + "\n" + frame_line(3) + "\n"
        with pytest.raises(NonMonotonicFrames) as err:
            load_replay(text)
        assert err.value.line_number == 2

    def test_malformed_line_is_numbered(self):
        text = frame_line(0) + "\n{oops\n"
        with pytest.raises(MalformedDocument, match="line 2"):
            load_replay(text)

    def test_confidence_bounds(self):
        bad = frame_line(0, detections=[{
            "class_name": "c", "bbox_center": [0, 0], "bbox_size": [1, 1],
            "confidence": 1.5,
        }])
        with pytest.raises(SchemaViolation, match="confidence"):
            load_replay(bad)

    def test_bbox_size_positive(self):
        bad = frame_line(0, detections=[{
            "class_name": "c", "bbox_center": [0, 0], "bbox_size": [0, 5],
            "confidence": 0.5,
        }])
        with pytest.raises(SchemaViolation, match="bbox_size"):
            load_replay(bad)

    def test_tracked_must_be_boolean(self):
        with pytest.raises(SchemaViolation, match="tracked"):
            load_replay(frame_line(0, tracked=1))

    def test_save_load_round_trip(self):
        frames = [
            FrameInput(
                frame=i,
                timestamp=i / 30.0,
                pose=Pose(Point3(0.1 * i, 0.0, 0.25)),
                observations=[Observation(7, (12.5, 99.0))],
                tracked=(i % 2 == 0),
            )
            for i in range(5)
        ]
        blob = save_replay(frames)
        again = load_replay(blob)
        assert save_replay(again) == blob

    def test_empty_replay(self):
        assert load_replay("") == []
        assert save_replay([]) == b""

    def test_bind_unknown_point(self):
        world = load_doc(minimal_doc(map_points=[
            {"id": 4, "position": [0, 0, 0], "label": "generic"},
        ]))
        frames = load_replay(frame_line(0, observations=[{"point_id": 9, "pixel": [1, 2]}]))
        with pytest.raises(BindingError) as err:
            bind_replay(frames, world)
        assert err.value.point_id == 9
        assert err.value.frame == 0

    def test_bind_known_points_passes(self):
        world = load_doc(minimal_doc(map_points=[
            {"id": 4, "position": [0, 0, 0], "label": "generic"},
        ]))
        frames = load_replay(frame_line(0, observations=[{"point_id": 4, "pixel": [1, 2]}]))
        bind_replay(frames, world)


class TestFuzz:
    def test_loaders_never_crash(self):
        rng = random.Random(1234)
        base = json.dumps(minimal_doc())
        for _ in range(300):
            text = list(base)
            for _ in range(rng.randint(1, 8)):
                i = rng.randrange(len(text))
                text[i] = chr(rng.randrange(32, 127))
            mutated = "".join(text)
            try:
                load_map(mutated)
            except (MalformedDocument, SchemaViolation, InvariantViolation):
                pass

    def test_replay_fuzz_never_crashes(self):
        rng = random.Random(99)
        base = frame_line(0)
        for _ in range(300):
            text = list(base)
            for _ in range(rng.randint(1, 6)):
                i = rng.randrange(len(text))
                text[i] = chr(rng.randrange(32, 127))
            try:
                load_replay("".join(text))
            except (MalformedDocument, SchemaViolation, NonMonotonicFrames):
                pass
