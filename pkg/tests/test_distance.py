import json
import random

import pytest

from oracles import greedy_match_matrix
from soundsight.core import BoundingBox, CameraIntrinsics, Detection, SPACE_DOWNSCALED, SPACE_ORIGINAL, iou
from soundsight.distance import (
    CalibrationRecord,
    CalibrationStore,
    CONFIDENCE_ASSUMED,
    CONFIDENCE_CALIBRATED,
    DegenerateBoxError,
    DistanceTrack,
    DistanceTracker,
    ObjectSizeRegistry,
    associate,
    calibrate,
    estimate,
)

CAM = CameraIntrinsics(focal_px=800.0, ref_width_px=1280, ref_height_px=720)


def detection(x, y, w, h, label="chair", space=SPACE_ORIGINAL):
    return Detection(box=BoundingBox(x=x, y=y, w=w, h=h, space=space), label=label, score=0.9)


def make_track(track_id, label, box, w0=None, d0=4.0):
    return DistanceTrack(
        track_id=track_id,
        label=label,
        w0_px=w0 if w0 is not None else box.w,
        d0_m=d0,
        last_box=box,
        last_distance_m=d0,
        confidence=CONFIDENCE_CALIBRATED,
        created_ms=0,
        updated_ms=0,
    )


class TestCalibrate:
    def test_known_width_pinhole(self):
        # 800 px focal, 0.45 m chair, 90 px apparent -> 800*0.45/90 = 4 m
        det = detection(595, 275, 90, 170)
        track = calibrate(det, (1280, 720), CAM, ObjectSizeRegistry.default())
        assert track.d0_m == pytest.approx(4.0)
        assert track.last_distance_m == pytest.approx(4.0)
        assert track.confidence == CONFIDENCE_CALIBRATED
        assert track.w0_px == 90

    def test_focal_rescales_with_frame_width(self):
        # Same geometry sensed at half resolution gives the same distance.
        det = detection(297.5, 137.5, 45, 85)
        track = calibrate(det, (640, 360), CAM, ObjectSizeRegistry.default())
        assert track.d0_m == pytest.approx(4.0)

    def test_unknown_label_gets_assumed_default(self):
        det = detection(0, 0, 50, 50, label="umbrella")
        track = calibrate(det, (1280, 720), CAM, ObjectSizeRegistry.default(), default_d0_m=2.5)
        assert track.d0_m == 2.5
        assert track.confidence == CONFIDENCE_ASSUMED

    def test_requires_original_space(self):
        det = detection(0, 0, 50, 50, space=SPACE_DOWNSCALED)
        with pytest.raises(ValueError):
            calibrate(det, (640, 360), CAM, ObjectSizeRegistry.default())

    def test_appends_store_record(self, tmp_path):
        store = CalibrationStore(str(tmp_path / "calib.ndjson"))
        calibrate(detection(0, 0, 90, 170), (1280, 720), CAM, ObjectSizeRegistry.default(), store=store, now_ms=5)
        records = store.load()
        assert len(records) == 1
        assert records[0].label == "chair"
        assert records[0].d0_m == pytest.approx(4.0)
        assert records[0].created_ms == 5


class TestEstimate:
    def test_ratio_update(self):
        track = make_track(1, "chair", BoundingBox(0, 0, 90, 170), d0=4.0)
        d = estimate(track, BoundingBox(0, 0, 180, 340))
        assert d == pytest.approx(2.0)
        assert track.last_distance_m == pytest.approx(2.0)
        d = estimate(track, BoundingBox(0, 0, 45, 85))
        assert d == pytest.approx(8.0)

    def test_noiseless_sweep_matches_pinhole_formula(self):
        # Apparent widths generated straight from the projection formula;
        # the estimator must reproduce every depth it came from.
        focal = CAM.focal_for(1280)
        width_m = 0.45
        depths = [5.0 - 0.25 * i for i in range(17)]  # 5.0 down to 1.0
        w0 = focal * width_m / depths[0]
        det0 = detection(0, 0, w0, w0 * 2)
        track = calibrate(det0, (1280, 720), CAM, ObjectSizeRegistry.default())
        assert track.d0_m == pytest.approx(depths[0], rel=1e-12)
        for depth in depths[1:]:
            w = focal * width_m / depth
            got = estimate(track, BoundingBox(0, 0, w, w * 2))
            assert got == pytest.approx(depth, rel=1e-12)

    def test_degenerate_width_rejected(self):
        track = make_track(1, "chair", BoundingBox(0, 0, 90, 170))
        with pytest.raises(DegenerateBoxError):
            estimate(track, BoundingBox(0, 0, 0.5, 10))
        # track untouched after the failed update
        assert track.last_distance_m == 4.0

    def test_requires_original_space(self):
        track = make_track(1, "chair", BoundingBox(0, 0, 90, 170))
        with pytest.raises(ValueError):
            estimate(track, BoundingBox(0, 0, 90, 170, space=SPACE_DOWNSCALED))


class TestAssociate:
    def test_simple_match_and_spawn(self):
        track = make_track(1, "chair", BoundingBox(100, 100, 50, 50))
        close = detection(105, 103, 50, 50)
        fresh = detection(500, 500, 40, 40, label="door")
        matches, unmatched, expired = associate([track], [close, fresh], now_ms=0)
        assert [(t.track_id, d.label) for t, d in matches] == [(1, "chair")]
        assert unmatched == [fresh]
        assert expired == []

    def test_label_gate(self):
        track = make_track(1, "chair", BoundingBox(100, 100, 50, 50))
        same_box_wrong_label = detection(100, 100, 50, 50, label="door")
        matches, unmatched, _ = associate([track], [same_box_wrong_label], now_ms=0)
        assert matches == []
        assert unmatched == [same_box_wrong_label]

    def test_iou_gate(self):
        track = make_track(1, "chair", BoundingBox(0, 0, 10, 10))
        barely_touching = detection(9.5, 9.5, 10, 10)
        matches, unmatched, _ = associate([track], [barely_touching], now_ms=0)
        assert matches == []

    def test_expiry(self):
        stale = make_track(1, "chair", BoundingBox(0, 0, 10, 10))
        matches, unmatched, expired = associate([stale], [], now_ms=2001, expiry_ms=2000)
        assert expired == [stale]
        matches, unmatched, expired = associate([stale], [], now_ms=2000, expiry_ms=2000)
        assert expired == []

    def test_matches_argmax_oracle(self):
        # Random float boxes make ties measure-zero, so the sort-based
        # matcher and the knock-out argmax oracle must pick the same pairs.
        rng = random.Random(7)
        labels = ("chair", "door")
        for _ in range(200):
            tracks = [
                make_track(
                    i + 1,
                    rng.choice(labels),
                    BoundingBox(rng.uniform(0, 60), rng.uniform(0, 60), rng.uniform(10, 50), rng.uniform(10, 50)),
                )
                for i in range(rng.randint(0, 4))
            ]
            dets = [
                detection(
                    rng.uniform(0, 60),
                    rng.uniform(0, 60),
                    rng.uniform(10, 50),
                    rng.uniform(10, 50),
                    label=rng.choice(labels),
                )
                for _ in range(rng.randint(0, 4))
            ]
            weights = [
                [
                    iou(t.last_box, d.box) if t.label == d.label else -1.0
                    for d in dets
                ]
                for t in tracks
            ]
            expected = greedy_match_matrix(weights, gate=0.1)
            matches, _, _ = associate(tracks, dets, now_ms=0)
            got = {(tracks.index(t), dets.index(d)) for t, d in matches}
            assert got == expected


class TestDistanceTracker:
    def test_spawn_update_expire(self):
        tracker = DistanceTracker(CAM)
        touched, expired = tracker.update([detection(595, 275, 90, 170)], (1280, 720), now_ms=0)
        assert len(touched) == 1
        assert touched[0].track_id == 1
        assert touched[0].last_distance_m == pytest.approx(4.0)

        touched, expired = tracker.update([detection(580, 260, 120, 226)], (1280, 720), now_ms=100)
        assert len(tracker.tracks) == 1
        assert touched[0].last_distance_m == pytest.approx(4.0 * 90 / 120)

        touched, expired = tracker.update([], (1280, 720), now_ms=2201)
        assert tracker.tracks == []
        assert len(expired) == 1

    def test_ids_are_stable_and_increasing(self):
        tracker = DistanceTracker(CAM)
        tracker.update([detection(0, 0, 50, 50), detection(600, 0, 50, 50, label="door")], (1280, 720), 0)
        assert [t.track_id for t in tracker.tracks] == [1, 2]
        tracker.reset()
        tracker.update([detection(0, 0, 50, 50)], (1280, 720), 0)
        assert [t.track_id for t in tracker.tracks] == [1]

    def test_sub_pixel_detection_ignored(self):
        tracker = DistanceTracker(CAM)
        touched, _ = tracker.update([detection(0, 0, 0.5, 10)], (1280, 720), 0)
        assert touched == []
        assert tracker.tracks == []

    def test_store_receives_each_calibration(self, tmp_path):
        store = CalibrationStore(str(tmp_path / "calib.ndjson"))
        tracker = DistanceTracker(CAM, store=store)
        tracker.update([detection(0, 0, 90, 170), detection(600, 0, 45, 90, label="door")], (1280, 720), 0)
        assert len(store.load()) == 2


class TestCalibrationStore:
    def test_append_load_round_trip(self, tmp_path):
        store = CalibrationStore(str(tmp_path / "calib.ndjson"))
        first = CalibrationRecord(label="chair", w0_px=90.0, d0_m=4.0, created_ms=10)
        second = CalibrationRecord(label="door", w0_px=45.5, d0_m=3.25, created_ms=20)
        store.append(first)
        store.append(second)
        assert store.load() == [first, second]
        assert store.skipped == 0

    def test_missing_file_is_empty(self, tmp_path):
        assert CalibrationStore(str(tmp_path / "nope.ndjson")).load() == []

    def test_corrupt_line_skipped(self, tmp_path):
        path = tmp_path / "calib.ndjson"
        good = json.dumps({"label": "chair", "w0_px": 90.0, "d0_m": 4.0, "created_ms": 0})
        path.write_text(good + "\n" + "{broken\n" + good + "\n")
        store = CalibrationStore(str(path))
        assert len(store.load()) == 2
        assert store.skipped == 1

    def test_trailing_partial_line_tolerated(self, tmp_path):
        path = tmp_path / "calib.ndjson"
        good = json.dumps({"label": "chair", "w0_px": 90.0, "d0_m": 4.0, "created_ms": 0})
        path.write_text(good + "\n" + '{"label": "door", "w0')
        store = CalibrationStore(str(path))
        assert len(store.load()) == 1
        assert store.skipped == 1

    def test_record_validation(self):
        with pytest.raises(ValueError):
            CalibrationRecord(label="chair", w0_px=0.0, d0_m=4.0, created_ms=0)


class TestObjectSizeRegistry:
    def test_default_knows_chair(self):
        assert ObjectSizeRegistry.default().get("chair") == 0.45
        assert ObjectSizeRegistry.default().get("spaceship") is None

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "widths.json"
        path.write_text('{"crate": 1.2}')
        registry = ObjectSizeRegistry.load(str(path))
        assert registry.get("crate") == 1.2

    def test_rejects_non_positive_width(self):
        with pytest.raises(ValueError):
            ObjectSizeRegistry({"chair": 0.0})
