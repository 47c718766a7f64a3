import random

import pytest

from oracles import pixel_iou
from soundsight.core import (
    BoundingBox,
    CameraIntrinsics,
    Detection,
    Frame,
    SPACE_DOWNSCALED,
    SPACE_ORIGINAL,
    SpaceMismatchError,
    clamp_box,
    iou,
    rescale_box,
)


def box(x, y, w, h, space=SPACE_ORIGINAL):
    return BoundingBox(x=x, y=y, w=w, h=h, space=space)


class TestFrame:
    def test_dims_and_meta(self):
        frame = Frame(id=3, timestamp_ms=120, width_px=1280, height_px=720)
        assert frame.dims == (1280, 720)
        assert frame.meta_dict() == {"id": 3, "timestamp_ms": 120, "width_px": 1280, "height_px": 720}
        assert frame.pixels is None

    def test_rejects_empty_dims(self):
        with pytest.raises(ValueError):
            Frame(id=1, timestamp_ms=0, width_px=0, height_px=720)


class TestBoundingBox:
    def test_derived_properties(self):
        b = box(10, 20, 100, 50)
        assert b.right == 110
        assert b.bottom == 70
        assert b.center_x == 60
        assert b.center_y == 45
        assert b.area == 5000

    def test_round_trip(self):
        b = box(1.5, 2.25, 3.0, 4.0, space=SPACE_DOWNSCALED)
        assert BoundingBox.from_dict(b.to_dict()) == b

    def test_rejects_non_positive_extent(self):
        with pytest.raises(ValueError):
            box(0, 0, 0, 10)
        with pytest.raises(ValueError):
            box(0, 0, 10, -1)

    def test_rejects_unknown_space(self):
        with pytest.raises(ValueError):
            box(0, 0, 1, 1, space="screen")


class TestDetection:
    def test_text_required_exactly_for_text_label(self):
        b = box(0, 0, 10, 10)
        Detection(box=b, label="text", score=0.9, text="EXIT")
        with pytest.raises(ValueError):
            Detection(box=b, label="text", score=0.9)
        with pytest.raises(ValueError):
            Detection(box=b, label="chair", score=0.9, text="EXIT")

    def test_score_bounds(self):
        with pytest.raises(ValueError):
            Detection(box=box(0, 0, 1, 1), label="chair", score=1.5)

    def test_round_trip(self):
        d = Detection(box=box(1, 2, 3, 4), label="text", score=0.75, text="hi", object_id=7)
        assert Detection.from_dict(d.to_dict()) == d
        plain = Detection(box=box(1, 2, 3, 4), label="door", score=0.5)
        encoded = plain.to_dict()
        assert "text" not in encoded and "object_id" not in encoded
        assert Detection.from_dict(encoded) == plain


class TestIntrinsics:
    def test_focal_scales_with_width(self):
        cam = CameraIntrinsics(focal_px=800.0, ref_width_px=1280, ref_height_px=720)
        assert cam.focal_for(1280) == 800.0
        assert cam.focal_for(640) == 400.0
        assert cam.focal_for(320) == 200.0

    def test_rejects_non_positive_focal(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(focal_px=0.0, ref_width_px=1280, ref_height_px=720)


class TestIou:
    def test_identity(self):
        b = box(5, 5, 20, 30)
        assert iou(b, b) == 1.0

    def test_disjoint(self):
        assert iou(box(0, 0, 10, 10), box(20, 20, 10, 10)) == 0.0
        # Edge-touching boxes share no area.
        assert iou(box(0, 0, 10, 10), box(10, 0, 10, 10)) == 0.0

    def test_known_overlap(self):
        # inter 5x10=50, union 100+100-50=150
        assert iou(box(0, 0, 10, 10), box(5, 0, 10, 10)) == pytest.approx(1 / 3)

    def test_space_mismatch_raises(self):
        with pytest.raises(SpaceMismatchError):
            iou(box(0, 0, 10, 10), box(0, 0, 10, 10, space=SPACE_DOWNSCALED))

    def test_matches_rasterized_oracle(self):
        # Integer-cornered boxes make the pixel-counting oracle exact.
        rng = random.Random(42)
        for _ in range(300):
            a = box(rng.randint(0, 40), rng.randint(0, 40), rng.randint(1, 30), rng.randint(1, 30))
            b = box(rng.randint(0, 40), rng.randint(0, 40), rng.randint(1, 30), rng.randint(1, 30))
            assert iou(a, b) == pytest.approx(pixel_iou(a, b), abs=1e-12)


class TestRescaleBox:
    def test_exact_round_trip_at_integer_ratio(self):
        b = box(37.5, 11.25, 220.0, 97.5)
        down = rescale_box(b, (1280, 720), (640, 360))
        assert down.space == SPACE_DOWNSCALED
        back = rescale_box(down, (640, 360), (1280, 720))
        assert back.space == SPACE_ORIGINAL
        assert (back.x, back.y, back.w, back.h) == (b.x, b.y, b.w, b.h)

    def test_identity_keeps_space(self):
        b = box(1, 2, 3, 4)
        same = rescale_box(b, (100, 100), (100, 100))
        assert same == b

    def test_explicit_target_space(self):
        b = box(10, 10, 10, 10, space=SPACE_DOWNSCALED)
        out = rescale_box(b, (640, 360), (1280, 720), to_space=SPACE_ORIGINAL)
        assert out.space == SPACE_ORIGINAL
        assert out.w == 20.0

    def test_anisotropic_scaling(self):
        b = box(100, 100, 100, 100)
        out = rescale_box(b, (1000, 500), (500, 500))
        assert (out.x, out.y, out.w, out.h) == (50, 100, 50, 100)

    def test_rejects_bad_dims(self):
        with pytest.raises(ValueError):
            rescale_box(box(0, 0, 1, 1), (0, 10), (10, 10))


class TestClampBox:
    def test_inside_untouched(self):
        b = box(10, 10, 50, 50)
        assert clamp_box(b, 100, 100) == b

    def test_clips_to_edges(self):
        b = box(-10, -5, 50, 50)
        clipped = clamp_box(b, 100, 100)
        assert (clipped.x, clipped.y) == (0, 0)
        assert (clipped.w, clipped.h) == (40, 45)

    def test_fully_outside_is_none(self):
        assert clamp_box(box(200, 200, 10, 10), 100, 100) is None
        assert clamp_box(box(-20, 0, 10, 10), 100, 100) is None
