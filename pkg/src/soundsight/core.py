"""Shared value types and geometry helpers used by every other module.

All values here are immutable after construction and safe to share between
threads. Boxes are floating-point; quantization happens only at render or
simulation edges so that downscale round-trips stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass

SPACE_ORIGINAL = "original"
SPACE_DOWNSCALED = "downscaled"
_SPACES = (SPACE_ORIGINAL, SPACE_DOWNSCALED)


class SpaceMismatchError(ValueError):
    """An operation mixed boxes from different coordinate spaces."""


@dataclass(frozen=True)
class Frame:
    """One unit of pipeline work: a timestamped image reference.

    ``pixels`` is an opaque payload; it is never decoded here and may be
    absent for detection-only flows.
    """

    id: int
    timestamp_ms: int
    width_px: int
    height_px: int
    pixels: bytes | None = None

    def __post_init__(self) -> None:
        if self.width_px < 1 or self.height_px < 1:
            raise ValueError(f"frame dims must be positive, got {self.width_px}x{self.height_px}")

    @property
    def dims(self) -> tuple[int, int]:
        return (self.width_px, self.height_px)

    def meta_dict(self) -> dict:
        """Canonical JSON encoding of the frame metadata (pixels excluded)."""
        return {
            "id": self.id,
            "timestamp_ms": self.timestamp_ms,
            "width_px": self.width_px,
            "height_px": self.height_px,
        }


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box with a top-left corner, in pixels.

    Every box carries the coordinate space it was measured in; operations
    that would silently mix spaces raise :class:`SpaceMismatchError` instead.
    """

    x: float
    y: float
    w: float
    h: float
    space: str = SPACE_ORIGINAL

    def __post_init__(self) -> None:
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box extents must be positive, got w={self.w} h={self.h}")
        if self.space not in _SPACES:
            raise ValueError(f"unknown coordinate space {self.space!r}")

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    @property
    def center_x(self) -> float:
        return self.x + self.w / 2.0

    @property
    def center_y(self) -> float:
        return self.y + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h, "space": self.space}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundingBox":
        return cls(
            x=float(d["x"]),
            y=float(d["y"]),
            w=float(d["w"]),
            h=float(d["h"]),
            space=str(d.get("space", SPACE_ORIGINAL)),
        )


@dataclass(frozen=True)
class Detection:
    """A labeled, scored box; ``text`` is present exactly for OCR hits."""

    box: BoundingBox
    label: str
    score: float
    text: str | None = None
    object_id: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0,1], got {self.score}")
        if (self.label == "text") != (self.text is not None):
            raise ValueError("text must be present iff label == 'text'")

    def to_dict(self) -> dict:
        d = {"box": self.box.to_dict(), "label": self.label, "score": self.score}
        if self.text is not None:
            d["text"] = self.text
        if self.object_id is not None:
            d["object_id"] = self.object_id
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Detection":
        return cls(
            box=BoundingBox.from_dict(d["box"]),
            label=str(d["label"]),
            score=float(d["score"]),
            text=d.get("text"),
            object_id=d.get("object_id"),
        )


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole focal length, expressed at a reference resolution."""

    focal_px: float
    ref_width_px: int
    ref_height_px: int

    def __post_init__(self) -> None:
        if self.focal_px <= 0:
            raise ValueError(f"focal_px must be positive, got {self.focal_px}")

    def focal_for(self, frame_width_px: float) -> float:
        """Focal length rescaled to a frame of the given width."""
        return self.focal_px * frame_width_px / self.ref_width_px


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes in the same coordinate space."""
    if a.space != b.space:
        raise SpaceMismatchError(f"iou across spaces: {a.space!r} vs {b.space!r}")
    ix = max(0.0, min(a.right, b.right) - max(a.x, b.x))
    iy = max(0.0, min(a.bottom, b.bottom) - max(a.y, b.y))
    inter = ix * iy
    if inter == 0.0:
        return 0.0
    union = a.area + b.area - inter
    return inter / union


def rescale_box(
    box: BoundingBox,
    from_dims: tuple[float, float],
    to_dims: tuple[float, float],
    to_space: str | None = None,
) -> BoundingBox:
    """Affine per-axis rescale of a box between two frame resolutions.

    When ``to_space`` is omitted the tag is kept for an identity rescale and
    toggled between original and downscaled otherwise.
    """
    fw, fh = from_dims
    tw, th = to_dims
    if fw <= 0 or fh <= 0 or tw <= 0 or th <= 0:
        raise ValueError("frame dims must be positive")
    if to_space is None:
        if (fw, fh) == (tw, th):
            to_space = box.space
        else:
            to_space = SPACE_DOWNSCALED if box.space == SPACE_ORIGINAL else SPACE_ORIGINAL
    sx = tw / fw
    sy = th / fh
    return BoundingBox(x=box.x * sx, y=box.y * sy, w=box.w * sx, h=box.h * sy, space=to_space)


def clamp_box(box: BoundingBox, width_px: float, height_px: float) -> BoundingBox | None:
    """Clip a box to frame bounds; None if nothing remains inside."""
    x1 = max(0.0, box.x)
    y1 = max(0.0, box.y)
    x2 = min(float(width_px), box.right)
    y2 = min(float(height_px), box.bottom)
    if x2 - x1 <= 0 or y2 - y1 <= 0:
        return None
    return BoundingBox(x=x1, y=y1, w=x2 - x1, h=y2 - y1, space=box.space)
