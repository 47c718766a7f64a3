"""Two-stage monocular distance: known-width pinhole calibration for the
initial distance, then apparent-size ratio for every update.

A track records the apparent width w0 and distance d0 seen at calibration;
the current estimate is always d0 * (w0 / w). Calibration records append to
a local newline-delimited JSON store.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field

from .core import BoundingBox, CameraIntrinsics, Detection, SPACE_ORIGINAL, iou

logger = logging.getLogger(__name__)

DEFAULT_D0_M = 3.0
TRACK_EXPIRY_MS = 2000
IOU_GATE = 0.1
MIN_WIDTH_PX = 1.0

CONFIDENCE_CALIBRATED = "calibrated"
CONFIDENCE_ASSUMED = "assumed"

# Assumed physical widths in meters for known classes.
DEFAULT_WIDTHS: dict[str, float] = {
    "door": 0.90,
    "chair": 0.45,
    "person": 0.50,
    "table": 0.75,
    "bottle": 0.08,
    "sign": 0.60,
}


class DegenerateBoxError(ValueError):
    """Apparent width too small for a meaningful ratio estimate."""


@dataclass(frozen=True)
class ObjectSizeRegistry:
    widths_m: dict[str, float]

    def __post_init__(self) -> None:
        for label, width in self.widths_m.items():
            if width <= 0:
                raise ValueError(f"registry width for {label!r} must be positive")

    def get(self, label: str) -> float | None:
        return self.widths_m.get(label)

    @classmethod
    def default(cls) -> "ObjectSizeRegistry":
        return cls(dict(DEFAULT_WIDTHS))

    @classmethod
    def load(cls, path: str) -> "ObjectSizeRegistry":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        return cls({str(k): float(v) for k, v in data.items()})


@dataclass
class DistanceTrack:
    track_id: int
    label: str
    w0_px: float
    d0_m: float
    last_box: BoundingBox
    last_distance_m: float
    confidence: str
    created_ms: int
    updated_ms: int

    def __post_init__(self) -> None:
        if self.w0_px <= 0 or self.d0_m <= 0 or self.last_distance_m <= 0:
            raise ValueError("track calibration values must be positive")


@dataclass(frozen=True)
class CalibrationRecord:
    label: str
    w0_px: float
    d0_m: float
    created_ms: int

    def __post_init__(self) -> None:
        if self.w0_px <= 0 or self.d0_m <= 0:
            raise ValueError("calibration values must be positive")

    def to_dict(self) -> dict:
        return {"label": self.label, "w0_px": self.w0_px, "d0_m": self.d0_m, "created_ms": self.created_ms}

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationRecord":
        return cls(
            label=str(d["label"]),
            w0_px=float(d["w0_px"]),
            d0_m=float(d["d0_m"]),
            created_ms=int(d["created_ms"]),
        )


class CalibrationStore:
    """Append-only NDJSON store of calibration records.

    Loading skips corrupt lines with a warning and tolerates a trailing
    partial line left by a crash mid-append.
    """

    def __init__(self, path: str):
        self.path = path
        self.skipped = 0

    def append(self, record: CalibrationRecord) -> None:
        directory = os.path.dirname(self.path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")

    def load(self) -> list[CalibrationRecord]:
        if not os.path.exists(self.path):
            return []
        records: list[CalibrationRecord] = []
        self.skipped = 0
        with open(self.path, "r", encoding="utf-8") as fh:
            content = fh.read()
        lines = content.split("\n")
        trailing_partial = bool(lines and lines[-1] != "")
        if not trailing_partial:
            lines = lines[:-1]
        body = lines[:-1] if trailing_partial else lines
        for lineno, line in enumerate(body, start=1):
            if not line.strip():
                continue
            try:
                records.append(CalibrationRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                self.skipped += 1
                logger.warning("%s: line %d: corrupt calibration record skipped", self.path, lineno)
        if trailing_partial:
            self.skipped += 1
            logger.warning("%s: trailing partial line ignored", self.path)
        return records


def calibrate(
    detection: Detection,
    frame_dims: tuple[int, int],
    intrinsics: CameraIntrinsics,
    registry: ObjectSizeRegistry,
    track_id: int = 0,
    now_ms: int = 0,
    store: CalibrationStore | None = None,
    default_d0_m: float = DEFAULT_D0_M,
) -> DistanceTrack:
    """Open a track for a first sighting.

    Known classes get a pinhole initial distance from the registry width;
    unknown classes fall back to the assumed default so haptic warnings can
    still fire for them.
    """
    if detection.box.space != SPACE_ORIGINAL:
        raise ValueError("calibration requires a box in original-frame space")
    w0 = detection.box.w
    width_m = registry.get(detection.label)
    if width_m is not None:
        focal = intrinsics.focal_for(frame_dims[0])
        d0 = focal * width_m / w0
        confidence = CONFIDENCE_CALIBRATED
    else:
        d0 = default_d0_m
        confidence = CONFIDENCE_ASSUMED
    track = DistanceTrack(
        track_id=track_id,
        label=detection.label,
        w0_px=w0,
        d0_m=d0,
        last_box=detection.box,
        last_distance_m=d0,
        confidence=confidence,
        created_ms=now_ms,
        updated_ms=now_ms,
    )
    if store is not None:
        store.append(CalibrationRecord(label=track.label, w0_px=w0, d0_m=d0, created_ms=now_ms))
    return track


def estimate(track: DistanceTrack, new_box: BoundingBox, now_ms: int = 0) -> float:
    """Ratio update: d = d0 * w0 / w. Refreshes the track in place."""
    if new_box.space != SPACE_ORIGINAL:
        raise ValueError("estimate requires a box in original-frame space")
    if new_box.w < MIN_WIDTH_PX:
        raise DegenerateBoxError(f"apparent width {new_box.w:.3f} px below {MIN_WIDTH_PX} px")
    d = track.d0_m * (track.w0_px / new_box.w)
    track.last_box = new_box
    track.last_distance_m = d
    track.updated_ms = now_ms
    return d


def associate(
    tracks: list[DistanceTrack],
    detections: list[Detection],
    now_ms: int,
    expiry_ms: int = TRACK_EXPIRY_MS,
    iou_gate: float = IOU_GATE,
) -> tuple[list[tuple[DistanceTrack, Detection]], list[Detection], list[DistanceTrack]]:
    """Greedy same-label IoU matching.

    Returns (matches, unmatched detections, expired tracks). Candidate pairs
    are taken highest IoU first, gated at ``iou_gate``; tracks unseen longer
    than ``expiry_ms`` expire.
    """
    pairs = []
    for ti, track in enumerate(tracks):
        for di, det in enumerate(detections):
            if track.label != det.label:
                continue
            overlap = iou(track.last_box, det.box)
            if overlap >= iou_gate:
                pairs.append((overlap, ti, di))
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
    matched_tracks: set[int] = set()
    matched_dets: set[int] = set()
    matches: list[tuple[DistanceTrack, Detection]] = []
    for overlap, ti, di in pairs:
        if ti in matched_tracks or di in matched_dets:
            continue
        matched_tracks.add(ti)
        matched_dets.add(di)
        matches.append((tracks[ti], detections[di]))
    unmatched = [d for i, d in enumerate(detections) if i not in matched_dets]
    expired = [
        t for i, t in enumerate(tracks) if i not in matched_tracks and now_ms - t.updated_ms > expiry_ms
    ]
    return matches, unmatched, expired


class DistanceTracker:
    """Per-session track set: associates, calibrates, estimates, expires."""

    def __init__(
        self,
        intrinsics: CameraIntrinsics,
        registry: ObjectSizeRegistry | None = None,
        store: CalibrationStore | None = None,
        default_d0_m: float = DEFAULT_D0_M,
        expiry_ms: int = TRACK_EXPIRY_MS,
        iou_gate: float = IOU_GATE,
    ):
        self.intrinsics = intrinsics
        self.registry = registry if registry is not None else ObjectSizeRegistry.default()
        self.store = store
        self.default_d0_m = default_d0_m
        self.expiry_ms = expiry_ms
        self.iou_gate = iou_gate
        self.tracks: list[DistanceTrack] = []
        self._next_id = 1

    def update(
        self, detections: list[Detection], frame_dims: tuple[int, int], now_ms: int
    ) -> tuple[list[DistanceTrack], list[DistanceTrack]]:
        """One tick: match, estimate, spawn, expire.

        Returns (active tracks updated this tick, expired tracks). Matched
        detections with degenerate widths leave their track untouched.
        """
        matches, unmatched, expired = associate(
            self.tracks, detections, now_ms, self.expiry_ms, self.iou_gate
        )
        touched: list[DistanceTrack] = []
        for track, det in matches:
            try:
                estimate(track, det.box, now_ms)
            except DegenerateBoxError:
                continue
            touched.append(track)
        for det in unmatched:
            if det.box.w < MIN_WIDTH_PX:
                continue
            track = calibrate(
                det,
                frame_dims,
                self.intrinsics,
                self.registry,
                track_id=self._next_id,
                now_ms=now_ms,
                store=self.store,
                default_d0_m=self.default_d0_m,
            )
            self._next_id += 1
            self.tracks.append(track)
            touched.append(track)
        for track in expired:
            self.tracks.remove(track)
        return touched, expired

    def reset(self) -> None:
        self.tracks.clear()
        self._next_id = 1
