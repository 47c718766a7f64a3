"""Per-frame orchestration: preprocess, detect, normalize.

Frames are downscaled before detection (accuracy/speed trade) and every
surviving box is mapped back to original-frame coordinates. Detectors are
pluggable adapters: a scripted file, the geometric simulator, or a remote
HTTP service.
"""

from __future__ import annotations

import base64
import json
import time
from dataclasses import dataclass
from typing import Protocol

import requests

from .core import (
    Detection,
    Frame,
    SPACE_DOWNSCALED,
    SPACE_ORIGINAL,
    rescale_box,
)

DEFAULT_TARGET_LONG_EDGE = 640
DEFAULT_LATENCY_BUDGET_MS = 200
DEFAULT_MIN_SCORE = 0.5
DROP_STALE_KEEP_LATEST = "drop-stale-keep-latest"


class DetectorUnavailable(RuntimeError):
    """The detector backend cannot produce results right now."""


class DetectorTimeout(DetectorUnavailable):
    pass


class BadResponse(DetectorUnavailable):
    """Remote response violated the detection schema."""


class HttpError(DetectorUnavailable):
    def __init__(self, status: int, message: str = ""):
        super().__init__(message or f"detector returned HTTP {status}")
        self.status = status


class BudgetExceeded(RuntimeError):
    """Detection finished after the latency budget; frame is stale."""


class ScriptParseError(ValueError):
    """Detection script failed validation; message names the line."""


@dataclass(frozen=True)
class PipelineConfig:
    target_long_edge_px: int = DEFAULT_TARGET_LONG_EDGE
    latency_budget_ms: int = DEFAULT_LATENCY_BUDGET_MS
    drop_policy: str = DROP_STALE_KEEP_LATEST
    min_score: float = DEFAULT_MIN_SCORE

    def __post_init__(self) -> None:
        if self.target_long_edge_px < 64:
            raise ValueError("target_long_edge_px must be >= 64")
        if self.latency_budget_ms < 1:
            raise ValueError("latency_budget_ms must be >= 1")
        if self.drop_policy != DROP_STALE_KEEP_LATEST:
            raise ValueError(f"unknown drop policy {self.drop_policy!r}")
        if not 0.0 <= self.min_score <= 1.0:
            raise ValueError("min_score must be in [0,1]")


class DetectorAdapter(Protocol):
    """Given a (possibly downscaled) frame, return detections in its space."""

    def detect(self, frame: Frame) -> list[Detection]: ...


@dataclass(frozen=True)
class ScaleMeta:
    from_dims: tuple[int, int]  # original frame dims
    to_dims: tuple[int, int]  # downscaled dims actually used
    detect_space: str  # space tag detections are expected in

    @property
    def scaled(self) -> bool:
        return self.from_dims != self.to_dims


def preprocess(frame: Frame, cfg: PipelineConfig) -> tuple[Frame, ScaleMeta]:
    """Downscale so the long edge meets the target; never upscale.

    The pixel payload is opaque and passes through untouched; only the
    declared dims change. The returned metadata suffices to map any box
    back exactly.
    """
    w, h = frame.width_px, frame.height_px
    long_edge = max(w, h)
    if long_edge <= cfg.target_long_edge_px:
        meta = ScaleMeta(from_dims=(w, h), to_dims=(w, h), detect_space=SPACE_ORIGINAL)
        return frame, meta
    scale = cfg.target_long_edge_px / long_edge
    if w >= h:
        new_w = cfg.target_long_edge_px
        new_h = max(1, round(h * scale))
    else:
        new_h = cfg.target_long_edge_px
        new_w = max(1, round(w * scale))
    small = Frame(
        id=frame.id,
        timestamp_ms=frame.timestamp_ms,
        width_px=new_w,
        height_px=new_h,
        pixels=frame.pixels,
    )
    meta = ScaleMeta(from_dims=(w, h), to_dims=(new_w, new_h), detect_space=SPACE_DOWNSCALED)
    return small, meta


def run_step(frame: Frame, adapter: DetectorAdapter, cfg: PipelineConfig) -> list[Detection]:
    """One frame through the pipeline; output boxes are original-frame.

    Only filters (by min_score) and rescales; never reorders, duplicates or
    fabricates detections. Raises DetectorUnavailable on backend failure and
    BudgetExceeded when the adapter overran the latency budget.
    """
    small, meta = preprocess(frame, cfg)
    started = time.monotonic()
    detections = adapter.detect(small)
    elapsed_ms = (time.monotonic() - started) * 1000.0
    if elapsed_ms > cfg.latency_budget_ms:
        raise BudgetExceeded(f"detection took {elapsed_ms:.0f} ms over a {cfg.latency_budget_ms} ms budget")
    out: list[Detection] = []
    for det in detections:
        if det.box.space != meta.detect_space:
            raise DetectorUnavailable(
                f"adapter returned box in {det.box.space!r} space, expected {meta.detect_space!r}"
            )
        if det.score < cfg.min_score:
            continue
        box = rescale_box(det.box, meta.to_dims, meta.from_dims, to_space=SPACE_ORIGINAL)
        out.append(Detection(box=box, label=det.label, score=det.score, text=det.text, object_id=det.object_id))
    return out


# ---------------------------------------------------------------------------
# Scripted detector


@dataclass(frozen=True)
class DetectionScriptEntry:
    frame_id: int
    detections: tuple[Detection, ...]


def load_detection_script(path: str) -> dict[int, tuple[Detection, ...]]:
    """Parse a newline-delimited JSON detection script.

    One entry per line: {"frame_id": n, "detections": [...]}; frame ids must
    be non-decreasing. Raises ScriptParseError naming the offending line.
    """
    entries: dict[int, tuple[Detection, ...]] = {}
    last_id: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                frame_id = int(raw["frame_id"])
                dets = tuple(Detection.from_dict(d) for d in raw["detections"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ScriptParseError(f"{path}: line {lineno}: {exc}") from exc
            if last_id is not None and frame_id < last_id:
                raise ScriptParseError(f"{path}: line {lineno}: frame ids must be non-decreasing")
            last_id = frame_id
            entries[frame_id] = dets
    return entries


class ScriptedDetector:
    """Deterministic detector replaying a validated script file."""

    def __init__(self, path: str):
        self.entries = load_detection_script(path)

    def detect(self, frame: Frame) -> list[Detection]:
        return list(self.entries.get(frame.id, ()))


# ---------------------------------------------------------------------------
# Remote detector

REMOTE_DETECT_PATH = "/detect"


class RemoteDetector:
    """HTTP POST /detect client with one retry inside the latency budget."""

    def __init__(self, endpoint: str, latency_budget_ms: int = DEFAULT_LATENCY_BUDGET_MS, session=None):
        self.endpoint = endpoint.rstrip("/")
        self.latency_budget_ms = latency_budget_ms
        self._http = session or requests.Session()

    def detect(self, frame: Frame) -> list[Detection]:
        if frame.pixels is None:
            raise DetectorUnavailable("remote detection requires a pixel payload")
        body = {
            "frame_id": frame.id,
            "width_px": frame.width_px,
            "height_px": frame.height_px,
            "pixels_b64": base64.b64encode(frame.pixels).decode("ascii"),
        }
        deadline = time.monotonic() + self.latency_budget_ms / 1000.0
        last_timeout: Exception | None = None
        for _ in range(2):  # one retry on timeout
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            try:
                resp = self._http.post(self.endpoint + REMOTE_DETECT_PATH, json=body, timeout=remaining)
            except requests.Timeout as exc:
                last_timeout = exc
                continue
            except requests.RequestException as exc:
                raise DetectorUnavailable(f"detector request failed: {exc}") from exc
            if resp.status_code != 200:
                raise HttpError(resp.status_code)
            try:
                payload = resp.json()
                return [Detection.from_dict(d) for d in payload["detections"]]
            except (ValueError, KeyError, TypeError) as exc:
                raise BadResponse(f"malformed detector response: {exc}") from exc
        raise DetectorTimeout(f"detector timed out twice within {self.latency_budget_ms} ms") from last_timeout
