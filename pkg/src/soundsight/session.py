"""Session engine: one simulated walk-through wired to the full stack.

A session owns a camera pose inside a scene, runs perception every tick,
tracks distances, and turns the results into speech and haptic events.
Everything it emits is an EventEnvelope; the newline-delimited JSON log of
a headless run and the live wire stream are the same format. All time is
the simulated tick clock, so a run is a pure function of
(config, scene, walk script, seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .config import SessionConfig
from .core import CameraIntrinsics, Frame
from .currency import CurrencyLabelError, announce_tally, tally_detections
from .distance import CalibrationStore, DistanceTracker, ObjectSizeRegistry
from .feedback import (
    OBJECT_KEY_PREFIX,
    PRIORITY_CRITICAL,
    PRIORITY_NAVIGATION,
    SpeechItem,
    SpeechQueue,
    announce_object,
    navigation_pattern,
    proximity_pattern,
)
from .interaction import (
    FEATURE_PAGES,
    GESTURE_LONG_PRESS,
    GESTURE_SWIPE_UP,
    GESTURE_TAP,
    INTRO_TEXT,
    PAGE_CURRENCY,
    PAGE_HOME,
    PAGE_INTRO,
    PAGE_LABELS,
    PAGE_OCR,
    Gesture,
    GestureMachine,
    OutOfOrderEventError,
    PageState,
    TouchEvent,
    navigate,
    resolve_target,
)
from .pipeline import (
    BudgetExceeded,
    DetectorUnavailable,
    RemoteDetector,
    ScriptedDetector,
    run_step,
)
from .reading import assemble, blocks_from_detections, speak_text
from .simulator import Scene, SimulatedDetector, StepCommand, step

PROTOCOL_VERSION = 1

ENVELOPE_TYPES = ("hello", "state", "speech", "haptic", "detection", "metrics", "error")

# Logical touch surface the UI reports coordinates in.
SCREEN_W = 390.0
SCREEN_H = 844.0

GESTURE_KINDS = (GESTURE_TAP, GESTURE_LONG_PRESS, GESTURE_SWIPE_UP)

COMMAND_TYPES = ("touch", "gesture", "move", "mode", "reset")

_SEGMENT_SCHEMA = {
    "type": "object",
    "required": ["intensity", "duration_ms", "gap_ms"],
    "properties": {
        "intensity": {"type": "number", "minimum": 0, "maximum": 1},
        "duration_ms": {"type": "integer", "exclusiveMinimum": 0},
        "gap_ms": {"type": "integer", "minimum": 0},
    },
}

_BOX_SCHEMA = {
    "type": "object",
    "required": ["x", "y", "w", "h", "space"],
    "properties": {
        "x": {"type": "number"},
        "y": {"type": "number"},
        "w": {"type": "number", "exclusiveMinimum": 0},
        "h": {"type": "number", "exclusiveMinimum": 0},
        "space": {"enum": ["original", "downscaled"]},
    },
}

ENVELOPE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "session event envelope",
    "type": "object",
    "required": ["seq", "t_ms", "type"],
    "properties": {
        "seq": {"type": "integer", "minimum": 0},
        "t_ms": {"type": "integer", "minimum": 0},
        "type": {"enum": list(ENVELOPE_TYPES)},
    },
    "allOf": [
        {
            "if": {"properties": {"type": {"const": "hello"}}},
            "then": {
                "required": ["protocol_version", "config_summary"],
                "properties": {
                    "protocol_version": {"const": PROTOCOL_VERSION},
                    "config_summary": {"type": "object"},
                },
            },
        },
        {
            "if": {"properties": {"type": {"const": "state"}}},
            "then": {
                "required": ["page", "pose", "first_launch"],
                "properties": {
                    "page": {"type": "string"},
                    "first_launch": {"type": "boolean"},
                    "pose": {
                        "type": "object",
                        "required": ["x", "z", "heading"],
                        "properties": {
                            "x": {"type": "number"},
                            "z": {"type": "number"},
                            "heading": {"type": "number"},
                        },
                    },
                },
            },
        },
        {
            "if": {"properties": {"type": {"const": "speech"}}},
            "then": {
                "required": ["text", "priority"],
                "properties": {
                    "text": {"type": "string", "minLength": 1},
                    "priority": {"enum": [0, 1, 2]},
                },
            },
        },
        {
            "if": {"properties": {"type": {"const": "haptic"}}},
            "then": {
                "required": ["kind", "segments"],
                "properties": {
                    "kind": {"enum": ["proximity", "page_open", "page_back"]},
                    "segments": {"type": "array", "minItems": 1, "items": _SEGMENT_SCHEMA},
                },
            },
        },
        {
            "if": {"properties": {"type": {"const": "detection"}}},
            "then": {
                "required": ["frame_id", "detections", "tracks"],
                "properties": {
                    "frame_id": {"type": "integer", "minimum": 0},
                    "detections": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["box", "label", "score"],
                            "properties": {
                                "box": _BOX_SCHEMA,
                                "label": {"type": "string"},
                                "score": {"type": "number", "minimum": 0, "maximum": 1},
                            },
                        },
                    },
                    "tracks": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["track_id", "label", "distance_m", "box"],
                            "properties": {
                                "track_id": {"type": "integer"},
                                "label": {"type": "string"},
                                "distance_m": {"type": "number", "exclusiveMinimum": 0},
                                "confidence": {"enum": ["calibrated", "assumed"]},
                                "box": _BOX_SCHEMA,
                            },
                        },
                    },
                },
            },
        },
        {
            "if": {"properties": {"type": {"const": "metrics"}}},
            "then": {
                "required": ["ticks", "frames", "detections", "speech_started", "haptic_events"],
                "properties": {
                    "ticks": {"type": "integer", "minimum": 0},
                    "frames": {"type": "integer", "minimum": 0},
                    "detections": {"type": "integer", "minimum": 0},
                    "speech_started": {"type": "integer", "minimum": 0},
                    "haptic_events": {"type": "integer", "minimum": 0},
                },
            },
        },
        {
            "if": {"properties": {"type": {"const": "error"}}},
            "then": {
                "required": ["message"],
                "properties": {"message": {"type": "string", "minLength": 1}},
            },
        },
    ],
}


class WalkParseError(ValueError):
    """Walk script failed validation; message names the line."""


@dataclass(frozen=True)
class EventEnvelope:
    seq: int
    t_ms: int
    type: str
    body: dict

    def to_dict(self) -> dict:
        d = {"seq": self.seq, "t_ms": self.t_ms, "type": self.type}
        d.update(self.body)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


@dataclass
class SessionMetrics:
    ticks: int = 0
    frames: int = 0
    detections: int = 0
    speech_started: int = 0
    haptic_events: int = 0
    tracks_expired: int = 0
    collisions: int = 0
    errors: int = 0

    def to_dict(self) -> dict:
        return {
            "ticks": self.ticks,
            "frames": self.frames,
            "detections": self.detections,
            "speech_started": self.speech_started,
            "haptic_events": self.haptic_events,
            "tracks_expired": self.tracks_expired,
            "collisions": self.collisions,
            "errors": self.errors,
        }


class Session:
    """One user's run: pose, page, perception, tracking, and feedback.

    The session never touches the wall clock. ``tick`` advances the
    simulated clock by one step, applies at most one queued move, senses
    the world, and emits envelopes into ``log`` in a deterministic order.
    """

    def __init__(self, config: SessionConfig, scene: Scene, first_launch: bool = True):
        self.config = config
        self.scene = scene
        self.pose = scene.start_pose
        self.tick_ms = round(1000 / config.tick_hz)
        self.now_ms = 0
        self.tick_index = 0
        self._frame_counter = 0
        self.log: list[EventEnvelope] = []
        self.metrics = SessionMetrics()
        self._seq = 0
        self._last_state: tuple | None = None
        self._last_announced: str | None = None
        self._pending_moves: list[StepCommand] = []

        registry = (
            ObjectSizeRegistry.load(config.registry_path)
            if config.registry_path
            else ObjectSizeRegistry.default()
        )
        store = CalibrationStore(config.calibration_store_path) if config.calibration_store_path else None
        # The simulated camera defines its own intrinsics; config supplies
        # them only when detections come from outside the simulator.
        if config.detector_kind == "simulated":
            intrinsics = scene.intrinsics
            self.detector = SimulatedDetector(scene, lambda: self.pose)
        elif config.detector_kind == "scripted":
            intrinsics = CameraIntrinsics(config.focal_px, config.ref_width_px, config.ref_height_px)
            self.detector = ScriptedDetector(config.detector_script_path)
        else:
            intrinsics = CameraIntrinsics(config.focal_px, config.ref_width_px, config.ref_height_px)
            self.detector = RemoteDetector(config.detector_endpoint, config.pipeline.latency_budget_ms)
        self.tracker = DistanceTracker(
            intrinsics, registry=registry, store=store, default_d0_m=config.default_d0_m
        )
        self.queue = SpeechQueue()
        self.page = PageState.initial(first_launch)
        self.gestures = GestureMachine(SCREEN_W, SCREEN_H, config.gestures)

    # ------------------------------------------------------------------
    # Envelope plumbing

    def emit(self, type_: str, body: dict) -> EventEnvelope:
        env = EventEnvelope(seq=self._seq, t_ms=self.now_ms, type=type_, body=body)
        self._seq += 1
        self.log.append(env)
        return env

    def emit_error(self, message: str) -> None:
        self.metrics.errors += 1
        self.emit("error", {"message": message})

    def _state_body(self) -> dict:
        return {
            "page": self.page.page,
            "pose": {"x": self.pose.x, "z": self.pose.z, "heading": self.pose.heading},
            "first_launch": self.page.first_launch,
        }

    def _emit_state_if_changed(self) -> None:
        body = self._state_body()
        key = (
            body["page"],
            body["pose"]["x"],
            body["pose"]["z"],
            body["pose"]["heading"],
            body["first_launch"],
        )
        if key != self._last_state:
            self._last_state = key
            self.emit("state", body)

    def _enqueue(self, item: SpeechItem) -> None:
        self.queue.enqueue(item, self.now_ms)

    def _emit_haptic(self, pattern) -> None:
        self.metrics.haptic_events += 1
        self.emit("haptic", pattern.to_dict())

    # ------------------------------------------------------------------
    # Lifecycle

    def start(self) -> None:
        """Session-start events: initial state, then the greeting."""
        self._emit_state_if_changed()
        if self.page.page == PAGE_INTRO:
            self._enqueue(SpeechItem(text=INTRO_TEXT, priority=PRIORITY_NAVIGATION, dedupe_key="intro"))
        else:
            self._enqueue(SpeechItem(text=PAGE_LABELS[PAGE_HOME], priority=PRIORITY_NAVIGATION))
        self._drain_speech()

    def tick(self, commands: list[dict] | None = None) -> None:
        """One clock step: commands, movement, perception, feedback."""
        self.now_ms += self.tick_ms
        self.tick_index += 1
        self.metrics.ticks += 1

        for command in commands or []:
            self.handle_command(command)

        fired = None
        try:
            fired = self.gestures.tick(self.now_ms)
        except OutOfOrderEventError as exc:
            self.emit_error(str(exc))
        if fired is not None:
            self._apply_gesture(fired)

        if self._pending_moves:
            command = self._pending_moves.pop(0)
            new_pose, collided = step(self.pose, command, self.scene)
            self.pose = new_pose
            if collided:
                self.metrics.collisions += 1
                self._enqueue(
                    SpeechItem(text="path blocked", priority=PRIORITY_CRITICAL, dedupe_key="blocked")
                )
        self._emit_state_if_changed()

        self._perceive()
        self._drain_speech()

    def _next_frame(self) -> Frame:
        self._frame_counter += 1
        self.metrics.frames += 1
        # Remote backends need a pixel payload on the wire; the simulated
        # world renders nothing, so it ships empty.
        pixels = b"" if self.config.detector_kind == "remote" else None
        return Frame(
            id=self._frame_counter,
            timestamp_ms=self.now_ms,
            width_px=self.scene.frame_w,
            height_px=self.scene.frame_h,
            pixels=pixels,
        )

    def _perceive(self) -> None:
        frame = self._next_frame()
        try:
            detections = run_step(frame, self.detector, self.config.pipeline)
        except (BudgetExceeded, DetectorUnavailable) as exc:
            self.emit_error(f"frame {frame.id} dropped: {exc}")
            return
        self.metrics.detections += len(detections)

        _, expired = self.tracker.update(detections, frame.dims, self.now_ms)
        self.metrics.tracks_expired += len(expired)

        if detections:
            tracks = sorted(self.tracker.tracks, key=lambda t: t.track_id)
            self.emit(
                "detection",
                {
                    "frame_id": frame.id,
                    "detections": [d.to_dict() for d in detections],
                    "tracks": [
                        {
                            "track_id": t.track_id,
                            "label": t.label,
                            "distance_m": t.last_distance_m,
                            "confidence": t.confidence,
                            "box": t.last_box.to_dict(),
                        }
                        for t in tracks
                    ],
                },
            )

        if self.tracker.tracks:
            # Speak only the nearest object, and only when what would be
            # said actually changes; everything else stays visual, in the
            # detection envelopes. A newer announcement supersedes any
            # pending stale one.
            nearest = min(self.tracker.tracks, key=lambda t: t.last_distance_m)
            item = announce_object(nearest, self.scene.frame_w, self.now_ms)
            if item.dedupe_key != self._last_announced:
                self._last_announced = item.dedupe_key
                self.queue.drop_pending(
                    lambda i: i.dedupe_key is not None and i.dedupe_key.startswith(OBJECT_KEY_PREFIX)
                )
                self._enqueue(item)
            pattern = proximity_pattern(nearest.last_distance_m)
            if pattern is not None:
                self._emit_haptic(pattern)

    def _drain_speech(self) -> None:
        for item in self.queue.tick(self.now_ms):
            self.metrics.speech_started += 1
            self.emit("speech", {"text": item.text, "priority": item.priority})

    def emit_metrics(self) -> None:
        self.emit("metrics", self.metrics.to_dict())

    # ------------------------------------------------------------------
    # Inbound commands

    def handle_command(self, command: dict) -> None:
        """Apply one wire/script command; malformed input costs one error
        envelope and nothing else."""
        if not isinstance(command, dict):
            self.emit_error("command must be a JSON object")
            return
        kind = command.get("type")
        try:
            if kind == "move":
                self._handle_move(command)
            elif kind == "touch":
                self._handle_touch(command)
            elif kind == "gesture":
                self._handle_gesture_command(command)
            elif kind == "mode":
                self._handle_mode(command)
            elif kind == "reset":
                self._handle_reset()
            else:
                self.emit_error(f"unknown command type {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            self.emit_error(f"bad {kind} command: {exc}")

    def _handle_move(self, command: dict) -> None:
        self._pending_moves.append(
            StepCommand(forward=float(command.get("forward", 0.0)), turn=float(command.get("turn", 0.0)))
        )

    def _handle_touch(self, command: dict) -> None:
        event = TouchEvent(
            kind=str(command["phase"]),
            x=float(command["x"]),
            y=float(command["y"]),
            t_ms=self.now_ms,
        )
        try:
            gesture = self.gestures.feed(event)
        except OutOfOrderEventError as exc:
            self.emit_error(str(exc))
            return
        if gesture is not None:
            self._apply_gesture(gesture)

    def _handle_gesture_command(self, command: dict) -> None:
        kind = command.get("kind")
        if kind not in GESTURE_KINDS:
            raise ValueError(f"unknown gesture kind {kind!r}")
        target = command.get("target")
        at = (float(command.get("x", SCREEN_W / 2)), float(command.get("y", SCREEN_H / 2)))
        self._apply_gesture(Gesture(kind=kind, at=at, target=target))

    def _handle_mode(self, command: dict) -> None:
        page = command.get("page")
        if page not in FEATURE_PAGES and page != PAGE_HOME:
            raise ValueError(f"unknown page {page!r}")
        if page != self.page.page:
            self.page = PageState(page=page, first_launch=False)
            self._emit_haptic(navigation_pattern("page_open"))
            self._emit_state_if_changed()
        self._enqueue(SpeechItem(text=PAGE_LABELS[page], priority=PRIORITY_NAVIGATION))

    def _handle_reset(self) -> None:
        self.pose = self.scene.start_pose
        self.page = PageState(page=PAGE_HOME, first_launch=False)
        self.tracker.reset()
        self.queue.clear()
        self.gestures.reset()
        self._last_announced = None
        self._pending_moves.clear()
        self._emit_state_if_changed()
        self._enqueue(SpeechItem(text="session reset", priority=PRIORITY_NAVIGATION))

    # ------------------------------------------------------------------
    # Gestures and page actions

    def _apply_gesture(self, gesture: Gesture) -> None:
        if gesture.target is None and gesture.kind != GESTURE_SWIPE_UP:
            target = resolve_target(self.page.page, gesture.at[0], gesture.at[1], SCREEN_W, SCREEN_H)
            gesture = Gesture(kind=gesture.kind, at=gesture.at, target=target)

        # A tap on a feature page's capture surface runs the capture
        # instead of merely naming the control.
        if (
            gesture.kind == GESTURE_TAP
            and gesture.target == "capture"
            and self.page.page in FEATURE_PAGES
        ):
            self._capture()
            return

        new_state, events = navigate(self.page, gesture)
        page_changed = new_state.page != self.page.page or new_state.first_launch != self.page.first_launch
        self.page = new_state
        if page_changed:
            self._emit_state_if_changed()
        for event in events:
            if isinstance(event, SpeechItem):
                self._enqueue(event)
            else:
                self._emit_haptic(event)

    def _capture(self) -> None:
        frame = self._next_frame()
        try:
            detections = run_step(frame, self.detector, self.config.pipeline)
        except (BudgetExceeded, DetectorUnavailable) as exc:
            self.emit_error(f"capture failed: {exc}")
            return
        self.metrics.detections += len(detections)
        if detections:
            self.emit(
                "detection",
                {"frame_id": frame.id, "detections": [d.to_dict() for d in detections], "tracks": []},
            )
        if self.page.page == PAGE_CURRENCY:
            try:
                tally = tally_detections(detections)
            except CurrencyLabelError as exc:
                self.emit_error(str(exc))
                return
            self._enqueue(announce_tally(tally))
        elif self.page.page == PAGE_OCR:
            self._enqueue(speak_text(assemble(blocks_from_detections(detections))))
        else:
            # Object-detection page: re-announce the nearest live track.
            if self.tracker.tracks:
                nearest = min(self.tracker.tracks, key=lambda t: t.last_distance_m)
                self._enqueue(announce_object(nearest, self.scene.frame_w, self.now_ms))
            else:
                self._enqueue(SpeechItem(text="nothing in view", priority=PRIORITY_NAVIGATION))


# ---------------------------------------------------------------------------
# Walk scripts and headless runs


def load_walk(path: str | Path) -> list[dict | None]:
    """Parse a walk script: one command per line, applied one per tick.

    ``{"type":"wait","ticks":n}`` is script-only sugar for n idle ticks
    (None entries). Errors name the offending line.
    """
    ticks: list[dict | None] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                command = json.loads(line)
            except json.JSONDecodeError as exc:
                raise WalkParseError(f"{path}: line {lineno}: {exc.msg}") from exc
            if not isinstance(command, dict) or "type" not in command:
                raise WalkParseError(f"{path}: line {lineno}: command must be an object with a type")
            if command["type"] == "wait":
                count = command.get("ticks", 1)
                if not isinstance(count, int) or count < 1:
                    raise WalkParseError(f"{path}: line {lineno}: wait ticks must be a positive integer")
                ticks.extend([None] * count)
            elif command["type"] in COMMAND_TYPES:
                ticks.append(command)
            else:
                raise WalkParseError(f"{path}: line {lineno}: unknown command type {command['type']!r}")
    return ticks


def first_launch_flag_path(store_path: str) -> Path:
    return Path(store_path).with_name(Path(store_path).name + ".intro-seen")


def run_headless(scene: Scene, walk: list[dict | None], config: SessionConfig) -> Session:
    """Execute a walk script tick by tick; returns the finished session."""
    first_launch = True
    flag = None
    if config.calibration_store_path:
        flag = first_launch_flag_path(config.calibration_store_path)
        first_launch = not flag.exists()
    session = Session(config, scene, first_launch=first_launch)
    session.start()
    for command in walk:
        session.tick([command] if command is not None else [])
    if walk:
        session.emit_metrics()
    if flag is not None and first_launch:
        flag.write_text("seen\n", encoding="utf-8")
    return session


def write_log(session: Session, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for env in session.log:
            fh.write(env.to_json() + "\n")


def log_lines(session: Session) -> str:
    return "".join(env.to_json() + "\n" for env in session.log)
