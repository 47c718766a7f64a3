"""Haptic pulse grading and the prioritized, preemptible speech queue.

Distances are meters everywhere. The proximity bands are fixed at
5 ft = 1.524 m and 10 ft = 3.048 m; "medium" maps to intensity 0.5 and the
response ramps to 1.0 as the wearer closes to contact.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

NEAR_M = 1.524
FAR_M = 3.048

PRIORITY_CRITICAL = 0
PRIORITY_NAVIGATION = 1
PRIORITY_CONTENT = 2

DEDUPE_WINDOW_MS = 3000

# One spoken character costs this much simulated time; keeps headless logs
# deterministic without an audio backend.
SPEECH_BASE_MS = 200
SPEECH_MS_PER_CHAR = 50

MAX_PATTERN_MS = 3000

PULSE_MS = 100
GAP_MIN_MS = 100
GAP_MAX_MS = 500


class NegativeDistanceError(ValueError):
    """Proximity feedback was asked about a negative distance."""


@dataclass(frozen=True)
class HapticSegment:
    intensity: float
    duration_ms: int
    gap_ms: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.intensity <= 1.0:
            raise ValueError(f"intensity must be in [0,1], got {self.intensity}")
        if self.duration_ms <= 0:
            raise ValueError("segment duration must be positive")
        if self.gap_ms < 0:
            raise ValueError("segment gap must be non-negative")

    def to_dict(self) -> dict:
        return {"intensity": self.intensity, "duration_ms": self.duration_ms, "gap_ms": self.gap_ms}


@dataclass(frozen=True)
class HapticPattern:
    kind: str  # proximity | page_open | page_back
    segments: tuple[HapticSegment, ...]

    def __post_init__(self) -> None:
        if self.total_ms() > MAX_PATTERN_MS:
            raise ValueError(f"pattern exceeds {MAX_PATTERN_MS} ms")

    def total_ms(self) -> int:
        return sum(s.duration_ms + s.gap_ms for s in self.segments)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "segments": [s.to_dict() for s in self.segments]}


@dataclass(frozen=True)
class SpeechItem:
    text: str
    priority: int
    dedupe_key: str | None = None
    enqueued_ms: int = 0

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("speech text must be non-empty")
        if self.priority not in (0, 1, 2):
            raise ValueError(f"priority must be 0, 1 or 2, got {self.priority}")


def proximity_intensity(distance_m: float) -> float:
    """Haptic strength for an obstacle at the given distance.

    Zero beyond 10 ft, a flat medium 0.5 through the 5-10 ft band, then a
    linear ramp reaching 1.0 at contact. Monotone non-increasing in distance.
    """
    if distance_m < 0:
        raise NegativeDistanceError(f"distance must be >= 0, got {distance_m}")
    if distance_m > FAR_M:
        return 0.0
    if distance_m >= NEAR_M:
        return 0.5
    return 0.5 + 0.5 * (NEAR_M - distance_m) / NEAR_M


def proximity_gap_ms(distance_m: float) -> int:
    """Gap between proximity pulses; shrinks as the user closes in."""
    gap = 100.0 + 400.0 * distance_m / FAR_M
    return int(round(min(max(gap, GAP_MIN_MS), GAP_MAX_MS)))


def proximity_pattern(distance_m: float) -> HapticPattern | None:
    """One cycle of the repeating proximity pulse, or None when out of range."""
    intensity = proximity_intensity(distance_m)
    if intensity == 0.0:
        return None
    segment = HapticSegment(intensity=intensity, duration_ms=PULSE_MS, gap_ms=proximity_gap_ms(distance_m))
    return HapticPattern(kind="proximity", segments=(segment,))


def navigation_pattern(event: str) -> HapticPattern:
    """Page-change cue: one long buzz on open, three short ones on back."""
    if event == "page_open":
        return HapticPattern(kind="page_open", segments=(HapticSegment(0.8, 500, 0),))
    if event == "page_back":
        return HapticPattern(
            kind="page_back",
            segments=(
                HapticSegment(0.8, 80, 80),
                HapticSegment(0.8, 80, 80),
                HapticSegment(0.8, 80, 0),
            ),
        )
    raise ValueError(f"unknown navigation event {event!r}")


def speech_duration_ms(text: str) -> int:
    return SPEECH_BASE_MS + SPEECH_MS_PER_CHAR * len(text)


@dataclass
class SpeechQueue:
    """Single-consumer utterance scheduler with priority preemption.

    Critical (priority 0) items interrupt whatever navigation or content
    speech is playing; equal and lower priorities queue FIFO within their
    class. Repeats of the same dedupe key within a 3 s window are dropped so
    per-tick announcements do not spam the listener.
    """

    dedupe_window_ms: int = DEDUPE_WINDOW_MS
    _pending: dict[int, deque] = field(default_factory=lambda: {0: deque(), 1: deque(), 2: deque()})
    _playing: SpeechItem | None = None
    _playing_until_ms: int = 0
    _last_spoken_ms: dict[str, int] = field(default_factory=dict)

    def enqueue(self, item: SpeechItem, now_ms: int) -> SpeechItem | None:
        """Accept an item; returns the utterance it interrupted, if any.

        Duplicates (same dedupe key pending, playing, or spoken within the
        window) are discarded silently.
        """
        if self._is_duplicate(item, now_ms):
            return None
        interrupted = None
        if (
            item.priority == PRIORITY_CRITICAL
            and self._playing is not None
            and self._playing.priority != PRIORITY_CRITICAL
        ):
            interrupted = self._playing
            self._playing = None
            self._playing_until_ms = 0
        self._pending[item.priority].append(item)
        return interrupted

    def tick(self, now_ms: int) -> list[SpeechItem]:
        """Advance the clock; returns utterances that start playing now."""
        started: list[SpeechItem] = []
        if self._playing is not None and now_ms >= self._playing_until_ms:
            self._playing = None
        while self._playing is None:
            item = self._pop_next()
            if item is None:
                break
            self._playing = item
            self._playing_until_ms = now_ms + speech_duration_ms(item.text)
            if item.dedupe_key is not None:
                self._last_spoken_ms[item.dedupe_key] = now_ms
            started.append(item)
            break  # one utterance plays at a time
        return started

    def pending_count(self) -> int:
        return sum(len(q) for q in self._pending.values())

    def drop_pending(self, predicate) -> int:
        """Revoke queued-but-unstarted items the predicate matches.

        The playing utterance is never touched. Returns how many were
        dropped. Lets a producer supersede stale pending content (for
        example an object announcement whose distance has since changed).
        """
        dropped = 0
        for priority, q in self._pending.items():
            kept = deque(item for item in q if not predicate(item))
            dropped += len(q) - len(kept)
            self._pending[priority] = kept
        return dropped

    def clear(self) -> None:
        for q in self._pending.values():
            q.clear()
        self._playing = None
        self._playing_until_ms = 0
        self._last_spoken_ms.clear()

    def _pop_next(self) -> SpeechItem | None:
        for priority in (0, 1, 2):
            if self._pending[priority]:
                return self._pending[priority].popleft()
        return None

    def _is_duplicate(self, item: SpeechItem, now_ms: int) -> bool:
        key = item.dedupe_key
        if key is None:
            return False
        spoken = self._last_spoken_ms.get(key)
        if spoken is not None and now_ms - spoken < self.dedupe_window_ms:
            return True
        if self._playing is not None and self._playing.dedupe_key == key:
            return True
        return any(q_item.dedupe_key == key for q in self._pending.values() for q_item in q)


# Dedupe-key namespace for tracked-object announcements, so stale pending
# ones can be superseded without touching other speech.
OBJECT_KEY_PREFIX = "object:"


def location_bucket(center_x: float, frame_width_px: float) -> str:
    """Left/center/right by thirds of the frame; boundaries fall rightward."""
    third = frame_width_px / 3.0
    if center_x < third:
        return "left"
    if center_x < 2.0 * third:
        return "center"
    return "right"


def _format_distance(distance_m: float) -> str:
    rounded = math.floor(distance_m * 2.0 + 0.5) / 2.0
    if rounded == int(rounded):
        return str(int(rounded))
    return f"{rounded:.1f}"


def announce_object(track, frame_width_px: float, now_ms: int = 0) -> SpeechItem:
    """Spoken summary of a tracked object: label, screen side, distance.

    ``track`` needs ``label``, ``last_box`` and ``last_distance_m``. The
    announcement becomes a critical alert inside the near band. The dedupe
    key covers the spoken content, so an object is re-announced only when
    its side or rounded distance actually changes; a static scene goes
    quiet instead of looping.
    """
    bucket = location_bucket(track.last_box.center_x, frame_width_px)
    distance_m = track.last_distance_m
    distance_text = _format_distance(distance_m)
    unit = "meter" if distance_text == "1" else "meters"
    spoken_label = track.label.replace("_", " ")
    text = f"{spoken_label}, {bucket}, {distance_text} {unit}"
    priority = PRIORITY_CRITICAL if distance_m < NEAR_M else PRIORITY_CONTENT
    return SpeechItem(
        text=text,
        priority=priority,
        dedupe_key=f"{OBJECT_KEY_PREFIX}{track.label}:{bucket}:{distance_text}",
        enqueued_ms=now_ms,
    )
