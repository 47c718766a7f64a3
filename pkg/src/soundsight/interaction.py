"""Gesture recognition and the speech-first page model.

A tap speaks what a control does, press-and-hold activates it, and an
upward swipe goes back. The long-press timer is an injected clock event so
replayed traces are fully deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .feedback import (
    HapticPattern,
    PRIORITY_NAVIGATION,
    SpeechItem,
    navigation_pattern,
)

TAP_MAX_MS = 400
TAP_SLOP_PX = 24.0
LONG_PRESS_MS = 600
SWIPE_FRACTION = 0.25
SWIPE_MAX_MS = 800
SWIPE_AXIS_RATIO = 2.0

GESTURE_TAP = "tap"
GESTURE_LONG_PRESS = "long_press"
GESTURE_SWIPE_UP = "swipe_up"

PAGE_INTRO = "intro"
PAGE_HOME = "home"
PAGE_OBJECT_DETECTION = "object_detection"
PAGE_CURRENCY = "currency"
PAGE_OCR = "ocr"

FEATURE_PAGES = (PAGE_OBJECT_DETECTION, PAGE_CURRENCY, PAGE_OCR)

# Control id -> spoken label, in home-screen order top to bottom.
HOME_CONTROLS = (
    ("object_detection", "object detection"),
    ("currency", "currency detection"),
    ("ocr", "text reading"),
    ("social", "social interaction"),
)

PAGE_LABELS = {
    PAGE_INTRO: "introduction",
    PAGE_HOME: "home",
    PAGE_OBJECT_DETECTION: "object detection",
    PAGE_CURRENCY: "currency detection",
    PAGE_OCR: "text reading",
}

INTRO_TEXT = (
    "welcome. tap any button to hear what it does. "
    "press and hold a button to open it. swipe up to go back."
)


class OutOfOrderEventError(ValueError):
    """Touch timestamps regressed for a single pointer."""


@dataclass(frozen=True)
class TouchEvent:
    kind: str  # down | move | up
    x: float
    y: float
    t_ms: int

    def __post_init__(self) -> None:
        if self.kind not in ("down", "move", "up"):
            raise ValueError(f"unknown touch kind {self.kind!r}")


@dataclass(frozen=True)
class Gesture:
    kind: str
    at: tuple[float, float]
    target: str | None = None


@dataclass
class GestureConfig:
    tap_max_ms: int = TAP_MAX_MS
    tap_slop_px: float = TAP_SLOP_PX
    long_press_ms: int = LONG_PRESS_MS
    swipe_fraction: float = SWIPE_FRACTION
    swipe_max_ms: int = SWIPE_MAX_MS


class GestureMachine:
    """Single-pointer recognizer; a pure function of (state, event).

    Long presses fire while the finger is still down, either from an
    explicit clock tick or implicitly from a later event's timestamp, so a
    page can open mid-hold. At most one gesture comes out of any
    down-to-up span.
    """

    def __init__(self, screen_w: float, screen_h: float, config: GestureConfig | None = None):
        self.screen_w = screen_w
        self.screen_h = screen_h
        self.config = config or GestureConfig()
        self._down: TouchEvent | None = None
        self._max_slop = 0.0
        self._consumed = False
        self._last_t = -1

    def reset(self) -> None:
        self._down = None
        self._max_slop = 0.0
        self._consumed = False

    def feed(self, event: TouchEvent) -> Gesture | None:
        """Consume one touch event; may emit a gesture."""
        if event.t_ms < self._last_t:
            raise OutOfOrderEventError(f"timestamp {event.t_ms} after {self._last_t}")
        self._last_t = event.t_ms

        if event.kind == "down":
            self._down = event
            self._max_slop = 0.0
            self._consumed = False
            return None

        if self._down is None:
            return None

        fired = self._maybe_long_press(event.t_ms)
        if event.kind == "move":
            self._max_slop = max(self._max_slop, self._displacement(event))
            return fired

        # up
        if fired is not None:
            self.reset()
            return fired
        gesture = None if self._consumed else self._classify_up(event)
        self.reset()
        return gesture

    def tick(self, t_ms: int) -> Gesture | None:
        """Injected clock event; fires a pending long press."""
        if t_ms < self._last_t:
            raise OutOfOrderEventError(f"timestamp {t_ms} after {self._last_t}")
        self._last_t = t_ms
        return self._maybe_long_press(t_ms)

    def _maybe_long_press(self, t_ms: int) -> Gesture | None:
        if self._down is None or self._consumed:
            return None
        if t_ms - self._down.t_ms >= self.config.long_press_ms and self._max_slop < self.config.tap_slop_px:
            self._consumed = True
            return Gesture(kind=GESTURE_LONG_PRESS, at=(self._down.x, self._down.y))
        return None

    def _displacement(self, event: TouchEvent) -> float:
        assert self._down is not None
        return math.hypot(event.x - self._down.x, event.y - self._down.y)

    def _classify_up(self, event: TouchEvent) -> Gesture | None:
        down = self._down
        assert down is not None
        dt = event.t_ms - down.t_ms
        slop = max(self._max_slop, self._displacement(event))
        if dt <= self.config.tap_max_ms and slop < self.config.tap_slop_px:
            return Gesture(kind=GESTURE_TAP, at=(down.x, down.y))
        dx = event.x - down.x
        dy = event.y - down.y
        if (
            dt <= self.config.swipe_max_ms
            and dy <= -self.config.swipe_fraction * self.screen_h
            and abs(dy) >= SWIPE_AXIS_RATIO * abs(dx)
        ):
            return Gesture(kind=GESTURE_SWIPE_UP, at=(down.x, down.y))
        return None


@dataclass
class PageState:
    page: str = PAGE_HOME
    first_launch: bool = False

    @classmethod
    def initial(cls, first_launch: bool) -> "PageState":
        return cls(page=PAGE_INTRO if first_launch else PAGE_HOME, first_launch=first_launch)


def controls_for(page: str) -> tuple[tuple[str, str], ...]:
    """(control id, spoken label) pairs hosted by a page."""
    if page == PAGE_HOME:
        return HOME_CONTROLS
    if page == PAGE_INTRO:
        return (("continue", "continue to home"),)
    if page in FEATURE_PAGES:
        return (("capture", "capture"),)
    return ()


def resolve_target(page: str, x: float, y: float, screen_w: float, screen_h: float) -> str | None:
    """Map a touch position to a control id on the current page.

    Home stacks its four buttons full-width top to bottom; the intro and
    the feature pages treat the whole screen as their single control.
    """
    controls = controls_for(page)
    if not controls:
        return None
    if page == PAGE_HOME:
        if not (0 <= x <= screen_w and 0 <= y <= screen_h):
            return None
        row = min(int(y / (screen_h / len(controls))), len(controls) - 1)
        return controls[row][0]
    return controls[0][0]


def navigate(state: PageState, gesture: Gesture) -> tuple[PageState, list]:
    """Apply a recognized gesture to the page model.

    Returns the new state and the feedback events (SpeechItem or
    HapticPattern) it produced; the UI is never silent.
    """
    events: list = []

    if gesture.kind == GESTURE_SWIPE_UP:
        if state.page in (PAGE_HOME,):
            events.append(SpeechItem(text="already at home", priority=PRIORITY_NAVIGATION))
            return state, events
        new_state = PageState(page=PAGE_HOME, first_launch=False)
        events.append(navigation_pattern("page_back"))
        events.append(SpeechItem(text="back to home", priority=PRIORITY_NAVIGATION))
        return new_state, events

    label = _control_label(state.page, gesture.target)
    if label is None:
        events.append(SpeechItem(text="unknown control", priority=PRIORITY_NAVIGATION))
        return state, events

    if gesture.kind == GESTURE_TAP:
        events.append(SpeechItem(text=label, priority=PRIORITY_NAVIGATION))
        return state, events

    if gesture.kind == GESTURE_LONG_PRESS:
        return _activate(state, gesture.target, events)

    raise ValueError(f"unknown gesture kind {gesture.kind!r}")


def _control_label(page: str, target: str | None) -> str | None:
    if target is None:
        return None
    for control_id, label in controls_for(page):
        if control_id == target:
            return label
    return None


def _activate(state: PageState, target: str, events: list) -> tuple[PageState, list]:
    if state.page == PAGE_INTRO and target == "continue":
        new_state = PageState(page=PAGE_HOME, first_launch=False)
        events.append(navigation_pattern("page_open"))
        events.append(SpeechItem(text=PAGE_LABELS[PAGE_HOME], priority=PRIORITY_NAVIGATION))
        return new_state, events
    if state.page == PAGE_HOME:
        if target == "social":
            events.append(SpeechItem(text="not available in this build", priority=PRIORITY_NAVIGATION))
            return state, events
        if target in FEATURE_PAGES:
            new_state = PageState(page=target, first_launch=False)
            events.append(navigation_pattern("page_open"))
            events.append(SpeechItem(text=PAGE_LABELS[target], priority=PRIORITY_NAVIGATION))
            return new_state, events
    # Long press on a feature page's capture surface re-speaks the page name.
    events.append(SpeechItem(text=PAGE_LABELS.get(state.page, "unknown control"), priority=PRIORITY_NAVIGATION))
    return state, events
