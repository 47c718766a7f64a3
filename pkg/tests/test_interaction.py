import json

import pytest

from oracles import FIXTURE_DIR, GESTURE_FIXTURES, replay_gesture_fixture
from soundsight.feedback import HapticPattern, SpeechItem
from soundsight.interaction import (
    GESTURE_LONG_PRESS,
    GESTURE_SWIPE_UP,
    GESTURE_TAP,
    Gesture,
    GestureMachine,
    OutOfOrderEventError,
    PAGE_CURRENCY,
    PAGE_HOME,
    PAGE_INTRO,
    PAGE_OBJECT_DETECTION,
    PageState,
    TouchEvent,
    navigate,
    resolve_target,
)

SCREEN_W = 390.0
SCREEN_H = 844.0


def machine():
    return GestureMachine(SCREEN_W, SCREEN_H)


@pytest.mark.parametrize("name", GESTURE_FIXTURES)
def test_committed_trace_fixtures(name):
    path = FIXTURE_DIR / "gestures" / f"{name}.json"
    expected = json.loads(path.read_text("utf-8"))["expect"]
    assert replay_gesture_fixture(path) == expected


class TestGestureMachine:
    def test_long_press_fires_from_late_event_timestamp(self):
        m = machine()
        m.feed(TouchEvent(kind="down", x=50, y=50, t_ms=0))
        fired = m.feed(TouchEvent(kind="move", x=51, y=50, t_ms=700))
        assert fired is not None
        assert fired.kind == GESTURE_LONG_PRESS

    def test_one_gesture_per_touch_span(self):
        m = machine()
        m.feed(TouchEvent(kind="down", x=50, y=50, t_ms=0))
        assert m.tick(600).kind == GESTURE_LONG_PRESS
        assert m.tick(700) is None
        assert m.feed(TouchEvent(kind="up", x=50, y=50, t_ms=800)) is None

    def test_movement_cancels_long_press(self):
        m = machine()
        m.feed(TouchEvent(kind="down", x=50, y=50, t_ms=0))
        m.feed(TouchEvent(kind="move", x=120, y=50, t_ms=100))
        assert m.tick(700) is None

    def test_tap_requires_quick_release(self):
        m = machine()
        m.feed(TouchEvent(kind="down", x=50, y=50, t_ms=0))
        assert m.feed(TouchEvent(kind="up", x=50, y=50, t_ms=399)).kind == GESTURE_TAP

    def test_slop_blocks_tap(self):
        m = machine()
        m.feed(TouchEvent(kind="down", x=50, y=400, t_ms=0))
        m.feed(TouchEvent(kind="move", x=90, y=400, t_ms=50))
        # back near the start: peak slop still disqualifies the tap
        assert m.feed(TouchEvent(kind="up", x=52, y=400, t_ms=100)) is None

    def test_out_of_order_rejected(self):
        m = machine()
        m.feed(TouchEvent(kind="down", x=0, y=0, t_ms=100))
        with pytest.raises(OutOfOrderEventError):
            m.feed(TouchEvent(kind="up", x=0, y=0, t_ms=50))

    def test_stray_up_ignored(self):
        assert machine().feed(TouchEvent(kind="up", x=0, y=0, t_ms=0)) is None

    def test_touch_kind_validated(self):
        with pytest.raises(ValueError):
            TouchEvent(kind="hover", x=0, y=0, t_ms=0)


class TestResolveTarget:
    def test_home_rows_top_to_bottom(self):
        assert resolve_target(PAGE_HOME, 195, 100, SCREEN_W, SCREEN_H) == "object_detection"
        assert resolve_target(PAGE_HOME, 195, 300, SCREEN_W, SCREEN_H) == "currency"
        assert resolve_target(PAGE_HOME, 195, 500, SCREEN_W, SCREEN_H) == "ocr"
        assert resolve_target(PAGE_HOME, 195, 800, SCREEN_W, SCREEN_H) == "social"

    def test_off_screen_is_nothing(self):
        assert resolve_target(PAGE_HOME, -5, 100, SCREEN_W, SCREEN_H) is None
        assert resolve_target(PAGE_HOME, 195, 900, SCREEN_W, SCREEN_H) is None

    def test_feature_page_is_one_big_control(self):
        assert resolve_target(PAGE_CURRENCY, 10, 10, SCREEN_W, SCREEN_H) == "capture"
        assert resolve_target(PAGE_INTRO, 380, 840, SCREEN_W, SCREEN_H) == "continue"


class TestNavigate:
    def test_tap_speaks_the_label(self):
        state = PageState(page=PAGE_HOME)
        new_state, events = navigate(state, Gesture(kind=GESTURE_TAP, at=(0, 0), target="ocr"))
        assert new_state.page == PAGE_HOME
        assert [e.text for e in events if isinstance(e, SpeechItem)] == ["text reading"]

    def test_long_press_opens_feature_page(self):
        state = PageState(page=PAGE_HOME)
        new_state, events = navigate(
            state, Gesture(kind=GESTURE_LONG_PRESS, at=(0, 0), target="object_detection")
        )
        assert new_state.page == PAGE_OBJECT_DETECTION
        haptics = [e for e in events if isinstance(e, HapticPattern)]
        assert [h.kind for h in haptics] == ["page_open"]
        assert len(haptics[0].segments) == 1
        assert any(e.text == "object detection" for e in events if isinstance(e, SpeechItem))

    def test_swipe_up_goes_back_with_triple_buzz(self):
        state = PageState(page=PAGE_CURRENCY)
        new_state, events = navigate(state, Gesture(kind=GESTURE_SWIPE_UP, at=(0, 0)))
        assert new_state.page == PAGE_HOME
        haptics = [e for e in events if isinstance(e, HapticPattern)]
        assert [h.kind for h in haptics] == ["page_back"]
        assert len(haptics[0].segments) == 3

    def test_swipe_up_at_home_stays(self):
        state = PageState(page=PAGE_HOME)
        new_state, events = navigate(state, Gesture(kind=GESTURE_SWIPE_UP, at=(0, 0)))
        assert new_state.page == PAGE_HOME
        assert events[0].text == "already at home"

    def test_intro_continue(self):
        state = PageState.initial(first_launch=True)
        assert state.page == PAGE_INTRO
        new_state, events = navigate(state, Gesture(kind=GESTURE_LONG_PRESS, at=(0, 0), target="continue"))
        assert new_state.page == PAGE_HOME
        assert new_state.first_launch is False

    def test_social_placeholder(self):
        state = PageState(page=PAGE_HOME)
        new_state, events = navigate(state, Gesture(kind=GESTURE_LONG_PRESS, at=(0, 0), target="social"))
        assert new_state.page == PAGE_HOME
        assert events[0].text == "not available in this build"

    def test_unknown_target_says_so(self):
        state = PageState(page=PAGE_HOME)
        _, events = navigate(state, Gesture(kind=GESTURE_TAP, at=(0, 0), target=None))
        assert events[0].text == "unknown control"

    def test_returning_user_starts_at_home(self):
        assert PageState.initial(first_launch=False).page == PAGE_HOME
