import pytest

from soundsight.cli import resolve_scene_path
from soundsight.simulator import load_scene


@pytest.fixture
def chair_scene():
    """The bundled noiseless demo scene."""
    return load_scene(resolve_scene_path("approach_chair"))
