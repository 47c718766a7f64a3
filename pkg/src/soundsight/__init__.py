"""Assistive perception engine.

Camera frames go in; prioritized speech and distance-graded haptic events
come out. The package ships a deterministic scene simulator, a monocular
distance tracker, reading-order text assembly, currency tallying, a
gesture-driven page model, and a session service that streams everything
over one JSON envelope protocol.
"""

from .core import BoundingBox, CameraIntrinsics, Detection, Frame, SpaceMismatchError, iou
from .config import ConfigError, SessionConfig, load_config
from .session import ENVELOPE_SCHEMA, PROTOCOL_VERSION, EventEnvelope, Session, run_headless

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "CameraIntrinsics",
    "ConfigError",
    "Detection",
    "ENVELOPE_SCHEMA",
    "EventEnvelope",
    "Frame",
    "PROTOCOL_VERSION",
    "Session",
    "SessionConfig",
    "SpaceMismatchError",
    "iou",
    "load_config",
    "run_headless",
    "__version__",
]
