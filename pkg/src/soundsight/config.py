"""Session configuration: a JSON file with fixed sections and keys.

Unknown sections or keys are hard errors so a typo cannot silently fall
back to a default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .interaction import GestureConfig
from .pipeline import PipelineConfig

DETECTOR_KINDS = ("scripted", "simulated", "remote")

DEFAULT_PORT = 8765
DEFAULT_TICK_HZ = 10
DEFAULT_FOCAL_PX = 800.0
DEFAULT_REF_WIDTH_PX = 1280
DEFAULT_REF_HEIGHT_PX = 720
DEFAULT_D0_M = 3.0


class ConfigError(ValueError):
    """Bad config file: unreadable, unknown key, or invalid value."""


@dataclass
class SessionConfig:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    gestures: GestureConfig = field(default_factory=GestureConfig)
    detector_kind: str = "simulated"
    detector_endpoint: str | None = None
    detector_script_path: str | None = None
    registry_path: str | None = None
    default_d0_m: float = DEFAULT_D0_M
    focal_px: float = DEFAULT_FOCAL_PX
    ref_width_px: int = DEFAULT_REF_WIDTH_PX
    ref_height_px: int = DEFAULT_REF_HEIGHT_PX
    scene_path: str | None = None
    port: int = DEFAULT_PORT
    tick_hz: int = DEFAULT_TICK_HZ
    calibration_store_path: str | None = None
    seed: int | None = None  # None: use the scene's own noise seed

    def __post_init__(self) -> None:
        if self.detector_kind not in DETECTOR_KINDS:
            raise ConfigError(
                f"detector.kind must be one of {', '.join(DETECTOR_KINDS)}; got {self.detector_kind!r}"
            )
        if self.detector_kind == "remote" and not self.detector_endpoint:
            raise ConfigError("detector.kind 'remote' requires detector.endpoint")
        if self.detector_kind == "scripted" and not self.detector_script_path:
            raise ConfigError("detector.kind 'scripted' requires detector.script_path")
        if not 0 <= self.port <= 65535:  # 0: bind an ephemeral port
            raise ConfigError(f"service.port out of range: {self.port}")
        if self.tick_hz < 1:
            raise ConfigError(f"service.tick_hz must be >= 1: {self.tick_hz}")
        if self.default_d0_m <= 0:
            raise ConfigError("distance.default_d0_m must be positive")
        if self.focal_px <= 0:
            raise ConfigError("distance.focal_px must be positive")

    def summary(self) -> dict:
        """Small dict for the connection handshake; no filesystem paths."""
        return {
            "detector_kind": self.detector_kind,
            "tick_hz": self.tick_hz,
            "target_long_edge_px": self.pipeline.target_long_edge_px,
            "min_score": self.pipeline.min_score,
            "seed": self.seed,
        }


# section name -> (config key -> SessionConfig attribute)
_SCALAR_KEYS = {
    "detector": {
        "kind": "detector_kind",
        "endpoint": "detector_endpoint",
        "script_path": "detector_script_path",
    },
    "distance": {
        "registry_path": "registry_path",
        "default_d0_m": "default_d0_m",
        "focal_px": "focal_px",
        "ref_width_px": "ref_width_px",
        "ref_height_px": "ref_height_px",
    },
    "simulator": {"scene_path": "scene_path"},
    "service": {"port": "port", "tick_hz": "tick_hz"},
    "calibration": {"store_path": "calibration_store_path"},
    "session": {"seed": "seed"},
}

_PIPELINE_KEYS = {f.name for f in fields(PipelineConfig)}
_GESTURE_KEYS = {f.name for f in fields(GestureConfig)}


def config_from_dict(data: dict) -> SessionConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    known_sections = {"pipeline", "interaction"} | set(_SCALAR_KEYS)
    for section in data:
        if section not in known_sections:
            raise ConfigError(f"unknown config section {section!r}")

    kwargs: dict = {}
    for section, mapping in _SCALAR_KEYS.items():
        body = data.get(section, {})
        if not isinstance(body, dict):
            raise ConfigError(f"config section {section!r} must be an object")
        for key, value in body.items():
            if key not in mapping:
                raise ConfigError(f"unknown config key {section}.{key}")
            kwargs[mapping[key]] = value

    for section, allowed, cls, dest in (
        ("pipeline", _PIPELINE_KEYS, PipelineConfig, "pipeline"),
        ("interaction", _GESTURE_KEYS, GestureConfig, "gestures"),
    ):
        body = data.get(section, {})
        if not isinstance(body, dict):
            raise ConfigError(f"config section {section!r} must be an object")
        for key in body:
            if key not in allowed:
                raise ConfigError(f"unknown config key {section}.{key}")
        try:
            kwargs[dest] = cls(**body)
        except ValueError as exc:
            raise ConfigError(f"bad {section} config: {exc}") from exc

    try:
        return SessionConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> SessionConfig:
    try:
        text = Path(path).read_text("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: line {exc.lineno}: {exc.msg}") from exc
    return config_from_dict(data)
