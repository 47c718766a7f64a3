"""Deterministic synthetic world: objects on a ground plane, a steerable
camera, pinhole projection, and a seeded noise model.

This is the ground truth the distance model inverts, the accuracy dial the
70% floor is tested against, and the live backend a human steers through
the companion UI. Everything downstream of a (scene, seed, frame id) triple
is reproducible byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field, replace

from .core import BoundingBox, CameraIntrinsics, Detection, SPACE_DOWNSCALED, SPACE_ORIGINAL, clamp_box

MIN_DEPTH_M = 0.1
COLLISION_RADIUS_M = 0.3
MAX_STEP_M = 1.0
MAX_TURN_RAD = math.pi / 4
DEFAULT_FOV_DEG = 60.0

# Fallback label pool for corrupting single-label scenes.
DEFAULT_CONFUSION_LABELS = ("chair", "door", "person", "table", "bottle")


class SceneParseError(ValueError):
    """Scene or walk file failed validation; message names the problem."""


@dataclass(frozen=True)
class WorldObject:
    id: int
    label: str
    x: float
    z: float
    width_m: float
    height_m: float
    text: str | None = None  # spoken content for label "text" objects

    def __post_init__(self) -> None:
        if self.width_m <= 0 or self.height_m <= 0:
            raise ValueError(f"object dims must be positive, got {self.width_m}x{self.height_m}")


@dataclass(frozen=True)
class CameraPose:
    x: float
    z: float
    heading: float  # radians, 0 faces +z, normalized to (-pi, pi]

    def __post_init__(self) -> None:
        object.__setattr__(self, "heading", normalize_angle(self.heading))


@dataclass(frozen=True)
class NoiseModel:
    label_accuracy: float = 1.0
    box_jitter_px: float = 0.0
    miss_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("label_accuracy", "miss_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {v}")
        if self.box_jitter_px < 0:
            raise ValueError("box_jitter_px must be >= 0")


@dataclass(frozen=True)
class Scene:
    objects: tuple[WorldObject, ...]
    start_pose: CameraPose
    intrinsics: CameraIntrinsics
    frame_w: int
    frame_h: int
    fov_deg: float
    noise: NoiseModel

    def object_by_id(self, object_id: int) -> WorldObject | None:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        return None

    def confusion_labels(self) -> tuple[str, ...]:
        pool = {obj.label for obj in self.objects} | set(DEFAULT_CONFUSION_LABELS)
        return tuple(sorted(pool))


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def camera_frame_offsets(obj: WorldObject, pose: CameraPose) -> tuple[float, float]:
    """(lateral, depth) of the object center in camera coordinates."""
    dx = obj.x - pose.x
    dz = obj.z - pose.z
    sin_h = math.sin(pose.heading)
    cos_h = math.cos(pose.heading)
    depth = dx * sin_h + dz * cos_h
    lateral = dx * cos_h - dz * sin_h
    return lateral, depth


def true_depth(obj: WorldObject, pose: CameraPose) -> float:
    """Ground-truth forward depth the pinhole model measures."""
    return camera_frame_offsets(obj, pose)[1]


def project(
    obj: WorldObject,
    pose: CameraPose,
    intrinsics: CameraIntrinsics,
    frame_dims: tuple[int, int],
    fov_deg: float = DEFAULT_FOV_DEG,
) -> BoundingBox | None:
    """Pinhole projection of an object onto the frame, or None if invisible.

    Objects behind the camera, closer than MIN_DEPTH_M, or whose center is
    outside the horizontal field of view are invisible rather than clamped.
    """
    lateral, depth = camera_frame_offsets(obj, pose)
    if depth <= MIN_DEPTH_M:
        return None
    if abs(math.atan2(lateral, depth)) > math.radians(fov_deg) / 2.0:
        return None
    frame_w, frame_h = frame_dims
    focal = intrinsics.focal_for(frame_w)
    cx = frame_w / 2.0 + focal * lateral / depth
    cy = frame_h / 2.0
    w = focal * obj.width_m / depth
    h = focal * obj.height_m / depth
    box = BoundingBox(x=cx - w / 2.0, y=cy - h / 2.0, w=w, h=h, space=SPACE_ORIGINAL)
    return clamp_box(box, frame_w, frame_h)


def _rng_for(seed: int, frame_id: int, object_id: int) -> random.Random:
    # blake2b keyed from the triple: stable across platforms and runs.
    digest = hashlib.blake2b(f"{seed}:{frame_id}:{object_id}".encode(), digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def sense(
    scene: Scene,
    pose: CameraPose,
    frame_id: int,
    frame_dims: tuple[int, int] | None = None,
    noise: NoiseModel | None = None,
    space: str = SPACE_ORIGINAL,
) -> list[Detection]:
    """Noisy detections of every visible object, ordered by object id.

    Fully determined by (scene, pose, noise.seed, frame_id): replays are
    byte-identical.
    """
    noise = noise if noise is not None else scene.noise
    dims = frame_dims if frame_dims is not None else (scene.frame_w, scene.frame_h)
    pool = scene.confusion_labels()
    out: list[Detection] = []
    for obj in sorted(scene.objects, key=lambda o: o.id):
        box = project(obj, pose, scene.intrinsics, dims, scene.fov_deg)
        if box is None:
            continue
        rng = _rng_for(noise.seed, frame_id, obj.id)
        if rng.random() < noise.miss_rate:
            continue
        label = obj.label
        if rng.random() >= noise.label_accuracy:
            wrong = [candidate for candidate in pool if candidate != obj.label]
            if wrong:
                label = wrong[rng.randrange(len(wrong))]
        if noise.box_jitter_px > 0:
            s = noise.box_jitter_px
            x1 = box.x + rng.uniform(-s, s)
            y1 = box.y + rng.uniform(-s, s)
            x2 = box.right + rng.uniform(-s, s)
            y2 = box.bottom + rng.uniform(-s, s)
            jittered = BoundingBox(
                x=min(x1, x2),
                y=min(y1, y2),
                w=max(abs(x2 - x1), 1e-3),
                h=max(abs(y2 - y1), 1e-3),
                space=box.space,
            )
            clipped = clamp_box(jittered, dims[0], dims[1])
            if clipped is None:
                continue
            box = clipped
        score = rng.uniform(0.6, 1.0)
        text = obj.text if label == "text" else None
        if label == "text" and text is None:
            text = f"sign {obj.id}"
        out.append(
            Detection(
                box=replace(box, space=space) if space != box.space else box,
                label=label,
                score=score,
                text=text,
                object_id=obj.id,
            )
        )
    return out


@dataclass(frozen=True)
class StepCommand:
    forward: float = 0.0
    turn: float = 0.0

    def __post_init__(self) -> None:
        if abs(self.forward) > MAX_STEP_M:
            raise ValueError(f"|forward| must be <= {MAX_STEP_M} m per step")
        if abs(self.turn) > MAX_TURN_RAD:
            raise ValueError(f"|turn| must be <= pi/4 per step")


def step(pose: CameraPose, command: StepCommand, scene: Scene) -> tuple[CameraPose, bool]:
    """Advance the pose; circle collision blocks the whole step.

    Returns (new pose, collided). Heading 0 faces +z, so forward 1.0 from
    the origin lands at (0, 1).
    """
    heading = normalize_angle(pose.heading + command.turn)
    nx = pose.x + command.forward * math.sin(heading)
    nz = pose.z + command.forward * math.cos(heading)
    for obj in scene.objects:
        if math.hypot(nx - obj.x, nz - obj.z) < COLLISION_RADIUS_M:
            return pose, True
    return CameraPose(x=nx, z=nz, heading=heading), False


class SimulatedDetector:
    """Detector adapter backed by the geometric world.

    ``pose_provider`` returns the camera pose for the frame being sensed,
    so the adapter always sees the session's current position. With
    ``emulate_compute_cost`` set, each call does numeric work proportional
    to the frame area, mimicking an inference whose cost scales with input
    resolution (what the bench sweep measures).
    """

    def __init__(self, scene: Scene, pose_provider, noise: NoiseModel | None = None, emulate_compute_cost: bool = False):
        self.scene = scene
        self.pose_provider = pose_provider
        self.noise = noise if noise is not None else scene.noise
        self.emulate_compute_cost = emulate_compute_cost

    def detect(self, frame) -> list[Detection]:
        if self.emulate_compute_cost:
            _burn_pixels(frame.width_px * frame.height_px)
        space = (
            SPACE_ORIGINAL
            if (frame.width_px, frame.height_px) == (self.scene.frame_w, self.scene.frame_h)
            else SPACE_DOWNSCALED
        )
        return sense(
            self.scene,
            self.pose_provider(),
            frame.id,
            frame_dims=(frame.width_px, frame.height_px),
            noise=self.noise,
            space=space,
        )


def _burn_pixels(n: int) -> None:
    import numpy as np

    a = np.arange(n, dtype=np.float64)
    float(np.sqrt(a).sum())


# ---------------------------------------------------------------------------
# Scene file format


def scene_from_dict(data: dict) -> Scene:
    try:
        objects = []
        for i, od in enumerate(data.get("objects", [])):
            objects.append(
                WorldObject(
                    id=int(od["id"]),
                    label=str(od["label"]),
                    x=float(od["x"]),
                    z=float(od["z"]),
                    width_m=float(od["width_m"]),
                    height_m=float(od["height_m"]),
                    text=od.get("text"),
                )
            )
        cam = data["camera"]
        frame_w = int(cam["frame_w"])
        frame_h = int(cam["frame_h"])
        intrinsics = CameraIntrinsics(
            focal_px=float(cam["focal_px"]),
            ref_width_px=frame_w,
            ref_height_px=frame_h,
        )
        pose = CameraPose(x=float(cam["x"]), z=float(cam["z"]), heading=float(cam["heading"]))
        nd = data.get("noise", {})
        noise = NoiseModel(
            label_accuracy=float(nd.get("label_accuracy", 1.0)),
            box_jitter_px=float(nd.get("box_jitter_px", 0.0)),
            miss_rate=float(nd.get("miss_rate", 0.0)),
            seed=int(nd.get("seed", 0)),
        )
        return Scene(
            objects=tuple(objects),
            start_pose=pose,
            intrinsics=intrinsics,
            frame_w=frame_w,
            frame_h=frame_h,
            fov_deg=float(cam.get("fov_deg", DEFAULT_FOV_DEG)),
            noise=noise,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneParseError(f"invalid scene: {exc}") from exc


def load_scene(path: str) -> Scene:
    """Parse a scene JSON file; errors name the offending content."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SceneParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict) or "camera" not in data:
        raise SceneParseError(f"{path}: scene must be an object with a 'camera' section")
    try:
        return scene_from_dict(data)
    except SceneParseError as exc:
        raise SceneParseError(f"{path}: {exc}") from exc
