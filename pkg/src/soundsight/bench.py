"""Resolution sweep: how input size trades detection quality for speed.

Each size runs the same noisy approach sequence through the full pipeline
with a detector whose cost scales with pixel count. Box jitter is applied
in the detector's (downscaled) space, so rescaling back to the original
frame amplifies it at smaller sizes: quality falls as latency falls.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

from .core import Frame, iou
from .pipeline import PipelineConfig, run_step
from .simulator import NoiseModel, Scene, SimulatedDetector, StepCommand, project, step

DEFAULT_SIZES = (1280, 960, 640, 480, 320)
DEFAULT_FRAME_COUNT = 40

BENCH_NOISE = NoiseModel(label_accuracy=0.8, box_jitter_px=2.0, miss_rate=0.05, seed=0)

CSV_COLUMNS = ("target_long_edge_px", "frames", "mean_ms", "label_accuracy", "mean_iou")


@dataclass(frozen=True)
class BenchRow:
    target_long_edge_px: int
    frames: int
    mean_ms: float
    label_accuracy: float
    mean_iou: float

    def as_csv(self) -> dict:
        return {
            "target_long_edge_px": self.target_long_edge_px,
            "frames": self.frames,
            "mean_ms": f"{self.mean_ms:.3f}",
            "label_accuracy": f"{self.label_accuracy:.4f}",
            "mean_iou": f"{self.mean_iou:.4f}",
        }


class _PoseHolder:
    def __init__(self, pose):
        self.pose = pose


def _bench_one(scene: Scene, size: int, frame_count: int, seed: int, approach_step: float) -> BenchRow:
    cfg = PipelineConfig(target_long_edge_px=size, latency_budget_ms=60_000, min_score=0.0)
    holder = _PoseHolder(scene.start_pose)
    noise = NoiseModel(
        label_accuracy=BENCH_NOISE.label_accuracy,
        box_jitter_px=BENCH_NOISE.box_jitter_px,
        miss_rate=BENCH_NOISE.miss_rate,
        seed=seed,
    )
    detector = SimulatedDetector(scene, lambda: holder.pose, noise=noise, emulate_compute_cost=True)

    total_s = 0.0
    labels_seen = 0
    labels_right = 0
    iou_sum = 0.0
    iou_n = 0
    dims = (scene.frame_w, scene.frame_h)
    for i in range(1, frame_count + 1):
        frame = Frame(id=i, timestamp_ms=i, width_px=scene.frame_w, height_px=scene.frame_h)
        started = time.perf_counter()
        detections = run_step(frame, detector, cfg)
        total_s += time.perf_counter() - started
        for det in detections:
            obj = scene.object_by_id(det.object_id) if det.object_id is not None else None
            if obj is None:
                continue
            labels_seen += 1
            if det.label == obj.label:
                labels_right += 1
            truth = project(obj, holder.pose, scene.intrinsics, dims, scene.fov_deg)
            if truth is not None:
                iou_sum += iou(det.box, truth)
                iou_n += 1
        holder.pose, collided = step(holder.pose, StepCommand(forward=approach_step), scene)
        if collided:
            break
    return BenchRow(
        target_long_edge_px=size,
        frames=frame_count,
        mean_ms=total_s / frame_count * 1000.0,
        label_accuracy=labels_right / labels_seen if labels_seen else 0.0,
        mean_iou=iou_sum / iou_n if iou_n else 0.0,
    )


def run_bench(
    scene: Scene,
    sizes: tuple[int, ...] = DEFAULT_SIZES,
    frame_count: int = DEFAULT_FRAME_COUNT,
    seed: int = 0,
    approach_step: float = 0.05,
) -> list[BenchRow]:
    """One row per size, largest first."""
    return [
        _bench_one(scene, size, frame_count, seed, approach_step)
        for size in sorted(sizes, reverse=True)
    ]


def write_csv(rows: list[BenchRow], stream) -> None:
    writer = csv.DictWriter(stream, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row.as_csv())


def render_figure(rows: list[BenchRow], out_path: str | Path) -> Path:
    """Latency and quality against input size, saved as a PNG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    sizes = [r.target_long_edge_px for r in rows]
    fig, (ax_ms, ax_q) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax_ms.plot(sizes, [r.mean_ms for r in rows], marker="o")
    ax_ms.set_xlabel("long edge (px)")
    ax_ms.set_ylabel("mean detection time (ms)")
    ax_ms.set_title("latency")
    ax_q.plot(sizes, [r.mean_iou for r in rows], marker="o", label="mean IoU")
    ax_q.plot(sizes, [r.label_accuracy for r in rows], marker="s", label="label accuracy")
    ax_q.set_xlabel("long edge (px)")
    ax_q.set_ylim(0.0, 1.05)
    ax_q.set_title("quality")
    ax_q.legend()
    for ax in (ax_ms, ax_q):
        ax.invert_xaxis()  # reading left to right = shrinking input
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
