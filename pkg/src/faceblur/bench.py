"""Throughput measurement and automated blurred-face counting.

Frame rates come from timing the full per-frame pipeline over a fixed number
of frames (one warm-up pass excluded), reported as mean fps plus a per-stage
breakdown. "Correctly blurred" is judged by a deterministic sharpness-drop
proxy: the ratio of high-frequency (Laplacian) energy in the face region
after vs before processing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from time import perf_counter
from typing import Callable, Sequence

import numpy as np
from scipy.ndimage import convolve

from .backends import INFERENCE_SIZES, BlurNetBackend, DetectorBackend
from .geometry import FaceEllipse, rasterize_ellipse
from .pipelines import PipelineConfig, direct_pipeline, indirect_pipeline
from .validation import check_image, check_same_size, image_size

SCENARIOS = ("preresized", "1024", "2048")
_SCENARIO_LABELS = {
    "preresized": "No resizing needed",
    "1024": "Input size of 1024x1024",
    "2048": "Input size of 2048x2048",
}
_LAPLACIAN = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


@dataclass(frozen=True)
class SharpnessCriterion:
    """A face counts as blurred when its region was modified and its
    Laplacian energy dropped to at most ``max_energy_ratio`` of the input's."""

    max_energy_ratio: float = 0.3
    min_area: int = 4


@dataclass(frozen=True)
class FaceAudit:
    """Per-frame blurred-face count with the per-face energy ratios
    (None marks a face too small to assess)."""

    frame_id: str
    total: int
    blurred: int
    not_assessable: int
    ratios: tuple[float | None, ...]

    def __post_init__(self):
        if not 0 <= self.blurred <= self.total:
            raise ValueError(f"blurred count {self.blurred} outside [0, {self.total}]")


@dataclass(frozen=True)
class BenchReport:
    """One measured (pipeline, size, scenario) cell of the fps tables."""

    pipeline: str
    inference_size: int | str
    scenario: str
    frames: int
    mean_fps: float
    stage_seconds: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.mean_fps <= 0:
            raise ValueError(f"fps must be positive, got {self.mean_fps}")


def laplacian_energy(image: np.ndarray, mask: np.ndarray) -> float:
    """Sum of squared 4-neighbor Laplacian responses inside a mask."""
    img = check_image(image)
    gray = img.mean(axis=2) if img.ndim == 3 else img
    lap = convolve(gray, _LAPLACIAN, mode="nearest")
    return float(np.sum(lap[mask] ** 2))


def count_blurred_faces(
    input_image: np.ndarray,
    output_image: np.ndarray,
    annotations: Sequence[FaceEllipse],
    criterion: SharpnessCriterion = SharpnessCriterion(),
    frame_id: str = "",
) -> FaceAudit:
    """Count annotated faces whose region lost enough sharpness to be anonymous.

    Faces with fewer than ``criterion.min_area`` pixels are reported as not
    assessable rather than counted either way.
    """
    inp = check_image(input_image, name="input")
    out = check_image(output_image, name="output")
    check_same_size(inp, out, names=("input", "output"))
    w, h = image_size(inp)
    ratios: list[float | None] = []
    blurred = 0
    not_assessable = 0
    for e in annotations:
        mask = rasterize_ellipse(e, w, h)
        area = int(mask.sum())
        if area < criterion.min_area:
            ratios.append(None)
            not_assessable += 1
            continue
        region_in = inp[mask] if inp.ndim == 2 else inp[mask, :]
        region_out = out[mask] if out.ndim == 2 else out[mask, :]
        modified = bool(np.any(region_in != region_out))
        e_in = laplacian_energy(inp, mask)
        e_out = laplacian_energy(out, mask)
        if e_in > 0:
            ratio = e_out / e_in
        else:
            ratio = float("inf") if e_out > 0 else 0.0
        ratios.append(ratio)
        if modified and ratio <= criterion.max_energy_ratio:
            blurred += 1
    return FaceAudit(
        frame_id=frame_id,
        total=len(annotations),
        blurred=blurred,
        not_assessable=not_assessable,
        ratios=tuple(ratios),
    )


def bench_runner(
    cfg: PipelineConfig,
    scenario: str,
    detector: DetectorBackend | None = None,
    blurnet: BlurNetBackend | None = None,
) -> Callable[[np.ndarray, str | None, dict], np.ndarray]:
    """Build the per-frame callable a scenario times.

    For the pre-resized scenario the frame already has the network's input
    size, so the resizing and mask steps drop out: the indirect pipeline
    reduces to the network forward, the direct one runs at native size.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    if cfg.mode == "indirect":
        if blurnet is None:
            raise ValueError("indirect mode requires a blur-network backend")
        if scenario == "preresized":

            def run(frame, frame_id, stage_times):
                t0 = perf_counter()
                out = blurnet.forward(frame, frame_id=frame_id)
                stage_times["forward"] = stage_times.get("forward", 0.0) + perf_counter() - t0
                return out

        else:

            def run(frame, frame_id, stage_times):
                return indirect_pipeline(frame, blurnet, cfg, frame_id, stage_times)

        return run
    if detector is None:
        raise ValueError("direct mode requires a detector backend")

    def run(frame, frame_id, stage_times):
        return direct_pipeline(frame, detector, cfg, frame_id, stage_times)

    return run


def _expected_frame_size(cfg: PipelineConfig, scenario: str) -> int | None:
    if scenario == "preresized":
        return int(cfg.inference_size) if cfg.inference_size in INFERENCE_SIZES else None
    return int(scenario)


def measure_fps(
    run_frame: Callable[[np.ndarray, str | None, dict], np.ndarray],
    frames: Sequence,
    cfg: PipelineConfig,
    scenario: str,
    n_frames: int = 100,
    pipeline_id: str | None = None,
) -> BenchReport:
    """Time the pipeline over ``n_frames`` frames and report the mean fps.

    ``frames`` holds images or (frame_id, image) pairs already at the
    scenario's size; fewer frames than requested is an error. One warm-up
    pass on the first frame is excluded from the average.
    """
    items = [(f if isinstance(f, tuple) else (None, f)) for f in frames]
    if len(items) < n_frames:
        raise ValueError(f"scenario needs {n_frames} frames, only {len(items)} available")
    items = items[:n_frames]
    expected = _expected_frame_size(cfg, scenario)
    if expected is not None:
        for frame_id, img in items:
            w, h = image_size(img)
            if (w, h) != (expected, expected):
                raise ValueError(
                    f"scenario {scenario!r} expects {expected}x{expected} frames, "
                    f"got {w}x{h} for {frame_id!r}"
                )
    stage_times: dict[str, float] = {}
    warm_id, warm_img = items[0]
    run_frame(warm_img, warm_id, {})  # warm-up, excluded from the mean
    total = 0.0
    for frame_id, img in items:
        t0 = perf_counter()
        run_frame(img, frame_id, stage_times)
        total += perf_counter() - t0
    return BenchReport(
        pipeline=pipeline_id or cfg.mode,
        inference_size=cfg.inference_size,
        scenario=scenario,
        frames=len(items),
        mean_fps=len(items) / total,
        stage_seconds={k: v / len(items) for k, v in stage_times.items()},
    )


def emit_report(reports: Sequence[BenchReport], json_path=None) -> str:
    """Render fps reports as an aligned scenario-by-size table.

    Rows are scenarios, columns are inference sizes; combinations that were
    not measured render as blank cells. A machine-readable JSON copy is
    written when ``json_path`` is given.
    """
    if not reports:
        raise ValueError("emit_report requires at least one report")
    if json_path is not None:
        payload = [
            {
                "pipeline": r.pipeline,
                "inference_size": r.inference_size,
                "scenario": r.scenario,
                "frames": r.frames,
                "mean_fps": r.mean_fps,
                "stage_seconds": r.stage_seconds,
            }
            for r in reports
        ]
        with open(json_path, "w") as fh:
            json.dump(payload, fh, indent=2)
    lines = []
    for pipeline in dict.fromkeys(r.pipeline for r in reports):
        rows = [r for r in reports if r.pipeline == pipeline]
        sizes = list(dict.fromkeys(r.inference_size for r in rows))
        scenarios = [s for s in SCENARIOS if any(r.scenario == s for r in rows)]
        label_w = max(len(_SCENARIO_LABELS[s]) for s in scenarios)
        col_w = max(8, *(len(str(s)) for s in sizes))
        lines.append(f"pipeline: {pipeline}")
        header = " " * label_w + " | " + " | ".join(f"{str(s):>{col_w}}" for s in sizes)
        lines.append(header)
        lines.append("-" * len(header))
        for s in scenarios:
            cells = []
            for size in sizes:
                match = [r for r in rows if r.scenario == s and r.inference_size == size]
                cells.append(f"{match[0].mean_fps:>{col_w}.1f}" if match else " " * col_w)
            lines.append(f"{_SCENARIO_LABELS[s]:<{label_w}} | " + " | ".join(cells))
        lines.append("")
    return "\n".join(lines)
