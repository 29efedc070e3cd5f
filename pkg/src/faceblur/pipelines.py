"""The two per-frame anonymization pipelines and their estimator wrappers.

``direct_pipeline`` detects faces and blurs them under a union ellipse mask;
``indirect_pipeline`` routes the frame through an image-to-image network and
recovers the blurred regions by thresholding. Both are pure functions; the
``DirectFaceBlurrer`` / ``IndirectFaceBlurrer`` classes expose them with the
sklearn estimator API so they compose with the wider ecosystem.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from time import perf_counter
from typing import Iterable, Iterator

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .backends import INFERENCE_SIZES, BlurNetBackend, DetectorBackend
from .imaging import (
    DEFAULT_THRESHOLD,
    SigmaRule,
    abs_diff_mask,
    blur_faces,
    composite,
    resample,
    resample_mask,
)
from .validation import check_image, image_size

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    """Frame-processing configuration shared by the CLI and the estimators."""

    mode: str = "direct"
    inference_size: int | str = "original"
    threshold: float = DEFAULT_THRESHOLD
    sigma_rule: SigmaRule = field(default_factory=SigmaRule)
    detector_backend: str = "oracle"
    blurnet_backend: str = "oracle"
    model_path: str | None = None

    def __post_init__(self):
        if self.mode not in ("direct", "indirect"):
            raise ValueError(f"mode must be 'direct' or 'indirect', got {self.mode!r}")
        if self.inference_size != "original" and self.inference_size not in INFERENCE_SIZES:
            raise ValueError(
                f"inference_size must be one of {INFERENCE_SIZES} or 'original', "
                f"got {self.inference_size!r}"
            )
        if self.threshold < 0:
            raise ValueError(f"threshold must be non-negative, got {self.threshold}")
        if self.mode == "indirect" and self.inference_size == "original":
            raise ValueError("the indirect pipeline requires a square inference size")


def direct_pipeline(
    frame: np.ndarray,
    detector: DetectorBackend,
    cfg: PipelineConfig | None = None,
    frame_id: str | None = None,
    stage_times: dict | None = None,
) -> np.ndarray:
    """Detect faces, convert boxes to ellipses, blur under the union mask.

    One global sigma is used per frame; frames with no detections are
    returned unchanged, and pixels outside the mask stay bit-identical to
    the input.
    """
    cfg = cfg or PipelineConfig(mode="direct")
    img = check_image(frame)
    t0 = perf_counter()
    boxes = detector.detect(img, frame_id=frame_id)
    t1 = perf_counter()
    if stage_times is not None:
        stage_times["detect"] = stage_times.get("detect", 0.0) + (t1 - t0)
    if not boxes:
        return img.copy()
    out, _ = blur_faces(img, boxes, cfg.sigma_rule, stage_times=stage_times)
    return out


def indirect_pipeline(
    frame: np.ndarray,
    blurnet: BlurNetBackend,
    cfg: PipelineConfig,
    frame_id: str | None = None,
    stage_times: dict | None = None,
) -> np.ndarray:
    """Blur faces through an image-to-image network.

    Steps: downsample to DxD, network forward, upsample the output, threshold
    the low-resolution difference into a mask, upsample the mask, then replace
    the masked pixels of the full-resolution input with the upsampled output.
    """
    if cfg.inference_size not in INFERENCE_SIZES:
        raise ValueError(f"indirect pipeline needs inference_size in {INFERENCE_SIZES}")
    size = int(cfg.inference_size)
    img = check_image(frame)
    w, h = image_size(img)

    def stage(name: str, start: float) -> float:
        now = perf_counter()
        if stage_times is not None:
            stage_times[name] = stage_times.get(name, 0.0) + (now - start)
        return now

    t = perf_counter()
    down = resample(img, size, size)
    t = stage("downsample", t)
    net_out = blurnet.forward(down, frame_id=frame_id)
    t = stage("forward", t)
    up = resample(net_out, w, h)
    t = stage("upsample", t)
    mask_small = abs_diff_mask(down, net_out, cfg.threshold)
    t = stage("mask", t)
    mask = resample_mask(mask_small, w, h)
    t = stage("mask_upsample", t)
    out = composite(img, up, mask)
    stage("composite", t)
    return out


@dataclass
class FrameResult:
    """Outcome of processing one frame of a sequence."""

    frame_id: str
    image: np.ndarray | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def process_sequence(
    frames: Iterable[tuple[str, np.ndarray]],
    cfg: PipelineConfig,
    detector: DetectorBackend | None = None,
    blurnet: BlurNetBackend | None = None,
) -> Iterator[FrameResult]:
    """Apply the configured pipeline independently to an ordered frame source.

    Frames are (frame_id, image) pairs. A failing frame is reported and
    skipped; processing continues so one corrupt frame cannot abort a long
    job. Output order matches input order.
    """
    for index, (frame_id, image) in enumerate(frames):
        try:
            if cfg.mode == "direct":
                if detector is None:
                    raise ValueError("direct mode requires a detector backend")
                out = direct_pipeline(image, detector, cfg, frame_id=frame_id)
            else:
                if blurnet is None:
                    raise ValueError("indirect mode requires a blur-network backend")
                out = indirect_pipeline(image, blurnet, cfg, frame_id=frame_id)
            yield FrameResult(frame_id, out)
        except Exception as exc:  # skip-and-log policy
            logger.error("frame %d (%s) failed: %s", index, frame_id, exc)
            yield FrameResult(frame_id, None, error=f"frame {index} ({frame_id}): {exc}")


def _split_frame(item) -> tuple[str | None, np.ndarray]:
    if isinstance(item, tuple) and len(item) == 2 and isinstance(item[0], str):
        return item
    return None, item


class _FaceBlurrerBase(TransformerMixin, BaseEstimator):
    """Shared estimator plumbing: stateless fit, per-frame transform."""

    def fit(self, X=None, y=None):
        self._pipeline_config()  # validate parameters eagerly
        return self

    def transform(self, X):
        """Anonymize one frame or a sequence of frames.

        Accepts an (H, W[, 3]) array, a (frame_id, array) pair, or a sequence
        of either; returns the same structure with frames replaced by their
        anonymized versions.
        """
        cfg = self._pipeline_config()
        if isinstance(X, np.ndarray):
            return self._process(X, None, cfg)
        if isinstance(X, tuple) and len(X) == 2 and isinstance(X[0], str):
            return self._process(X[1], X[0], cfg)
        out = []
        for item in X:
            frame_id, image = _split_frame(item)
            out.append(self._process(image, frame_id, cfg))
        return out

    def _pipeline_config(self) -> PipelineConfig:
        raise NotImplementedError

    def _process(self, image, frame_id, cfg):
        raise NotImplementedError


class DirectFaceBlurrer(_FaceBlurrerBase):
    """Detector-driven anonymizer with the sklearn transformer API.

    Parameters
    ----------
    detector : DetectorBackend
        Face detector used on every frame.
    sigma_scale, sigma_min, sigma_max : float
        Blur strength rule: sigma = min face dimension / sigma_scale,
        clamped to [sigma_min, sigma_max].
    """

    def __init__(self, detector=None, sigma_scale=4.0, sigma_min=1.0, sigma_max=50.0):
        self.detector = detector
        self.sigma_scale = sigma_scale
        self.sigma_min = sigma_min
        self.sigma_max = sigma_max

    def _pipeline_config(self) -> PipelineConfig:
        if self.detector is None:
            raise ValueError("DirectFaceBlurrer requires a detector backend")
        rule = SigmaRule(scale=self.sigma_scale, sigma_min=self.sigma_min, sigma_max=self.sigma_max)
        return PipelineConfig(mode="direct", sigma_rule=rule)

    def _process(self, image, frame_id, cfg):
        return direct_pipeline(image, self.detector, cfg, frame_id=frame_id)


class IndirectFaceBlurrer(_FaceBlurrerBase):
    """Image-to-image anonymizer with the sklearn transformer API.

    Parameters
    ----------
    blurnet : BlurNetBackend
        Network producing a blurred-face version of its input.
    inference_size : int
        Square side length the frame is resized to before the forward pass.
    threshold : float
        Standardized-difference threshold recovering the face mask.
    """

    def __init__(self, blurnet=None, inference_size=512, threshold=DEFAULT_THRESHOLD):
        self.blurnet = blurnet
        self.inference_size = inference_size
        self.threshold = threshold

    def _pipeline_config(self) -> PipelineConfig:
        if self.blurnet is None:
            raise ValueError("IndirectFaceBlurrer requires a blur-network backend")
        return PipelineConfig(
            mode="indirect", inference_size=self.inference_size, threshold=self.threshold
        )

    def _process(self, image, frame_id, cfg):
        return indirect_pipeline(image, self.blurnet, cfg, frame_id=frame_id)
