"""Pluggable model backends: detector and blur-network contracts.

Two implementations exist for each contract: a file-driven oracle that
replays ground-truth annotations (so every pipeline is testable without any
ML runtime) and an optional neural one loading exported TorchScript graphs.
Backend instances are immutable after construction; per-frame context is
passed through the optional ``frame_id`` argument.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Protocol, runtime_checkable

import numpy as np

from .geometry import FaceBox, FaceEllipse, ellipse_to_box, scale_ellipse
from .imaging import IMAGENET_MEAN, IMAGENET_STD, SigmaRule, blur_faces, resample
from .validation import check_image, image_size

INFERENCE_SIZES = (192, 256, 512)
# Gray padding value used by the detector family's letterboxing.
LETTERBOX_FILL = 114.0 / 255.0


@runtime_checkable
class DetectorBackend(Protocol):
    """Face detector contract: returns in-bounds boxes with confidences in [0, 1]."""

    def detect(self, image: np.ndarray, frame_id: str | None = None) -> list[FaceBox]: ...


@runtime_checkable
class BlurNetBackend(Protocol):
    """Image-to-image contract: output dimensions equal input dimensions."""

    def forward(self, image: np.ndarray, frame_id: str | None = None) -> np.ndarray: ...


class UnknownFrameError(KeyError):
    """Raised when an oracle backend is asked about a frame it has no annotations for."""


@dataclass(frozen=True)
class FrameAnnotations:
    """Ground-truth faces for one frame, with the reference frame size the
    coordinates live in (used to rescale when the backend sees a resized frame)."""

    faces: tuple[FaceEllipse | FaceBox, ...]
    width: int | None = None
    height: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "faces", tuple(self.faces))


OracleAnnotations = Mapping[str, FrameAnnotations]


def _lookup(annotations: OracleAnnotations, frame_id: str | None) -> FrameAnnotations:
    if frame_id is None:
        raise UnknownFrameError("oracle backends require a frame_id")
    try:
        return annotations[frame_id]
    except KeyError:
        raise UnknownFrameError(f"no annotations for frame {frame_id!r}") from None


def oracle_detect(
    annotations: OracleAnnotations, frame_id: str | None, image: np.ndarray
) -> list[FaceBox]:
    """Replay stored boxes for a frame; ellipses become their bounding boxes.

    All returned boxes carry confidence 1.0. When the frame's annotation
    reference size is known and differs from the image, coordinates are
    rescaled accordingly.
    """
    ann = _lookup(annotations, frame_id)
    img = check_image(image)
    w, h = image_size(img)
    boxes = []
    for face in scale_annotations(ann, w, h):
        if isinstance(face, FaceEllipse):
            boxes.append(ellipse_to_box(face, confidence=1.0))
        else:
            boxes.append(
                FaceBox(face.x, face.y, face.w, face.h, confidence=1.0, landmarks=face.landmarks)
            )
    return boxes


def scale_annotations(
    ann: FrameAnnotations, width: int, height: int
) -> tuple[FaceEllipse | FaceBox, ...]:
    """Rescale a frame's annotations to a target canvas size.

    No-op when the annotation reference size is unknown or already matches.
    """
    if ann.width in (None, width) and ann.height in (None, height):
        return ann.faces
    sx = width / ann.width
    sy = height / ann.height
    scaled: list[FaceEllipse | FaceBox] = []
    for face in ann.faces:
        if isinstance(face, FaceEllipse):
            scaled.append(scale_ellipse(face, sx, sy))
        else:
            scaled.append(
                FaceBox(face.x * sx, face.y * sy, face.w * sx, face.h * sy, face.confidence)
            )
    return tuple(scaled)


def oracle_blurnet_forward(
    annotations: OracleAnnotations,
    frame_id: str | None,
    image: np.ndarray,
    rule: SigmaRule = SigmaRule(),
) -> np.ndarray:
    """Simulate a perfectly trained blur network.

    Applies the training-target construction to the input: faces (rescaled to
    the input's dimensions) are blurred under one global sigma, everything
    else passes through untouched.
    """
    ann = _lookup(annotations, frame_id)
    img = check_image(image)
    w, h = image_size(img)
    out, _ = blur_faces(img, scale_annotations(ann, w, h), rule)
    return out


class OracleDetector:
    """DetectorBackend replaying ground-truth annotations."""

    def __init__(self, annotations: OracleAnnotations):
        self.annotations = dict(annotations)

    def detect(self, image: np.ndarray, frame_id: str | None = None) -> list[FaceBox]:
        return oracle_detect(self.annotations, frame_id, image)


class OracleBlurNet:
    """BlurNetBackend that blurs faces exactly as the training targets do."""

    def __init__(self, annotations: OracleAnnotations, rule: SigmaRule = SigmaRule()):
        self.annotations = dict(annotations)
        self.rule = rule

    def forward(self, image: np.ndarray, frame_id: str | None = None) -> np.ndarray:
        return oracle_blurnet_forward(self.annotations, frame_id, image, self.rule)


class IdentityBlurNet:
    """Pass-through network: useful as a no-op baseline."""

    def forward(self, image: np.ndarray, frame_id: str | None = None) -> np.ndarray:
        return check_image(image).copy()


def letterbox(
    image: np.ndarray, size: int, fill: float = LETTERBOX_FILL
) -> tuple[np.ndarray, float, tuple[int, int]]:
    """Aspect-preserving resize onto a size x size canvas, padded with gray.

    Returns (canvas, scale, (pad_x, pad_y)); a source point p maps to
    p * scale + pad.
    """
    img = check_image(image)
    w, h = image_size(img)
    scale = min(size / w, size / h)
    new_w = max(1, round(w * scale))
    new_h = max(1, round(h * scale))
    resized = resample(img, new_w, new_h)
    pad_x = (size - new_w) // 2
    pad_y = (size - new_h) // 2
    shape = (size, size, 3) if img.ndim == 3 else (size, size)
    canvas = np.full(shape, fill, dtype=np.float64)
    canvas[pad_y : pad_y + new_h, pad_x : pad_x + new_w] = resized
    return canvas, scale, (pad_x, pad_y)


def box_iou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between two (N, 4) / (M, 4) arrays of x0,y0,x1,y1 boxes."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    ix0 = np.maximum(a[:, None, 0], b[None, :, 0])
    iy0 = np.maximum(a[:, None, 1], b[None, :, 1])
    ix1 = np.minimum(a[:, None, 2], b[None, :, 2])
    iy1 = np.minimum(a[:, None, 3], b[None, :, 3])
    inter = np.clip(ix1 - ix0, 0, None) * np.clip(iy1 - iy0, 0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)


def nms(boxes: np.ndarray, scores: np.ndarray, iou_threshold: float = 0.5) -> list[int]:
    """Greedy non-maximum suppression; returns kept indices, best-first."""
    order = np.argsort(scores)[::-1]
    keep: list[int] = []
    while order.size:
        i = int(order[0])
        keep.append(i)
        if order.size == 1:
            break
        rest = order[1:]
        ious = box_iou(boxes[i], boxes[rest])[0]
        order = rest[ious <= iou_threshold]
    return keep


def _load_torchscript(model_path: str):
    try:
        import torch
    except ImportError as exc:
        raise RuntimeError(
            "neural backends need torch; install the 'neural' extra (pip install faceblur[neural])"
        ) from exc
    try:
        module = torch.jit.load(str(model_path), map_location="cpu")
    except Exception as exc:
        raise ValueError(f"cannot load interchange model {model_path!r}: {exc}") from exc
    module.eval()
    return torch, module


class TorchScriptDetector:
    """Face detector running an exported TorchScript graph.

    The graph takes a (1, 3, H, W) float tensor in [0, 1] and returns
    (1, N, 16) rows laid out as (cx, cy, w, h, objectness, 10 landmark
    coordinates, class score) in input-pixel space. Detections are filtered
    by confidence, pruned by NMS and mapped back to original coordinates.
    """

    def __init__(
        self,
        model_path: str,
        input_size: int | str = "original",
        conf_threshold: float = 0.5,
        iou_threshold: float = 0.5,
    ):
        if input_size != "original" and input_size not in INFERENCE_SIZES:
            raise ValueError(f"input_size must be one of {INFERENCE_SIZES} or 'original'")
        self.input_size = input_size
        self.conf_threshold = conf_threshold
        self.iou_threshold = iou_threshold
        self._torch, self._model = _load_torchscript(model_path)

    def detect(self, image: np.ndarray, frame_id: str | None = None) -> list[FaceBox]:
        img = check_image(image)
        if img.ndim == 2:
            img = np.repeat(img[:, :, None], 3, axis=2)
        w, h = image_size(img)
        if self.input_size == "original":
            net_in, scale, pad = img, 1.0, (0, 0)
        else:
            net_in, scale, pad = letterbox(img, int(self.input_size))
        tensor = self._torch.from_numpy(np.ascontiguousarray(net_in.transpose(2, 0, 1))[None]).float()
        with self._torch.no_grad():
            raw = self._model(tensor)
        if isinstance(raw, (tuple, list)):
            raw = raw[0]
        pred = raw.detach().cpu().numpy()
        if pred.ndim == 3:
            pred = pred[0]
        if pred.ndim != 2 or pred.shape[1] < 16:
            raise ValueError(f"detector output has unexpected shape {pred.shape}; expected (N, 16)")
        return self._decode(pred, scale, pad, w, h)

    def _decode(self, pred, scale, pad, width, height) -> list[FaceBox]:
        scores = pred[:, 4] * pred[:, 15]
        pred = pred[scores >= self.conf_threshold]
        scores = scores[scores >= self.conf_threshold]
        if pred.shape[0] == 0:
            return []
        cx, cy, bw, bh = pred[:, 0], pred[:, 1], pred[:, 2], pred[:, 3]
        xyxy = np.stack([cx - bw / 2, cy - bh / 2, cx + bw / 2, cy + bh / 2], axis=1)
        keep = nms(xyxy, scores, self.iou_threshold)
        boxes = []
        for i in keep:
            x0 = (xyxy[i, 0] - pad[0]) / scale
            y0 = (xyxy[i, 1] - pad[1]) / scale
            x1 = (xyxy[i, 2] - pad[0]) / scale
            y1 = (xyxy[i, 3] - pad[1]) / scale
            x0, x1 = max(0.0, min(x0, width)), max(0.0, min(x1, width))
            y0, y1 = max(0.0, min(y0, height)), max(0.0, min(y1, height))
            if x1 <= x0 or y1 <= y0:
                continue
            lm = pred[i, 5:15].reshape(5, 2)
            lm = (lm - np.asarray(pad)) / scale
            boxes.append(
                FaceBox(
                    x0,
                    y0,
                    x1 - x0,
                    y1 - y0,
                    confidence=float(min(scores[i], 1.0)),
                    landmarks=tuple(map(tuple, lm.tolist())),
                )
            )
        return boxes


class TorchScriptBlurNet:
    """Blur network running an exported TorchScript graph.

    Standardizes the input with the fixed per-channel constants, runs the
    image-to-image graph, de-standardizes back to [0, 1] and clamps.
    """

    def __init__(self, model_path: str):
        self._torch, self._model = _load_torchscript(model_path)
        self._mean = np.asarray(IMAGENET_MEAN, dtype=np.float64)
        self._std = np.asarray(IMAGENET_STD, dtype=np.float64)

    def forward(self, image: np.ndarray, frame_id: str | None = None) -> np.ndarray:
        img = check_image(image)
        if img.ndim == 2:
            img = np.repeat(img[:, :, None], 3, axis=2)
        w, h = image_size(img)
        normed = (img - self._mean) / self._std
        tensor = self._torch.from_numpy(np.ascontiguousarray(normed.transpose(2, 0, 1))[None]).float()
        with self._torch.no_grad():
            out = self._model(tensor)
        if isinstance(out, (tuple, list)):
            out = out[0]
        arr = out.detach().cpu().numpy()
        if arr.ndim == 4:
            arr = arr[0]
        arr = arr.transpose(1, 2, 0).astype(np.float64)
        if arr.shape[:2] != (h, w):
            raise ValueError(f"blur network returned {arr.shape[:2]}, expected {(h, w)}")
        restored = arr * self._std + self._mean
        if not np.all(np.isfinite(restored)):
            raise ValueError("blur network produced non-finite samples")
        return np.clip(restored, 0.0, 1.0)
