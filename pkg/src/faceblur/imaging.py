"""Raster kernels: Gaussian blur, resampling, compositing, diff masks, metrics.

All operations are pure functions over float64 arrays; boundary handling is
replicate (clamp-to-edge) throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from time import perf_counter
from typing import Sequence

import numpy as np
from scipy.ndimage import convolve1d

from .geometry import FaceBox, FaceEllipse, box_to_ellipse, rasterize_ellipse, union_masks
from .validation import check_image, check_mask, check_same_size, image_size

# Fixed per-channel standardization constants (RGB order). The diff threshold
# below operates in this normalized domain, where a heavily blurred face pixel
# differs from its original by ~0.4 on average.
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
DEFAULT_THRESHOLD = 0.1


@dataclass(frozen=True)
class SigmaRule:
    """Blur strength rule: sigma = min face dimension / scale, clamped.

    One sigma is selected per frame; applying a separate sigma per face
    produces visible seams where blurred regions overlap.
    """

    scale: float = 4.0
    sigma_min: float = 1.0
    sigma_max: float = 50.0

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not 0 < self.sigma_min <= self.sigma_max:
            raise ValueError(
                f"need 0 < sigma_min <= sigma_max, got [{self.sigma_min}, {self.sigma_max}]"
            )


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian kernel truncated at radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(x**2) / (2.0 * sigma**2))
    return kernel / kernel.sum()


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with replicate boundaries.

    Convolves horizontally then vertically with the truncated, renormalized
    kernel. sigma=0 returns the input unchanged.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    img = check_image(image)
    if sigma == 0:
        return img.copy()
    kernel = gaussian_kernel(sigma)
    out = convolve1d(img, kernel, axis=1, mode="nearest")
    out = convolve1d(out, kernel, axis=0, mode="nearest")
    return out


def select_sigma(faces: Sequence[FaceBox | FaceEllipse], rule: SigmaRule) -> float:
    """Single per-frame blur sigma from the smallest detected face dimension.

    A box's dimension is min(w, h); an ellipse's is its minor diameter.
    """
    if not faces:
        raise ValueError("select_sigma requires at least one face")
    min_dim = min(face_min_dimension(f) for f in faces)
    return min(max(min_dim / rule.scale, rule.sigma_min), rule.sigma_max)


def composite(base: np.ndarray, overlay: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Take overlay pixels where the mask is set, base pixels elsewhere."""
    base = check_image(base, name="base")
    overlay = check_image(overlay, name="overlay")
    mask = check_mask(mask)
    check_same_size(base, overlay, names=("base", "overlay"))
    if mask.shape != base.shape[:2]:
        raise ValueError(f"mask shape {mask.shape} does not match image {base.shape[:2]}")
    if base.ndim == 3:
        mask = mask[:, :, None]
    return np.where(mask, overlay, base)


def resample(image: np.ndarray, new_width: int, new_height: int) -> np.ndarray:
    """Bilinear resampling with edge clamping.

    Destination pixel centers map to source coordinates
    (i + 0.5) * old/new - 0.5, clamped to the valid range, so a same-size
    resample is an exact identity.
    """
    if new_width <= 0 or new_height <= 0:
        raise ValueError(f"target dimensions must be positive, got {new_width}x{new_height}")
    img = check_image(image)
    w, h = image_size(img)
    if (new_width, new_height) == (w, h):
        return img.copy()
    xs = np.clip((np.arange(new_width) + 0.5) * (w / new_width) - 0.5, 0.0, w - 1.0)
    ys = np.clip((np.arange(new_height) + 0.5) * (h / new_height) - 0.5, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    planar = img if img.ndim == 3 else img[:, :, None]
    top = (1.0 - fx)[None, :, None] * planar[y0[:, None], x0[None, :]] + fx[None, :, None] * planar[
        y0[:, None], x1[None, :]
    ]
    bot = (1.0 - fx)[None, :, None] * planar[y1[:, None], x0[None, :]] + fx[None, :, None] * planar[
        y1[:, None], x1[None, :]
    ]
    out = (1.0 - fy)[:, None, None] * top + fy[:, None, None] * bot
    return out if img.ndim == 3 else out[:, :, 0]


def abs_diff_mask(
    a: np.ndarray,
    b: np.ndarray,
    threshold: float = DEFAULT_THRESHOLD,
    channel_std: Sequence[float] | None = None,
) -> np.ndarray:
    """Mask of pixels whose mean standardized absolute difference exceeds threshold.

    Differences are measured in the per-channel standardized domain
    (value - mean) / std; the means cancel, so each channel difference is
    divided by its std (defaults: IMAGENET_STD for color, their average for
    single-channel images).
    """
    if threshold < 0:
        raise ValueError(f"threshold must be non-negative, got {threshold}")
    a = check_image(a, name="a")
    b = check_image(b, name="b")
    check_same_size(a, b)
    if a.ndim == 2:
        std = float(np.mean(IMAGENET_STD)) if channel_std is None else float(channel_std[0])
        return np.abs(a - b) / std > threshold
    std = np.asarray(IMAGENET_STD if channel_std is None else channel_std, dtype=np.float64)
    diff = np.abs(a - b) / std[None, None, :]
    return diff.mean(axis=2) > threshold


def resample_mask(mask: np.ndarray, new_width: int, new_height: int) -> np.ndarray:
    """Bilinearly resample a binary mask and re-binarize at 0.5."""
    mask = check_mask(mask)
    w, h = image_size(mask)
    if (new_width, new_height) == (w, h):
        return mask.copy()
    return resample(mask.astype(np.float64), new_width, new_height) >= 0.5


def l1_metric(u: np.ndarray, v: np.ndarray) -> float:
    """Mean absolute sample difference."""
    u = check_image(u, name="u")
    v = check_image(v, name="v")
    check_same_size(u, v, names=("u", "v"))
    return float(np.mean(np.abs(u - v)))


def mse_metric(u: np.ndarray, v: np.ndarray) -> float:
    """Mean squared sample difference."""
    u = check_image(u, name="u")
    v = check_image(v, name="v")
    check_same_size(u, v, names=("u", "v"))
    return float(np.mean((u - v) ** 2))


def face_min_dimension(face: FaceBox | FaceEllipse) -> float:
    """Minimum dimension of a face: box min(w, h), or the ellipse minor diameter."""
    if isinstance(face, FaceBox):
        return face.min_dim
    return 2.0 * min(face.ra, face.rb)


def faces_to_mask(faces: Sequence[FaceBox | FaceEllipse], width: int, height: int) -> np.ndarray:
    """Union mask of face annotations; boxes are first converted to ellipses."""
    if not faces:
        return np.zeros((height, width), dtype=bool)
    ellipses = [box_to_ellipse(f) if isinstance(f, FaceBox) else f for f in faces]
    return union_masks([rasterize_ellipse(e, width, height) for e in ellipses])


def blur_faces(
    image: np.ndarray,
    faces: Sequence[FaceBox | FaceEllipse],
    rule: SigmaRule = SigmaRule(),
    stage_times: dict | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Blur the face regions of a frame under one global sigma.

    Returns (result, mask). The whole frame is blurred once with the sigma
    selected from the smallest face dimension, then blurred pixels replace the
    originals under the union ellipse mask; everything outside the mask is
    bit-identical to the input. With no faces the input is returned untouched.
    """
    img = check_image(image)
    w, h = image_size(img)
    if not faces:
        return img.copy(), np.zeros((h, w), dtype=bool)
    t0 = perf_counter()
    mask = faces_to_mask(faces, w, h)
    sigma = select_sigma(faces, rule)
    t1 = perf_counter()
    blurred = gaussian_blur(img, sigma)
    t2 = perf_counter()
    out = composite(img, blurred, mask)
    t3 = perf_counter()
    if stage_times is not None:
        stage_times["mask"] = stage_times.get("mask", 0.0) + (t1 - t0)
        stage_times["blur"] = stage_times.get("blur", 0.0) + (t2 - t1)
        stage_times["composite"] = stage_times.get("composite", 0.0) + (t3 - t2)
    return out, mask
