"""Shared fixtures: synthetic annotated frames and independent oracles.

The oracles here deliberately avoid the library's code paths: ellipse
membership is evaluated per pixel over the whole canvas, Gaussian blur as a
dense 2-D convolution, bilinear sampling point by point.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from faceblur.geometry import FaceEllipse
from faceblur.imaging import gaussian_kernel


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def texture(rng, width, height, channels=3):
    """High-frequency random texture; blurring it changes pixels a lot."""
    shape = (height, width) if channels == 1 else (height, width, channels)
    return rng.random(shape)


def ellipse_mask_loop(e: FaceEllipse, width: int, height: int) -> np.ndarray:
    """Per-pixel membership test, plain Python loops."""
    mask = np.zeros((height, width), dtype=bool)
    if e.ra == 0 or e.rb == 0:
        return mask
    cos_t, sin_t = math.cos(e.theta), math.sin(e.theta)
    for j in range(height):
        for i in range(width):
            dx = i + 0.5 - e.cx
            dy = j + 0.5 - e.cy
            u = cos_t * dx + sin_t * dy
            v = -sin_t * dx + cos_t * dy
            mask[j, i] = (u / e.ra) ** 2 + (v / e.rb) ** 2 <= 1.0
    return mask


def ellipse_mask_fullgrid(e: FaceEllipse, width: int, height: int) -> np.ndarray:
    """Vectorized membership over the full canvas, no bounding-box shortcut."""
    if e.ra == 0 or e.rb == 0:
        return np.zeros((height, width), dtype=bool)
    dx = np.arange(width) + 0.5 - e.cx
    dy = np.arange(height) + 0.5 - e.cy
    cos_t, sin_t = math.cos(e.theta), math.sin(e.theta)
    u = cos_t * dx[None, :] + sin_t * dy[:, None]
    v = -sin_t * dx[None, :] + cos_t * dy[:, None]
    return (u / e.ra) ** 2 + (v / e.rb) ** 2 <= 1.0


def dense_gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Full 2-D convolution with the truncated kernel and replicate padding."""
    k1 = gaussian_kernel(sigma)
    kernel2d = np.outer(k1, k1)
    r = (len(k1) - 1) // 2
    img = np.asarray(image, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[:, :, None]
    padded = np.pad(img, ((r, r), (r, r), (0, 0)), mode="edge")
    h, w, c = img.shape
    out = np.empty_like(img)
    for y in range(h):
        for x in range(w):
            window = padded[y : y + 2 * r + 1, x : x + 2 * r + 1]
            out[y, x] = np.tensordot(kernel2d, window, axes=([0, 1], [0, 1]))
    return out[:, :, 0] if squeeze else out


def bilinear_point(image: np.ndarray, x: float, y: float):
    """Closed-form bilinear sample with edge clamping."""
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape[:2]
    x = min(max(x, 0.0), w - 1.0)
    y = min(max(y, 0.0), h - 1.0)
    x0, y0 = int(math.floor(x)), int(math.floor(y))
    x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
    fx, fy = x - x0, y - y0
    top = (1 - fx) * img[y0, x0] + fx * img[y0, x1]
    bot = (1 - fx) * img[y1, x0] + fx * img[y1, x1]
    return (1 - fy) * top + fy * bot


def place_ellipses(rng, width, height, count, r_min=8.0, r_max=None, rotated=True):
    """Jittered-grid layout of ellipses that stay inside the canvas."""
    aspect = width / height
    gx = max(1, math.ceil(math.sqrt(count * aspect)))
    gy = max(1, math.ceil(count / gx))
    while gx * gy < count:
        gy += 1
    cell_w, cell_h = width / gx, height / gy
    limit = 0.45 * min(cell_w, cell_h)
    r_hi = limit if r_max is None else min(r_max, limit)
    r_lo = min(r_min, r_hi)
    faces = []
    cells = [(i, j) for j in range(gy) for i in range(gx)][:count]
    for i, j in cells:
        ra = rng.uniform(r_lo, r_hi)
        rb = rng.uniform(r_lo, r_hi)
        margin = max(ra, rb)
        cx = (i + 0.5) * cell_w + rng.uniform(-1, 1) * max(0.0, cell_w / 2 - margin - 1)
        cy = (j + 0.5) * cell_h + rng.uniform(-1, 1) * max(0.0, cell_h / 2 - margin - 1)
        theta = rng.uniform(0, math.pi) if rotated else 0.0
        faces.append(FaceEllipse(ra=ra, rb=rb, theta=theta, cx=cx, cy=cy))
    return tuple(faces)


def synthetic_frame(rng, width, height, count, r_min=8.0, r_max=None, rotated=True):
    """A textured frame plus ellipse annotations laid out inside it."""
    return texture(rng, width, height), place_ellipses(
        rng, width, height, count, r_min=r_min, r_max=r_max, rotated=rotated
    )


# Face totals of the six-image evaluation set used throughout the experiments.
PAPER_FACE_COUNTS = (1, 1, 5, 6, 18, 51)
PAPER_FRAME_SIZES = ((320, 240), (400, 300), (512, 384), (512, 512), (640, 480), (800, 600))


@pytest.fixture
def paper_testset(rng):
    """Six synthetic frames mirroring the evaluation set's face totals."""
    frames = []
    for (w, h), n in zip(PAPER_FRAME_SIZES, PAPER_FACE_COUNTS):
        image, faces = synthetic_frame(rng, w, h, n, r_min=9.0)
        frames.append((image, faces))
    return frames
