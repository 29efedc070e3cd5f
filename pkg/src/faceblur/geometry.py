"""Face annotation geometry: ellipse math, box conversion, mask rasterization.

Binary masks are boolean numpy arrays of shape (height, width); pixel (i, j)
means column i, row j, and mask[j, i] is its value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FaceEllipse:
    """Rotated ellipse face annotation (FDDB parameterization).

    ``ra`` is the semi-axis lying along direction ``theta``; ``rb`` the
    perpendicular one. ``theta`` is in radians, counterclockwise from the
    positive x axis. ``(cx, cy)`` is the center in pixel coordinates.
    """

    ra: float
    rb: float
    theta: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.ra < 0 or self.rb < 0:
            raise ValueError(f"ellipse radii must be non-negative, got ra={self.ra}, rb={self.rb}")
        for name in ("ra", "rb", "theta", "cx", "cy"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"ellipse field {name} must be finite")


@dataclass(frozen=True)
class FaceBox:
    """Axis-aligned box face annotation (WIDER/detector parameterization).

    ``(x, y)`` is the top-left corner. ``confidence`` is an optional score in
    [0, 1]; ``landmarks`` holds 0 or 5 (x, y) points.
    """

    x: float
    y: float
    w: float
    h: float
    confidence: float | None = None
    landmarks: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise ValueError(f"box dimensions must be non-negative, got w={self.w}, h={self.h}")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")
        if len(self.landmarks) not in (0, 5):
            raise ValueError(f"landmarks must hold 0 or 5 points, got {len(self.landmarks)}")
        object.__setattr__(self, "landmarks", tuple(tuple(p) for p in self.landmarks))

    @property
    def min_dim(self) -> float:
        return min(self.w, self.h)


def box_to_ellipse(box: FaceBox) -> FaceEllipse:
    """Inscribe an axis-aligned ellipse in a face box.

    The radii are half the box width and height, the angle is zero and the
    center is the box center.
    """
    return FaceEllipse(
        ra=box.w / 2.0,
        rb=box.h / 2.0,
        theta=0.0,
        cx=box.x + box.w / 2.0,
        cy=box.y + box.h / 2.0,
    )


def ellipse_half_extents(e: FaceEllipse) -> tuple[float, float]:
    """Axis-aligned half extents (ex, ey) of a rotated ellipse."""
    cos_t = math.cos(e.theta)
    sin_t = math.sin(e.theta)
    ex = math.hypot(e.ra * cos_t, e.rb * sin_t)
    ey = math.hypot(e.ra * sin_t, e.rb * cos_t)
    return ex, ey


def ellipse_to_box(e: FaceEllipse, confidence: float | None = None) -> FaceBox:
    """Axis-aligned bounding box of a rotated ellipse."""
    ex, ey = ellipse_half_extents(e)
    return FaceBox(x=e.cx - ex, y=e.cy - ey, w=2.0 * ex, h=2.0 * ey, confidence=confidence)


def scale_ellipse(e: FaceEllipse, sx: float, sy: float) -> FaceEllipse:
    """Image of an ellipse under the anisotropic scaling (x, y) -> (sx*x, sy*y).

    The scaled set is again an ellipse but its (ra, rb, theta) do not scale
    componentwise unless theta is a multiple of pi/2; the exact parameters are
    recovered from the transformed quadratic form.
    """
    if sx <= 0 or sy <= 0:
        raise ValueError(f"scale factors must be positive, got ({sx}, {sy})")
    if sx == sy == 1.0:
        return e
    cx, cy = e.cx * sx, e.cy * sy
    if e.ra == 0 or e.rb == 0:
        # Degenerate: scale each axis endpoint vector directly.
        cos_t, sin_t = math.cos(e.theta), math.sin(e.theta)
        ra = math.hypot(e.ra * cos_t * sx, e.ra * sin_t * sy)
        rb = math.hypot(e.rb * sin_t * sx, e.rb * cos_t * sy)
        return FaceEllipse(ra=ra, rb=rb, theta=e.theta, cx=cx, cy=cy)
    cos_t, sin_t = math.cos(e.theta), math.sin(e.theta)
    rot = np.array([[cos_t, -sin_t], [sin_t, cos_t]])
    quad = rot @ np.diag([1.0 / e.ra**2, 1.0 / e.rb**2]) @ rot.T
    inv_s = np.diag([1.0 / sx, 1.0 / sy])
    quad = inv_s @ quad @ inv_s
    eigvals, eigvecs = np.linalg.eigh(quad)
    radii = 1.0 / np.sqrt(eigvals)
    # eigh sorts ascending, so radii[0] is the larger axis; keep it as ra.
    theta = math.atan2(eigvecs[1, 0], eigvecs[0, 0])
    return FaceEllipse(ra=float(radii[0]), rb=float(radii[1]), theta=theta, cx=cx, cy=cy)


def rasterize_ellipse(e: FaceEllipse, width: int, height: int) -> np.ndarray:
    """Rasterize an ellipse onto a (height, width) boolean mask.

    Pixel (i, j) is set iff its center (i+0.5, j+0.5), rotated by -theta about
    the ellipse center, satisfies (dx/ra)^2 + (dy/rb)^2 <= 1. Regions outside
    the canvas are clipped; zero-radius ellipses give an empty mask.
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"canvas dimensions must be positive, got {width}x{height}")
    mask = np.zeros((height, width), dtype=bool)
    if e.ra == 0 or e.rb == 0:
        return mask
    ex, ey = ellipse_half_extents(e)
    # Pixel centers live at half-integers: restrict to the ellipse's bbox.
    i0 = max(0, math.ceil(e.cx - ex - 0.5))
    i1 = min(width - 1, math.floor(e.cx + ex - 0.5))
    j0 = max(0, math.ceil(e.cy - ey - 0.5))
    j1 = min(height - 1, math.floor(e.cy + ey - 0.5))
    if i0 > i1 or j0 > j1:
        return mask
    dx = np.arange(i0, i1 + 1) + 0.5 - e.cx
    dy = np.arange(j0, j1 + 1) + 0.5 - e.cy
    cos_t = math.cos(e.theta)
    sin_t = math.sin(e.theta)
    u = cos_t * dx[None, :] + sin_t * dy[:, None]
    v = -sin_t * dx[None, :] + cos_t * dy[:, None]
    mask[j0 : j1 + 1, i0 : i1 + 1] = (u / e.ra) ** 2 + (v / e.rb) ** 2 <= 1.0
    return mask


def union_masks(masks) -> np.ndarray:
    """Per-pixel logical OR of equally sized masks."""
    masks = list(masks)
    if not masks:
        raise ValueError("union_masks requires at least one mask")
    first = masks[0]
    for m in masks[1:]:
        if m.shape != first.shape:
            raise ValueError(f"mask dimensions differ: {first.shape} vs {m.shape}")
    return np.logical_or.reduce(np.stack(masks, axis=0), axis=0)
