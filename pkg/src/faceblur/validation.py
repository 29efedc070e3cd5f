"""Input validation helpers shared across the toolkit.

Images are numpy arrays of shape (H, W) or (H, W, 3) with float samples in
[0, 1]; binary masks are boolean arrays of shape (H, W). These helpers
normalize dtypes and fail early with readable messages, in the spirit of
sklearn's ``check_array``.
"""

from __future__ import annotations

import numpy as np


def check_image(image: np.ndarray, *, name: str = "image") -> np.ndarray:
    """Validate an image array and return it as float64.

    Accepts (H, W) single-channel or (H, W, 3) color arrays. Rejects empty
    or non-finite data.
    """
    arr = np.asarray(image)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim not in (2, 3):
        raise ValueError(f"{name} must have 2 or 3 dimensions, got shape {arr.shape}")
    if arr.ndim == 3 and arr.shape[2] != 3:
        raise ValueError(f"{name} must have 1 or 3 channels, got {arr.shape[2]}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    arr = arr.astype(np.float64, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite samples")
    return arr


def check_mask(mask: np.ndarray, *, name: str = "mask") -> np.ndarray:
    """Validate a binary mask and return it as a boolean (H, W) array."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.dtype != np.bool_:
        if not np.isin(arr, (0, 1)).all():
            raise ValueError(f"{name} must be boolean or contain only 0/1")
        arr = arr.astype(bool)
    return arr


def check_same_size(a: np.ndarray, b: np.ndarray, *, names: tuple[str, str] = ("a", "b")) -> None:
    """Require identical spatial dimensions (and channel count for images)."""
    if a.shape != b.shape:
        raise ValueError(
            f"{names[0]} and {names[1]} must share dimensions, got {a.shape} vs {b.shape}"
        )


def image_size(image: np.ndarray) -> tuple[int, int]:
    """Return (width, height) of an image or mask array."""
    return image.shape[1], image.shape[0]
