"""Raster file I/O for the CLI: PNG read/write, JPEG read-only.

Pixels are exchanged with the pipelines as float64 arrays in [0, 1]; files
are 8-bit. PNG is the only output format so results stay lossless.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image as PILImage

READABLE_SUFFIXES = (".png", ".jpg", ".jpeg")


def read_image(path) -> np.ndarray:
    """Load a PNG or JPEG file as a float64 array in [0, 1]."""
    path = Path(path)
    if path.suffix.lower() not in READABLE_SUFFIXES:
        raise ValueError(f"unsupported input format {path.suffix!r} (PNG and JPEG only)")
    with PILImage.open(path) as img:
        mode = "L" if img.mode in ("L", "I;16", "1") else "RGB"
        arr = np.asarray(img.convert(mode), dtype=np.float64)
    return arr / 255.0


def write_png(path, image: np.ndarray) -> None:
    """Write a float [0, 1] array as an 8-bit PNG."""
    path = Path(path)
    if path.suffix.lower() != ".png":
        raise ValueError(f"output must be PNG, got {path.suffix!r}")
    arr = np.clip(np.asarray(image), 0.0, 1.0)
    data = np.rint(arr * 255.0).astype(np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    PILImage.fromarray(data).save(path, format="PNG")


def list_frames(directory) -> list[Path]:
    """Readable raster files in a directory, sorted by name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ValueError(f"not a directory: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in READABLE_SUFFIXES)


def resolve_image_path(root, image_path) -> Path:
    """Locate a dataset image that may be listed without its extension."""
    root = Path(root)
    candidate = root / image_path
    if candidate.is_file():
        return candidate
    for suffix in READABLE_SUFFIXES:
        with_ext = candidate.with_suffix(suffix)
        if with_ext.is_file():
            return with_ext
    raise FileNotFoundError(f"no raster file for {image_path!r} under {root}")
