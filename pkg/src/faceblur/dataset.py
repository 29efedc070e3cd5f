"""FDDB/WIDER annotation parsing and (input, blurred-target) pair building.

Both list formats share the same skeleton: an image path line, a face-count
line, then one face line per count. FDDB faces are rotated ellipses
"ra rb theta cx cy 1"; WIDER faces are boxes "x y w h" followed by attribute
flags that are parsed and ignored.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geometry import FaceBox, FaceEllipse
from .imaging import SigmaRule, blur_faces
from .validation import check_image

FDDB = "FDDB"
WIDER = "WIDER"


class AnnotationParseError(ValueError):
    """Malformed annotation file; carries the 1-based offending line number."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


@dataclass(frozen=True)
class AnnotatedFrame:
    """One image with its ground-truth face annotations."""

    image_path: str
    faces: tuple[FaceEllipse | FaceBox, ...]
    source: str

    def __post_init__(self):
        if self.source not in (FDDB, WIDER):
            raise ValueError(f"source must be {FDDB!r} or {WIDER!r}, got {self.source!r}")
        object.__setattr__(self, "faces", tuple(self.faces))


@dataclass(frozen=True)
class PairEntry:
    input_path: str
    target_path: str
    split: str


@dataclass(frozen=True)
class PairManifest:
    """Materialized-pair index; no path may appear in both splits."""

    entries: tuple[PairEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        train = {e.input_path for e in self.entries if e.split == "train"}
        val = {e.input_path for e in self.entries if e.split == "val"}
        overlap = train & val
        if overlap:
            raise ValueError(f"paths present in both splits: {sorted(overlap)[:3]}")

    def count(self, split: str) -> int:
        return sum(1 for e in self.entries if e.split == split)


def _read_lines(path) -> list[str]:
    return Path(path).read_text().splitlines()


def _parse_floats(fields: Sequence[str], n: int, path, line_no: int) -> list[float]:
    if len(fields) < n:
        raise AnnotationParseError(path, line_no, f"expected at least {n} fields, got {len(fields)}")
    values = []
    for f in fields[:n]:
        try:
            values.append(float(f))
        except ValueError:
            raise AnnotationParseError(path, line_no, f"non-numeric field {f!r}") from None
    return values


def _parse_count(line: str, path, line_no: int) -> int:
    try:
        count = int(line.strip())
    except ValueError:
        raise AnnotationParseError(path, line_no, f"expected a face count, got {line!r}") from None
    if count < 0:
        raise AnnotationParseError(path, line_no, f"negative face count {count}")
    return count


def parse_fddb(path) -> list[AnnotatedFrame]:
    """Parse an FDDB ellipse-list annotation file."""
    lines = _read_lines(path)
    frames: list[AnnotatedFrame] = []
    i = 0
    while i < len(lines):
        image_path = lines[i].strip()
        if not image_path:
            i += 1
            continue
        i += 1
        if i >= len(lines):
            raise AnnotationParseError(path, i, f"missing face count after {image_path!r}")
        count = _parse_count(lines[i], path, i + 1)
        i += 1
        faces = []
        for k in range(count):
            if i >= len(lines):
                raise AnnotationParseError(
                    path, i, f"truncated file: expected {count} faces for {image_path!r}, got {k}"
                )
            ra, rb, theta, cx, cy = _parse_floats(lines[i].split(), 5, path, i + 1)
            faces.append(FaceEllipse(ra=ra, rb=rb, theta=theta, cx=cx, cy=cy))
            i += 1
        frames.append(AnnotatedFrame(image_path=image_path, faces=tuple(faces), source=FDDB))
    return frames


def _is_zero_row(line: str) -> bool:
    fields = line.split()
    if len(fields) < 4:
        return False
    try:
        return all(float(f) == 0 for f in fields)
    except ValueError:
        return False


def parse_wider(path) -> list[AnnotatedFrame]:
    """Parse a WIDER FACE bbox ground-truth file.

    Face lines start with "x y w h"; trailing attribute flags are ignored.
    A zero count is conventionally followed by one all-zero placeholder row,
    which is consumed when present.
    """
    lines = _read_lines(path)
    frames: list[AnnotatedFrame] = []
    i = 0
    while i < len(lines):
        image_path = lines[i].strip()
        if not image_path:
            i += 1
            continue
        i += 1
        if i >= len(lines):
            raise AnnotationParseError(path, i, f"missing face count after {image_path!r}")
        count = _parse_count(lines[i], path, i + 1)
        i += 1
        faces = []
        if count == 0:
            if i < len(lines) and _is_zero_row(lines[i]):
                i += 1
        for k in range(count):
            if i >= len(lines):
                raise AnnotationParseError(
                    path, i, f"truncated file: expected {count} faces for {image_path!r}, got {k}"
                )
            x, y, w, h = _parse_floats(lines[i].split(), 4, path, i + 1)
            faces.append(FaceBox(x=x, y=y, w=w, h=h))
            i += 1
        frames.append(AnnotatedFrame(image_path=image_path, faces=tuple(faces), source=WIDER))
    return frames


def serialize_annotations(frames: Iterable[AnnotatedFrame]) -> str:
    """Write frames back to their source list format (round-trips the parsers)."""
    out: list[str] = []
    for frame in frames:
        out.append(frame.image_path)
        out.append(str(len(frame.faces)))
        for face in frame.faces:
            if isinstance(face, FaceEllipse):
                out.append(f"{face.ra!r} {face.rb!r} {face.theta!r} {face.cx!r} {face.cy!r} 1")
            else:
                out.append(f"{face.x!r} {face.y!r} {face.w!r} {face.h!r}")
    return "\n".join(out) + "\n"


def build_pair(
    image: np.ndarray, frame: AnnotatedFrame, sigma_rule: SigmaRule = SigmaRule()
) -> tuple[np.ndarray, np.ndarray]:
    """Build one (input, target) training pair.

    The input is the image itself; the target has every face region replaced
    by its globally blurred version under the union ellipse mask. Ellipse
    annotations are used directly, boxes are converted to inscribed ellipses.
    """
    img = check_image(image)
    target, _ = blur_faces(img, frame.faces, sigma_rule)
    return img.copy(), target


def pair_paths(frame: AnnotatedFrame) -> tuple[str, str]:
    """Relative output paths for a frame's materialized pair files."""
    rel = Path(frame.image_path).with_suffix(".png")
    return str(Path("input") / rel), str(Path("target") / rel)


def build_split(
    fddb_frames: Sequence[AnnotatedFrame],
    wider_train: Sequence[AnnotatedFrame],
    wider_val: Sequence[AnnotatedFrame],
    seed: int = 0,
    val_fraction: float = 0.2,
) -> PairManifest:
    """Assign train/val splits and produce the pair manifest.

    WIDER frames keep their official split; FDDB frames are shuffled with the
    given seed and split (1 - val_fraction)/val_fraction.
    """
    entries: list[PairEntry] = []
    shuffled = list(fddb_frames)
    random.Random(seed).shuffle(shuffled)
    n_val = round(len(shuffled) * val_fraction)
    for idx, frame in enumerate(shuffled):
        split = "val" if idx < n_val else "train"
        inp, tgt = pair_paths(frame)
        entries.append(PairEntry(inp, tgt, split))
    for frame in wider_train:
        inp, tgt = pair_paths(frame)
        entries.append(PairEntry(inp, tgt, "train"))
    for frame in wider_val:
        inp, tgt = pair_paths(frame)
        entries.append(PairEntry(inp, tgt, "val"))
    return PairManifest(tuple(entries))


def write_manifest(manifest: PairManifest, path) -> None:
    """One tab-separated record per line: input path, target path, split."""
    with open(path, "w") as fh:
        for e in manifest.entries:
            fh.write(f"{e.input_path}\t{e.target_path}\t{e.split}\n")


def read_manifest(path) -> PairManifest:
    entries = []
    for line_no, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise AnnotationParseError(path, line_no, f"expected 3 tab-separated fields, got {len(fields)}")
        if fields[2] not in ("train", "val"):
            raise AnnotationParseError(path, line_no, f"unknown split {fields[2]!r}")
        entries.append(PairEntry(*fields))
    return PairManifest(tuple(entries))
