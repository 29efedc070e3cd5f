"""Export manifests: provenance and I/O contract of an interchange model."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

# Fixed per-channel standardization constants of the blur network's I/O
# contract; they must match the constants the consuming toolkit applies.
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass(frozen=True)
class ExportManifest:
    """Record of one checkpoint conversion, written beside the model file."""

    source_checkpoint: str
    checkpoint_sha256: str
    output_file: str
    model_kind: str
    input_shape: str
    normalization: dict
    output_layout: str
    parameter_count: int
    extras: dict = field(default_factory=dict)

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


def manifest_path_for(model_path: str | Path) -> Path:
    model_path = Path(model_path)
    return model_path.with_suffix(model_path.suffix + ".manifest.json")


def read_manifest(path: str | Path) -> ExportManifest:
    data = json.loads(Path(path).read_text())
    return ExportManifest(**data)


def sha256_of(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
