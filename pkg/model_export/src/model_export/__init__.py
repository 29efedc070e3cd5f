"""Checkpoint-to-interchange-format conversion for the faceblur backends."""

from ._loading import ExportError, load_checkpoint
from .blurnet import BlurUNet, SelfAttention, parameter_count
from .export_blurnet import export_blurnet
from .export_detector import export_detector
from .manifest import (
    IMAGENET_MEAN,
    IMAGENET_STD,
    ExportManifest,
    manifest_path_for,
    read_manifest,
    sha256_of,
)

__all__ = [
    "BlurUNet",
    "ExportError",
    "ExportManifest",
    "IMAGENET_MEAN",
    "IMAGENET_STD",
    "SelfAttention",
    "export_blurnet",
    "export_detector",
    "load_checkpoint",
    "manifest_path_for",
    "parameter_count",
    "read_manifest",
    "sha256_of",
]
