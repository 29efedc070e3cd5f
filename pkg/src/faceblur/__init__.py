"""Face anonymization toolkit.

Two per-frame pipelines blur the faces of an image: a direct one driven by a
face detector, and an indirect one driven by an image-to-image network whose
output differences recover the face mask. Both run against oracle backends
that replay ground-truth annotations, or against exported TorchScript models.
"""

from .backends import (
    BlurNetBackend,
    DetectorBackend,
    FrameAnnotations,
    IdentityBlurNet,
    OracleBlurNet,
    OracleDetector,
    TorchScriptBlurNet,
    TorchScriptDetector,
    UnknownFrameError,
    oracle_detect,
    oracle_blurnet_forward,
)
from .bench import (
    BenchReport,
    FaceAudit,
    SharpnessCriterion,
    count_blurred_faces,
    emit_report,
    measure_fps,
)
from .dataset import (
    AnnotatedFrame,
    AnnotationParseError,
    PairManifest,
    build_pair,
    build_split,
    parse_fddb,
    parse_wider,
)
from .geometry import (
    FaceBox,
    FaceEllipse,
    box_to_ellipse,
    ellipse_to_box,
    rasterize_ellipse,
    union_masks,
)
from .imaging import (
    IMAGENET_MEAN,
    IMAGENET_STD,
    SigmaRule,
    abs_diff_mask,
    composite,
    gaussian_blur,
    l1_metric,
    mse_metric,
    resample,
    resample_mask,
    select_sigma,
)
from .pipelines import (
    DirectFaceBlurrer,
    FrameResult,
    IndirectFaceBlurrer,
    PipelineConfig,
    direct_pipeline,
    indirect_pipeline,
    process_sequence,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedFrame",
    "AnnotationParseError",
    "BenchReport",
    "BlurNetBackend",
    "DetectorBackend",
    "DirectFaceBlurrer",
    "FaceAudit",
    "FaceBox",
    "FaceEllipse",
    "FrameAnnotations",
    "FrameResult",
    "IdentityBlurNet",
    "IMAGENET_MEAN",
    "IMAGENET_STD",
    "IndirectFaceBlurrer",
    "OracleBlurNet",
    "OracleDetector",
    "PairManifest",
    "PipelineConfig",
    "SharpnessCriterion",
    "SigmaRule",
    "TorchScriptBlurNet",
    "TorchScriptDetector",
    "UnknownFrameError",
    "abs_diff_mask",
    "box_to_ellipse",
    "build_pair",
    "build_split",
    "composite",
    "count_blurred_faces",
    "direct_pipeline",
    "ellipse_to_box",
    "emit_report",
    "gaussian_blur",
    "indirect_pipeline",
    "l1_metric",
    "measure_fps",
    "mse_metric",
    "oracle_blurnet_forward",
    "oracle_detect",
    "parse_fddb",
    "parse_wider",
    "process_sequence",
    "rasterize_ellipse",
    "resample",
    "resample_mask",
    "select_sigma",
    "union_masks",
]
