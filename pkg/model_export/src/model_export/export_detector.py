"""One-shot conversion of a face-detector checkpoint to the interchange format.

The detector graph contract: input (1, 3, H, W) RGB in [0, 1], output
(1, N, 16) rows laid out as (cx, cy, w, h, objectness, five landmark x/y
pairs, class score), coordinates in input pixels. The consumer multiplies
objectness by the class score, thresholds, and applies NMS.

Usage: export_detector.py --checkpoint <path> --out <path> [--input-size N]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import torch

from ._loading import ExportError, load_checkpoint, to_torchscript
from .manifest import ExportManifest, manifest_path_for, sha256_of

OUTPUT_LAYOUT = (
    "rows (cx, cy, w, h, objectness, lm1x, lm1y, lm2x, lm2y, lm3x, lm3y, "
    "lm4x, lm4y, lm5x, lm5y, class); confidence = objectness * class; "
    "coordinates in input pixels"
)
PROBE_SIZES = (192, 256, 512)


def _verify_output(module, probe: torch.Tensor) -> int:
    with torch.no_grad():
        out = module(probe)
    if isinstance(out, (tuple, list)):
        out = out[0]
    if out.ndim != 3 or out.shape[0] != 1 or out.shape[2] != 16:
        raise ExportError(
            f"detector graph returned shape {tuple(out.shape)}; expected (1, N, 16) "
            f"with the layout: {OUTPUT_LAYOUT}"
        )
    if not torch.isfinite(out).all():
        raise ExportError("detector graph produced non-finite values on the probe input")
    return int(out.shape[1])


def export_detector(checkpoint: str, out: str, input_size: int | None = None) -> ExportManifest:
    """Convert a detector checkpoint; returns the manifest written alongside."""
    loaded, kind = load_checkpoint(checkpoint)
    if kind == "state_dict":
        raise ExportError(
            "bare state dicts are not supported for detectors; supply a TorchScript "
            "file or a pickled nn.Module whose forward returns (1, N, 16)"
        )
    probe_size = input_size or 512
    probe = torch.rand(1, 3, probe_size, probe_size)
    scripted, dynamic = to_torchscript(loaded, probe, prefer_script=True)
    scripted.eval()
    _verify_output(scripted, probe)
    if dynamic:
        # A dynamic graph must run at every supported inference size.
        for size in PROBE_SIZES:
            _verify_output(scripted, torch.rand(1, 3, size, size))
        input_shape = "1x3xHxW (dynamic spatial dims)"
    else:
        input_shape = f"1x3x{probe_size}x{probe_size} (fixed)"
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    scripted.save(str(out_path))
    manifest = ExportManifest(
        source_checkpoint=str(checkpoint),
        checkpoint_sha256=sha256_of(checkpoint),
        output_file=str(out_path),
        model_kind="detector",
        input_shape=input_shape,
        normalization={"input": "RGB in [0, 1], letterboxed with gray 114/255"},
        output_layout=OUTPUT_LAYOUT,
        parameter_count=sum(p.numel() for p in scripted.parameters()),
    )
    manifest.write(manifest_path_for(out_path))
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--checkpoint", required=True, help="source checkpoint file")
    parser.add_argument("--out", required=True, help="output interchange model path (.pt)")
    parser.add_argument(
        "--input-size",
        type=int,
        default=None,
        help="fix the exported input size (default: keep dims dynamic, probe at 512)",
    )
    args = parser.parse_args(argv)
    try:
        manifest = export_detector(args.checkpoint, args.out, args.input_size)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {manifest.output_file} ({manifest.parameter_count} parameters, "
        f"{manifest.input_shape}); manifest at {manifest_path_for(manifest.output_file)}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
