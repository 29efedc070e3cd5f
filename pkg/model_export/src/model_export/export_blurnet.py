"""One-shot conversion of a blur-network checkpoint to the interchange format.

The exported graph contract: input and output are standardized RGB tensors
(1, 3, D, D) with the fixed per-channel constants; the consumer standardizes
before the forward pass and de-standardizes + clamps after it. Exports are
fixed-size, one file per supported inference size.

Usage: export_blurnet.py --checkpoint <path> --out <path> --size 192|256|512
       [--no-self-attention] [--encoder resnet50|resnet18]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import torch
from torch import nn

from ._loading import ExportError, load_checkpoint, to_torchscript
from .blurnet import BlurUNet, parameter_count
from .manifest import IMAGENET_MEAN, IMAGENET_STD, ExportManifest, manifest_path_for, sha256_of

SIZES = (192, 256, 512)


class _StandardizedOutput(nn.Module):
    """Wrap a [0, 1]-output network so the graph speaks standardized tensors."""

    def __init__(self, net: nn.Module):
        super().__init__()
        self.net = net
        self.register_buffer("mean", torch.tensor(IMAGENET_MEAN).reshape(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(IMAGENET_STD).reshape(1, 3, 1, 1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return (self.net(x) - self.mean) / self.std


def _instantiate(loaded, kind, self_attention: bool | None, encoder: str | None) -> nn.Module:
    if kind in ("torchscript", "module"):
        return loaded
    state = loaded.get("state_dict", loaded)
    config = dict(loaded.get("config", {})) if isinstance(loaded, dict) else {}
    if encoder is not None:
        config["encoder"] = encoder
    if self_attention is not None:
        config["self_attention"] = self_attention
    config.setdefault("encoder", "resnet50")
    config.setdefault("self_attention", True)
    net = BlurUNet(**config)
    try:
        net.load_state_dict(state)
    except RuntimeError as exc:
        raise ExportError(
            f"checkpoint state dict does not fit BlurUNet({config}): {exc}"
        ) from exc
    net.eval()
    return net


def export_blurnet(
    checkpoint: str,
    out: str,
    size: int,
    self_attention: bool | None = None,
    encoder: str | None = None,
) -> ExportManifest:
    """Convert a blur-network checkpoint at one fixed input size."""
    if size not in SIZES:
        raise ExportError(f"size must be one of {SIZES}, got {size}")
    loaded, kind = load_checkpoint(checkpoint)
    net = _instantiate(loaded, kind, self_attention, encoder)
    # TorchScript checkpoints are assumed to already speak standardized I/O.
    wrapped = net if kind == "torchscript" else _StandardizedOutput(net)
    probe = torch.randn(1, 3, size, size)
    scripted, _ = to_torchscript(wrapped, probe, prefer_script=False)
    scripted.eval()
    with torch.no_grad():
        got = scripted(probe)
    if tuple(got.shape) != (1, 3, size, size):
        raise ExportError(
            f"blur network returned shape {tuple(got.shape)} for a (1, 3, {size}, {size}) input"
        )
    if not torch.isfinite(got).all():
        raise ExportError("blur network produced non-finite values on the probe input")
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    scripted.save(str(out_path))
    manifest = ExportManifest(
        source_checkpoint=str(checkpoint),
        checkpoint_sha256=sha256_of(checkpoint),
        output_file=str(out_path),
        model_kind="blurnet",
        input_shape=f"1x3x{size}x{size} (fixed)",
        normalization={"mean": list(IMAGENET_MEAN), "std": list(IMAGENET_STD)},
        output_layout="standardized RGB image; de-standardize and clamp to [0, 1]",
        parameter_count=parameter_count(scripted),
        extras={"self_attention": getattr(net, "self_attention", None)},
    )
    manifest.write(manifest_path_for(out_path))
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--checkpoint", required=True, help="source checkpoint file")
    parser.add_argument("--out", required=True, help="output interchange model path (.pt)")
    parser.add_argument("--size", type=int, required=True, choices=SIZES)
    parser.add_argument(
        "--no-self-attention",
        action="store_true",
        help="build the architecture variant without the self-attention layer",
    )
    parser.add_argument(
        "--encoder",
        choices=("resnet50", "resnet18"),
        default=None,
        help="encoder for bare state-dict checkpoints (default: resnet50 or the checkpoint's config)",
    )
    args = parser.parse_args(argv)
    try:
        manifest = export_blurnet(
            args.checkpoint,
            args.out,
            args.size,
            self_attention=False if args.no_self_attention else None,
            encoder=args.encoder,
        )
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
