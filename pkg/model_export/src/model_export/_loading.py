"""Checkpoint loading shared by the export scripts."""

from __future__ import annotations

from pathlib import Path

import torch


class ExportError(RuntimeError):
    """Conversion failed; the message says which step and why."""


def load_checkpoint(path: str | Path):
    """Load a checkpoint as (module, kind).

    kind is "torchscript" for serialized graphs, "module" for pickled
    nn.Module objects or dicts carrying one, "state_dict" for bare state
    dicts (returned as-is for the caller to instantiate an architecture).
    """
    path = Path(path)
    if not path.is_file():
        raise ExportError(f"checkpoint not found: {path}")
    try:
        module = torch.jit.load(str(path), map_location="cpu")
        module.eval()
        return module, "torchscript"
    except Exception:
        pass
    try:
        payload = torch.load(str(path), map_location="cpu", weights_only=False)
    except Exception as exc:
        raise ExportError(f"cannot load checkpoint {path}: {exc}") from exc
    if isinstance(payload, torch.nn.Module):
        payload.eval()
        return payload, "module"
    if isinstance(payload, dict):
        for key in ("model", "module"):
            if isinstance(payload.get(key), torch.nn.Module):
                model = payload[key]
                model.eval()
                return model, "module"
        if "state_dict" in payload or all(torch.is_tensor(v) for v in payload.values()):
            return payload, "state_dict"
    raise ExportError(
        f"checkpoint {path} holds {type(payload).__name__}; expected a TorchScript file, "
        "a pickled nn.Module, or a state-dict checkpoint"
    )


def to_torchscript(module: torch.nn.Module, probe: torch.Tensor, prefer_script: bool):
    """Convert to TorchScript; returns (scripted, dynamic_dims).

    Scripting keeps spatial dims dynamic; tracing fixes them to the probe's.
    Conversion failures surface the underlying diagnostic.
    """
    if isinstance(module, torch.jit.ScriptModule):
        return module, True
    if prefer_script:
        try:
            return torch.jit.script(module), True
        except Exception:
            pass
    try:
        with torch.no_grad():
            return torch.jit.trace(module, probe), False
    except Exception as exc:
        raise ExportError(f"cannot convert checkpoint graph to TorchScript: {exc}") from exc
