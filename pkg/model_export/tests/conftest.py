"""Fixtures: synthetic, structurally compatible checkpoints.

The real pretrained weights are fetched by users (never vendored); these
random-initialized stand-ins exercise the same conversion and parity paths.
"""

from __future__ import annotations

import numpy as np
import pytest
import torch
import torch.nn.functional as F
from torch import nn

from model_export.blurnet import BlurUNet


class TinyFaceDetector(nn.Module):
    """Minimal detector honoring the interchange output contract.

    A conv stack pools to a grid; each cell decodes to one candidate row
    (cx, cy, w, h, obj, 10 landmark coords, cls) in input-pixel space. The
    confidence heads are biased positive so random weights still fire.
    """

    def __init__(self, grid: int = 4):
        super().__init__()
        self.grid = grid
        self.features = nn.Sequential(
            nn.Conv2d(3, 8, 3, stride=2, padding=1),
            nn.ReLU(),
            nn.Conv2d(8, 16, 3, stride=2, padding=1),
            nn.ReLU(),
        )
        self.head = nn.Conv2d(16, 16, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b = x.shape[0]
        height = float(x.shape[2])
        width = float(x.shape[3])
        feats = F.adaptive_avg_pool2d(self.features(x), self.grid)
        raw = self.head(feats).permute(0, 2, 3, 1).reshape(b, self.grid * self.grid, 16)
        gy, gx = torch.meshgrid(
            torch.arange(self.grid, dtype=torch.float32, device=x.device),
            torch.arange(self.grid, dtype=torch.float32, device=x.device),
            indexing="ij",
        )
        cell_x = gx.flatten().unsqueeze(0)
        cell_y = gy.flatten().unsqueeze(0)
        cell_w = width / float(self.grid)
        cell_h = height / float(self.grid)
        cx = (cell_x + torch.sigmoid(raw[:, :, 0])) * cell_w
        cy = (cell_y + torch.sigmoid(raw[:, :, 1])) * cell_h
        bw = (0.3 + 0.5 * torch.sigmoid(raw[:, :, 2])) * cell_w
        bh = (0.3 + 0.5 * torch.sigmoid(raw[:, :, 3])) * cell_h
        obj = torch.sigmoid(raw[:, :, 4] + 2.0)
        cls = torch.sigmoid(raw[:, :, 15] + 2.0)
        cols = [cx, cy, bw, bh, obj]
        for k in range(5):
            cols.append(cx + 0.1 * bw * torch.tanh(raw[:, :, 5 + 2 * k]))
            cols.append(cy + 0.1 * bh * torch.tanh(raw[:, :, 6 + 2 * k]))
        cols.append(cls)
        return torch.stack(cols, dim=2)


def seeded(module: nn.Module, seed: int) -> nn.Module:
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for p in module.parameters():
            p.copy_(torch.randn(p.shape, generator=gen) * 0.05)
    module.eval()
    return module


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def detector_checkpoint(tmp_path_factory):
    """Pickled-module checkpoint for the toy detector."""
    model = seeded(TinyFaceDetector(), seed=7)
    path = tmp_path_factory.mktemp("ckpt") / "detector_checkpoint.pt"
    torch.save(model, path)
    return path


@pytest.fixture(scope="session")
def detector_ts_checkpoint(tmp_path_factory):
    """TorchScript-format checkpoint for the toy detector."""
    model = seeded(TinyFaceDetector(), seed=7)
    path = tmp_path_factory.mktemp("ckpt") / "detector_scripted.pt"
    torch.jit.script(model).save(str(path))
    return path


def make_blurnet_checkpoint(tmp_path, *, self_attention: bool, seed: int = 11):
    net = BlurUNet(encoder="resnet18", self_attention=self_attention)
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for p in net.parameters():
            p.copy_(torch.randn(p.shape, generator=gen) * 0.02)
    path = tmp_path / f"blurnet_sa{int(self_attention)}.ckpt"
    torch.save(
        {
            "state_dict": net.state_dict(),
            "config": {"encoder": "resnet18", "self_attention": self_attention},
        },
        path,
    )
    return path, net


@pytest.fixture(scope="session")
def blurnet_checkpoint(tmp_path_factory):
    path, net = make_blurnet_checkpoint(tmp_path_factory.mktemp("ckpt"), self_attention=True)
    return path, net
