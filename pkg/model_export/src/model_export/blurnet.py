"""Reference blur-network architecture for state-dict checkpoints.

A UNet with a frozen-style torchvision ResNet encoder (ResNet50 by default),
a plain convolutional decoder with skip connections, an optional
self-attention layer in the middle of the decoder, and a sigmoid output head.
Checkpoints produced for this architecture (state dicts, full pickled
modules, or TorchScript) are what the export script converts.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn
from torchvision import models

ENCODER_CHANNELS = {
    "resnet50": (64, 256, 512, 1024, 2048),
    "resnet18": (64, 64, 128, 256, 512),
}


class SelfAttention(nn.Module):
    """Single-head dot-product self-attention over spatial positions."""

    def __init__(self, channels: int):
        super().__init__()
        inner = max(1, channels // 8)
        self.query = nn.Conv2d(channels, inner, 1, bias=False)
        self.key = nn.Conv2d(channels, inner, 1, bias=False)
        self.value = nn.Conv2d(channels, channels, 1, bias=False)
        self.gamma = nn.Parameter(torch.zeros(1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, c, h, w = x.shape
        q = self.query(x).flatten(2)  # b, c', hw
        k = self.key(x).flatten(2)
        v = self.value(x).flatten(2)  # b, c, hw
        attn = torch.softmax(torch.bmm(q.transpose(1, 2), k), dim=-1)  # b, hw, hw
        out = torch.bmm(v, attn.transpose(1, 2)).reshape(b, c, h, w)
        return self.gamma * out + x


class UpBlock(nn.Module):
    """Upsample x2, concatenate the encoder skip, refine with two convs."""

    def __init__(self, in_ch: int, skip_ch: int, out_ch: int):
        super().__init__()
        self.conv1 = nn.Conv2d(in_ch + skip_ch, out_ch, 3, padding=1)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1)

    def forward(self, x: torch.Tensor, skip: torch.Tensor) -> torch.Tensor:
        x = F.interpolate(x, scale_factor=2.0, mode="nearest")
        x = torch.cat([x, skip], dim=1)
        x = F.relu(self.conv1(x))
        return F.relu(self.conv2(x))


class BlurUNet(nn.Module):
    """Image-to-image face blurrer: ResNet encoder, UNet decoder, sigmoid head.

    Takes standardized RGB input (1, 3, H, W) with H, W divisible by 32 and
    returns samples in [0, 1].
    """

    def __init__(self, encoder: str = "resnet50", self_attention: bool = True):
        super().__init__()
        if encoder not in ENCODER_CHANNELS:
            raise ValueError(f"encoder must be one of {sorted(ENCODER_CHANNELS)}, got {encoder!r}")
        self.encoder_name = encoder
        self.self_attention = self_attention
        backbone = getattr(models, encoder)(weights=None)
        self.stem = nn.Sequential(backbone.conv1, backbone.bn1, backbone.relu)
        self.pool = backbone.maxpool
        self.layer1 = backbone.layer1
        self.layer2 = backbone.layer2
        self.layer3 = backbone.layer3
        self.layer4 = backbone.layer4
        c0, c1, c2, c3, c4 = ENCODER_CHANNELS[encoder]
        self.up3 = UpBlock(c4, c3, 256)
        self.attn = SelfAttention(256) if self_attention else nn.Identity()
        self.up2 = UpBlock(256, c2, 128)
        self.up1 = UpBlock(128, c1, 64)
        self.up0 = UpBlock(64, c0, 32)
        self.head = nn.Conv2d(32, 3, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        s0 = self.stem(x)  # /2
        s1 = self.layer1(self.pool(s0))  # /4
        s2 = self.layer2(s1)  # /8
        s3 = self.layer3(s2)  # /16
        s4 = self.layer4(s3)  # /32
        d = self.up3(s4, s3)  # /16
        d = self.attn(d)
        d = self.up2(d, s2)  # /8
        d = self.up1(d, s1)  # /4
        d = self.up0(d, s0)  # /2
        d = F.interpolate(d, scale_factor=2.0, mode="nearest")  # /1
        return torch.sigmoid(self.head(d))


def parameter_count(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())
