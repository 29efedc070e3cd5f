"""Acceptance: exported graphs reproduce the source framework's behavior.

Source side runs the checkpoint eagerly in torch with an independent numpy
decode; exported side goes through the interchange file and the consuming
toolkit's backends.
"""

import functools

import numpy as np
import pytest
import torch

from model_export import export_blurnet, export_detector
from model_export.manifest import IMAGENET_MEAN, IMAGENET_STD


def criterion(name):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[FAIL] {name}")
                raise
            print(f"[PASS] {name}")

        return wrapper

    return deco


def reference_decode(pred, conf_threshold=0.5, iou_threshold=0.5):
    """Independent decode of the documented (N, 16) layout: threshold + NMS."""
    pred = np.asarray(pred, dtype=np.float64)
    scores = pred[:, 4] * pred[:, 15]
    keep = scores >= conf_threshold
    pred, scores = pred[keep], scores[keep]
    x0 = pred[:, 0] - pred[:, 2] / 2
    y0 = pred[:, 1] - pred[:, 3] / 2
    x1 = pred[:, 0] + pred[:, 2] / 2
    y1 = pred[:, 1] + pred[:, 3] / 2
    boxes = np.stack([x0, y0, x1, y1], axis=1)
    order = np.argsort(scores)[::-1]
    kept = []
    while order.size:
        i = order[0]
        kept.append(i)
        if order.size == 1:
            break
        rest = order[1:]
        xx0 = np.maximum(boxes[i, 0], boxes[rest, 0])
        yy0 = np.maximum(boxes[i, 1], boxes[rest, 1])
        xx1 = np.minimum(boxes[i, 2], boxes[rest, 2])
        yy1 = np.minimum(boxes[i, 3], boxes[rest, 3])
        inter = np.clip(xx1 - xx0, 0, None) * np.clip(yy1 - yy0, 0, None)
        area_i = (boxes[i, 2] - boxes[i, 0]) * (boxes[i, 3] - boxes[i, 1])
        area_r = (boxes[rest, 2] - boxes[rest, 0]) * (boxes[rest, 3] - boxes[rest, 1])
        iou = inter / (area_i + area_r - inter)
        order = rest[iou <= iou_threshold]
    return boxes[kept], scores[kept]


def iou_xyxy(a, b):
    ix0, iy0 = max(a[0], b[0]), max(a[1], b[1])
    ix1, iy1 = min(a[2], b[2]), min(a[3], b[3])
    inter = max(0.0, ix1 - ix0) * max(0.0, iy1 - iy0)
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


@criterion("exported detector reproduces source-framework boxes (per-box IoU >= 0.95)")
def test_detector_parity(detector_checkpoint, tmp_path, rng):
    from faceblur.backends import TorchScriptDetector

    out = tmp_path / "detector.pt"
    export_detector(str(detector_checkpoint), str(out))

    sample = rng.random((512, 512, 3))

    # Source framework: eager forward + independent reference decode.
    eager = torch.load(str(detector_checkpoint), map_location="cpu", weights_only=False)
    eager.eval()
    with torch.no_grad():
        pred = eager(torch.from_numpy(sample.transpose(2, 0, 1)[None]).float())
    src_boxes, src_scores = reference_decode(pred[0].numpy())
    assert len(src_boxes) > 0

    # Exported file consumed through the toolkit's backend.
    detector = TorchScriptDetector(str(out), input_size="original")
    got = detector.detect(sample)
    assert len(got) == len(src_boxes)
    got_xyxy = [(b.x, b.y, b.x + b.w, b.y + b.h) for b in got]
    unmatched = list(range(len(got_xyxy)))
    for src in src_boxes:
        best = max(unmatched, key=lambda j: iou_xyxy(src, got_xyxy[j]))
        assert iou_xyxy(src, got_xyxy[best]) >= 0.95
        unmatched.remove(best)


@criterion("exported blurnet forward parity within 1e-4 mean absolute difference")
def test_blurnet_parity(blurnet_checkpoint, tmp_path, rng):
    from faceblur.backends import TorchScriptBlurNet

    ckpt_path, eager_net = blurnet_checkpoint
    out = tmp_path / "blurnet_192.pt"
    export_blurnet(str(ckpt_path), str(out), size=192)

    probe = rng.random((192, 192, 3))  # fixed probe batch, [0, 1] RGB

    mean = np.asarray(IMAGENET_MEAN)
    std = np.asarray(IMAGENET_STD)
    standardized = (probe - mean) / std
    with torch.no_grad():
        src = eager_net(torch.from_numpy(standardized.transpose(2, 0, 1)[None]).float())
    src = src[0].numpy().transpose(1, 2, 0)

    got = TorchScriptBlurNet(str(out)).forward(probe)
    mad = float(np.mean(np.abs(got - src)))
    assert mad <= 1e-4, f"mean absolute difference {mad:.2e}"


@criterion("exported models drive the consuming CLI end to end")
def test_cli_consumes_exports(detector_checkpoint, blurnet_checkpoint, tmp_path, rng):
    from faceblur.cli import main
    from faceblur.frameio import write_png

    det_model = tmp_path / "models" / "detector.pt"
    export_detector(str(detector_checkpoint), str(det_model))
    ckpt_path, _ = blurnet_checkpoint
    net_model = tmp_path / "models" / "blurnet_192.pt"
    export_blurnet(str(ckpt_path), str(net_model), size=192)

    src = tmp_path / "frame.png"
    write_png(src, rng.random((160, 200, 3)))

    direct_out = tmp_path / "direct.png"
    assert main(
        ["blur", "--input", str(src), "--output", str(direct_out),
         "--mode", "direct", "--model", str(det_model)]
    ) == 0
    assert direct_out.is_file()

    indirect_out = tmp_path / "indirect.png"
    assert main(
        ["blur", "--input", str(src), "--output", str(indirect_out),
         "--mode", "indirect", "--size", "192", "--model", str(net_model)]
    ) == 0
    assert indirect_out.is_file()
