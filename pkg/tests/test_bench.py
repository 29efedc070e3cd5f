import json

import numpy as np
import pytest

from faceblur.backends import FrameAnnotations, OracleBlurNet, OracleDetector
from faceblur.bench import (
    BenchReport,
    SharpnessCriterion,
    bench_runner,
    count_blurred_faces,
    emit_report,
    measure_fps,
)
from faceblur.dataset import FDDB, AnnotatedFrame, build_pair
from faceblur.geometry import FaceEllipse
from faceblur.imaging import SigmaRule
from faceblur.pipelines import PipelineConfig

from conftest import synthetic_frame, texture


def fixed_sigma_rule(sigma):
    # Force one exact sigma regardless of face sizes.
    return SigmaRule(scale=1e9, sigma_min=sigma, sigma_max=sigma)


class TestCountBlurredFaces:
    def test_unmodified_output_counts_zero(self, rng):
        img, faces = synthetic_frame(rng, 80, 60, 3)
        audit = count_blurred_faces(img, img.copy(), faces)
        assert audit.total == 3 and audit.blurred == 0

    def test_pair_target_counts_all(self, rng):
        img, faces = synthetic_frame(rng, 160, 120, 5, r_min=9.0)
        _, target = build_pair(img, AnnotatedFrame("x", faces, FDDB))
        audit = count_blurred_faces(img, target, faces)
        assert audit.blurred == audit.total == 5
        assert audit.not_assessable == 0

    def test_degenerate_face_not_assessable(self, rng):
        img = texture(rng, 40, 40)
        tiny = FaceEllipse(ra=0.6, rb=0.6, theta=0, cx=20, cy=20)
        audit = count_blurred_faces(img, img.copy(), (tiny,))
        assert audit.not_assessable == 1
        assert audit.ratios == (None,)
        assert audit.blurred == 0

    def test_monotone_in_sigma(self, rng):
        img, faces = synthetic_frame(rng, 140, 100, 4, r_min=8.0)
        frame = AnnotatedFrame("x", faces, FDDB)
        counts = []
        for sigma in (0.4, 0.8, 1.5, 3.0, 6.0):
            _, target = build_pair(img, frame, fixed_sigma_rule(sigma))
            counts.append(count_blurred_faces(img, target, faces).blurred)
        assert counts == sorted(counts)

    def test_ratio_threshold_applies(self, rng):
        img, faces = synthetic_frame(rng, 100, 80, 2, r_min=12.0)
        _, target = build_pair(img, AnnotatedFrame("x", faces, FDDB))
        strict = SharpnessCriterion(max_energy_ratio=1e-12)
        assert count_blurred_faces(img, target, faces, strict).blurred == 0


class TestMeasureFps:
    def cfg(self, size=192):
        return PipelineConfig(mode="indirect", inference_size=size)

    def frames(self, rng, size, n):
        return [(f"f{i}", texture(rng, size, size)) for i in range(n)]

    def oracle_net(self, rng, size, ids):
        faces = (FaceEllipse(ra=size / 6, rb=size / 7, theta=0.3, cx=size / 2, cy=size / 2),)
        return OracleBlurNet({i: FrameAnnotations(faces=faces, width=size, height=size) for i in ids})

    def test_too_few_frames_rejected(self, rng):
        cfg = self.cfg()
        runner = bench_runner(cfg, "preresized", blurnet=self.oracle_net(rng, 192, ["f0"]))
        with pytest.raises(ValueError):
            measure_fps(runner, self.frames(rng, 192, 3), cfg, "preresized", n_frames=5)

    def test_wrong_frame_size_rejected(self, rng):
        cfg = self.cfg()
        runner = bench_runner(cfg, "preresized", blurnet=self.oracle_net(rng, 100, ["f0"]))
        with pytest.raises(ValueError):
            measure_fps(runner, self.frames(rng, 100, 4), cfg, "preresized", n_frames=4)

    def test_report_fields(self, rng):
        cfg = self.cfg()
        frames = self.frames(rng, 192, 4)
        net = self.oracle_net(rng, 192, [f for f, _ in frames])
        report = measure_fps(bench_runner(cfg, "preresized", blurnet=net), frames, cfg, "preresized", n_frames=4)
        assert report.frames == 4
        assert report.mean_fps > 0
        assert report.scenario == "preresized"
        assert set(report.stage_seconds) == {"forward"}
        # stage means must not exceed the frame time by more than noise
        assert sum(report.stage_seconds.values()) <= 1.2 / report.mean_fps

    def test_noop_pipeline_is_faster(self, rng):
        cfg = self.cfg()
        frames = self.frames(rng, 192, 5)
        net = self.oracle_net(rng, 192, [f for f, _ in frames])

        def noop(frame, frame_id, stage_times):
            return frame

        real = measure_fps(bench_runner(cfg, "preresized", blurnet=net), frames, cfg, "preresized", n_frames=5)
        idle = measure_fps(noop, frames, cfg, "preresized", n_frames=5)
        assert idle.mean_fps > real.mean_fps

    def test_full_scenario_runs_all_stages(self, rng):
        cfg = self.cfg(192)
        frames = [(f"f{i}", texture(rng, 1024, 1024)) for i in range(2)]
        net = self.oracle_net(rng, 1024, [f for f, _ in frames])
        report = measure_fps(bench_runner(cfg, "1024", blurnet=net), frames, cfg, "1024", n_frames=2)
        assert {"downsample", "forward", "upsample", "mask", "mask_upsample", "composite"} <= set(
            report.stage_seconds
        )

    def test_direct_mode_runner(self, rng):
        cfg = PipelineConfig(mode="direct")
        img, faces = synthetic_frame(rng, 128, 128, 2)
        frames = [("f0", img), ("f1", img)]
        det = OracleDetector({f: FrameAnnotations(faces=faces) for f, _ in frames})
        report = measure_fps(bench_runner(cfg, "preresized", detector=det), frames, cfg, "preresized", n_frames=2)
        assert report.pipeline == "direct"
        assert "detect" in report.stage_seconds


class TestEmitReport:
    def make(self, pipeline, size, scenario, fps):
        return BenchReport(pipeline=pipeline, inference_size=size, scenario=scenario, frames=4, mean_fps=fps)

    def test_single_report_single_row(self):
        text = emit_report([self.make("indirect", 192, "preresized", 28.4)])
        assert "No resizing needed" in text
        assert "28.4" in text

    def test_full_grid_table(self, tmp_path):
        reports = []
        fps = iter([28.4, 22.0, 9.6, 9.2, 8.3, 5.4, 3.0, 2.8, 2.4])
        for scenario in ("preresized", "1024", "2048"):
            for size in (192, 256, 512):
                reports.append(self.make("indirect", size, scenario, next(fps)))
        out = tmp_path / "report.json"
        text = emit_report(reports, json_path=out)
        lines = [ln for ln in text.splitlines() if "|" in ln]
        assert len(lines) == 4  # header + 3 scenario rows
        payload = json.loads(out.read_text())
        assert len(payload) == 9
        assert payload[0]["mean_fps"] == 28.4

    def test_missing_cell_renders_blank(self):
        reports = [
            self.make("direct", 192, "preresized", 52.5),
            self.make("direct", 256, "preresized", 48.9),
            self.make("direct", 192, "1024", 7.2),
        ]
        text = emit_report(reports)
        row_1024 = next(ln for ln in text.splitlines() if ln.startswith("Input size of 1024"))
        cells = [c.strip() for c in row_1024.split("|")[1:]]
        assert cells[0] == "7.2" and cells[1] == ""

    def test_empty_reports_rejected(self):
        with pytest.raises(ValueError):
            emit_report([])
