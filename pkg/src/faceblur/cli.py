"""Command-line entry point: blur, build-dataset, bench, evaluate.

Exit codes: 0 success, 1 runtime failure, 2 usage error. Configuration
precedence is flags > config file > defaults; the config file is a JSON
object whose keys are the long flag names with dashes replaced by
underscores.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from time import perf_counter
from typing import Sequence

from . import bench as bench_mod
from . import dataset as dataset_mod
from .backends import (
    FrameAnnotations,
    IdentityBlurNet,
    OracleBlurNet,
    OracleDetector,
    TorchScriptBlurNet,
    TorchScriptDetector,
)
from .frameio import list_frames, read_image, resolve_image_path, write_png
from .geometry import FaceBox, box_to_ellipse
from .imaging import DEFAULT_THRESHOLD, SigmaRule
from .pipelines import PipelineConfig, process_sequence

MODEL_DIR_ENV = "FACEBLUR_MODEL_DIR"
SIZE_CHOICES = ("192", "256", "512", "original")

# Flag defaults applied after merging the config file; size defaults depend
# on the pipeline mode (direct runs at original size, indirect at 512).
_DEFAULTS = {
    "mode": "direct",
    "threshold": DEFAULT_THRESHOLD,
    "sigma_scale": 4.0,
    "sigma_min": 1.0,
    "sigma_max": 50.0,
    "backend": "neural",
    "annotations_format": "fddb",
    "workers": 1,
    "seed": 0,
    "val_fraction": 0.2,
    "n_frames": 100,
    "max_ratio": 0.3,
}


@dataclass
class JobSpec:
    """Validated, merged options for one CLI invocation."""

    command: str
    options: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faceblur",
        description="Anonymize faces in images with a direct (detector-driven) "
        "or indirect (image-to-image network) blurring pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("-v", "--verbose", action="count", default=0, help="per-frame stats")

    def add_pipeline_flags(p):
        p.add_argument("--mode", choices=("direct", "indirect"), help="pipeline (default: direct)")
        p.add_argument(
            "--size",
            choices=SIZE_CHOICES,
            help="inference size (default: original for direct, 512 for indirect)",
        )
        p.add_argument(
            "--threshold", type=float, help="standardized diff threshold (default: 0.1)"
        )
        p.add_argument(
            "--sigma-scale", type=float, help="sigma = min face dimension / scale (default: 4)"
        )
        p.add_argument("--sigma-min", type=float, help="sigma floor in pixels (default: 1)")
        p.add_argument("--sigma-max", type=float, help="sigma ceiling in pixels (default: 50)")
        p.add_argument(
            "--backend",
            choices=("neural", "oracle", "identity"),
            help="model backend (default: neural)",
        )
        p.add_argument(
            "--model",
            help=f"interchange model file (default: ${MODEL_DIR_ENV}/detector.pt or blurnet_<size>.pt)",
        )
        p.add_argument("--annotations", help="annotation file for the oracle backend")
        p.add_argument(
            "--annotations-format", choices=("fddb", "wider"), help="annotation format (default: fddb)"
        )

    p = sub.add_parser("blur", help="anonymize an image or a directory of frames")
    p.add_argument("--input", required=True, help="image file or directory of numbered frames")
    p.add_argument("--output", required=True, help="output PNG file or directory")
    add_pipeline_flags(p)
    p.add_argument("--workers", type=int, help="parallel frame workers (default: 1)")
    add_common(p)

    p = sub.add_parser("build-dataset", help="build (input, blurred-target) training pairs")
    p.add_argument("--fddb", help="FDDB corpus directory (images + *ellipse*.txt annotations)")
    p.add_argument("--wider", help="WIDER corpus directory (images + wider_face_*_bbx_gt.txt)")
    p.add_argument("--out", required=True, help="output directory for pairs and manifest")
    p.add_argument("--seed", type=int, help="FDDB split shuffle seed (default: 0)")
    p.add_argument("--sigma-scale", type=float, help="sigma rule divisor (default: 4)")
    p.add_argument("--val-fraction", type=float, help="FDDB validation fraction (default: 0.2)")
    add_common(p)

    p = sub.add_parser("bench", help="measure frames-per-second throughput")
    p.add_argument("--frames", required=True, help="directory of benchmark frames")
    p.add_argument(
        "--scenario",
        required=True,
        choices=bench_mod.SCENARIOS,
        help="preresized (frames already at the inference size) or fixed input size",
    )
    add_pipeline_flags(p)
    p.add_argument("--n-frames", type=int, help="frames to average over (default: 100)")
    p.add_argument("--report", help="write the JSON report here")
    add_common(p)

    p = sub.add_parser("evaluate", help="count correctly blurred faces")
    p.add_argument("--annotations", required=True, help="ground-truth annotation file")
    p.add_argument(
        "--annotations-format", choices=("fddb", "wider"), help="annotation format (default: fddb)"
    )
    p.add_argument("--inputs", required=True, help="directory of original frames")
    p.add_argument("--outputs", required=True, help="directory of anonymized frames")
    p.add_argument("--max-ratio", type=float, help="sharpness-drop threshold (default: 0.3)")
    p.add_argument("--report", help="write the JSON report here")
    add_common(p)

    return parser


def parse_args(argv: Sequence[str] | None = None) -> JobSpec:
    """Parse and merge argv, config file and defaults into a JobSpec."""
    parser = _build_parser()
    ns = parser.parse_args(argv)
    options = dict(vars(ns))
    command = options.pop("command")

    config_path = options.pop("config", None)
    config = {}
    if config_path:
        try:
            config = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config file {config_path}: {exc}")
        if not isinstance(config, dict):
            parser.error(f"config file {config_path} must hold a JSON object")

    for key, value in options.items():
        if value is None and key in config:
            options[key] = config[key]
    for key, value in _DEFAULTS.items():
        if options.get(key) is None and key in options:
            options[key] = value

    if "size" in options:
        if options["size"] is None:
            options["size"] = "original" if options.get("mode") == "direct" else "512"
        if str(options["size"]) not in SIZE_CHOICES:
            parser.error(f"--size must be one of {', '.join(SIZE_CHOICES)}")
        options["size"] = options["size"] if options["size"] == "original" else int(options["size"])

    if options.get("backend") == "identity" and options.get("mode") == "direct":
        parser.error("--backend identity only applies to the indirect pipeline")
    if options.get("backend") in ("oracle", "identity") and options.get("model"):
        parser.error("--model conflicts with a non-neural --backend")
    if options.get("backend") == "oracle" and not options.get("annotations"):
        parser.error("--backend oracle requires --annotations")
    if command == "build-dataset" and not (options.get("fddb") or options.get("wider")):
        parser.error("build-dataset needs --fddb and/or --wider")
    if options.get("workers") is not None and options["workers"] < 1:
        parser.error("--workers must be >= 1")

    return JobSpec(command=command, options=options)


def _frame_id_for(path: Path) -> str:
    return path.stem


def _load_annotation_frames(spec) -> list[dataset_mod.AnnotatedFrame]:
    if spec.annotations_format == "wider":
        return dataset_mod.parse_wider(spec.annotations)
    return dataset_mod.parse_fddb(spec.annotations)


def _oracle_annotations(spec, inputs: Sequence[Path]) -> dict[str, FrameAnnotations]:
    """Match annotation records to input files by name (extension ignored)."""
    from PIL import Image as PILImage

    frames = _load_annotation_frames(spec)
    by_id: dict[str, tuple] = {}
    for frame in frames:
        by_id[Path(frame.image_path).stem] = frame.faces
        by_id.setdefault(frame.image_path, frame.faces)
    annotations = {}
    for path in inputs:
        faces = by_id.get(_frame_id_for(path))
        if faces is None:
            continue
        with PILImage.open(path) as img:
            w, h = img.size
        annotations[_frame_id_for(path)] = FrameAnnotations(faces=faces, width=w, height=h)
    return annotations


def _default_model_path(spec) -> Path:
    root = Path(os.environ.get(MODEL_DIR_ENV, "models"))
    if spec.mode == "direct":
        return root / "detector.pt"
    return root / f"blurnet_{spec.size}.pt"


def _build_backends(spec, inputs: Sequence[Path]):
    detector = None
    blurnet = None
    if spec.backend == "neural":
        model = Path(spec.model) if spec.model else _default_model_path(spec)
        if not model.is_file():
            raise RuntimeError(
                f"missing interchange model file {model} for the neural {spec.mode} backend; "
                f"export one with the model-export scripts or pass --model "
                f"(default location: ${MODEL_DIR_ENV}/{_default_model_path(spec).name})"
            )
        if spec.mode == "direct":
            detector = TorchScriptDetector(str(model), input_size=spec.size)
        else:
            blurnet = TorchScriptBlurNet(str(model))
    elif spec.backend == "oracle":
        annotations = _oracle_annotations(spec, inputs)
        rule = SigmaRule(spec.sigma_scale, spec.sigma_min, spec.sigma_max)
        if spec.mode == "direct":
            detector = OracleDetector(annotations)
        else:
            blurnet = OracleBlurNet(annotations, rule)
    else:
        blurnet = IdentityBlurNet()
    return detector, blurnet


def _pipeline_config(spec) -> PipelineConfig:
    return PipelineConfig(
        mode=spec.mode,
        inference_size=spec.size,
        threshold=spec.threshold,
        sigma_rule=SigmaRule(spec.sigma_scale, spec.sigma_min, spec.sigma_max),
        detector_backend=spec.backend,
        blurnet_backend=spec.backend,
        model_path=spec.model,
    )


def run_blur(spec: JobSpec) -> int:
    input_path = Path(spec.input)
    if input_path.is_dir():
        inputs = list_frames(input_path)
        out_dir = Path(spec.output)
        outputs = [out_dir / (p.stem + ".png") for p in inputs]
    elif input_path.is_file():
        inputs = [input_path]
        out = Path(spec.output)
        outputs = [out / (input_path.stem + ".png") if out.suffix.lower() != ".png" else out]
    else:
        raise RuntimeError(f"input not found: {input_path}")
    if not inputs:
        print("no input frames found", file=sys.stderr)
        return 1

    detector, blurnet = _build_backends(spec, inputs)
    cfg = _pipeline_config(spec)

    def work(pair):
        src, dst = pair
        t0 = perf_counter()
        frame = read_image(src)
        results = list(process_sequence([(_frame_id_for(src), frame)], cfg, detector, blurnet))
        result = results[0]
        if result.ok:
            write_png(dst, result.image)
        if spec.verbose >= 1:
            status = "ok" if result.ok else f"FAILED: {result.error}"
            print(f"{src.name} -> {dst.name}: {status} ({(perf_counter() - t0) * 1e3:.1f} ms)")
        return result

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(work, zip(inputs, outputs)))
    else:
        results = [work(pair) for pair in zip(inputs, outputs)]

    failures = [r for r in results if not r.ok]
    for r in failures:
        print(f"error: {r.error}", file=sys.stderr)
    return 1 if failures else 0


def _discover_fddb_files(root: Path) -> list[Path]:
    files = sorted(root.rglob("*ellipse*.txt"))
    if not files and (root / "annotations.txt").is_file():
        files = [root / "annotations.txt"]
    return files


def _discover_wider_files(root: Path, split: str) -> Path | None:
    candidates = [
        root / f"wider_face_{split}_bbx_gt.txt",
        root / "wider_face_split" / f"wider_face_{split}_bbx_gt.txt",
    ]
    for c in candidates:
        if c.is_file():
            return c
    return None


def _wider_image_roots(root: Path, split: str) -> list[Path]:
    return [root, root / "images", root / f"WIDER_{split}" / "images", root / split / "images"]


def _materialize_pairs(frames, roots, out_dir: Path, rule: SigmaRule, verbose: int) -> int:
    written = 0
    for frame in frames:
        path = None
        for root in roots:
            try:
                path = resolve_image_path(root, frame.image_path)
                break
            except FileNotFoundError:
                continue
        if path is None:
            raise RuntimeError(f"image {frame.image_path!r} not found under {roots[0]}")
        image = read_image(path)
        inp, tgt = dataset_mod.build_pair(image, frame, rule)
        rel_in, rel_tgt = dataset_mod.pair_paths(frame)
        write_png(out_dir / rel_in, inp)
        write_png(out_dir / rel_tgt, tgt)
        written += 1
        if verbose >= 1:
            print(f"{frame.image_path}: {len(frame.faces)} faces")
    return written


def run_build_dataset(spec: JobSpec) -> int:
    out_dir = Path(spec.out)
    rule = SigmaRule(scale=spec.sigma_scale)
    fddb_frames: list = []
    wider_train: list = []
    wider_val: list = []

    if spec.fddb:
        fddb_root = Path(spec.fddb)
        files = _discover_fddb_files(fddb_root)
        if not files:
            raise RuntimeError(f"no FDDB annotation files (*ellipse*.txt) under {fddb_root}")
        for f in files:
            fddb_frames.extend(dataset_mod.parse_fddb(f))
        _materialize_pairs(fddb_frames, [fddb_root], out_dir, rule, spec.verbose)
    if spec.wider:
        wider_root = Path(spec.wider)
        found = False
        for split, sink in (("train", wider_train), ("val", wider_val)):
            gt = _discover_wider_files(wider_root, split)
            if gt is None:
                continue
            found = True
            frames = dataset_mod.parse_wider(gt)
            sink.extend(frames)
            _materialize_pairs(frames, _wider_image_roots(wider_root, split), out_dir, rule, spec.verbose)
        if not found:
            raise RuntimeError(f"no wider_face_*_bbx_gt.txt under {wider_root}")

    manifest = dataset_mod.build_split(
        fddb_frames, wider_train, wider_val, seed=spec.seed, val_fraction=spec.val_fraction
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset_mod.write_manifest(manifest, out_dir / "manifest.tsv")
    print(
        f"wrote {len(manifest.entries)} pairs "
        f"(train {manifest.count('train')}, val {manifest.count('val')}) to {out_dir}"
    )
    return 0


def run_bench(spec: JobSpec) -> int:
    frame_paths = list_frames(Path(spec.frames))
    if not frame_paths:
        raise RuntimeError(f"no frames under {spec.frames}")
    if spec.scenario == "preresized" and spec.size == "original":
        raise RuntimeError("--scenario preresized needs a concrete --size")
    cfg = _pipeline_config(spec)
    target = int(cfg.inference_size) if spec.scenario == "preresized" else int(spec.scenario)

    from .imaging import resample

    detector, blurnet = _build_backends(spec, frame_paths)
    frames = []
    for p in frame_paths:
        img = read_image(p)
        if img.shape[:2] != (target, target):
            img = resample(img, target, target)
        frames.append((_frame_id_for(p), img))

    runner = bench_mod.bench_runner(cfg, spec.scenario, detector, blurnet)
    report = bench_mod.measure_fps(
        runner, frames, cfg, spec.scenario, n_frames=spec.n_frames
    )
    print(bench_mod.emit_report([report], json_path=spec.report))
    return 0


def run_evaluate(spec: JobSpec) -> int:
    frames = _load_annotation_frames(spec)
    inputs_dir, outputs_dir = Path(spec.inputs), Path(spec.outputs)
    criterion = bench_mod.SharpnessCriterion(max_energy_ratio=spec.max_ratio)
    audits = []
    for frame in frames:
        try:
            src = resolve_image_path(inputs_dir, frame.image_path)
            dst = resolve_image_path(outputs_dir, Path(frame.image_path).with_suffix(".png"))
        except FileNotFoundError as exc:
            print(f"skipping {frame.image_path}: {exc}", file=sys.stderr)
            continue
        ellipses = [
            f if not isinstance(f, FaceBox) else box_to_ellipse(f) for f in frame.faces
        ]
        audit = bench_mod.count_blurred_faces(
            read_image(src), read_image(dst), ellipses, criterion, frame_id=frame.image_path
        )
        audits.append(audit)
        extra = f" (not assessable: {audit.not_assessable})" if audit.not_assessable else ""
        print(f"{frame.image_path}: {audit.blurred}/{audit.total} blurred{extra}")
    if not audits:
        raise RuntimeError("no frames could be evaluated")
    total = sum(a.total for a in audits)
    blurred = sum(a.blurred for a in audits)
    print(f"total: {blurred}/{total} blurred across {len(audits)} frames")
    if spec.report:
        payload = [
            {
                "frame": a.frame_id,
                "total": a.total,
                "blurred": a.blurred,
                "not_assessable": a.not_assessable,
                "ratios": [r if r is None else float(r) for r in a.ratios],
            }
            for a in audits
        ]
        Path(spec.report).write_text(json.dumps(payload, indent=2))
    return 0


_COMMANDS = {
    "blur": run_blur,
    "build-dataset": run_build_dataset,
    "bench": run_bench,
    "evaluate": run_evaluate,
}


def main(argv: Sequence[str] | None = None) -> int:
    spec = parse_args(argv)
    try:
        return _COMMANDS[spec.command](spec)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
