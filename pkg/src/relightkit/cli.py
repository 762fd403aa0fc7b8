"""Command-line front end.

Subcommands: synth, train-teacher, distill, fit-ptm, fit-hsh, relight,
evaluate, speed, study-subsample, export. Every run writes a run.json
capturing the resolved options, so re-running with --config run.json
reproduces the same outputs. Exit codes: 0 success, 2 usage error,
1 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np
from PIL import Image

from . import bench, classical, codec, neural, nn, report, synth
from .errors import RelightError
from .metrics import QualityReport
from .mlic import (
    MLIC,
    LightDirection,
    SplitSpec,
    load_mlic,
    read_lp,
    save_mlic,
    split_by_elevation,
    write_lp,
)

DEFAULT_TEST_ELEVATIONS = "20,40,60,80"


def _parse_floats(text: str) -> list[float]:
    """Comma-separated floats; fraction syntax like 1/64 is accepted."""
    values = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if "/" in token:
            num, den = token.split("/", 1)
            values.append(float(num) / float(den))
        else:
            values.append(float(token))
    return values


def _parse_ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _find_lp(directory: Path) -> Path:
    preferred = directory / "lights.lp"
    if preferred.is_file():
        return preferred
    candidates = sorted(directory.glob("*.lp"))
    if not candidates:
        raise RelightError(f"no .lp file in {directory}")
    return candidates[0]


def _load_data(args) -> tuple[MLIC, SplitSpec]:
    data_dir = Path(args.data)
    mlic = load_mlic(data_dir, _find_lp(data_dir))
    if args.test_elevations.lower() in ("", "none"):
        split = SplitSpec.all_train(mlic.n_lights)
    else:
        split = split_by_elevation(
            mlic, _parse_floats(args.test_elevations), args.elevation_tolerance
        )
    return mlic, split


def _train_config(args) -> nn.TrainConfig:
    return nn.TrainConfig(
        batch_size=args.batch_size,
        lr=args.lr,
        max_epochs=args.epochs,
        patience=args.patience,
        patience_steps=args.patience_steps,
        seed=args.seed,
        lr_floor=args.lr_floor,
    )


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _write_run_json(args, out_dir: Path) -> None:
    options = {}
    for key, value in sorted(vars(args).items()):
        if key in ("func", "config"):
            continue
        options[key] = _jsonable(value)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {"subcommand": args.subcommand, "options": options}
    (out_dir / "run.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("", encoding="utf-8")
        return
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def _save_png(path: Path, image: np.ndarray) -> None:
    data = np.clip(np.round(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path)


# --- subcommands -----------------------------------------------------------


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    train, test = synth.default_light_protocol()
    if args.lights == "dome":
        lights = train
    elif args.lights == "test":
        lights = test
    else:
        lights = np.concatenate([train, test], axis=0)
    scene = synth.make_scene(args.scene, size=args.size, seed=args.seed)
    mlic = synth.render_mlic(scene, lights)
    save_mlic(mlic, out_dir)
    _write_run_json(args, out_dir)
    print(f"wrote {mlic.n_lights} frames ({args.size}x{args.size}) to {out_dir}")
    return 0


def _export_model(model, mlic, split, out_dir: Path, method: str) -> None:
    packed_dir = out_dir / "relightable"
    bench.pack_model(model, mlic, split, packed_dir, method)
    print(f"packed relightable file: {packed_dir}")


def cmd_train_teacher(args) -> int:
    mlic, split = _load_data(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    enc = neural.EncoderSpec(hidden_layers=6 if args.arch == "deep" else 3)
    dec = neural.DecoderSpec(args.width)
    model, result, elapsed = bench.train_teacher_pipeline(
        mlic,
        split,
        encoder_spec=enc,
        decoder_spec=dec,
        fraction=args.fraction,
        cfg=_train_config(args),
        sampling=args.sampling,
        step=args.step,
    )
    codec.write_checkpoint(model, out_dir / "checkpoint.json", method="neuralrti")
    _export_model(model, mlic, split, out_dir, "neuralrti")
    _write_run_json(args, out_dir)
    print(
        f"teacher trained: {result.epochs_run} epochs in {elapsed:.1f}s, "
        f"best val loss {result.best_val_loss:.3e}"
    )
    return 0


def cmd_distill(args) -> int:
    teacher = codec.read_checkpoint(args.teacher)
    mlic, split = _load_data(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    student, result, elapsed = bench.distill_pipeline(
        teacher,
        mlic,
        split,
        student_width=args.width,
        alpha=args.alpha,
        fraction=args.fraction,
        cfg=_train_config(args),
        copy_encoder=args.copy_encoder,
        sampling=args.sampling,
        step=args.step,
    )
    codec.write_checkpoint(student, out_dir / "checkpoint.json", method="disk-neuralrti")
    _export_model(student, mlic, split, out_dir, "disk-neuralrti")
    _write_run_json(args, out_dir)
    w, b = neural.decoder_param_count(student.latent_dim, args.width)
    print(
        f"student distilled: {result.epochs_run} epochs in {elapsed:.1f}s, "
        f"decoder parameters {w} weights + {b} biases = {w + b}"
    )
    return 0


def cmd_fit_ptm(args) -> int:
    mlic, split = _load_data(args)
    out_dir = Path(args.out)
    pixel_map = classical.fit_ptm(mlic, split)
    codec.write_classical_map(pixel_map, out_dir)
    _write_run_json(args, out_dir)
    print(f"ptm-lrgb map written to {out_dir}")
    return 0


def cmd_fit_hsh(args) -> int:
    mlic, split = _load_data(args)
    out_dir = Path(args.out)
    pixel_map = classical.fit_hsh(mlic, split, order=args.order)
    codec.write_classical_map(pixel_map, out_dir)
    _write_run_json(args, out_dir)
    print(f"hsh-{args.order} map written to {out_dir}")
    return 0


def cmd_relight(args) -> int:
    source = codec.read_any(args.file)
    out = Path(args.out)
    if args.lights:
        names, lights = read_lp(args.lights)
        out.mkdir(parents=True, exist_ok=True)
        for name, vec in zip(names, lights):
            img = bench.decode_source(
                source, LightDirection.from_array(vec), scale=args.scale
            )
            _save_png(out / name, img)
        write_lp(out / "lights.lp", names, lights)
        _write_run_json(args, out)
        print(f"relit {len(names)} directions into {out}")
        return 0
    if args.lx is None or args.ly is None:
        raise RelightError("either --lights or both --lx and --ly are required")
    lz_sq = 1.0 - args.lx**2 - args.ly**2
    if lz_sq < 0:
        raise RelightError("--lx/--ly must satisfy lx^2 + ly^2 <= 1")
    light = LightDirection(args.lx, args.ly, float(np.sqrt(lz_sq)))
    img = bench.decode_source(source, light, scale=args.scale)
    out.parent.mkdir(parents=True, exist_ok=True)
    _save_png(out, img)
    print(f"wrote {out}")
    return 0


def _matched_gt_predictions(args, gt: MLIC, split: SplitSpec):
    """Yield (method name, predictions over split.test_indices)."""
    test_lights = gt.lights[split.test_indices]
    if args.pred:
        pred_dir = Path(args.pred)
        pred = load_mlic(pred_dir, _find_lp(pred_dir))
        if pred.n_lights != split.test_indices.size:
            raise RelightError(
                f"{pred.n_lights} predicted frames for "
                f"{split.test_indices.size} test lights"
            )
        if not np.allclose(pred.lights, test_lights, atol=1e-5):
            raise RelightError("predicted light directions differ from ground truth")
        yield pred_dir.name or "pred", list(pred.images)
    for file_dir in args.file or []:
        source = codec.read_any(file_dir)
        method = getattr(source, "method", Path(file_dir).name)
        predictions = [
            bench.decode_source(source, LightDirection.from_array(v))
            for v in test_lights
        ]
        yield method, predictions


def cmd_evaluate(args) -> int:
    if not args.pred and not args.file:
        raise RelightError("evaluate needs --pred and/or at least one --file")
    gt_dir = Path(args.gt)
    gt = load_mlic(gt_dir, _find_lp(gt_dir))
    if args.test_elevations.lower() in ("", "none"):
        split = SplitSpec(np.array([], dtype=np.intp), np.arange(gt.n_lights))
    else:
        split = split_by_elevation(
            gt, _parse_floats(args.test_elevations), args.elevation_tolerance
        )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    reports: dict[str, QualityReport] = {}
    for method, predictions in _matched_gt_predictions(args, gt, split):
        rep = bench.evaluate_predictions(gt, split, predictions)
        reports[method] = rep
        stem = method.replace("/", "_")
        rep.write_csv(out_dir / f"metrics_{stem}.csv")
        rep.write_json(out_dir / f"metrics_{stem}.json")
        print(
            f"{method}: PSNR {rep.mean_psnr:.2f} dB, SSIM {rep.mean_ssim:.4f}, "
            f"deltaE {rep.mean_delta_e:.2f}"
        )
    report.save_quality_figure(reports, out_dir / "metrics.png")
    _write_run_json(args, out_dir)
    return 0


def cmd_speed(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    pixel_counts = _parse_ints(args.pixels)
    rows = []
    for file_dir in args.file:
        packed = codec.read_relightable(file_dir)
        rows.extend(bench.measure_throughput(packed, pixel_counts, args.repeats))
    dict_rows = [asdict(r) for r in rows]
    _write_csv(out_dir / "throughput.csv", dict_rows)
    (out_dir / "throughput.json").write_text(
        json.dumps(dict_rows, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    report.save_throughput_figure(rows, out_dir / "throughput.png")
    _write_run_json(args, out_dir)
    for row in rows:
        print(
            f"{row.method}: {row.pixels} px -> {row.pixels_per_second:,.0f} px/s "
            f"(median of {args.repeats})"
        )
    return 0


def cmd_study_subsample(args) -> int:
    mlic, split = _load_data(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    fractions = _parse_floats(args.fractions)
    enc = neural.EncoderSpec(hidden_layers=6 if args.arch == "deep" else 3)
    rows = bench.study_subsample(
        mlic,
        split,
        fractions,
        encoder_spec=enc,
        student_width=args.width,
        alpha=args.alpha,
        cfg=_train_config(args),
        sampling=args.sampling,
    )
    dict_rows = [asdict(r) | {"total_train_s": r.total_train_s} for r in rows]
    _write_csv(out_dir / "subsample.csv", dict_rows)
    (out_dir / "subsample.json").write_text(
        json.dumps(dict_rows, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    report.save_subsample_figure(rows, out_dir / "subsample.png")
    _write_run_json(args, out_dir)
    for row in rows:
        print(
            f"fraction {row.fraction:.4f}: teacher {row.teacher_psnr:.2f} dB / "
            f"student {row.student_psnr:.2f} dB, "
            f"train {row.total_train_s:.1f}s"
        )
    return 0


def cmd_export(args) -> int:
    model = codec.read_checkpoint(args.checkpoint)
    mlic, split = _load_data(args)
    out_dir = Path(args.out)
    packed = bench.pack_model(model, mlic, split, out_dir, args.method)
    _write_run_json(args, out_dir)
    print(
        f"exported {packed.method} file {packed.width}x{packed.height} "
        f"(K={packed.k}) to {out_dir}"
    )
    return 0


# --- parser ----------------------------------------------------------------


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0, help="global RNG seed")
    parser.add_argument("--out", type=Path, required=True, help="output path")
    parser.add_argument(
        "--config", type=Path, default=None, help="JSON file of option defaults"
    )


def _add_data_options(parser):
    parser.add_argument("--data", type=Path, required=True, help="MLIC directory")
    parser.add_argument(
        "--test-elevations",
        default=DEFAULT_TEST_ELEVATIONS,
        help="comma list of held-out elevations in degrees, or 'none'",
    )
    parser.add_argument("--elevation-tolerance", type=float, default=5.0)


def _add_train_options(parser):
    parser.add_argument("--fraction", type=float, default=1.0)
    parser.add_argument(
        "--sampling", choices=["uniform_random", "regular_grid"],
        default="uniform_random",
    )
    parser.add_argument("--step", type=int, default=None, help="grid sampling step")
    parser.add_argument("--epochs", type=int, default=150)
    parser.add_argument("--patience", type=int, default=15)
    parser.add_argument(
        "--patience-steps", type=int, default=None,
        help="early-stop staleness budget in optimizer steps (overrides --patience)",
    )
    parser.add_argument("--batch-size", type=int, default=64)
    parser.add_argument("--lr", type=float, default=0.01)
    parser.add_argument(
        "--lr-floor", type=float, default=1.0,
        help="cosine-anneal the rate down to lr * floor (1.0 = constant)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relightkit",
        description="Train, distill, fit, pack, and benchmark relightable images.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synth", help="render a synthetic multi-light collection")
    _add_common(p)
    p.add_argument("--scene", choices=list(synth.SCENE_NAMES), default="mixed")
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--lights", choices=["both", "dome", "test"], default="both")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-teacher", help="train a teacher autoencoder")
    _add_common(p)
    _add_data_options(p)
    _add_train_options(p)
    p.add_argument("--arch", choices=["basic", "deep"], default="deep")
    p.add_argument("--width", type=int, default=50, help="decoder layer width")
    p.set_defaults(func=cmd_train_teacher)

    p = sub.add_parser("distill", help="distill a lightweight student decoder")
    _add_common(p)
    _add_data_options(p)
    _add_train_options(p)
    p.add_argument("--teacher", type=Path, required=True, help="teacher checkpoint")
    p.add_argument("--width", type=int, default=20, help="student decoder width")
    p.add_argument("--alpha", type=float, default=0.6)
    p.add_argument("--copy-encoder", action="store_true")
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("fit-ptm", help="fit the LRGB polynomial baseline")
    _add_common(p)
    _add_data_options(p)
    p.set_defaults(func=cmd_fit_ptm)

    p = sub.add_parser("fit-hsh", help="fit the hemispherical-harmonics baseline")
    _add_common(p)
    _add_data_options(p)
    p.add_argument("--order", type=int, default=3)
    p.set_defaults(func=cmd_fit_hsh)

    p = sub.add_parser("relight", help="decode a packed file under new lights")
    _add_common(p)
    p.add_argument("--file", type=Path, required=True, help="packed model directory")
    p.add_argument("--lx", type=float, default=None)
    p.add_argument("--ly", type=float, default=None)
    p.add_argument("--lights", type=Path, default=None, help=".lp of directions")
    p.add_argument("--scale", type=int, default=1, help="resolution divisor")
    p.set_defaults(func=cmd_relight)

    p = sub.add_parser("evaluate", help="score relights against ground truth")
    _add_common(p)
    p.add_argument("--gt", type=Path, required=True, help="ground-truth MLIC dir")
    p.add_argument("--pred", type=Path, default=None, help="predicted MLIC dir")
    p.add_argument(
        "--file", type=Path, action="append", default=None,
        help="packed model to decode and score (repeatable)",
    )
    p.add_argument(
        "--test-elevations", default="none",
        help="score only gt lights near these elevations ('none' = all)",
    )
    p.add_argument("--elevation-tolerance", type=float, default=5.0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("speed", help="measure CPU decode throughput")
    _add_common(p)
    p.add_argument(
        "--file", type=Path, action="append", required=True,
        help="packed relightable directory (repeatable)",
    )
    p.add_argument("--pixels", default="1000000", help="comma list of pixel counts")
    p.add_argument("--repeats", type=int, default=5)
    p.set_defaults(func=cmd_speed)

    p = sub.add_parser(
        "study-subsample", help="quality/time table across training fractions"
    )
    _add_common(p)
    _add_data_options(p)
    _add_train_options(p)
    p.add_argument("--fractions", default="1/64,1/16,1/4,1")
    p.add_argument("--arch", choices=["basic", "deep"], default="deep")
    p.add_argument("--width", type=int, default=20)
    p.add_argument("--alpha", type=float, default=0.6)
    # study protocol: a step-based staleness budget with a high epoch
    # ceiling, so every fraction trains to its own convergence
    p.set_defaults(func=cmd_study_subsample, epochs=600, patience_steps=2500)

    p = sub.add_parser("export", help="pack a checkpoint into a relightable file")
    _add_common(p)
    _add_data_options(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument(
        "--method", choices=list(codec.NEURAL_METHODS), default="neuralrti"
    )
    p.set_defaults(func=cmd_export)

    return parser


def _apply_config(parser, argv) -> None:
    """Pre-parse --config and turn its entries into subparser defaults.

    A run.json (with its "options" block) or any flat JSON dict works;
    options supplied by the config stop being required, and explicit
    command-line flags still win.
    """
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path, default=None)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    obj = json.loads(Path(known.config).read_text(encoding="utf-8"))
    options = obj.get("options", obj)
    defaults = {
        key.replace("-", "_"): value
        for key, value in options.items()
        if key not in ("func", "subcommand")
    }
    for action in parser._subparsers._group_actions:
        for sub in action.choices.values():
            sub.set_defaults(**defaults)
            for act in sub._actions:
                if act.dest in defaults:
                    act.required = False


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except RelightError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
