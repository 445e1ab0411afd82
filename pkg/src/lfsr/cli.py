"""Command-line entry points.

Subcommands: synth, train, superresolve, eval, plot-diagonal. All file
outputs are deterministic given the seed and inputs.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import numcore as nc
from . import pipeline
from .errors import FormatError, IngestionError, StateError
from .lightfield import load_lightfield, save_lightfield
from .pipeline import EvalReport, TrainConfig
from .synthdata import make_dataset


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="override the random seed")
    p.add_argument("--precision", choices=("f32", "f64"), default="f32")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lfsr", description="light-field 4x super-resolution")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a synthetic dataset of scene_{k}/{hr,lr} directories")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--scenes", type=int, required=True)
    p.add_argument("--geometry", default="128x128", help="HR extents, e.g. 128x128")
    _add_common(p)

    p = sub.add_parser("train", help="train one pipeline stage")
    p.add_argument("--stage", required=True, choices=("ahqrg", "ttsr", "lfrefine"))
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--dataset", default=None, help="dataset directory (overrides config)")
    p.add_argument("--weights-dir", required=True, help="checkpoint directory")
    _add_common(p)

    p = sub.add_parser("superresolve", help="run the full pipeline on one LR light field")
    p.add_argument("--dataset", required=True, help="LR light-field view directory")
    p.add_argument("--weights-dir", required=True)
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)

    p = sub.add_parser("eval", help="PSNR comparison (bicubic / ttsr / refined) on a dataset")
    p.add_argument("--dataset", required=True, help="dataset directory of scene_{k}/{hr,lr}")
    p.add_argument("--weights-dir", required=True)
    p.add_argument("--out", required=True, help="per-view CSV path (diagonal companion derived)")
    _add_common(p)

    p = sub.add_parser("plot-diagonal", help="diagonal CSV + SVG chart from a per-view CSV")
    p.add_argument("--dataset", required=True, help="per-view CSV produced by eval")
    p.add_argument("--out", required=True, help="SVG path")
    return ap


def _cmd_synth(args) -> int:
    h, _, w = args.geometry.partition("x")
    seed = args.seed if args.seed is not None else 0
    pairs = make_dataset(args.scenes, (int(h), int(w)), seed)
    pipeline.save_dataset(pairs, args.out)
    print(f"wrote {len(pairs)} scenes to {args.out}")
    return 0


def _cmd_train(args) -> int:
    overrides = {"stage": args.stage, "dataset": args.dataset, "checkpoint": args.weights_dir}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.config:
        config = pipeline.parse_config(args.config, overrides)
    else:
        config = TrainConfig(**{k: v for k, v in overrides.items() if v is not None})
    if not config.dataset:
        raise ValueError("no dataset given (config key 'dataset' or --dataset)")
    _, log = pipeline.train_stage(config, config.dataset)
    log_path = Path(args.weights_dir) / f"{config.stage}_loss.csv"
    pipeline.write_loss_log(log, log_path)
    print(f"trained {config.stage}: {config.steps} steps, final loss {log[-1]:.6f}")
    print(f"weights: {Path(args.weights_dir) / (config.stage + '.lfw')}")
    print(f"loss log: {log_path}")
    return 0


def _save_view_png(tensor, path: Path) -> None:
    img = np.rint(np.clip(tensor.data, 0.0, 1.0) * 255.0).astype(np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img.transpose(1, 2, 0), mode="RGB").save(path)


def _cmd_superresolve(args) -> int:
    lr_lf = load_lightfield(args.dataset)
    weights = pipeline.load_stage_weights(args.weights_dir)
    reference, ttsr_lf, refined_lf = pipeline.superresolve_lf(lr_lf, weights)
    out = Path(args.out)
    _save_view_png(reference, out / "reference.png")
    save_lightfield(ttsr_lf, out / "ttsr")
    save_lightfield(refined_lf, out / "refined")
    print(f"wrote reference.png, ttsr/, refined/ under {out}")
    return 0


def _cmd_eval(args) -> int:
    dataset = pipeline.load_dataset(args.dataset)
    weights = pipeline.load_stage_weights(args.weights_dir)
    per_method: dict[str, list] = {"bicubic": [], "ttsr": [], "refined": []}
    for hr, lr in dataset:
        _, ttsr_lf, refined_lf = pipeline.superresolve_lf(lr, weights)
        per_method["bicubic"].append(pipeline.evaluate_lf(pipeline.bicubic_lf(lr), hr, "bicubic"))
        per_method["ttsr"].append(pipeline.evaluate_lf(ttsr_lf, hr, "ttsr"))
        per_method["refined"].append(pipeline.evaluate_lf(refined_lf, hr, "refined"))
    reports = [pipeline.mean_reports(reps, method) for method, reps in per_method.items()]
    pipeline.write_report_csv(reports, args.out)
    for rep in reports:
        print(f"{rep.method}: mean {rep.per_view_psnr.mean():.3f} dB over {len(dataset)} scenes")
    print(f"report: {args.out}")
    return 0


def read_report_csv(path) -> list[EvalReport]:
    """Inverse of write_report_csv's main file (comments tolerated)."""
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("method,"):
            continue
        method, u, v, val = line.split(",")
        rows.append((method, int(u), int(v), float(val)))
    if not rows:
        raise FormatError(f"no data rows in {path}")
    methods = []
    for method, *_ in rows:
        if method not in methods:
            methods.append(method)
    u_n = max(r[1] for r in rows) + 1
    v_n = max(r[2] for r in rows) + 1
    reports = []
    for method in methods:
        mat = np.full((u_n, v_n), np.nan)
        for m, u, v, val in rows:
            if m == method:
                mat[u, v] = val
        reports.append(EvalReport(method=method, per_view_psnr=mat))
    return reports


def _cmd_plot_diagonal(args) -> int:
    reports = read_report_csv(args.dataset)
    out = Path(args.out)
    diag_csv = out.with_name(out.stem + "_diagonal.csv")
    lines = ["method,u,v,psnr_db"]
    for rep in reports:
        for i, val in enumerate(rep.diagonal):
            lines.append(f"{rep.method},{i},{i},{val:.6f}")
    pipeline._atomic_write_text(diag_csv, "\n".join(lines) + "\n")
    pipeline.write_diagonal_svg(reports, out)
    print(f"wrote {diag_csv} and {out}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "superresolve": _cmd_superresolve,
    "eval": _cmd_eval,
    "plot-diagonal": _cmd_plot_diagonal,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "precision", None):
        nc.set_precision(args.precision)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, StateError, FormatError, IngestionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
