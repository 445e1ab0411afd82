"""Stage training, full-pipeline inference, evaluation, and report I/O."""
from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import numcore as nc
from .ahqrg import ahqrg_forward, init_ahqrg_weights
from .errors import DimensionError, IngestionError, StateError
from .lightfield import LightField, central_view, extract_view, load_lightfield, psnr
from .refine import epi_loss, init_refine_weights, refine_forward, refine_values
from .ttsr import init_ttsr_weights, ttsr_forward
from .weights import STAGES, StageWeights, load_weights, save_weights

__all__ = [
    "EvalReport",
    "TrainConfig",
    "evaluate_lf",
    "load_dataset",
    "load_stage_weights",
    "parse_config",
    "save_dataset",
    "superresolve_lf",
    "train_stage",
    "write_diagonal_svg",
    "write_loss_log",
    "write_report_csv",
]

_INIT_FNS = {"ahqrg": init_ahqrg_weights, "ttsr": init_ttsr_weights, "lfrefine": init_refine_weights}

# refinement trains on windows of this extent (shared across all 49 views)
_REFINE_CROP = 64


@dataclass
class TrainConfig:
    stage: str
    lr: float = 1e-4
    batch_size: int = 1
    steps: int = 100
    seed: int = 0
    lambda_epi: float = 1.0
    dataset: str | None = None
    checkpoint: str | None = None

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}, expected one of {STAGES}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


def parse_config(path, overrides: dict | None = None) -> TrainConfig:
    """Read key=value lines (UTF-8, # comments); unknown keys are errors."""
    known = {f.name: f.type for f in fields(TrainConfig)}
    casts = {"lr": float, "lambda_epi": float, "batch_size": int, "steps": int, "seed": int}
    raw: dict = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        raw[key] = casts.get(key, str)(value)
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    if "stage" not in raw:
        raise ValueError(f"{path}: config must set 'stage'")
    return TrainConfig(**raw)


@dataclass
class EvalReport:
    method: str
    per_view_psnr: np.ndarray  # [U,V] in dB

    @property
    def diagonal(self) -> np.ndarray:
        return np.array([self.per_view_psnr[i, i] for i in range(min(self.per_view_psnr.shape))])


# ------------------------------------------------------------ dataset I/O

def save_dataset(pairs, root) -> None:
    from .lightfield import save_lightfield

    root = Path(root)
    for k, (hr, lr) in enumerate(pairs):
        save_lightfield(hr, root / f"scene_{k}" / "hr")
        save_lightfield(lr, root / f"scene_{k}" / "lr")


def load_dataset(root):
    """Load scene_{k}/{hr,lr} directories, ordered by scene index."""
    root = Path(root)
    scenes = sorted(
        (p for p in root.iterdir() if p.is_dir() and p.name.startswith("scene_")),
        key=lambda p: int(p.name.split("_")[1]),
    )
    if not scenes:
        raise IngestionError(f"no scene_k directories under {root}")
    return [(load_lightfield(p / "hr"), load_lightfield(p / "lr")) for p in scenes]


# ------------------------------------------------------------- inference

def load_stage_weights(weights_dir) -> dict[str, StageWeights]:
    out = {}
    for stage in STAGES:
        path = Path(weights_dir) / f"{stage}.lfw"
        if path.exists():
            out[stage] = load_weights(path)
    return out


def superresolve_lf(lr_lf: LightField, weights: dict[str, StageWeights]):
    """Run all three stages: returns (reference, ttsr_lf, refined_lf)."""
    for stage in STAGES:
        if stage not in weights:
            raise StateError(f"missing weights for stage '{stage}'")
    reference, ttsr_lf = _reference_and_ttsr(lr_lf, weights)
    refined_lf = refine_forward(ttsr_lf, weights["lfrefine"])
    return reference, ttsr_lf, refined_lf


def _reference_and_ttsr(lr_lf: LightField, weights: dict[str, StageWeights]):
    reference = ahqrg_forward(lr_lf, weights["ahqrg"])
    h, w = lr_lf.H, lr_lf.W
    sr = np.empty((lr_lf.U, lr_lf.V, 4 * h, 4 * w, lr_lf.C), dtype=lr_lf.values.data.dtype)
    for u in range(lr_lf.U):
        for v in range(lr_lf.V):
            view = ttsr_forward(extract_view(lr_lf, u, v), reference, weights["ttsr"])
            sr[u, v] = view.data.transpose(1, 2, 0)
    return reference, LightField(sr)


def bicubic_lf(lr_lf: LightField, factor: int = 4) -> LightField:
    """Per-view bicubic upsampling, the paper's baseline."""
    out = np.empty(
        (lr_lf.U, lr_lf.V, factor * lr_lf.H, factor * lr_lf.W, lr_lf.C),
        dtype=lr_lf.values.data.dtype,
    )
    for u in range(lr_lf.U):
        for v in range(lr_lf.V):
            up = nc.bicubic_resize(extract_view(lr_lf, u, v), factor)
            out[u, v] = np.clip(up.data, 0.0, 1.0).transpose(1, 2, 0)
    return LightField(out)


# -------------------------------------------------------------- training

def _l1(pred, target):
    return nc.mean(nc.abs_(nc.sub(pred, target)))


def _require_upstream(stage: str, weights: dict, needed: tuple):
    for dep in needed:
        if dep not in weights:
            raise StateError(f"training stage '{stage}' needs upstream weights for '{dep}'")


def _cache_uint8(arr: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)


def _uncache(arr: np.ndarray) -> np.ndarray:
    return arr.astype(nc.default_dtype()) / nc.default_dtype()(255.0)


def train_stage(config: TrainConfig, dataset, upstream: dict[str, StageWeights] | None = None):
    """Train one stage; returns (weights, per-step loss list).

    dataset is a list of (hr, lr) LightField pairs or a directory path.
    Upstream stages must already be trained: ttsr consumes ahqrg
    references, lfrefine consumes ttsr outputs, both precomputed once and
    frozen. lfrefine steps run on random 64-pixel crops shared across all
    views. Deterministic given config.seed.
    """
    if isinstance(dataset, (str, Path)):
        dataset = load_dataset(dataset)
    if not dataset:
        raise ValueError("empty dataset")
    upstream = dict(upstream or {})
    if config.checkpoint:
        for stage, w in load_stage_weights(config.checkpoint).items():
            upstream.setdefault(stage, w)

    rng = np.random.default_rng(config.seed)
    ws = _INIT_FNS[config.stage](rng)
    n = len(dataset)

    if config.stage == "ahqrg":
        targets = [central_view(hr) for hr, _ in dataset]

        def step_loss(idx):
            total = None
            for i in idx:
                out = ahqrg_forward(dataset[i][1], ws)
                term = _l1(out, targets[i])
                total = term if total is None else nc.add(total, term)
            return nc.scale(total, 1.0 / len(idx))

    elif config.stage == "ttsr":
        _require_upstream("ttsr", upstream, ("ahqrg",))
        refs = [ahqrg_forward(lr, upstream["ahqrg"]) for _, lr in dataset]

        def step_loss(idx):
            total = None
            for i in idx:
                hr, lr = dataset[i]
                u, v = int(rng.integers(0, lr.U)), int(rng.integers(0, lr.V))
                out = ttsr_forward(extract_view(lr, u, v), refs[i], ws)
                term = _l1(out, extract_view(hr, u, v))
                total = term if total is None else nc.add(total, term)
            return nc.scale(total, 1.0 / len(idx))

    else:  # lfrefine
        _require_upstream("lfrefine", upstream, ("ahqrg", "ttsr"))
        # ttsr outputs are cached 8-bit (their PNG-persisted form) so 64
        # cached HR light fields stay within memory
        inputs = []
        for _, lr in dataset:
            _, ttsr_lf = _reference_and_ttsr(lr, upstream)
            inputs.append(_cache_uint8(ttsr_lf.values.data))

        def step_loss(idx):
            total = None
            for i in idx:
                # random crops keep the joint 49-view step affordable on one
                # core; EPI geometry survives cropping (same disparity lines)
                hh, ww = inputs[i].shape[2], inputs[i].shape[3]
                cs = min(_REFINE_CROP, hh, ww)
                y0 = int(rng.integers(0, hh - cs + 1))
                x0 = int(rng.integers(0, ww - cs + 1))
                window = (slice(None), slice(None), slice(y0, y0 + cs), slice(x0, x0 + cs))
                pred = refine_values(nc.wrap(_uncache(inputs[i][window]), taped=False), ws)
                gt = nc.wrap(np.ascontiguousarray(dataset[i][0].values.data[window]), taped=False)
                term = _l1(pred, gt)
                if config.lambda_epi != 0.0:
                    term = nc.add(term, nc.scale(epi_loss(pred, gt), config.lambda_epi))
                total = term if total is None else nc.add(total, term)
            return nc.scale(total, 1.0 / len(idx))

    log = []
    for t in range(1, config.steps + 1):
        idx = rng.integers(0, n, size=config.batch_size)
        with nc.DiffRecord() as rec:
            loss = step_loss(idx)
            nc.backward(loss, rec)
        nc.adam_step(ws.entries, ws.optimizer_state, lr=config.lr, t=t)
        nc.zero_grads(ws.entries)
        log.append(loss.item())

    if config.checkpoint:
        out_dir = Path(config.checkpoint)
        out_dir.mkdir(parents=True, exist_ok=True)
        save_weights(ws, out_dir / f"{config.stage}.lfw")
    return ws, log


def write_loss_log(log, path) -> None:
    lines = ["step,loss"]
    lines += [f"{i + 1},{v:.9e}" for i, v in enumerate(log)]
    _atomic_write_text(Path(path), "\n".join(lines) + "\n")


# ------------------------------------------------------------ evaluation

def evaluate_lf(pred: LightField, gt: LightField, label: str) -> EvalReport:
    """Per-view RGB-mean PSNR between two light fields."""
    if pred.shape != gt.shape:
        raise DimensionError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    mat = np.empty((pred.U, pred.V), dtype=np.float64)
    for u in range(pred.U):
        for v in range(pred.V):
            mat[u, v] = psnr(pred.values.data[u, v], gt.values.data[u, v])
    return EvalReport(method=label, per_view_psnr=mat)


_CSV_HEADER = [
    "# psnr=rgb-mean peak=1.0 cap_db=100.0",
    "# corpus=synthetic (held-out scenes stand in for the unnamed source dataset)",
]


def write_report_csv(reports, path) -> None:
    """method,u,v,psnr_db rows for every view, plus a companion
    *_diagonal.csv restricted to the views (i,i)."""
    path = Path(path)
    main = list(_CSV_HEADER) + ["method,u,v,psnr_db"]
    diag = list(_CSV_HEADER) + ["method,u,v,psnr_db"]
    for rep in reports:
        u_n, v_n = rep.per_view_psnr.shape
        for u in range(u_n):
            for v in range(v_n):
                row = f"{rep.method},{u},{v},{rep.per_view_psnr[u, v]:.6f}"
                main.append(row)
                if u == v:
                    diag.append(row)
    _atomic_write_text(path, "\n".join(main) + "\n")
    _atomic_write_text(path.with_name(path.stem + "_diagonal" + path.suffix), "\n".join(diag) + "\n")


def mean_reports(reports: list[EvalReport], method: str) -> EvalReport:
    """Average per-view PSNR matrices across scenes."""
    if not reports:
        raise ValueError("no reports to average")
    stack = np.stack([r.per_view_psnr for r in reports])
    return EvalReport(method=method, per_view_psnr=stack.mean(axis=0))


# ------------------------------------------------------------- plotting

def write_diagonal_svg(reports, path) -> None:
    """Line chart of diagonal-view PSNR per method, one polyline each."""
    width, height, margin = 640, 400, 56
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]
    diags = [(rep.method, rep.diagonal) for rep in reports]
    if not diags:
        raise ValueError("no reports to plot")
    all_vals = np.concatenate([d for _, d in diags])
    lo = float(np.floor(all_vals.min() - 0.5))
    hi = float(np.ceil(all_vals.max() + 0.5))
    n = len(diags[0][1])

    def sx(i):
        return margin + i * (width - 2 * margin) / max(n - 1, 1)

    def sy(val):
        return height - margin - (val - lo) * (height - 2 * margin) / (hi - lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle">diagonal view index (i,i)</text>',
        f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {height / 2:.1f})">PSNR (dB)</text>',
    ]
    for i in range(n):
        parts.append(
            f'<text x="{sx(i):.1f}" y="{height - margin + 16}" text-anchor="middle">{i}</text>'
        )
    ticks = 5
    for k in range(ticks + 1):
        val = lo + k * (hi - lo) / ticks
        parts.append(f'<text x="{margin - 6}" y="{sy(val) + 4:.1f}" text-anchor="end">{val:.1f}</text>')
        parts.append(
            f'<line x1="{margin}" y1="{sy(val):.1f}" x2="{width - margin}" y2="{sy(val):.1f}" '
            f'stroke="#dddddd"/>'
        )
    for j, (method, diag) in enumerate(diags):
        color = colors[j % len(colors)]
        pts = " ".join(f"{sx(i):.1f},{sy(val):.1f}" for i, val in enumerate(diag))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        for i, val in enumerate(diag):
            parts.append(f'<circle cx="{sx(i):.1f}" cy="{sy(val):.1f}" r="3" fill="{color}"/>')
        parts.append(
            f'<text x="{margin + 10}" y="{margin + 16 * j + 12}" fill="{color}">{method}</text>'
        )
    parts.append("</svg>")
    _atomic_write_text(Path(path), "\n".join(parts) + "\n")


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)
