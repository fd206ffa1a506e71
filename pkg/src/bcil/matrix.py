"""The full study: demonstrations, five model configurations, autonomous
evaluation over a parameter grid, and the success-rate and loss-curve tables.

Experiment specs are INI files::

    [experiment]
    task = draw
    seed = 0
    demo_trials = 2
    eval_trials = 3
    layers = 6            ; several values ("2, 4") run every model at each depth
    epochs = 200

    [train_grid]
    angle_deg = 0, 20, 40

    [eval_grid]
    angle_deg = -30, -20, -10, 0, 10, 20, 30, 40, 50, 60, 70, 80
    shift = -0.05, 0, 0.05

The first key of ``[eval_grid]`` indexes the table columns; the remaining keys
label the reference lines (rows of each model block).
"""

from __future__ import annotations

import configparser
import csv
import itertools
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .autonomy import AutonomyConfig, run_autonomous
from .episode import downsample, save_episode
from .errors import BcilError, Malformed, NoCycles
from .metrics import metric_corridor, metric_cycle_variance, metric_open_loop
from .seqmodel import ModelConfig, save_model, train
from .tasks import make_task
from .teleop import run_demo

# (variant, autoregressive) in table order
MODEL_CONFIGS = (("S2S", False), ("S2S", True), ("S2M", False), ("SM2SM", False), ("SM2SM", True))

EVAL_DURATION = {"draw": 3.0, "erase": 8.0, "write": 22.0, "free": 3.0}
OPEN_LOOP_HORIZON = 100


def _floats(text: str) -> list:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            out.append(float(item))
        except ValueError:
            out.append(item)
    return out


@dataclass(frozen=True)
class ExperimentSpec:
    task: str
    train_grid: dict
    eval_grid: dict
    seed: int = 0
    demo_trials: int = 2
    eval_trials: int = 3
    demo_duration: float | None = None
    eval_duration: float | None = None
    layers: tuple = (6,)
    units: int = 50
    window: int = 150
    batch: int = 100
    epochs: int = 200
    epochs_ar: int | None = None
    lr: float = 1e-3
    ar_period: int = 10
    save_episodes: bool = False

    def __post_init__(self):
        if self.task not in EVAL_DURATION:
            raise ValueError(f"unknown task {self.task!r}")
        if not self.train_grid:
            raise ValueError("the training grid is empty")
        for cell in self.train_cells():
            if cell not in self.eval_cells():
                raise ValueError(f"training cell {cell} is missing from the evaluation grid")

    @staticmethod
    def _cells(grid: dict) -> list[dict]:
        keys = list(grid)
        return [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]

    def _resolve(self, cell: dict) -> dict:
        return dict(make_task(self.task, **cell).params)

    def train_cells(self) -> list[dict]:
        return [self._resolve(c) for c in self._cells(self.train_grid)]

    def eval_cells(self) -> list[dict]:
        return [self._resolve(c) for c in self._cells(self.eval_grid or self.train_grid)]

    def model_configs(self) -> list[ModelConfig]:
        out = []
        for layers in self.layers:
            for variant, ar in MODEL_CONFIGS:
                epochs = self.epochs_ar if (ar and self.epochs_ar is not None) else self.epochs
                out.append(ModelConfig(variant=variant, ar=ar, layers=layers, units=self.units,
                                       window=self.window, batch=self.batch, epochs=epochs,
                                       lr=self.lr, ar_period=self.ar_period, seed=self.seed))
        return out


def load_spec(path) -> ExperimentSpec:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        if not cp.read(path):
            raise Malformed(f"cannot read spec file {path}")
    except configparser.Error as exc:
        raise Malformed(f"spec file: {exc}") from None
    if "experiment" not in cp:
        raise Malformed("spec file needs an [experiment] section")
    ex = cp["experiment"]
    kw = {}
    conv = {"seed": int, "demo_trials": int, "eval_trials": int, "units": int, "window": int,
            "batch": int, "epochs": int, "epochs_ar": int, "ar_period": int,
            "lr": float, "demo_duration": float, "eval_duration": float,
            "save_episodes": lambda s: s.lower() in ("1", "true", "yes", "on")}
    try:
        for key, value in ex.items():
            if key == "task":
                continue
            if key == "layers":
                kw["layers"] = tuple(int(v) for v in _floats(value))
            elif key in conv:
                kw[key] = conv[key](value)
            else:
                raise ValueError(f"unknown key {key!r} in [experiment]")
        grids = {name: {k: _floats(v) for k, v in cp[name].items()} if name in cp else {}
                 for name in ("train_grid", "eval_grid")}
        return ExperimentSpec(task=ex.get("task", ""), train_grid=grids["train_grid"],
                              eval_grid=grids["eval_grid"], **kw)
    except (TypeError, ValueError) as exc:
        raise Malformed(f"spec file: {exc}") from None


# -- report ---------------------------------------------------------------------

@dataclass
class TrialRecord:
    model: str
    layers: int
    cell: dict
    trial: int
    learned: bool
    success: bool
    diagnostics: list
    track_err: float          # mean |θ_cmd − θ_s| over joints, rad
    cycle_dev: float          # write only, else nan


@dataclass
class ModelRecord:
    config: ModelConfig
    losses: list
    open_loop: float          # nan where undefined
    weights_hash: str


@dataclass
class MetricsReport:
    spec: ExperimentSpec
    models: list = field(default_factory=list)
    trials: list = field(default_factory=list)

    def rate(self, model: str, layers: int, pred=lambda r: True) -> tuple[int, int]:
        rows = [r for r in self.trials if r.model == model and r.layers == layers and pred(r)]
        return sum(r.success for r in rows), len(rows)


def _cell_seed(seed: int, *parts) -> int:
    return int(np.random.SeedSequence([seed, *parts]).generate_state(1)[0])


def _fmt_value(v) -> str:
    return f"{v:g}" if isinstance(v, float) else str(v)


def cell_label(cell: dict, keys: list) -> str:
    return "/".join(f"{k}={_fmt_value(cell[k])}" for k in keys)


def _pct(s: int, n: int) -> str:
    return f"{100.0 * s / n:.1f}" if n else ""


def run_matrix(spec: ExperimentSpec, out_dir, log=None) -> MetricsReport:
    """Run every stage of ``spec`` and write its tables into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    say = log or (lambda msg: None)
    report = MetricsReport(spec)

    demos = []
    for ci, cell in enumerate(spec.train_cells()):
        task = make_task(spec.task, duration=spec.demo_duration, **cell)
        for trial in range(spec.demo_trials):
            ep = run_demo(task, seed=_cell_seed(spec.seed, 1, ci, trial))
            save_episode(ep, out / "demos" / f"demo_{ci:02d}_{trial}.csv")
            demos.append(ep)
    held_task = make_task(spec.task, duration=spec.demo_duration, **spec.train_cells()[0])
    held_out = run_demo(held_task, seed=_cell_seed(spec.seed, 2))
    data = [downsample(ep) for ep in demos]
    say(f"{len(demos)} demonstrations recorded")

    learned = spec.train_cells()
    cells = spec.eval_cells()
    for mi, cfg in enumerate(spec.model_configs()):
        try:
            model, rep = train(data, cfg)
        except BcilError as exc:
            raise type(exc)(f"[{cfg.label}, {cfg.layers} layers] {exc}") from exc
        save_model(model, out / "models" / f"{cfg.variant}_{'ar' if cfg.ar else 'tf'}_L{cfg.layers}.bcil")
        if model.variant.supports_ar:
            horizon = min(OPEN_LOOP_HORIZON, len(downsample(held_out)) - 1)
            ol = metric_open_loop(model, held_out, horizon)
        else:
            ol = math.nan
        report.models.append(ModelRecord(cfg, list(rep.losses), ol, rep.weights_hash))
        say(f"trained {cfg.label} ({cfg.layers} layers): final loss {rep.losses[-1]:.3g}")
        for ci, cell in enumerate(cells):
            task = make_task(spec.task, duration=spec.eval_duration or EVAL_DURATION[spec.task], **cell)
            for trial in range(spec.eval_trials):
                try:
                    ep = run_autonomous(model, task, AutonomyConfig(), _cell_seed(spec.seed, 3, ci, trial))
                except BcilError as exc:
                    raise type(exc)(f"[{cfg.label}, cell {cell}, trial {trial}] {exc}") from exc
                if spec.save_episodes:
                    save_episode(ep, out / "runs" / f"run_{mi:02d}_{ci:02d}_{trial}.csv")
                res = metric_corridor(ep, task)
                dev = math.nan
                if spec.task == "write":
                    try:
                        dev = metric_cycle_variance(ep, task)
                    except NoCycles:
                        pass
                track = float(np.mean(np.abs(ep.master[:, :3] - ep.slave[:, :3])))
                report.trials.append(TrialRecord(cfg.label, cfg.layers, cell, trial, cell in learned,
                                                 res.success, res.diagnostics, track, dev))
    write_outputs(report, out)
    return report


# -- tables ----------------------------------------------------------------------

def _grid_keys(spec: ExperimentSpec) -> tuple[str, list]:
    keys = list(spec.eval_cells()[0])
    grid = list(spec.eval_grid or spec.train_grid)
    primary = grid[0] if grid else keys[0]
    return primary, [k for k in keys if k != primary]


def success_rows(report: MetricsReport) -> tuple[list, list]:
    """Header and rows of the success table: one row per model configuration."""
    spec = report.spec
    primary, line_keys = _grid_keys(spec)
    cells = spec.eval_cells()
    learned = spec.train_cells()
    lines = []
    for c in cells:
        lab = cell_label(c, line_keys)
        if lab not in lines:
            lines.append(lab)
    header = ["model", "layers", "input_dims", "output_dims", "ar"]
    header += [cell_label(c, line_keys + [primary]) + ("*" if c in learned else "") for c in cells]
    header += [f"subtotal {ln}" if ln else "subtotal" for ln in lines]
    header += ["learned", "unlearned", "total"]
    rows = []
    for cfg in (m.config for m in report.models):
        name, L = cfg.label, cfg.layers
        v = cfg.model_variant
        row = [name, L, v.n_in, v.n_out, "yes" if cfg.ar else "no"]
        for c in cells:
            row.append(_pct(*report.rate(name, L, lambda r, c=c: r.cell == c)))
        for ln in lines:
            row.append(_pct(*report.rate(name, L, lambda r, ln=ln: cell_label(r.cell, line_keys) == ln)))
        for pred in (lambda r: r.learned, lambda r: not r.learned):
            s, n = report.rate(name, L, pred)
            row.append(f"{_pct(s, n)} ({s}/{n})" if n else "")
        s, n = report.rate(name, L)
        row.append(f"{_pct(s, n)} ({s}/{n})")
        rows.append(row)
    return header, rows


def write_outputs(report: MetricsReport, out_dir) -> None:
    out = Path(out_dir)
    header, rows = success_rows(report)
    with open(out / "success_table.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)

    labels = [f"{m.config.label} L{m.config.layers}" for m in report.models]
    longest = max((len(m.losses) for m in report.models), default=0)
    with open(out / "loss_curves.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch"] + labels)
        for e in range(longest):
            w.writerow([e + 1] + [repr(m.losses[e]) if e < len(m.losses) else "" for m in report.models])

    with open(out / "models.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "layers", "input_dims", "output_dims", "epochs", "final_loss",
                    "open_loop_mse", "weights_sha256"])
        for m in report.models:
            v = m.config.model_variant
            w.writerow([m.config.label, m.config.layers, v.n_in, v.n_out, len(m.losses),
                        repr(m.losses[-1]) if m.losses else "",
                        "" if math.isnan(m.open_loop) else repr(m.open_loop), m.weights_hash])

    keys = list(report.spec.eval_cells()[0])
    with open(out / "trials.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "layers", *keys, "trial", "learned", "success", "diagnostics",
                    "track_err", "cycle_dev"])
        for r in report.trials:
            w.writerow([r.model, r.layers, *(_fmt_value(r.cell[k]) for k in keys), r.trial,
                        int(r.learned), int(r.success), ";".join(r.diagnostics),
                        repr(r.track_err), "" if math.isnan(r.cycle_dev) else repr(r.cycle_dev)])


def with_overrides(spec: ExperimentSpec, **kw) -> ExperimentSpec:
    return replace(spec, **kw)
